import json
import re

import numpy as np
import pytest

from extbeam.cli import main

PI2 = np.pi**2
PI4 = np.pi**4


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- critical

def test_critical_k_zero(capsys):
    code, out, _ = run(capsys, "critical", "--k", "0")
    assert code == 0
    report = json.loads(out)
    assert report["beta_c"] == pytest.approx(PI2, rel=1e-14)
    assert report["bar_beta"] == pytest.approx(PI2, rel=1e-14)
    assert report["n_k"] == 1
    assert report["resonant"] is False


def test_critical_resonant_value(capsys):
    code, out, _ = run(capsys, "critical", "--k", repr(4 * PI4))
    assert code == 0
    report = json.loads(out)
    assert report["beta_c"] == pytest.approx(5 * PI2, rel=1e-13)
    assert report["bar_beta"] == pytest.approx(4 * PI2, rel=1e-13)
    assert report["resonant"] is True


def test_critical_negative_k_is_usage_error(capsys):
    code, out, err = run(capsys, "critical", "--k", "-1")
    assert code == 2
    assert err.strip()
    assert not out.strip()


# --------------------------------------------------------------- stationary

def test_stationary_csv(tmp_path, capsys):
    out_file = tmp_path / "stat.csv"
    code, _, _ = run(capsys, "stationary", "--beta", repr(-2 * PI2), "--k", "0",
                     "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "n,amplitude_plus,amplitude_minus"
    assert lines[1].startswith("0,0,0")
    cells = lines[2].split(",")
    assert cells[0] == "1"
    assert float(cells[1]) == pytest.approx(np.sqrt(2.0), rel=1e-15)
    manifest = json.loads((tmp_path / "stat.csv.manifest.json").read_text())
    assert manifest["command"] == "stationary"
    assert manifest["params"]["beta"] == pytest.approx(-2 * PI2)


def test_stationary_continuum_as_json(capsys):
    code, out, _ = run(capsys, "stationary", "--beta", repr(-6 * PI2),
                       "--k", repr(4 * PI4))
    assert code == 0
    payload = json.loads(out)
    assert payload["kind"] == "ResonantContinuum"
    assert (payload["ell"], payload["n"]) == (1, 2)
    assert payload["constraint_c"] == pytest.approx(PI2, rel=1e-12)


def test_load_flag_is_negated_beta(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run(capsys, "stationary", "--beta", repr(-2 * PI2), "--k", "0", "--out", str(a))
    run(capsys, "stationary", "--load", repr(2 * PI2), "--k", "0", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_beta_and_load_conflict(capsys):
    with pytest.raises(SystemExit) as exc:
        run(capsys, "stationary", "--beta", "1", "--load", "1", "--k", "0")
    assert exc.value.code == 2


# ----------------------------------------------------------------- simulate

def test_simulate_zero_data_all_zero_csv(tmp_path, capsys):
    prefix = str(tmp_path / "zero")
    code, _, _ = run(capsys, "simulate", "--beta", "0", "--k", "0", "--delta", "1",
                     "--a", "0", "--v", "0", "--n-modes", "2",
                     "--t-end", "1", "--sample-interval", "0.25",
                     "--out", prefix)
    assert code == 0
    lines = (tmp_path / "zero_trajectory.csv").read_text().strip().splitlines()
    assert lines[0] == "t,a_1,a_2,v_1,v_2"
    for line in lines[1:]:
        assert [float(c) for c in line.split(",")[1:]] == [0.0, 0.0, 0.0, 0.0]
    energy = (tmp_path / "zero_energy.csv").read_text().strip().splitlines()
    assert energy[0] == "t,E,L,F,Phi,defect"


def test_simulate_manifest_rerun_roundtrip(tmp_path, capsys):
    prefix = str(tmp_path / "r1")
    code, _, _ = run(capsys, "simulate", "--beta", repr(-2 * PI2), "--k", "0",
                     "--delta", "0.5", "--a", "0.01", "--t-end", "3",
                     "--sample-interval", "0.5", "--out", prefix)
    assert code == 0
    code2, _, _ = run(capsys, "rerun", prefix + ".manifest.json",
                      "--out", str(tmp_path / "r2"))
    assert code2 == 0
    assert (tmp_path / "r1_trajectory.csv").read_bytes() == \
        (tmp_path / "r2_trajectory.csv").read_bytes()
    assert (tmp_path / "r1_energy.csv").read_bytes() == \
        (tmp_path / "r2_energy.csv").read_bytes()


def test_simulate_random_requires_seed(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run(capsys, "simulate", "--beta", "0", "--k", "0", "--random",
            "--out", str(tmp_path / "x"))
    assert exc.value.code == 2


def test_simulate_random_is_seeded(tmp_path, capsys):
    args = ("simulate", "--beta", "0", "--k", "0", "--delta", "1",
            "--random", "--seed", "42", "--energy", "5",
            "--t-end", "1", "--sample-interval", "0.5")
    run(capsys, *args, "--out", str(tmp_path / "s1"))
    run(capsys, *args, "--out", str(tmp_path / "s2"))
    assert (tmp_path / "s1_trajectory.csv").read_bytes() == \
        (tmp_path / "s2_trajectory.csv").read_bytes()


def test_csv_fields_have_full_precision(tmp_path, capsys):
    prefix = str(tmp_path / "p")
    run(capsys, "simulate", "--beta", repr(-2 * PI2), "--k", "0", "--delta", "0.5",
        "--a", "0.01", "--t-end", "2", "--sample-interval", "0.5",
        "--out", prefix)
    body = (tmp_path / "p_energy.csv").read_text().strip().splitlines()[1:]
    # at least one mantissa must carry 17 significant digits
    assert any(re.search(r"\d\.\d{16}", line) for line in body)
    for line in body:
        for cell in line.split(","):
            float(cell)  # every field parses back


# -------------------------------------------------------------------- decay

def test_decay_reports_fit(tmp_path, capsys):
    code, out, _ = run(capsys, "decay", "--beta", "0", "--k", "0", "--delta", "1",
                       "--a", "0.1", "--t-end", "40", "--sample-interval", "0.1",
                       "--out", str(tmp_path / "d"))
    assert code == 0
    fit = json.loads(out)
    assert fit["rate"] == pytest.approx(1.0, rel=0.05)
    assert fit["linear_fit_residual"] < 0.05
    manifest = json.loads((tmp_path / "d.manifest.json").read_text())
    assert manifest["fit"]["rate"] == fit["rate"]


# -------------------------------------------------------------------- basin

def test_basin_buckling(tmp_path, capsys):
    code, out, _ = run(capsys, "basin", "--beta", repr(-2 * PI2), "--k", "0",
                       "--delta", "0.5", "--a", "0.01", "--t-end", "120",
                       "--sample-interval", "0.1")
    assert code == 0
    payload = json.loads(out)
    assert payload["limit"] == "Branch"
    assert (payload["mode"], payload["sign"]) == (1, 1)


# --------------------------------------------------------------------- map

def test_map_csv_schema_and_regions(tmp_path, capsys):
    out_file = tmp_path / "map.csv"
    code, _, _ = run(capsys, "map", "--beta", "-120:0:25", "--k", "0:800:9",
                     "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "k,beta,class,nu,beta_c,bar_beta"
    assert len(lines) == 1 + 25 * 9
    for line in lines[1:]:
        k, beta, label, nu_val, bc, bb = line.split(",")
        if float(beta) > 0:
            assert label == "ExponentiallyStable"
        assert float(bb) <= float(bc) + 1e-12


def test_map_threaded_matches_serial(tmp_path, capsys, monkeypatch):
    serial = tmp_path / "serial.csv"
    threaded = tmp_path / "threaded.csv"
    run(capsys, "map", "--beta", "-50:0:11", "--k", "0:400:7", "--out", str(serial))
    monkeypatch.setenv("EXTBEAM_THREADS", "4")
    run(capsys, "map", "--beta", "-50:0:11", "--k", "0:400:7", "--out", str(threaded))
    assert serial.read_bytes() == threaded.read_bytes()


# -------------------------------------------------------------- bifurcation

def test_bifurcation_csv_births(tmp_path, capsys):
    out_file = tmp_path / "bif.csv"
    code, _, _ = run(capsys, "bifurcation", "--k", "0", "--beta-min", "-50",
                     "--beta-max", "0", "--steps", "200", "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "beta,n,amplitude_plus,amplitude_minus"
    rows = [line.split(",") for line in lines[1:]]
    betas = sorted({float(r[0]) for r in rows})
    step = betas[1] - betas[0]
    for n in (1, 2):
        births = [float(r[0]) for r in rows if int(r[1]) == n]
        assert births
        assert abs(max(births) - (-(n * n) * PI2)) <= step + 1e-9


def test_bifurcation_bad_steps(capsys):
    code, _, err = run(capsys, "bifurcation", "--k", "0", "--beta-min", "-1",
                       "--beta-max", "0", "--steps", "1", "--out", "/dev/null")
    assert code == 2
    assert err


# ----------------------------------------------------------------- plumbing

def test_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_integration_failure_exit_code(tmp_path, capsys):
    # an impossible step budget forces a numeric failure (exit 3)
    import extbeam.cli as cli_mod
    from extbeam.dynamics import IntegratorConfig

    orig = cli_mod._integrator_config

    def tiny_budget(args):
        cfg = orig(args)
        return IntegratorConfig(t_end=cfg.t_end, rel_tol=cfg.rel_tol,
                                abs_tol=cfg.abs_tol, max_step=cfg.max_step,
                                sample_interval=cfg.sample_interval,
                                eps_phi=cfg.eps_phi, max_steps=3)

    cli_mod._integrator_config = tiny_budget
    try:
        code, _, err = run(capsys, "simulate", "--beta", repr(-2 * PI2), "--k", "0",
                           "--delta", "0.5", "--a", "0.01", "--t-end", "50",
                           "--sample-interval", "1", "--out", str(tmp_path / "f"))
    finally:
        cli_mod._integrator_config = orig
    assert code == 3
    assert "error" in err
    manifest = json.loads((tmp_path / "f.manifest.json").read_text())
    assert manifest["status"] == "failed"
