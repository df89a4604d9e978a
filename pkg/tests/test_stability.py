import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from extbeam.modal import LAMBDA_1, BeamParams, mu_n
from extbeam.stability import (StabilityClass, bar_beta, beta_c, classify,
                               n_k_index, nu, stability_map)
from extbeam.statics import enumerate_stationary

PI2 = np.pi**2
PI4 = np.pi**4


def grid_min_eta(beta, k, points=1_000_000):
    # brute-force minimisation oracle for the coercivity constant
    m = np.linspace(0.0, 1.0 / PI2, points)
    return float(np.min(1.0 + beta * m + k * m * m))


# ------------------------------------------------------------ critical loads

def test_beta_c_values():
    assert beta_c(0.0) == pytest.approx(PI2, rel=1e-14)
    assert beta_c(PI4) == pytest.approx(2 * PI2, rel=1e-14)
    assert beta_c(4 * PI4) == pytest.approx(5 * PI2, rel=1e-14)


def test_n_k_index():
    assert n_k_index(0.0) == 1
    assert n_k_index(10 * PI4) == 2       # 4 <= 10 < 36
    assert n_k_index(4 * PI4) == 1        # tie broken to the smaller index


@given(st.floats(min_value=0.0, max_value=5e4, allow_nan=False))
def test_n_k_minimises(k):
    n = n_k_index(k)
    vals = [mu_n(m, k) for m in range(1, 30)]
    assert mu_n(n, k) == pytest.approx(min(vals), rel=1e-13)


def test_bar_beta_values():
    assert bar_beta(0.0) == pytest.approx(PI2, rel=1e-14)
    assert bar_beta(LAMBDA_1) == pytest.approx(2 * PI2, rel=1e-13)
    assert bar_beta(4 * PI4) == pytest.approx(4 * PI2, rel=1e-14)
    assert bar_beta(4 * PI4) < beta_c(4 * PI4)


@given(st.floats(min_value=0.0, max_value=1e4, allow_nan=False))
def test_bar_beta_below_beta_c(k):
    bb, bc = bar_beta(k), beta_c(k)
    assert bb <= bc + 1e-12
    if k <= LAMBDA_1:
        assert bb == bc


def test_bar_beta_continuous_at_lambda_1():
    eps = 1e-8
    assert bar_beta(LAMBDA_1 - eps) == pytest.approx(bar_beta(LAMBDA_1 + eps), abs=1e-7)


def test_tangency_of_thresholds_with_parabola():
    # each linear piece mu_n touches 2 sqrt(k) at k = lambda_n with equal slope
    for n in range(1, 5):
        lam = float(n**4) * PI4
        assert mu_n(n, lam) == pytest.approx(2.0 * np.sqrt(lam), rel=1e-12)
        h = 1e-2
        dmu = (mu_n(n, lam + h) - mu_n(n, lam - h)) / (2 * h)
        dpar = (2 * np.sqrt(lam + h) - 2 * np.sqrt(lam - h)) / (2 * h)
        assert dmu == pytest.approx(1.0 / (n * n * PI2), rel=1e-9)
        assert abs(dmu - dpar) < 1e-9


def test_beta_c_piecewise_linear_segments():
    # vanishing second difference inside each linearity interval
    for n in (1, 2, 3):
        lo = (n - 1) ** 2 * n**2 * PI4
        hi = n**2 * (n + 1) ** 2 * PI4
        ks = np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 41)
        vals = np.array([beta_c(k) for k in ks])
        second = np.diff(vals, 2)
        assert np.max(np.abs(second)) < 1e-9


@given(st.floats(min_value=0.0, max_value=1e4, allow_nan=False))
def test_beta_c_nondecreasing(k):
    assert beta_c(k + 1.0) >= beta_c(k) - 1e-12


# --------------------------------------------------------------- coercivity

def test_nu_trivial_for_stretched_beam():
    assert nu(0.0, 1.0) == 1.0
    assert nu(5.0, 123.0) == 1.0


@given(st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
       st.floats(min_value=1e-6, max_value=1e4, allow_nan=False))
def test_nu_is_one_for_nonnegative_beta(beta, k):
    assert nu(beta, k) == 1.0


def test_nu_vertex_case_vanishes_on_parabola():
    k = 4 * PI4
    assert nu(-2.0 * np.sqrt(k), k) == pytest.approx(0.0, abs=1e-12)


def test_nu_endpoint_case_against_grid_oracle():
    beta, k = -2 * PI2, PI4 / 4
    # vertex -beta/(2k) = 4/pi^2 lies outside [0, 1/pi^2]: endpoint value
    expected = 1.0 + beta / PI2 + k / PI4
    assert expected == pytest.approx(-0.75, rel=1e-12)
    assert nu(beta, k) == pytest.approx(expected, rel=1e-12)
    assert nu(beta, k) == pytest.approx(grid_min_eta(beta, k), abs=1e-9)


def test_nu_vertex_case_against_grid_oracle():
    beta, k = -10.0, 200.0  # vertex inside the interval
    assert nu(beta, k) == pytest.approx(1.0 - beta**2 / (4 * k), rel=1e-12)
    assert nu(beta, k) == pytest.approx(grid_min_eta(beta, k), abs=1e-9)


def test_nu_sign_equivalence_bulk():
    rng = np.random.default_rng(7)
    betas = rng.uniform(-200.0, 50.0, size=10_000)
    ks = rng.uniform(1e-9, 1000.0, size=10_000)
    mismatches = 0
    for beta, k in zip(betas, ks):
        if abs(beta + bar_beta(k)) <= 1e-6:
            continue
        if (nu(beta, k) > 0) != (beta > -bar_beta(k)):
            mismatches += 1
    assert mismatches == 0


# ------------------------------------------------------------ classification

def test_classify_examples():
    assert classify(BeamParams(beta=0.0, k=1.0, delta=1.0)).label \
        is StabilityClass.EXPONENTIALLY_STABLE
    assert classify(BeamParams(beta=-4.5 * PI2, k=4 * PI4, delta=1.0)).label \
        is StabilityClass.STABLE_NON_EXPONENTIAL
    assert classify(BeamParams(beta=-6 * PI2, k=4 * PI4, delta=1.0)).label \
        is StabilityClass.BUCKLED_RESONANT
    assert classify(BeamParams(beta=-3 * PI2, k=0.0, delta=1.0)).label \
        is StabilityClass.BUCKLED


def test_classify_boundary_band():
    k = 4 * PI4
    v = classify(BeamParams(beta=-beta_c(k), k=k, delta=1.0))
    assert v.label is StabilityClass.CRITICAL_BOUNDARY
    v2 = classify(BeamParams(beta=-bar_beta(k) + 1e-12, k=k, delta=1.0))
    assert v2.label is StabilityClass.CRITICAL_BOUNDARY


def test_classify_resonant_needs_beta_below_mu_m():
    # k = 9 pi^4: resonant via (1,3) at 10 pi^2, but beta_c = 6.25 pi^2
    k = 9 * PI4
    assert classify(BeamParams(beta=-8 * PI2, k=k, delta=1.0)).label \
        is StabilityClass.BUCKLED
    assert classify(BeamParams(beta=-11 * PI2, k=k, delta=1.0)).label \
        is StabilityClass.BUCKLED_RESONANT


def test_classify_fields_consistent():
    v = classify(BeamParams(beta=-1.0, k=10.0, delta=1.0))
    assert v.beta_c == beta_c(10.0)
    assert v.bar_beta == bar_beta(10.0)
    assert (v.label is StabilityClass.EXPONENTIALLY_STABLE) == (v.nu > 0)


def test_classify_matches_enumeration_on_grid():
    betas = np.linspace(-150.0, 30.0, 50)
    ks = np.linspace(0.0, 900.0, 50)
    for beta in betas:
        for k in ks:
            if abs(beta + beta_c(k)) < 1e-6 or abs(beta + bar_beta(k)) < 1e-6:
                continue
            p = BeamParams(beta=float(beta), k=float(k), delta=1.0)
            buckled = classify(p).label in (StabilityClass.BUCKLED,
                                            StabilityClass.BUCKLED_RESONANT)
            assert buckled == (enumerate_stationary(p).kind != "NullOnly")


# -------------------------------------------------------------------- maps

def test_stability_map_rows():
    rows = stability_map((-30.0, 10.0), (0.0, 200.0), (3, 5))
    assert len(rows) == 15
    ks = [r[0] for r in rows]
    assert ks == sorted(ks)
    for row in rows:
        k, beta, label, nu_val, bc, bb = row
        if beta > 0:
            assert label == "ExponentiallyStable"
        assert bb <= bc + 1e-12


def test_stability_map_tangency_rows():
    rows = stability_map((-10.0, 0.0), (LAMBDA_1, LAMBDA_1), (2, 2))
    for row in rows:
        assert row[4] == pytest.approx(row[5], rel=1e-13)  # beta_c == bar_beta
    rows2 = stability_map((-10.0, 0.0), (16 * PI4, 16 * PI4), (2, 2))
    assert rows2[0][5] == pytest.approx(8 * PI2, rel=1e-13)  # -2 sqrt(lambda_2)
