"""Time evolution of the modal beam system and its energy bookkeeping.

The Galerkin reduction is exact for this model: the nonlinearity enters
only through the scalar S = ||u'||^2, so truncation merely discards modes
absent from the initial data and the load.  A trajectory carries, sample
by sample, the state (a, v) and the ledger of quadratic functionals

    E   = ||u||_2^2 + ||v||^2                      (squared phase-space norm)
    L   = E + (beta + ||u||_1^2)^2 / 2 + k ||u||^2
    F   = L - 2 <f, u>                             (Lyapunov functional)
    Phi = L + eps <v, u>

F is nonincreasing along orbits with dF/dt = -2 delta ||v||^2; the
per-interval defect of that identity (trapezoid rule on the samples) is
recorded with each energy record and doubles as an integration check.

Sample spacing matters for the defect: the trapezoid error scales like
(sample_interval)^3 times the curvature of ||v||^2, so identity checks at
the 1e-6 level want intervals of order 1e-3 or finer on strongly
oscillatory runs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _stepper
from .csvio import write_csv_atomic
from .modal import PI2, BeamParams, ExtbeamError, ModalState
from .statics import StationarySet, enumerate_stationary


class IntegrationError(ExtbeamError):
    """Adaptive integration failed; carries the time of failure."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} at t = {t_fail:.6g}")
        self.t_fail = t_fail


@dataclass(frozen=True)
class IntegratorConfig:
    """Knobs for the adaptive run and the sampling grid.

    abs_tol defaults to zero (pure relative control), which keeps deep
    exponential decay resolved instead of letting amplitudes wander at the
    absolute-tolerance floor.  eps_phi = None resolves to
    min(1, k, delta)/2, small enough for every coercivity argument that
    uses the shifted functional.
    """

    t_end: float
    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_step: float = math.inf
    sample_interval: float = 0.1
    eps_phi: float | None = None
    first_step: float = 1e-6
    max_steps: int = 200_000_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol < 0:
            raise ValueError("tolerances must be positive (abs_tol may be 0)")
        if self.sample_interval <= 0:
            raise ValueError("sample_interval must be > 0")
        if self.max_step <= 0 or self.first_step <= 0:
            raise ValueError("steps must be > 0")

    def resolve_eps(self, params: BeamParams) -> float:
        if self.eps_phi is not None:
            return self.eps_phi
        return 0.5 * min(1.0, params.k, params.delta)


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    E: float
    L: float
    F: float
    Phi_eps: float
    dissipation_defect: float


@dataclass
class Trajectory:
    """Sampled orbit plus aligned energy ledger (row i of every array is t[i])."""

    params: BeamParams
    config: IntegratorConfig
    t: np.ndarray
    a: np.ndarray
    v: np.ndarray
    E: np.ndarray
    L: np.ndarray
    F: np.ndarray
    Phi: np.ndarray
    defect: np.ndarray
    vnorm_sq: np.ndarray
    eps: float
    n_steps: int
    n_rejected: int

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def n_modes(self) -> int:
        return self.a.shape[1]

    def state_at(self, i: int) -> ModalState:
        return ModalState(t=float(self.t[i]), a=self.a[i].copy(), v=self.v[i].copy())

    def record_at(self, i: int) -> EnergyRecord:
        return EnergyRecord(t=float(self.t[i]), E=float(self.E[i]),
                            L=float(self.L[i]), F=float(self.F[i]),
                            Phi_eps=float(self.Phi[i]),
                            dissipation_defect=float(self.defect[i]))

    @property
    def samples(self):
        return [self.state_at(i) for i in range(self.n_samples)]

    @property
    def energies(self):
        return [self.record_at(i) for i in range(self.n_samples)]

    def final_state(self) -> ModalState:
        return self.state_at(self.n_samples - 1)


def _mode_weights(n_modes: int):
    n = np.arange(1, n_modes + 1)
    nsq = (n * n) * PI2
    return nsq, nsq * nsq


def rhs(state: ModalState, params: BeamParams):
    """Time derivative (da/dt, dv/dt) of the modal system at one state."""
    nsq, n4 = _mode_weights(state.n_modes)
    f = params.f_vector(state.n_modes)
    s = 0.5 * float(np.dot(nsq, state.a**2))
    da = state.v.copy()
    dv = -(n4 + (params.beta + s) * nsq + params.k) * state.a \
        - params.delta * state.v + f
    return da, dv


def energy_ledger(state: ModalState, params: BeamParams, eps: float) -> EnergyRecord:
    """Functional values at a single state (defect is only defined along runs)."""
    nsq, n4 = _mode_weights(state.n_modes)
    f = params.f_vector(state.n_modes)
    a, v = state.a, state.v
    norm0 = 0.5 * float(np.dot(a, a))
    norm1 = 0.5 * float(np.dot(nsq, a * a))
    norm2 = 0.5 * float(np.dot(n4, a * a))
    vsq = 0.5 * float(np.dot(v, v))
    e = norm2 + vsq
    lyap = e + 0.5 * (params.beta + norm1) ** 2 + params.k * norm0
    f_inner = 0.5 * float(np.dot(f, a))
    phi = lyap + eps * 0.5 * float(np.dot(v, a))
    return EnergyRecord(t=state.t, E=e, L=lyap, F=lyap - 2.0 * f_inner,
                        Phi_eps=phi, dissipation_defect=0.0)


def _ledger_arrays(t, a, v, params: BeamParams, eps: float):
    nsq, n4 = _mode_weights(a.shape[1])
    f = params.f_vector(a.shape[1])
    a_sq = a * a
    norm0 = 0.5 * np.einsum("ij,ij->i", a, a)
    norm1 = 0.5 * (a_sq @ nsq)
    norm2 = 0.5 * (a_sq @ n4)
    vsq = 0.5 * np.einsum("ij,ij->i", v, v)
    e = norm2 + vsq
    lyap = e + 0.5 * (params.beta + norm1) ** 2 + params.k * norm0
    f_ledger = lyap - (a @ f)
    phi = lyap + eps * 0.5 * np.einsum("ij,ij->i", v, a)
    defect = np.zeros_like(e)
    if t.size > 1:
        dt = np.diff(t)
        integral = params.delta * (vsq[1:] + vsq[:-1]) * dt  # 2*delta*trapezoid
        defect[1:] = np.diff(f_ledger) + integral
    return e, lyap, f_ledger, phi, defect, vsq


def _sample_times(t0: float, config: IntegratorConfig) -> np.ndarray:
    if config.t_end <= t0:
        raise ValueError(f"t_end = {config.t_end} must exceed the initial time {t0}")
    span = config.t_end - t0
    count = int(math.floor(span / config.sample_interval + 1e-9))
    ts = t0 + config.sample_interval * np.arange(count + 1)
    if ts[-1] < config.t_end - 1e-12 * max(1.0, abs(config.t_end)):
        ts = np.append(ts, config.t_end)
    else:
        ts[-1] = config.t_end
    return ts


def _build_trajectory(params, config, ts, out_a, out_v, n_steps, n_rejected):
    eps = config.resolve_eps(params)
    e, lyap, f_ledger, phi, defect, vsq = _ledger_arrays(ts, out_a, out_v, params, eps)
    return Trajectory(params=params, config=config, t=ts, a=out_a, v=out_v,
                      E=e, L=lyap, F=f_ledger, Phi=phi, defect=defect,
                      vnorm_sq=vsq, eps=eps, n_steps=n_steps, n_rejected=n_rejected)


def integrate(initial: ModalState, params: BeamParams,
              config: IntegratorConfig) -> Trajectory:
    """Adaptive integration to t_end with the energy ledger filled in."""
    n = initial.n_modes
    nsq, n4 = _mode_weights(n)
    f = params.f_vector(n)
    ts = _sample_times(initial.t, config)
    out_a = np.empty((ts.size, n))
    out_v = np.empty((ts.size, n))
    status, t_reach, n_steps, n_rej = _stepper.dopri54_path(
        initial.a.astype(float), initial.v.astype(float), nsq, n4, f,
        params.beta, params.k, params.delta, ts,
        config.rel_tol, config.abs_tol, config.max_step, config.first_step,
        config.max_steps, out_a, out_v)
    if status == _stepper.STATUS_STEP_UNDERFLOW:
        raise IntegrationError("step size underflow", t_reach)
    if status == _stepper.STATUS_NOT_FINITE:
        raise IntegrationError("state left the finite range (blow-up guard)", t_reach)
    if status == _stepper.STATUS_STEP_BUDGET:
        raise IntegrationError(f"step budget {config.max_steps} exhausted", t_reach)
    return _build_trajectory(params, config, ts, out_a, out_v, n_steps, n_rej)


def reference_integrate(initial: ModalState, params: BeamParams,
                        config: IntegratorConfig, dt: float = 1e-4) -> Trajectory:
    """Fixed-step RK4 run on the same sampling grid; the independent oracle."""
    n = initial.n_modes
    nsq, n4 = _mode_weights(n)
    f = params.f_vector(n)
    ts = _sample_times(initial.t, config)
    out_a = np.empty((ts.size, n))
    out_v = np.empty((ts.size, n))
    status, t_reach, n_steps, _ = _stepper.rk4_path(
        initial.a.astype(float), initial.v.astype(float), nsq, n4, f,
        params.beta, params.k, params.delta, ts, dt, out_a, out_v)
    if status != _stepper.STATUS_OK:
        raise IntegrationError("state left the finite range (blow-up guard)", t_reach)
    return _build_trajectory(params, config, ts, out_a, out_v, n_steps, 0)


def integrate_ensemble(initials, params: BeamParams, config: IntegratorConfig,
                       threads: int | None = None):
    """Integrate several initial states; results keep the input order.

    The kernels release the GIL, so a thread pool gives real parallelism;
    threads = 1 (or a single trajectory) runs inline.
    """
    initials = list(initials)
    if threads is None:
        threads = 1
    if threads <= 1 or len(initials) <= 1:
        return [integrate(z0, params, config) for z0 in initials]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(integrate, z0, params, config) for z0 in initials]
        return [fut.result() for fut in futures]


def dissipation_check(trajectory: Trajectory) -> float:
    """Largest per-interval defect of dF/dt = -2 delta ||v||^2 along the run."""
    if trajectory.n_samples < 2:
        raise ValueError("need at least two samples to check the identity")
    return float(np.max(np.abs(trajectory.defect)))


def phase_distance_sq(a1, v1, a2, v2) -> float:
    """Squared phase-space distance ||u1 - u2||_2^2 + ||v1 - v2||^2."""
    da = np.asarray(a1, dtype=float) - np.asarray(a2, dtype=float)
    dv = np.asarray(v1, dtype=float) - np.asarray(v2, dtype=float)
    nsq, n4 = _mode_weights(da.size)
    return 0.5 * float(np.dot(n4, da * da)) + 0.5 * float(np.dot(dv, dv))


ENERGY_FLOOR = 1e-250


@dataclass(frozen=True)
class DecayEstimate:
    rate: float
    linear_fit_residual: float
    underflow: bool


def decay_rate(trajectory: Trajectory, window: float = 0.5) -> DecayEstimate:
    """Least-squares slope of ln E over the trailing window of the run.

    rate is minus the fitted slope of ln E(t) (so a signal decaying like
    exp(-c t) in energy reports rate = c).  linear_fit_residual is the RMS
    residual of the fit normalised by the standard deviation of ln E,
    i.e. sqrt(1 - R^2): 0 means a perfect exponential, values near 1 mean
    no linear trend in the log.  Samples below the underflow floor are
    excluded and flagged.
    """
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    m = trajectory.n_samples
    start = m - max(2, int(math.floor(window * m)))
    t = trajectory.t[start:]
    e = trajectory.E[start:]
    underflow = bool(np.any(e < ENERGY_FLOOR))
    mask = e >= ENERGY_FLOOR
    if np.count_nonzero(mask) < 2:
        raise ValueError("energy vanished on the fit window")
    t, ln_e = t[mask], np.log(e[mask])
    slope, intercept = np.polyfit(t, ln_e, 1)
    resid = ln_e - (slope * t + intercept)
    ss_tot = float(np.sum((ln_e - ln_e.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    residual = math.sqrt(ss_res / ss_tot) if ss_tot > 0 else 0.0
    return DecayEstimate(rate=-float(slope), linear_fit_residual=residual,
                         underflow=underflow)


def absorbing_check(trajectories, radius: float):
    """Entry times into the energy ball E <= radius^2, plus an overall verdict.

    For each trajectory the first sample time with E <= radius^2 is
    reported (None if it never enters); the verdict is True only if every
    trajectory enters and never leaves afterwards within its horizon.
    """
    r_sq = radius * radius
    entry_times = []
    verdict = True
    for traj in trajectories:
        inside = traj.E <= r_sq
        idx = np.flatnonzero(inside)
        if idx.size == 0:
            entry_times.append(None)
            verdict = False
            continue
        first = int(idx[0])
        entry_times.append(float(traj.t[first]))
        if not np.all(inside[first:]):
            verdict = False
    return entry_times, verdict


@dataclass(frozen=True)
class BasinOutcome:
    """Which equilibrium an orbit settles to: "Null", "Branch" or "Unresolved"."""

    limit: str
    mode: int | None
    sign: int | None
    settle_time: float
    final_distance: float


def basin_classify(initial: ModalState, params: BeamParams,
                   config: IntegratorConfig,
                   settle_distance: float = 1e-6,
                   settle_vnorm: float = 1e-8,
                   settle_samples: int = 10,
                   stationary: StationarySet | None = None,
                   trajectory: Trajectory | None = None) -> BasinOutcome:
    """Identify the omega-limit of an unforced orbit among the equilibria.

    The orbit counts as settled on an equilibrium once its phase-space
    distance to it stays below settle_distance and ||v|| below
    settle_vnorm for settle_samples consecutive samples; the sustained
    window guards against slow passages near the straight-state saddle.
    A precomputed trajectory for the same initial state may be passed to
    avoid integrating twice.
    """
    if params.forced:
        raise ValueError("basin classification requires f = 0")
    if stationary is None:
        stationary = enumerate_stationary(params)
    if stationary.kind == "ResonantContinuum":
        raise ValueError("stationary set is a continuum; basin labels are "
                         "only defined for a finite equilibrium set")
    candidates = stationary.states(initial.n_modes)
    traj = trajectory if trajectory is not None else integrate(initial, params, config)

    nsq, n4 = _mode_weights(traj.n_modes)
    vnorm = np.sqrt(traj.vnorm_sq)
    dist = np.empty((len(candidates), traj.n_samples))
    for ci, (_, a_bar) in enumerate(candidates):
        da = traj.a - a_bar[None, :]
        dist[ci] = np.sqrt(0.5 * ((da * da) @ n4) + traj.vnorm_sq)

    best_ci, best_start = None, None
    for ci in range(len(candidates)):
        ok = (dist[ci] < settle_distance) & (vnorm < settle_vnorm)
        run = 0
        for i, flag in enumerate(ok):
            run = run + 1 if flag else 0
            if run >= settle_samples:
                start = i - settle_samples + 1
                if best_start is None or start < best_start:
                    best_ci, best_start = ci, start
                break
    if best_ci is None:
        nearest = int(np.argmin(dist[:, -1]))
        return BasinOutcome(limit="Unresolved", mode=None, sign=None,
                            settle_time=math.inf,
                            final_distance=float(dist[nearest, -1]))
    label = candidates[best_ci][0]
    final = float(dist[best_ci, -1])
    settle_t = float(traj.t[best_start])
    if label is None:
        return BasinOutcome(limit="Null", mode=None, sign=None,
                            settle_time=settle_t, final_distance=final)
    return BasinOutcome(limit="Branch", mode=label[0], sign=label[1],
                        settle_time=settle_t, final_distance=final)


def random_state(energy: float, n_modes: int, seed: int,
                 active_modes: int = 4, t: float = 0.0) -> ModalState:
    """Seeded state drawn uniformly from the E-sphere of the given energy.

    Only the first active_modes modes are populated.  Uniformity is with
    respect to the phase-space metric: a standard normal draw in the
    coordinates ((n pi)^2 a_n, v_n) is rescaled onto the sphere
    E = ||u||_2^2 + ||v||^2 = energy.
    """
    if energy < 0:
        raise ValueError("energy must be >= 0")
    m = min(active_modes, n_modes)
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(2 * m)
    norm = float(np.linalg.norm(xi))
    if norm == 0.0:
        xi[0] = 1.0
        norm = 1.0
    xi *= math.sqrt(2.0 * energy) / norm
    nsq, _ = _mode_weights(m)
    a = np.zeros(n_modes)
    v = np.zeros(n_modes)
    a[:m] = xi[:m] / nsq
    v[:m] = xi[m:]
    return ModalState(t=t, a=a, v=v)


TRAJECTORY_HEADER_PREFIX = ("t",)
ENERGY_HEADER = ("t", "E", "L", "F", "Phi", "defect")


def trajectory_header(n_modes: int):
    return ("t", *(f"a_{i}" for i in range(1, n_modes + 1)),
            *(f"v_{i}" for i in range(1, n_modes + 1)))


def write_trajectory_csv(path: str, trajectory: Trajectory) -> None:
    header = trajectory_header(trajectory.n_modes)
    rows = ((float(trajectory.t[i]), *map(float, trajectory.a[i]),
             *map(float, trajectory.v[i])) for i in range(trajectory.n_samples))
    write_csv_atomic(path, header, rows)


def write_energy_csv(path: str, trajectory: Trajectory) -> None:
    rows = ((float(trajectory.t[i]), float(trajectory.E[i]), float(trajectory.L[i]),
             float(trajectory.F[i]), float(trajectory.Phi[i]),
             float(trajectory.defect[i])) for i in range(trajectory.n_samples))
    write_csv_atomic(path, ENERGY_HEADER, rows)


def stationary_lyapunov_max(params: BeamParams, n_modes: int) -> float:
    """Largest L value over the finite unforced equilibrium set."""
    stat_set = enumerate_stationary(replace(params, f_modes=()))
    best = -math.inf
    for _, a_bar in stat_set.states(n_modes):
        rec = energy_ledger(ModalState(t=0.0, a=a_bar, v=np.zeros_like(a_bar)),
                            params, eps=0.0)
        best = max(best, rec.L)
    return best
