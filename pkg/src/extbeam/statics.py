"""Stationary states of the beam: exact enumeration and forced solves.

Unforced case (f = 0).  Every equilibrium is a single sine mode (or, at
resonant stiffness, a two-mode combination).  Mode n carries the buckled
pair

    u_n^{+-}(x) = A_n^{+-} sin(n pi x),
    A_n^{+-}    = +- sqrt(-2 [beta + mu_n(k)]) / (n pi),

which exists exactly when beta < -mu_n(k).  When two thresholds coincide
(k = i^2 j^2 pi^4, the resonant stiffness values) and beta lies below the
smallest non-simple threshold, the pair of modes carries a whole ellipse
of equilibria instead of finitely many points.

Forced case (f != 0).  Writing h = beta + ||u'||^2 turns the equilibrium
system into a_n(h) = f_n / (n^4 pi^4 + h n^2 pi^2 + k) plus one scalar
consistency equation g(h) = 0, which is solved by bracketed root-finding
between its poles h = -mu_n(k) and polished by a Newton pass on the full
modal system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .csvio import write_csv_atomic
from .modal import PI, PI2, BeamParams, ExtbeamError, modal_norm_sq, mu_n
from .stability import beta_c

#: Absolute tolerance on |mu_i - mu_j| below which two thresholds are
#: treated as coincident (exact membership of the resonant set is not
#: decidable in floating point).
RESONANCE_TOL = 1e-9


class StaticSolveError(ExtbeamError):
    """Root refinement failed or produced an ill-conditioned branch."""


@dataclass(frozen=True)
class StationaryBranch:
    """Buckled pair of mode n; amplitude_minus is always -amplitude_plus."""

    mode_index: int
    amplitude_plus: float

    @property
    def amplitude_minus(self) -> float:
        return -self.amplitude_plus

    def amplitude_vector(self, n_modes: int, sign: int = +1) -> np.ndarray:
        a = np.zeros(max(n_modes, self.mode_index))
        a[self.mode_index - 1] = sign * self.amplitude_plus
        return a


@dataclass(frozen=True)
class ResonantContinuum:
    """Ellipse of equilibria carried by two modes with equal thresholds.

    Members are u = A sin(ell pi x) + B sin(n pi x) constrained by
    (A^2 ell^2 pi^2 + B^2 n^2 pi^2) / 2 = constraint_c = -(beta + mu).
    """

    ell: int
    n: int
    mu: float
    constraint_c: float

    def member(self, theta: float, n_modes: int) -> np.ndarray:
        """Point on the ellipse at angle theta, as an amplitude vector."""
        r = math.sqrt(2.0 * self.constraint_c)
        a = np.zeros(max(n_modes, self.n))
        a[self.ell - 1] = r * math.cos(theta) / (self.ell * PI)
        a[self.n - 1] = r * math.sin(theta) / (self.n * PI)
        return a


@dataclass(frozen=True)
class StationarySet:
    """Classification of the unforced equilibrium set at one (beta, k)."""

    kind: str  # "NullOnly" | "FiniteBuckled" | "ResonantContinuum"
    branches: tuple[StationaryBranch, ...] = ()
    continuum: ResonantContinuum | None = None

    @property
    def n_star(self) -> int:
        return len(self.branches)

    @property
    def count(self) -> int | None:
        """Total number of equilibria; None for a continuum."""
        if self.kind == "ResonantContinuum":
            return None
        return 2 * len(self.branches) + 1

    def states(self, n_modes: int):
        """All isolated equilibria as (label, amplitude vector) pairs.

        The label is None for the straight state and (n, sign) for the
        buckled pairs.  Raises for a continuum, which has no finite list.
        """
        if self.kind == "ResonantContinuum":
            raise ValueError("resonant continuum has no finite state list")
        out = [(None, np.zeros(n_modes))]
        for br in self.branches:
            out.append(((br.mode_index, +1), br.amplitude_vector(n_modes, +1)))
            out.append(((br.mode_index, -1), br.amplitude_vector(n_modes, -1)))
        return out


@dataclass(frozen=True)
class ForcedStaticSolution:
    a: np.ndarray
    h: float
    residual_norm: float


@dataclass(frozen=True)
class ResonantPair:
    i: int
    j: int
    mu: float


def n_star(params: BeamParams) -> int:
    """Number of modes whose buckling threshold lies strictly below -beta."""
    if params.beta >= 0:
        return 0
    n_max = int(math.ceil(math.sqrt(-params.beta) / PI)) + 1
    return sum(1 for n in range(1, n_max + 1)
               if params.beta + mu_n(n, params.k) < 0.0)


def resonant_pairs(k: float, mu_bound: float, tol: float = RESONANCE_TOL):
    """Coincident threshold pairs (i < j) with common value mu <= mu_bound.

    Scans all pairs that could matter for the given bound: at a resonance
    the common value is i^2 pi^2 + j^2 pi^2 > j^2 pi^2, so j is capped by
    sqrt(mu_bound)/pi.  Sorted by the common value, smallest first.
    """
    if mu_bound <= 0:
        return []
    j_max = int(math.sqrt(mu_bound) / PI) + 1
    pairs = []
    for j in range(2, j_max + 1):
        mu_j = mu_n(j, k)
        if mu_j > mu_bound + tol:
            continue
        for i in range(1, j):
            if abs(mu_n(i, k) - mu_j) < tol:
                pairs.append(ResonantPair(i=i, j=j, mu=mu_j))
    pairs.sort(key=lambda p: (p.mu, p.i))
    return pairs


def is_resonant(k: float, tol: float = RESONANCE_TOL) -> bool:
    """Whether two modal thresholds coincide at this stiffness (k = i^2 j^2 pi^4)."""
    if k <= 0:
        return False
    j_max = int(math.sqrt(math.sqrt(k)) / PI) + 1  # j^2 <= i^2 j^2 = k/pi^4
    for j in range(2, j_max + 1):
        mu_j = mu_n(j, k)
        for i in range(1, j):
            if abs(mu_n(i, k) - mu_j) < tol:
                return True
    return False


def enumerate_stationary(params: BeamParams) -> StationarySet:
    """Classify and list the unforced equilibria per the exact solution formulas.

    Requires f = 0; forced problems go through solve_static_forced.
    """
    if params.forced:
        raise ValueError("enumerate_stationary requires f = 0; "
                         "use solve_static_forced for forced problems")
    beta, k = params.beta, params.k
    if beta >= -beta_c(k):
        return StationarySet(kind="NullOnly")
    pairs = resonant_pairs(k, mu_bound=-beta)
    if pairs and beta < -pairs[0].mu:
        lead = pairs[0]
        return StationarySet(
            kind="ResonantContinuum",
            continuum=ResonantContinuum(ell=lead.i, n=lead.j, mu=lead.mu,
                                        constraint_c=-(beta + lead.mu)))
    n_max = int(math.ceil(math.sqrt(-beta) / PI)) + 1
    branches = []
    for n in range(1, n_max + 1):
        gap = beta + mu_n(n, k)
        if gap < 0.0:
            branches.append(StationaryBranch(
                mode_index=n, amplitude_plus=math.sqrt(-2.0 * gap) / (n * PI)))
    return StationarySet(kind="FiniteBuckled", branches=tuple(branches))


def static_residual(a, params: BeamParams) -> float:
    """Euclidean norm of the modal equilibrium residual at amplitudes a.

    r_n = n^4 pi^4 a_n + (beta + ||u'||^2) n^2 pi^2 a_n + k a_n - f_n,
    evaluated over all modes touched by either a or the load.
    """
    a = np.asarray(a, dtype=float)
    m = max(a.size, len(params.f_modes), 1)
    av = np.zeros(m)
    av[:a.size] = a
    f = params.f_vector(m)
    n = np.arange(1, m + 1)
    nsq = (n * n) * PI2
    h = params.beta + modal_norm_sq(av, 1)
    r = nsq * nsq * av + h * nsq * av + params.k * av - f
    return float(np.linalg.norm(r))


def _newton_polish(a0, params: BeamParams, tol: float, max_iter: int = 60):
    """Newton iteration on the full modal equilibrium system.

    The Jacobian is diagonal plus rank one; with at most a few dozen modes
    a dense solve is the simplest robust choice.
    """
    a = np.asarray(a0, dtype=float).copy()
    m = a.size
    f = params.f_vector(m)
    n = np.arange(1, m + 1)
    nsq = (n * n) * PI2
    n4 = nsq * nsq
    for _ in range(max_iter):
        h = params.beta + 0.5 * float(np.dot(nsq, a * a))
        d = n4 + h * nsq + params.k
        r = d * a - f
        if np.linalg.norm(r) < 0.1 * tol:
            return a
        u = nsq * a
        jac = np.diag(d) + np.outer(u, u)
        try:
            a = a - np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            break
    return a


def solve_static_forced(params: BeamParams, n_modes: int,
                        norm_tolerance: float = 1e-9,
                        h_tol: float = 1e-12,
                        panels_per_interval: int = 64):
    """All equilibria of the forced problem found on a bounded h-window.

    The window spans from just below min(beta, smallest pole) up to where
    the consistency function is provably positive; each inter-pole interval
    is scanned with ``panels_per_interval`` panels, sign changes are
    bisected down to ``h_tol`` and the resulting amplitude vectors are
    polished by Newton.  Solutions with a_n = 0 on every unloaded mode are
    the only ones representable in this parametrization; no completeness
    claim is made beyond the scanned window (see README).

    Raises StaticSolveError if a refined root fails the residual bound,
    flagging roots that sit within tolerance of a pole as ill-conditioned.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    n_modes = max(n_modes, len(params.f_modes))
    f = params.f_vector(n_modes)
    beta, k = params.beta, params.k
    active = np.nonzero(f)[0]
    if active.size == 0:
        a = np.zeros(n_modes)
        return [ForcedStaticSolution(a=a, h=beta,
                                     residual_norm=static_residual(a, params))]

    n = np.arange(1, n_modes + 1)
    nsq = (n * n) * PI2
    n4 = nsq * nsq

    def amplitudes(h: float) -> np.ndarray:
        a = np.zeros(n_modes)
        a[active] = f[active] / (n4[active] + h * nsq[active] + k)
        return a

    def g(h: float) -> float:
        a = amplitudes(h)
        return h - beta - 0.5 * float(np.dot(nsq[active], a[active] ** 2))

    poles = sorted({-mu_n(int(idx) + 1, k) for idx in active})
    # every solution satisfies h = beta + ||u'||^2 >= beta; beyond the poles
    # the mode amplitudes shrink like 1/distance, bounding h from above
    margin = 1.0
    tail = float(np.sum(f[active] ** 2 / (2.0 * nsq[active] * margin**2)))
    lo = min([beta] + poles) - 1.0
    hi = max(max([beta] + poles) + margin, beta + tail) + 1.0

    edges = [lo] + [p for p in poles if lo < p < hi] + [hi]
    gap = 1e-12
    roots: list[float] = []
    for e0, e1 in zip(edges[:-1], edges[1:]):
        a0 = e0 + (gap * max(1.0, abs(e0)) if e0 in poles else 0.0)
        b0 = e1 - (gap * max(1.0, abs(e1)) if e1 in poles else 0.0)
        if b0 <= a0:
            continue
        hs = np.linspace(a0, b0, panels_per_interval + 1)
        gs = np.array([g(h) for h in hs])
        for i in range(panels_per_interval):
            ga, gb = gs[i], gs[i + 1]
            if ga == 0.0:
                roots.append(float(hs[i]))
                continue
            if ga * gb < 0.0:
                roots.append(_bisect(g, float(hs[i]), float(hs[i + 1]), h_tol))
        if gs[-1] == 0.0:
            roots.append(float(hs[-1]))

    solutions = []
    for h_root in roots:
        a = _newton_polish(amplitudes(h_root), params, norm_tolerance)
        res = static_residual(a, params)
        if not np.all(np.isfinite(a)) or res >= norm_tolerance:
            near_pole = any(abs(h_root - p) < 1e-9 * max(1.0, abs(p)) for p in poles)
            kind = "root within tolerance of a pole" if near_pole \
                else "root refinement did not converge"
            raise StaticSolveError(f"{kind} at h = {h_root:.12g} (residual {res:.3g})")
        h_final = beta + modal_norm_sq(a, 1)
        if any(abs(h_final - s.h) < 1e-9 * max(1.0, abs(h_final))
               and np.linalg.norm(a - s.a) < 1e-9 for s in solutions):
            continue
        solutions.append(ForcedStaticSolution(a=a, h=h_final, residual_norm=res))
    solutions.sort(key=lambda s: s.h)
    return solutions


def _bisect(g, a: float, b: float, h_tol: float) -> float:
    """Bisection with a secant proposal each step; keeps the bracket valid."""
    ga, gb = g(a), g(b)
    width_tol = max(h_tol, 8.0 * np.finfo(float).eps * max(abs(a), abs(b)))
    while b - a > width_tol:
        if gb != ga:
            mid = b - gb * (b - a) / (gb - ga)
            # fall back to the midpoint when secant leaves (or hugs) the bracket
            if not (a < mid < b):
                mid = 0.5 * (a + b)
        else:
            mid = 0.5 * (a + b)
        # guard against stagnation at an endpoint
        span = b - a
        mid = min(max(mid, a + 0.01 * span), b - 0.01 * span)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if ga * gm < 0.0:
            b, gb = mid, gm
        else:
            a, ga = mid, gm
    return 0.5 * (a + b)


def bifurcation_sweep(k: float, beta_min: float, beta_max: float, steps: int):
    """Branch amplitudes over a beta sweep; rows (beta, n, A_n^+, A_n^-).

    The straight state is encoded as n = 0 with zero amplitudes.  A branch
    appears in a row exactly when beta + mu_n(k) <= 0, so births land on
    beta = -mu_n(k) (with amplitude zero at the birth point itself).
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    betas = np.linspace(beta_min, beta_max, steps)
    rows = []
    for beta in betas:
        beta = float(beta)
        rows.append((beta, 0, 0.0, 0.0))
        if beta >= 0:
            continue
        n_max = int(math.ceil(math.sqrt(-beta) / PI)) + 1
        for n in range(1, n_max + 1):
            gap = beta + mu_n(n, k)
            if gap <= 0.0:
                amp = math.sqrt(max(0.0, -2.0 * gap)) / (n * PI)
                rows.append((beta, n, amp, -amp))
    return rows


BIFURCATION_HEADER = ("beta", "n", "amplitude_plus", "amplitude_minus")


def write_bifurcation_csv(path: str, rows) -> None:
    write_csv_atomic(path, BIFURCATION_HEADER, rows)


STATIONARY_HEADER = ("n", "amplitude_plus", "amplitude_minus")


def stationary_rows(stat_set: StationarySet):
    """CSV rows for a finite stationary set (null state encoded as n = 0)."""
    if stat_set.kind == "ResonantContinuum":
        raise ValueError("resonant continuum is emitted as JSON, not CSV")
    rows = [(0, 0.0, 0.0)]
    rows.extend((br.mode_index, br.amplitude_plus, br.amplitude_minus)
                for br in stat_set.branches)
    return rows
