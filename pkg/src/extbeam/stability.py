"""Critical loads and the exponential-stability region in the (beta, k) plane.

Two thresholds organise the plane.  The buckling threshold beta_c(k) is the
smallest modal threshold min_n mu_n(k); for beta >= -beta_c the straight
state is the unique equilibrium, below it the beam buckles.  The decay
threshold bar_beta(k) coincides with beta_c up to k = lambda_1 and then
follows the parabola 2*sqrt(k); energy decay is exponential exactly for
beta > -bar_beta.  Between the two curves (possible only for k > lambda_1)
the null state is still the unique equilibrium but the coercivity argument
behind the exponential rate fails.

The coercivity constant nu(beta, k) is the best constant in
<Lu, u> >= nu ||u||_2^2 for Lu = u'''' + beta u'' ... restricted to the
hinged-beam cone, obtained by minimising the quadratic
eta(m) = 1 + beta m + k m^2 over m in [0, 1/sqrt(lambda_1)].  Its sign
changes exactly on beta = -bar_beta(k).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .csvio import write_csv_atomic
from .modal import LAMBDA_1, PI2, PI4, BeamParams, mu_n

#: Absolute beta-tolerance inside which a point is reported as sitting on
#: a critical curve rather than in an open region.
BOUNDARY_TOL = 1e-9


class StabilityClass(str, Enum):
    EXPONENTIALLY_STABLE = "ExponentiallyStable"
    STABLE_NON_EXPONENTIAL = "StableNonExponentialRegion"
    CRITICAL_BOUNDARY = "CriticalBoundary"
    BUCKLED = "Buckled"
    BUCKLED_RESONANT = "BuckledResonant"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class StabilityVerdict:
    beta_c: float
    bar_beta: float
    nu: float
    label: StabilityClass


def n_k_index(k: float) -> int:
    """Mode index minimising mu_n(k), i.e. (n-1)^2 n^2 <= k/pi^4 < n^2 (n+1)^2.

    At resonant k both n and n+1 minimise; the smaller index is returned so
    the output is deterministic (the minimum value is the same either way).
    """
    if k < 0:
        raise ValueError(f"foundation stiffness must be >= 0, got {k}")
    q = k / PI4
    n = 1
    while n * n * (n + 1) * (n + 1) < q:
        n += 1
    return n


def beta_c(k: float) -> float:
    """Buckling threshold min_n mu_n(k); piecewise linear and increasing in k."""
    return mu_n(n_k_index(k), k)


def bar_beta(k: float) -> float:
    """Exponential-decay threshold: beta_c(k) for k <= lambda_1, else 2 sqrt(k).

    Continuous at k = lambda_1 where both branches equal 2 pi^2, and the
    value at k = 0 is taken as beta_c(0) = pi^2 by continuity.
    """
    if k < 0:
        raise ValueError(f"foundation stiffness must be >= 0, got {k}")
    if k <= LAMBDA_1:
        return beta_c(k)
    return 2.0 * float(k) ** 0.5


def nu(beta: float, k: float) -> float:
    """Coercivity constant: min of eta(m) = 1 + beta m + k m^2 on [0, 1/pi^2].

    For beta >= 0 the minimum over the relevant cone is simply 1.  For
    beta < 0 the quadratic is minimised in closed form: at the vertex
    -beta/(2k) when it falls inside the interval, at the right endpoint
    otherwise.  nu > 0 exactly when beta > -bar_beta(k).
    """
    if k < 0:
        raise ValueError(f"foundation stiffness must be >= 0, got {k}")
    if beta >= 0:
        return 1.0
    m_end = 1.0 / PI2
    if k > 0 and -beta / (2.0 * k) <= m_end:
        return 1.0 - beta * beta / (4.0 * k)
    # vertex beyond the interval (always the case for k = 0)
    return 1.0 + beta * m_end + k * m_end * m_end


def classify(params: BeamParams, boundary_tol: float = BOUNDARY_TOL) -> StabilityVerdict:
    """Place a parameter point relative to the critical curves.

    BuckledResonant is reported when, additionally to beta < -beta_c, the
    stiffness is resonant and beta lies below the smallest non-simple
    threshold, so that the equilibrium set is a continuum.
    """
    from .statics import resonant_pairs  # local import: statics builds on this module

    bc = beta_c(params.k)
    bb = bar_beta(params.k)
    nu_val = nu(params.beta, params.k)
    if abs(params.beta + bc) < boundary_tol or abs(params.beta + bb) < boundary_tol:
        label = StabilityClass.CRITICAL_BOUNDARY
    elif params.beta < -bc:
        pairs = resonant_pairs(params.k, mu_bound=-params.beta)
        if pairs and params.beta < -pairs[0].mu:
            label = StabilityClass.BUCKLED_RESONANT
        else:
            label = StabilityClass.BUCKLED
    elif params.beta > -bb:
        label = StabilityClass.EXPONENTIALLY_STABLE
    else:
        label = StabilityClass.STABLE_NON_EXPONENTIAL
    return StabilityVerdict(beta_c=bc, bar_beta=bb, nu=nu_val, label=label)


def stability_rows_at_k(k: float, betas):
    """Classification rows for one k column, beta ascending."""
    rows = []
    for beta in betas:
        verdict = classify(BeamParams(beta=float(beta), k=float(k), delta=1.0))
        rows.append((float(k), float(beta), str(verdict.label),
                     verdict.nu, verdict.beta_c, verdict.bar_beta))
    return rows


def stability_map(beta_range, k_range, grid):
    """Classify a rectangular grid; rows are (k, beta, class, nu, beta_c, bar_beta).

    k is the outer loop and beta the inner one, both ascending, so the row
    order is deterministic and maps straight onto the region picture.
    """
    import numpy as np

    nk, nb = grid
    if nk < 2 or nb < 2:
        raise ValueError("grid must be at least 2x2")
    ks = np.linspace(k_range[0], k_range[1], nk)
    betas = np.linspace(beta_range[0], beta_range[1], nb)
    rows = []
    for k in ks:
        rows.extend(stability_rows_at_k(float(k), betas))
    return rows


STABILITY_MAP_HEADER = ("k", "beta", "class", "nu", "beta_c", "bar_beta")


def write_stability_map_csv(path: str, rows) -> None:
    write_csv_atomic(path, STABILITY_MAP_HEADER, rows)
