"""Spectral building blocks for a hinged extensible beam on (0, 1).

With both ends hinged, sin(n*pi*x) are exact eigenfunctions of the bending
operator d^4/dx^4, so every field is carried as a finite vector of sine
coefficients.  This module owns the eigenvalue/threshold scalars and the
closed-form norms and inner products that the statics, stability and
dynamics layers are built on.

Conventions (used consistently everywhere):
    u(x)      = sum_n a_n sin(n pi x)
    ||u||^2   = integral u^2        = 1/2 sum a_n^2
    ||u||_1^2 = integral u_x^2      = 1/2 sum (n pi)^2 a_n^2
    ||u||_2^2 = integral u_xx^2     = 1/2 sum (n pi)^4 a_n^2
    <f, u>    = integral f u        = 1/2 sum f_n a_n

The factor 1/2 is integral_0^1 sin^2(n pi x) dx.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

PI = np.pi
PI2 = np.pi**2
PI4 = np.pi**4

#: First eigenvalue of the bending operator (n = 1).
LAMBDA_1 = PI4


class ExtbeamError(Exception):
    """Base class for errors raised by this package."""


def lambda_n(n: int) -> float:
    """Eigenvalue of the hinged bending operator for mode n: (n pi)^4."""
    if n < 1:
        raise ValueError(f"mode index must be >= 1, got {n}")
    return float(n * n * PI2) ** 2


def mu_n(n: int, k: float) -> float:
    """Buckling threshold of mode n on a foundation of stiffness k.

    mu_n(k) = k / (n pi)^2 + (n pi)^2.  Mode n admits buckled equilibria
    exactly when the axial coefficient satisfies beta < -mu_n(k).
    """
    if n < 1:
        raise ValueError(f"mode index must be >= 1, got {n}")
    if k < 0:
        raise ValueError(f"foundation stiffness must be >= 0, got {k}")
    nsq = float(n * n) * PI2
    return k / nsq + nsq


def modal_norm_sq(a, order: int = 0) -> float:
    """Squared Sobolev-scale norm ||u||_order^2 of u = sum a_n sin(n pi x).

    order 0 is the L2 norm, 1 weights by (n pi)^2 (first derivative),
    2 by (n pi)^4 (second derivative).
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    n = np.arange(1, a.size + 1)
    w = (n * n * PI2) ** order
    return 0.5 * float(np.dot(w, a * a))


def l2_inner(a, b) -> float:
    """L2 inner product of two sine expansions (shorter one zero-padded)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = min(a.size, b.size)
    if m == 0:
        return 0.0
    return 0.5 * float(np.dot(a[:m], b[:m]))


def synthesize(a, x):
    """Evaluate u(x) = sum a_n sin(n pi x) on an array of points."""
    a = np.asarray(a, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = np.arange(1, a.size + 1)
    return np.sin(np.outer(x, n) * PI) @ a


def project_load(f, n_modes: int, norm_tolerance: float = 1e-9,
                 max_panels: int = 4096):
    """Sine coefficients f_n = 2 * integral_0^1 f(x) sin(n pi x) dx.

    Composite 16-point Gauss-Legendre quadrature, doubling the panel count
    until successive coefficient vectors agree to ``norm_tolerance`` in the
    max norm.  Loads are user-supplied and may be merely piecewise smooth,
    hence the adaptive panelling rather than a fixed rule.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(16)
    modes = np.arange(1, n_modes + 1)

    def coeffs(panels: int):
        edges = np.linspace(0.0, 1.0, panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        w = (half[:, None] * weights[None, :]).ravel()
        fx = np.asarray(f(x), dtype=float)
        if fx.shape != x.shape:
            fx = np.broadcast_to(fx, x.shape)
        if not np.all(np.isfinite(fx)):
            raise ValueError("load function returned non-finite samples")
        return 2.0 * (np.sin(np.outer(modes, x) * PI) * (w * fx)) @ np.ones(x.size)

    panels = 4
    prev = coeffs(panels)
    while panels < max_panels:
        panels *= 2
        cur = coeffs(panels)
        if np.max(np.abs(cur - prev)) < norm_tolerance:
            return cur
        prev = cur
    warnings.warn(
        f"load projection did not converge below {norm_tolerance:g} "
        f"with {max_panels} panels", stacklevel=2)
    return prev


def poincare_check(a, order: int, norm_tolerance: float = 1e-9) -> bool:
    """Self-test of the norm ladder: sqrt(lambda_1)*||u||_l^2 <= ||u||_{l+1}^2."""
    lhs = np.sqrt(LAMBDA_1) * modal_norm_sq(a, order)
    rhs = modal_norm_sq(a, order + 1)
    return lhs <= rhs + norm_tolerance


@dataclass(frozen=True)
class BeamParams:
    """Model parameters for the beam equation.

    beta is the axial coefficient (beta = -P for compressive load P),
    k >= 0 the foundation stiffness, delta the viscous damping constant,
    and f_modes the sine coefficients of the static lateral load.

    delta = 0 is accepted but warned about: the decay and absorbing-set
    theory assumes strictly positive damping, and undamped runs are only
    meaningful as conservation checks.
    """

    beta: float
    k: float
    delta: float
    f_modes: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "f_modes", tuple(float(c) for c in self.f_modes))
        for name in ("beta", "k", "delta"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
        if self.k < 0:
            raise ValueError(f"foundation stiffness must be >= 0, got {self.k}")
        if self.delta < 0:
            raise ValueError(f"damping must be >= 0, got {self.delta}")
        if self.delta == 0:
            warnings.warn(
                "delta = 0: undamped evolution is outside the dissipative "
                "theory; use only for conservation checks", stacklevel=3)
        if not all(np.isfinite(c) for c in self.f_modes):
            raise ValueError("f_modes entries must be finite")

    def f_vector(self, n_modes: int) -> np.ndarray:
        """Load coefficients zero-padded or truncated to n_modes entries."""
        f = np.zeros(n_modes)
        m = min(len(self.f_modes), n_modes)
        f[:m] = self.f_modes[:m]
        return f

    @property
    def forced(self) -> bool:
        return any(c != 0.0 for c in self.f_modes)


@dataclass(frozen=True)
class ModalState:
    """Phase-space point: modal amplitudes a and velocities v at time t."""

    t: float
    a: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)
        if a.ndim != 1 or v.ndim != 1 or a.size != v.size or a.size < 1:
            raise ValueError("a and v must be equal-length 1-d sequences")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
            raise ValueError("state entries must be finite")

    @property
    def n_modes(self) -> int:
        return self.a.size

    def energy(self) -> float:
        """Squared phase-space norm ||u||_2^2 + ||du/dt||^2."""
        return modal_norm_sq(self.a, 2) + modal_norm_sq(self.v, 0)


@dataclass(frozen=True)
class SpectralConfig:
    """Truncation size and the tolerance used by residual/identity checks."""

    n_modes: int = 16
    norm_tolerance: float = 1e-9

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.norm_tolerance <= 0:
            raise ValueError("norm_tolerance must be > 0")
