"""Compiled time-stepping kernels for the modal beam system.

The state is (a, v) with a_n the sine-mode amplitudes and v_n = da_n/dt.
The only nonlinearity is the scalar stretching term S = ||u'||^2, so the
right-hand side is

    da_n/dt = v_n
    dv_n/dt = -(n pi)^4 a_n - (beta + S) (n pi)^2 a_n - k a_n
              - delta v_n + f_n,        S = 1/2 sum_m (m pi)^2 a_m^2.

Two integrators are provided: an adaptive Dormand-Prince 5(4) embedded
pair with a PI step-size controller (the workhorse), and a fixed-step
classical RK4 used as an independent cross-check.  Both land exactly on
the requested sample times by clamping the step, which keeps sampling
interpolation-free.  Explicit schemes are appropriate here: the stiffest
retained mode oscillates at about (N pi)^2, so the stable step scales like
N^-2 and stays cheap for the truncation sizes this package targets.

Kernels are compiled with nogil so trajectory ensembles can run on a
thread pool.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NOT_FINITE = 2
STATUS_STEP_BUDGET = 3

# Dormand-Prince 5(4) tableau; row 7 doubles as the 5th-order weights (FSAL).
_A = np.zeros((7, 7))
_A[1, 0] = 1.0 / 5.0
_A[2, :2] = (3.0 / 40.0, 9.0 / 40.0)
_A[3, :3] = (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0)
_A[4, :4] = (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0)
_A[5, :5] = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
             -5103.0 / 18656.0)
_A[6, :6] = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
             11.0 / 84.0)
_B = _A[6].copy()
# difference between the 5th- and embedded 4th-order weights
_E = np.array([71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
               -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0])

_SAFETY = 0.9
_PI_BETA = 0.04           # derivative gain of the PI controller
_PI_EXPO = 0.2 - 0.75 * _PI_BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_TINY = 1e-14
# Error scales are floored at this fraction of the largest state component:
# components sitting many orders below the overall state (e.g. velocity
# round-off noise at a settled equilibrium) would otherwise drive the
# controller to chase unresolvable noise.  Being relative to the state, the
# floor shrinks along a decaying orbit, so deep exponential decay is still
# tracked with full relative accuracy.
_SCALE_FLOOR = 1e-6


@njit(cache=True, nogil=True)
def _rhs(a, v, nsq, n4, f, beta, k, delta, da, dv):
    n = a.shape[0]
    s = 0.0
    for i in range(n):
        s += nsq[i] * a[i] * a[i]
    s *= 0.5
    coef = beta + s
    for i in range(n):
        da[i] = v[i]
        dv[i] = -(n4[i] + coef * nsq[i] + k) * a[i] - delta * v[i] + f[i]


@njit(cache=True, nogil=True)
def rhs_eval(a, v, nsq, n4, f, beta, k, delta):
    da = np.empty_like(a)
    dv = np.empty_like(v)
    _rhs(a, v, nsq, n4, f, beta, k, delta, da, dv)
    return da, dv


@njit(cache=True, nogil=True)
def dopri54_path(a0, v0, nsq, n4, f, beta, k, delta, sample_ts,
                 rtol, atol, max_step, first_step, max_steps,
                 out_a, out_v):
    """Adaptive path recording the state at every entry of sample_ts.

    sample_ts[0] is the initial time.  Returns (status, t_reached, n_steps,
    n_rejected).  out_a/out_v must be (len(sample_ts), n) arrays.
    """
    n = a0.shape[0]
    n_samples = sample_ts.shape[0]

    ya = a0.copy()
    yv = v0.copy()
    for i in range(n):
        out_a[0, i] = ya[i]
        out_v[0, i] = yv[i]

    ka = np.empty((7, n))
    kv = np.empty((7, n))
    ta = np.empty(n)
    tv = np.empty(n)
    na = np.empty(n)
    nv = np.empty(n)

    t = sample_ts[0]
    _rhs(ya, yv, nsq, n4, f, beta, k, delta, ka[0], kv[0])

    h = first_step
    if h > max_step:
        h = max_step
    facold = 1e-4
    rejected_last = False
    n_steps = 0
    n_rejected = 0
    si = 1

    while si < n_samples:
        t_target = sample_ts[si]
        remaining = t_target - t
        if remaining <= _TINY * max(1.0, abs(t)):
            # sample boundary reached without needing a step
            for i in range(n):
                out_a[si, i] = ya[i]
                out_v[si, i] = yv[i]
            si += 1
            continue

        h_try = h
        if h_try > max_step:
            h_try = max_step
        hit = False
        if h_try >= remaining:
            h_try = remaining
            hit = True
        if h_try < _TINY * max(1.0, abs(t)):
            return STATUS_STEP_UNDERFLOW, t, n_steps, n_rejected
        if n_steps >= max_steps:
            return STATUS_STEP_BUDGET, t, n_steps, n_rejected
        n_steps += 1

        # stages 2..6
        for s in range(1, 6):
            for i in range(n):
                acc_a = 0.0
                acc_v = 0.0
                for j in range(s):
                    acc_a += _A[s, j] * ka[j, i]
                    acc_v += _A[s, j] * kv[j, i]
                ta[i] = ya[i] + h_try * acc_a
                tv[i] = yv[i] + h_try * acc_v
            _rhs(ta, tv, nsq, n4, f, beta, k, delta, ka[s], kv[s])

        # 5th-order solution, then the FSAL stage at the new point
        for i in range(n):
            acc_a = 0.0
            acc_v = 0.0
            for j in range(6):
                acc_a += _B[j] * ka[j, i]
                acc_v += _B[j] * kv[j, i]
            na[i] = ya[i] + h_try * acc_a
            nv[i] = yv[i] + h_try * acc_v
        _rhs(na, nv, nsq, n4, f, beta, k, delta, ka[6], kv[6])

        # weighted RMS error over all 2n components
        ymax = 0.0
        for i in range(n):
            ymax = max(ymax, abs(ya[i]), abs(na[i]), abs(yv[i]), abs(nv[i]))
        floor = _SCALE_FLOOR * ymax
        err_sq = 0.0
        bad = False
        for i in range(n):
            ea = 0.0
            ev = 0.0
            for j in range(7):
                ea += _E[j] * ka[j, i]
                ev += _E[j] * kv[j, i]
            ea *= h_try
            ev *= h_try
            if not (np.isfinite(ea) and np.isfinite(ev)
                    and np.isfinite(na[i]) and np.isfinite(nv[i])):
                bad = True
                break
            sc_a = atol + rtol * max(abs(ya[i]), abs(na[i]), floor)
            sc_v = atol + rtol * max(abs(yv[i]), abs(nv[i]), floor)
            if ea != 0.0:
                if sc_a > 0.0:
                    err_sq += (ea / sc_a) ** 2
                else:
                    bad = True
                    break
            if ev != 0.0:
                if sc_v > 0.0:
                    err_sq += (ev / sc_v) ** 2
                else:
                    bad = True
                    break
        if bad:
            # non-finite or unscalable error: retry with a much smaller step
            if not np.isfinite(h_try):
                return STATUS_NOT_FINITE, t, n_steps, n_rejected
            h = 0.1 * h_try
            rejected_last = True
            n_rejected += 1
            continue
        err = np.sqrt(err_sq / (2.0 * n))

        if err <= 1.0:
            # accept; PI growth uses the previous accepted error
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-_PI_EXPO) * facold ** _PI_BETA
                if factor > _MAX_FACTOR:
                    factor = _MAX_FACTOR
                elif factor < _MIN_FACTOR:
                    factor = _MIN_FACTOR
            if rejected_last and factor > 1.0:
                factor = 1.0
            facold = max(err, 1e-4)
            rejected_last = False
            if hit:
                t = t_target
            else:
                t = t + h_try
            for i in range(n):
                ya[i] = na[i]
                yv[i] = nv[i]
                ka[0, i] = ka[6, i]
                kv[0, i] = kv[6, i]
            h = h_try * factor
            if hit:
                for i in range(n):
                    out_a[si, i] = ya[i]
                    out_v[si, i] = yv[i]
                si += 1
        else:
            factor = _SAFETY * err ** (-_PI_EXPO)
            if factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            elif factor > 1.0:
                factor = 1.0
            h = h_try * factor
            rejected_last = True
            n_rejected += 1

    return STATUS_OK, t, n_steps, n_rejected


@njit(cache=True, nogil=True)
def rk4_path(a0, v0, nsq, n4, f, beta, k, delta, sample_ts, dt, out_a, out_v):
    """Classical fixed-step RK4, subdividing each sample interval evenly.

    The nominal step dt is rounded so that an integer number of steps lands
    exactly on every sample time.  Returns (status, t_reached, n_steps, 0).
    """
    n = a0.shape[0]
    n_samples = sample_ts.shape[0]
    ya = a0.copy()
    yv = v0.copy()
    for i in range(n):
        out_a[0, i] = ya[i]
        out_v[0, i] = yv[i]

    k1a = np.empty(n)
    k1v = np.empty(n)
    k2a = np.empty(n)
    k2v = np.empty(n)
    k3a = np.empty(n)
    k3v = np.empty(n)
    k4a = np.empty(n)
    k4v = np.empty(n)
    ta = np.empty(n)
    tv = np.empty(n)

    n_steps = 0
    for si in range(1, n_samples):
        span = sample_ts[si] - sample_ts[si - 1]
        nsub = int(np.ceil(span / dt - 1e-12))
        if nsub < 1:
            nsub = 1
        h = span / nsub
        for _ in range(nsub):
            _rhs(ya, yv, nsq, n4, f, beta, k, delta, k1a, k1v)
            for i in range(n):
                ta[i] = ya[i] + 0.5 * h * k1a[i]
                tv[i] = yv[i] + 0.5 * h * k1v[i]
            _rhs(ta, tv, nsq, n4, f, beta, k, delta, k2a, k2v)
            for i in range(n):
                ta[i] = ya[i] + 0.5 * h * k2a[i]
                tv[i] = yv[i] + 0.5 * h * k2v[i]
            _rhs(ta, tv, nsq, n4, f, beta, k, delta, k3a, k3v)
            for i in range(n):
                ta[i] = ya[i] + h * k3a[i]
                tv[i] = yv[i] + h * k3v[i]
            _rhs(ta, tv, nsq, n4, f, beta, k, delta, k4a, k4v)
            for i in range(n):
                ya[i] += h / 6.0 * (k1a[i] + 2.0 * k2a[i] + 2.0 * k3a[i] + k4a[i])
                yv[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i])
            n_steps += 1
            if not (np.isfinite(ya[0]) and np.isfinite(yv[0])):
                return STATUS_NOT_FINITE, sample_ts[si - 1], n_steps, 0
        for i in range(n):
            out_a[si, i] = ya[i]
            out_v[si, i] = yv[i]
    return STATUS_OK, sample_ts[n_samples - 1], n_steps, 0
