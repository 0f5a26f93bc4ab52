"""Shared numerical kernels.

Everything here is deterministic: no randomness, no thread-order dependence,
so repeated runs produce bitwise identical floats.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError

# Exact compensated summation.  math.fsum tracks all partial roundoff, which
# is strictly stronger than a single Kahan compensation term.
exact_sum = math.fsum


def unit_ball_volume(k: float) -> float:
    """Volume of the unit ball in R^k: pi^(k/2) / Gamma(k/2 + 1).

    Shared by the Weyl-limit bookkeeping and the Karamata cross-checks so the
    constant has a single definition.
    """
    return math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature with absolute tolerance `tol`.

    The local acceptance test is the usual factor-15 Richardson comparison of
    one panel against its two halves; accepted panels add the extrapolated
    correction, so the scheme is effectively sixth order on smooth pieces.
    """
    if not b > a:
        if b == a:
            return 0.0
        raise ValueError("integration bounds must satisfy a <= b")
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0:
        raise ConvergenceError(
            "adaptive Simpson exceeded maximum recursion depth on "
            f"[{a!r}, {b!r}]")
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    half = 0.5 * tol
    return (_simpson_rec(f, a, m, fa, flm, fm, left, half, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, half, depth - 1))


@lru_cache(maxsize=32)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_panel(f, a: float, b: float, nodes: int = 64) -> float:
    """Fixed-order Gauss-Legendre quadrature of `f` over one panel [a, b].

    `f` receives a vector of interior nodes (never the endpoints), which is
    what lets integrands with endpoint-degenerate densities stay finite.
    """
    if b <= a:
        return 0.0
    x, w = _leggauss(nodes)
    mid = 0.5 * (a + b)
    rad = 0.5 * (b - a)
    vals = f(mid + rad * x)
    return rad * float(np.dot(w, vals))


def neville_at_zero(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Value at 0 of the polynomial through (xs, ys).

    Used for Richardson extrapolation: feed it the last few (step, value)
    pairs of a sequence whose error is polynomial in `step`.
    """
    x = [float(v) for v in xs]
    p = [float(v) for v in ys]
    n = len(x)
    if n == 0:
        raise ValueError("need at least one sample to extrapolate")
    for level in range(1, n):
        for i in range(n - level):
            denom = x[i] - x[i + level]
            if denom == 0.0:
                raise ValueError("extrapolation nodes must be distinct")
            p[i] = (x[i] * p[i + 1] - x[i + level] * p[i]) / denom
    return p[0]


def richardson_sqrt_t(t_grid: Sequence[float], values: Sequence[float],
                      levels: int = 2) -> float:
    """Extrapolate values v(t) -> v(0) assuming an expansion in sqrt(t).

    Two levels kill the sqrt(t) and t terms; uses the last `levels`+1 grid
    points (smallest t last).
    """
    n = levels + 1
    if len(t_grid) < n:
        raise ValueError("not enough grid points for the requested levels")
    xs = [math.sqrt(float(t)) for t in t_grid[-n:]]
    ys = [float(v) for v in values[-n:]]
    return neville_at_zero(xs, ys)


def log_trend(xs: Sequence[float], ys: Sequence[float],
              points: int = 3) -> float:
    """Least-squares slope of log(y) against log(x) over the last `points`.

    Returns nan when any participating value is nonpositive.  A sweep is
    declared convergent when |slope| is small (the callers pin the cut).
    """
    xs = np.asarray(xs, dtype=float)[-points:]
    ys = np.asarray(ys, dtype=float)[-points:]
    if xs.size < 2:
        return float("nan")
    if np.any(ys <= 0.0) or np.any(xs <= 0.0):
        return float("nan")
    lx = np.log(xs)
    ly = np.log(ys)
    lx = lx - lx.mean()
    denom = float(np.dot(lx, lx))
    if denom == 0.0:
        return float("nan")
    return float(np.dot(lx, ly - ly.mean()) / denom)


def geometric_grid(start: float, stop: float, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("grid needs at least one point")
    if start <= 0.0 or stop <= 0.0:
        raise ValueError("geometric grid endpoints must be positive")
    if count == 1:
        return np.array([start], dtype=float)
    return np.geomspace(start, stop, count)


def linear_grid(start: float, stop: float, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("grid needs at least one point")
    if count == 1:
        return np.array([start], dtype=float)
    return np.linspace(start, stop, count)


# ---------------------------------------------------------------------------
# Batched Dormand-Prince 5(4) integration for scalar ODE families.
# ---------------------------------------------------------------------------

_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
)
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0)
_DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
          -2187.0 / 6784.0, 11.0 / 84.0)
# b5 - b4, with the seventh stage (FSAL) carrying 1/40 of the defect
_DP_E = (35.0 / 384.0 - 5179.0 / 57600.0, 0.0,
         500.0 / 1113.0 - 7571.0 / 16695.0, 125.0 / 192.0 - 393.0 / 640.0,
         -2187.0 / 6784.0 + 92097.0 / 339200.0, 11.0 / 84.0 - 187.0 / 2100.0,
         -1.0 / 40.0)


def rk45_batched(rhs: Callable[[float, np.ndarray], np.ndarray],
                 t0: float, t1: float, y0: np.ndarray,
                 rtol: float = 1e-10, atol: float = 1e-12,
                 max_steps: int = 2_000_000) -> np.ndarray:
    """Integrate a batch of scalar ODEs y' = rhs(t, y) from t0 to t1.

    Adaptive 4/5 embedded Runge-Kutta (Dormand-Prince) with PI step control.
    The step acceptance uses the max error over the batch, so every member
    sees the identical step sequence and the output is deterministic.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    span = float(t1) - t
    if span <= 0.0:
        raise ValueError("rk45_batched requires t1 > t0")
    h = span * 1e-6
    k1 = rhs(t, y)
    err_prev = 1.0
    ks = [None] * 7
    steps = 0
    while t < t1:
        if steps >= max_steps:
            raise ConvergenceError("rk45 exceeded its step budget")
        steps += 1
        h = min(h, t1 - t)
        ks[0] = k1
        for i in range(1, 6):
            yi = y.copy()
            for j, a in enumerate(_DP_A[i]):
                yi += (h * a) * ks[j]
            ks[i] = rhs(t + _DP_C[i] * h, yi)
        ynew = y.copy()
        for j, b in enumerate(_DP_B5):
            if b != 0.0:
                ynew += (h * b) * ks[j]
        ks[6] = rhs(t + h, ynew)
        err = np.zeros_like(y)
        for j, e in enumerate(_DP_E):
            if e != 0.0:
                err += (h * e) * ks[j]
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        enorm = float(np.max(np.abs(err) / scale))
        if enorm <= 1.0 or h <= span * 1e-14:
            t += h
            y = ynew
            k1 = ks[6]
            err_prev = max(enorm, 1e-10)
        fac = 0.9 * (max(enorm, 1e-10) ** -0.2) * (err_prev ** 0.04)
        h *= min(5.0, max(0.2, fac))
    return y
