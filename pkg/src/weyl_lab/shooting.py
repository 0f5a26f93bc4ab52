"""Phase-function eigensolvers for the singular radial problems.

Two families are solved on (0, pi):

* interval problems  -(w u')' = lam w u,  w(t) = sin(t)^p, and
* radial problems    -(w f')' + mu sin(t)^(q-2) f = lam w f,  w = sin(t)^q,

both with the Friedrichs (bounded-energy) endpoint behavior.  In Pruefer
variables u = rho sin(theta), w u' = rho cos(theta) the phase satisfies

    theta' = cos^2(theta)/w + (lam - mu/sin^2 t) w sin^2(theta),

crosses multiples of pi exactly at the zeros of u (always upward, since
theta' = 1/w > 0 there), and is strictly increasing in lam at fixed t.
Integration starts at eps = 1e-6 off the endpoint with data from the
Frobenius solution t^s, s = (-(q-1) + sqrt((q-1)^2 + 4 mu))/2.

Both weights are symmetric about pi/2, so the eigenvalue condition is
imposed by midpoint matching: the mirrored right-hand solution has phase
pi - theta(pi/2), and the two glue into an eigenfunction iff

    G(lam) = 2 theta(pi/2; lam) - pi = i pi        (i = index, G increasing).

Matching at the regular midpoint is what keeps the condition well
conditioned.  A phase readout continued to pi - eps instead locks onto
half-integer multiples of pi except within |lam - lam_i| ~ lam eps^(p-1)
of each eigenvalue once p >= 2 (the generic solution blows up like
(pi-t)^(1-p), whose phase limit is lam-independent), which buries the root
function under integrator noise between eigenvalues.  The midpoint gap has
O(1) slope margins on both sides of every root.  The count of eigenvalues
<= lam stays floor(G(lam)/pi) + 1 whenever G(lam) >= 0.

Two phase-advance backends:

* ``_interval_phase``: adaptive Dormand-Prince 4(5) stepping of the phase
  equation, batched over lam.  Used for interval shooting, where indices
  stay small.
* ``_radial_phase``: piecewise-exact transfer.  Coefficients are frozen at
  cell midpoints of a graded mesh; each cell is then solved exactly
  (a rotation in scaled coordinates where lam > mu/sin^2, a hyperbolic map
  where it is smaller), advancing the phase at a cost independent of lam.
  Mesh-halving Richardson removes the O(h^2) coefficient error.  This keeps
  suspension assemblies with tens of thousands of eigenvalues inside their
  runtime budgets; adaptive stepping needs a step count growing like
  lam^0.6 and cannot.

Everything is deterministic: fixed meshes, fixed step-control constants, no
randomness.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import BracketingError, ConvergenceError, DomainError
from .numerics import rk45_batched

EPS_DEFAULT = 1e-6
HALF_PI = 0.5 * math.pi


def indicial_exponent(q: float, mu) -> np.ndarray:
    """Frobenius power s of the selected endpoint solution t^s.

    For mu > 0 the equation is limit-point and s is the larger indicial
    root, the only one with finite energy.  At mu = 0 the weighted-Neumann
    branch s = 0 (constant-like behavior, w u' -> 0) is selected even when
    q < 1 makes both roots admissible: that is the extension whose interval
    spectrum is k(k+q).
    """
    mu_arr = np.asarray(mu, dtype=float)
    root = 0.5 * (-(q - 1.0) + np.sqrt((q - 1.0) ** 2 + 4.0 * mu_arr))
    return np.where(mu_arr == 0.0, 0.0, root)


def _frobenius_pair(q: float, mu, s, lam, eps: float):
    """Direction of (u, w u') at t = eps for the t^s solution.

    Uses u(t) = t^s (1 + c t^2) with
    c = (q s / 3 + mu / 3 - lam) / (2 (2 s + q + 1)), the next Frobenius
    coefficient once cot t ~ 1/t - t/3 and 1/sin^2 ~ 1/t^2 + 1/3 are
    expanded.  Both components are rescaled by eps^(1-s) > 0, which keeps
    them order-one without touching the angle.
    """
    mu_arr = np.asarray(mu, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    lam_arr = np.asarray(lam, dtype=float)
    c = (q * s_arr / 3.0 + mu_arr / 3.0 - lam_arr) / (2.0 * (2.0 * s_arr + q + 1.0))
    wq = math.sin(eps) ** q
    y = eps * (1.0 + c * eps * eps)
    z = wq * (s_arr + (s_arr + 2.0) * c * eps * eps)
    return y + 0.0 * lam_arr, z


def _left_phase(q: float, mu, s, lam, eps: float) -> np.ndarray:
    y, z = _frobenius_pair(q, mu, s, lam, eps)
    return np.arctan2(y, z)


# ---------------------------------------------------------------------------
# Interval shooting (RK45 on the phase equation)
# ---------------------------------------------------------------------------

def _interval_phase(p: float, lams: np.ndarray, eps: float,
                    rtol: float) -> np.ndarray:
    """theta(pi/2) for the interval problem, batched over lams."""
    lam = np.asarray(lams, dtype=float)
    theta0 = _left_phase(p, 0.0, 0.0, lam, eps)

    def rhs(t: float, theta: np.ndarray) -> np.ndarray:
        w = math.sin(t) ** p
        st = np.sin(theta)
        ct = np.cos(theta)
        return ct * ct / w + (lam * w) * (st * st)

    return rk45_batched(rhs, eps, HALF_PI, theta0, rtol=rtol, atol=1e-12)


def _illinois_batch(g: Callable[[np.ndarray, np.ndarray], np.ndarray],
                    lo: np.ndarray, hi: np.ndarray,
                    glo: np.ndarray, ghi: np.ndarray,
                    tol_abs: float, tol_rel: float,
                    max_iter: int = 200) -> np.ndarray:
    """Vectorized Illinois (damped false position) on a batch of brackets.

    `g(x, idx)` evaluates the root functions with global indices `idx` at
    the points `x`; every iteration makes one such call restricted to the
    items whose brackets are still wide, so stragglers stop dragging the
    whole batch through the expensive phase integration.  Requires
    glo <= 0 <= ghi.
    """
    if np.any(glo > 0.0) or np.any(ghi <= 0.0):
        raise BracketingError("initial bracket carries no sign change")
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    fa = np.array(glo, dtype=float)
    fb = np.array(ghi, dtype=float)
    last_side = np.zeros(a.shape, dtype=np.int8)
    for _ in range(max_iter):
        tol = tol_abs + tol_rel * np.maximum(np.abs(a), np.abs(b))
        idx = np.flatnonzero(b - a > tol)
        if idx.size == 0:
            return 0.5 * (a + b)
        aa, bb = a[idx], b[idx]
        faa, fbb = fa[idx], fb[idx]
        denom = fbb - faa
        denom = np.where(denom == 0.0, 1.0, denom)
        x = bb - fbb * (bb - aa) / denom
        bad = ~((x > aa) & (x < bb) & np.isfinite(x))
        x = np.where(bad, 0.5 * (aa + bb), x)
        fx = g(x, idx)
        neg = fx <= 0.0
        side = last_side[idx]
        # Illinois damping: halve the stale endpoint's value when the same
        # side moves twice in a row, restoring superlinear convergence.
        fbb = np.where(neg & (side == -1), 0.5 * fbb, fbb)
        faa = np.where(~neg & (side == +1), 0.5 * faa, faa)
        a[idx] = np.where(neg, x, aa)
        fa[idx] = np.where(neg, fx, faa)
        b[idx] = np.where(neg, bb, x)
        fb[idx] = np.where(neg, fbb, fx)
        last_side[idx] = np.where(neg, -1, +1).astype(np.int8)
    raise ConvergenceError("phase-condition root finding exceeded 200 iterations")


def prufer_interval_eigenvalues(p: float, indices: Sequence[int], *,
                                tol: float = 1e-9, eps: float = EPS_DEFAULT,
                                rtol: float = 1e-9,
                                bracket_top: float | None = None) -> np.ndarray:
    """Eigenvalues of -(sin^p u')' = lam sin^p u by Pruefer shooting.

    `indices` are eigenvalue indices k >= 0 (k interior zeros); the whole
    request is solved in one batch.  The initial bracket for index k is
    [0, 4 (k + p + 2)^2] unless `bracket_top` caps it (callers that have
    already counted eigenvalues below a threshold pass the threshold, which
    keeps the integrator off needlessly large lam); a missing sign change
    raises BracketingError.
    """
    if p < 0.0 or not math.isfinite(p):
        raise DomainError("weight exponent must be finite and >= 0")
    ks = np.asarray(list(indices), dtype=float)
    if ks.size == 0:
        return np.zeros(0)
    if np.any(ks < 0) or np.any(ks != np.floor(ks)):
        raise DomainError("eigenvalue indices must be integers >= 0")
    targets = (ks + 1.0) * math.pi

    def g(lams: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return 2.0 * _interval_phase(p, lams, eps, rtol) - targets[idx]

    lo = np.full(ks.shape, -max(tol, 1e-8))
    hi = 4.0 * (ks + p + 2.0) ** 2
    if bracket_top is not None:
        hi = np.minimum(hi, float(bracket_top))
    everything = np.arange(ks.size)
    roots = _illinois_batch(g, lo, hi, g(lo, everything), g(hi, everything),
                            tol_abs=tol, tol_rel=0.0)
    # the ground state is 0 analytically; clean the roundoff-scale residue
    return np.where(np.abs(roots) <= 10.0 * max(tol, 1e-8), 0.0, roots)


def interval_count(p: float, lambda_max: float, *,
                   eps: float = EPS_DEFAULT, rtol: float = 1e-9) -> int:
    """Number of interval eigenvalues <= lambda_max, from the phase gap."""
    if lambda_max < 0.0:
        return 0
    top = lambda_max * (1.0 + 1e-9) + 1e-9
    gap = 2.0 * _interval_phase(p, np.array([top]), eps, rtol)[0] - math.pi
    return max(0, int(math.floor(gap / math.pi + 1e-9)) + 1)


# ---------------------------------------------------------------------------
# Radial problems: piecewise-exact phase transfer
# ---------------------------------------------------------------------------

def _transfer_mesh(eps: float, n_side: int, n_mid: int) -> np.ndarray:
    """Graded mesh on [eps, pi/2]: geometric into the singular endpoint.

    Geometric grading matches the logarithmic variation of sin^q and
    mu/sin^2 near the end; the rest is uniform.
    """
    left = np.geomspace(eps, math.pi / 4.0, n_side + 1)
    mid = np.linspace(math.pi / 4.0, HALF_PI, n_mid + 1)
    return np.concatenate([left, mid[1:]])


def _halve_mesh(mesh: np.ndarray) -> np.ndarray:
    mids = 0.5 * (mesh[:-1] + mesh[1:])
    out = np.empty(2 * mesh.size - 1)
    out[0::2] = mesh
    out[1::2] = mids
    return out


def _radial_phase(q: float, mu: np.ndarray, lam: np.ndarray,
                  mesh: np.ndarray, theta0: np.ndarray) -> np.ndarray:
    """Continuous phase at the right mesh end, batched over (mu, lam) items.

    Frozen-coefficient transfer per cell.  State is the direction
    (y, z) ~ (u, w u') normalized to y >= 0 together with the crossing count
    n; the return value is n*pi + atan2(y, z).
    """
    mids = 0.5 * (mesh[:-1] + mesh[1:])
    hs = np.diff(mesh)
    sin_mid = np.sin(mids)
    wbar = sin_mid ** q
    inv_sin2 = 1.0 / (sin_mid * sin_mid)

    y = np.sin(theta0)
    z = np.cos(theta0)
    flip = y < 0.0
    y = np.where(flip, -y, y)
    z = np.where(flip, -z, z)
    # theta0 from atan2 lies in (-pi, pi]; represent as n*pi + frac with
    # frac in [0, pi)
    n = np.where(flip, -1.0, 0.0)

    pi_minus = np.nextafter(math.pi, 0.0)
    for j in range(mids.size):
        w = float(wbar[j])
        h = float(hs[j])
        om2 = lam - mu * inv_sin2[j]
        elliptic = om2 > 0.0
        # --- elliptic cells: exact rotation in scaled coordinates
        om = np.sqrt(np.where(elliptic, om2, 1.0))
        sigma = w * om
        alpha = om * h
        whole = np.floor(alpha / math.pi)
        ar = np.minimum(np.maximum(alpha - whole * math.pi, 0.0), pi_minus)
        ca = np.cos(ar)
        sa = np.sin(ar)
        ye = sigma * y
        ze = z
        ye2 = ye * ca + ze * sa
        ze2 = ze * ca - ye * sa
        cross_e = ye2 < 0.0
        ye2 = np.where(cross_e, -ye2, ye2) / sigma
        ze2 = np.where(cross_e, -ze2, ze2)
        ne = n + whole + cross_e
        # --- hyperbolic cells: cosh/sinh map, scaled by exp(-kappa h)
        kap2 = np.where(elliptic, 0.0, -om2)
        kap = np.sqrt(kap2)
        kh = kap * h
        small = kh < 1e-4
        decay = np.exp(-2.0 * np.where(small, 0.0, kh))
        coshs = np.where(small, 1.0 - kh, 0.5 * (1.0 + decay))
        sinh_over = np.where(small, h * (1.0 - kh + (2.0 / 3.0) * kh * kh),
                             -np.expm1(-2.0 * kh)
                             / (2.0 * np.where(small, 1.0, kap)))
        # coshs ~ e^-kh cosh, sinh_over ~ e^-kh sinh / kappa (h-limit at 0)
        yh = y * coshs + z * (sinh_over / w)
        zh = y * (w * kap2 * sinh_over) + z * coshs
        beta = np.arctan2(yh, zh)
        frac = np.arctan2(y, z)
        delta = np.mod(beta - frac + math.pi, 2.0 * math.pi) - math.pi
        newfrac = frac + delta
        cross_h = newfrac >= math.pi
        dip = newfrac < 0.0
        yh = np.where(cross_h, -yh, yh)
        zh = np.where(cross_h, -zh, zh)
        yh = np.where(dip, np.maximum(yh, 0.0), yh)
        nh = n + np.where(cross_h, 1.0, 0.0)
        # --- merge and renormalize
        y = np.where(elliptic, ye2, yh)
        z = np.where(elliptic, ze2, zh)
        n = np.where(elliptic, ne, nh)
        norm = np.abs(y) + np.abs(z)
        y = y / norm
        z = z / norm
    return n * math.pi + np.arctan2(y, z)


class RadialPhase:
    """Reusable midpoint phase-gap evaluator on a fixed mesh pair."""

    def __init__(self, q: float, eps: float = EPS_DEFAULT,
                 n_side: int = 1000, n_mid: int = 120,
                 richardson: bool = True):
        self.q = float(q)
        self.eps = float(eps)
        self.mesh = _transfer_mesh(self.eps, n_side, n_mid)
        self.fine = _halve_mesh(self.mesh) if richardson else None

    def phase_gap(self, mu: np.ndarray, s: np.ndarray,
                  lam: np.ndarray) -> np.ndarray:
        """G(lam) = 2 theta(pi/2) - pi; eigenvalue i solves G = i pi."""
        theta0 = _left_phase(self.q, mu, s, lam, self.eps)
        coarse = _radial_phase(self.q, mu, lam, self.mesh, theta0)
        if self.fine is None:
            total = coarse
        else:
            fine = _radial_phase(self.q, mu, lam, self.fine, theta0)
            total = (4.0 * fine - coarse) / 3.0
        return 2.0 * total - math.pi


def radial_eigenvalues_batch(q: float, mus: Sequence[float],
                             lambda_max: float, *,
                             tol_rel: float = 1e-10,
                             eps: float = EPS_DEFAULT,
                             phase: RadialPhase | None = None) -> list[np.ndarray]:
    """All eigenvalues <= lambda_max of the radial problems, one per mu.

    Counts come from the phase gap at lambda_max (floor(G/pi) + 1), after
    which every (mu, index) pair is polished in a single Illinois batch.
    Returns a list of ascending eigenvalue arrays aligned with `mus`.
    """
    if lambda_max <= 0.0:
        raise DomainError("lambda_max must be positive")
    mus_arr = np.asarray(list(mus), dtype=float)
    if np.any(mus_arr < 0.0):
        raise DomainError("radial potentials need mu >= 0")
    if phase is None:
        phase = RadialPhase(q, eps)
    ss = indicial_exponent(q, mus_arr)
    hi_val = lambda_max * (1.0 + 1e-9) + 1e-9
    g_top = phase.phase_gap(mus_arr, ss, np.full(mus_arr.shape, hi_val))
    counts = np.maximum(0, np.floor(g_top / math.pi + 1e-9).astype(int) + 1)

    idx_mu = np.repeat(np.arange(mus_arr.size), counts)
    if idx_mu.size == 0:
        return [np.zeros(0) for _ in range(mus_arr.size)]
    item_mu = mus_arr[idx_mu]
    item_s = ss[idx_mu]
    targets = np.concatenate([np.arange(c, dtype=float) for c in counts]) \
        * math.pi

    def g(lams: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return phase.phase_gap(item_mu[idx], item_s[idx], lams) - targets[idx]

    lo = np.full(item_mu.shape, -1e-8)
    hi = np.full(item_mu.shape, hi_val)
    glo = g(lo, np.arange(item_mu.size))
    ghi = g_top[idx_mu] - targets
    roots = _illinois_batch(g, lo, hi, glo, ghi,
                            tol_abs=1e-10, tol_rel=tol_rel)
    roots = np.where(np.abs(roots) <= 1e-7, 0.0, roots)
    out = []
    start = 0
    for c in counts:
        out.append(np.sort(roots[start:start + c]))
        start += c
    return out


def radial_eigenvalues(q: float, mu: float, count: int, *,
                       tol_rel: float = 1e-10,
                       eps: float = EPS_DEFAULT) -> np.ndarray:
    """First `count` eigenvalues for a single mu (convenience wrapper).

    Brackets the needed lambda range from the indicial shift: eigenvalue i
    lies below 4 (s + i + q + 2)^2.
    """
    if count < 1:
        return np.zeros(0)
    s = float(indicial_exponent(q, mu))
    lam_top = 4.0 * (s + count + q + 2.0) ** 2
    vals = radial_eigenvalues_batch(q, [mu], lam_top,
                                    tol_rel=tol_rel, eps=eps)[0]
    if vals.size < count:
        raise BracketingError("radial bracket missed requested eigenvalues")
    return vals[:count]
