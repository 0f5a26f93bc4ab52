"""Finite-difference discretization of the weighted interval form.

The Dirichlet energy int u'(t)^2 sin(t)^p dt on [0, pi] is discretized on m
equally spaced nodes t_i = i*h, h = pi/(m-1), endpoints included.  The
stiffness matrix uses half-node weights,

    (A u)_i = (w_{i-1/2} (u_i - u_{i-1}) + w_{i+1/2} (u_i - u_{i+1})) / h,

and the mass matrix is lumped: W_i = int_{cell i} sin(t)^p dt over the
control volume [t_i - h/2, t_i + h/2] clipped to [0, pi], evaluated with the
closed-form antiderivative, so that sum(W) is the total mass exactly.  Row
sums of A vanish identically, hence constants are in the kernel to machine
precision and the discrete ground state is 0 without any boundary fix-up.

The generalized problem A u = lam diag(W) u is symmetrized to
S = W^{-1/2} A W^{-1/2} and solved by Sturm-sequence bisection, which is
deterministic and lets eigenvalues be extracted by index windows without
computing the whole spectrum.  Eigenvectors come from inverse iteration on
the shifted tridiagonal.

For p = 0 and m = 3 the discrete eigenvalues are {0, 8/pi^2, 16/pi^2}
(= (4/h^2) sin^2(k pi / (2(m-1)))), which pins down the node convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError, DegenerateGridError
from .spaces import sin_power_antiderivative


@dataclass(frozen=True)
class DiscreteForm:
    """Tridiagonal pencil (A, W) plus its symmetrized form S."""
    exponent: float
    nodes: np.ndarray       # m grid points, endpoints included
    masses: np.ndarray      # lumped cell masses W_i, sum = total mass
    diag: np.ndarray        # diagonal of symmetrized S
    offdiag: np.ndarray     # subdiagonal of S (length m-1)


def assemble_form(p: float, m: int) -> DiscreteForm:
    """Assemble the symmetrized FD pencil on m nodes.

    m < 3 leaves no interior structure and raises DegenerateGridError.
    """
    if m < 3:
        raise DegenerateGridError(f"need at least 3 nodes, got {m}")
    if p < 0.0 or not math.isfinite(p):
        raise DegenerateGridError("weight exponent must be finite and >= 0")
    h = math.pi / (m - 1)
    nodes = np.linspace(0.0, math.pi, m)
    half = nodes[:-1] + 0.5 * h
    w_half = np.sin(half) ** p

    lo = np.clip(nodes - 0.5 * h, 0.0, math.pi)
    hi = np.clip(nodes + 0.5 * h, 0.0, math.pi)
    masses = (sin_power_antiderivative(p, hi)
              - sin_power_antiderivative(p, lo))

    # A = (1/h) tridiag(-w_half; w_half-sums; -w_half); S = M^-1/2 A M^-1/2
    inv_sqrt = 1.0 / np.sqrt(masses)
    a_diag = np.zeros(m)
    a_diag[:-1] += w_half
    a_diag[1:] += w_half
    diag = a_diag / h * inv_sqrt * inv_sqrt
    offdiag = -(w_half / h) * inv_sqrt[:-1] * inv_sqrt[1:]
    return DiscreteForm(exponent=float(p), nodes=nodes, masses=masses,
                        diag=diag, offdiag=offdiag)


def _sturm_counts(diag: np.ndarray, offdiag: np.ndarray,
                  shifts: np.ndarray) -> np.ndarray:
    """Number of eigenvalues of tridiag(diag, offdiag) strictly below each shift.

    LDL^T pivot recurrence, vectorized over the shift probes; negative-pivot
    counting.  Pivots snapped away from zero keep the recurrence finite.
    """
    m = diag.size
    off2 = offdiag * offdiag
    q = diag[0] - shifts
    tiny = 1e-300
    q = np.where(np.abs(q) < tiny, -tiny, q)
    count = (q < 0.0).astype(np.int64)
    for i in range(1, m):
        q = diag[i] - shifts - off2[i - 1] / q
        q = np.where(np.abs(q) < tiny, -tiny, q)
        count += q < 0.0
    return count


def tridiag_eigenvalues(form: DiscreteForm, first: int, last: int, *,
                        tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Eigenvalues of the symmetrized pencil with indices first..last (0-based).

    Bisection on the Sturm count.  All requested indices are refined in
    lockstep, one vectorized count evaluation per sweep; brackets start from
    the Gershgorin enclosure.  Bisection stalls past machine precision are
    treated as converged once the bracket stops shrinking.
    """
    m = form.diag.size
    if not (0 <= first <= last < m):
        raise IndexError(f"index window [{first}, {last}] outside 0..{m - 1}")
    radius = np.zeros(m)
    radius[:-1] += np.abs(form.offdiag)
    radius[1:] += np.abs(form.offdiag)
    lo_all = float(np.min(form.diag - radius))
    hi_all = float(np.max(form.diag + radius))
    idx = np.arange(first, last + 1)
    lo = np.full(idx.size, lo_all)
    hi = np.full(idx.size, hi_all)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        width = hi - lo
        scale = np.maximum(np.abs(lo), np.abs(hi)) + 1.0
        if np.all(width <= tol * scale) or np.all(mid <= lo) or np.all(mid >= hi):
            return 0.5 * (lo + hi)
        counts = _sturm_counts(form.diag, form.offdiag, mid)
        below = counts <= idx
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    raise ConvergenceError("Sturm bisection exceeded iteration budget")


def eigenvector(form: DiscreteForm, lam: float, *,
                iterations: int = 3) -> np.ndarray:
    """Mass-orthonormal eigenvector of the pencil at an isolated eigenvalue.

    Inverse iteration on S - lam with a deterministic start; the result v is
    returned in original variables (v = M^-1/2 x) normalized so that
    sum(W v^2) = 1 and the first nonzero component is positive.
    """
    m = form.diag.size
    shift = lam + 1e-10 * (1.0 + abs(lam))
    ab = np.zeros((3, m))
    ab[0, 1:] = form.offdiag
    ab[1, :] = form.diag - shift
    ab[2, :-1] = form.offdiag
    x = np.ones(m) / math.sqrt(m)
    x[::2] += 1.0 / m  # break symmetry between degenerate-looking starts
    for _ in range(iterations):
        x = solve_banded((1, 1), ab, x)
        x = x / np.linalg.norm(x)
    v = x / np.sqrt(form.masses)
    norm = math.sqrt(float(np.sum(form.masses * v * v)))
    v = v / norm
    nz = np.flatnonzero(np.abs(v) > 1e-8)
    if nz.size and v[nz[0]] < 0.0:
        v = -v
    return v


def fd_eigensystem(p: float, m: int, count: int, *,
                   tol: float = 1e-12):
    """First `count` eigenpairs of the m-node discretization.

    Returns (lams, vectors) with vectors[:, j] the j-th mass-orthonormal
    mode.  The leading discrete eigenvalue is exactly 0 (constants); it is
    snapped there to remove the bisection residue.
    """
    form = assemble_form(p, m)
    count = min(count, form.diag.size)
    lams = tridiag_eigenvalues(form, 0, count - 1, tol=tol)
    lams = np.where(np.abs(lams) < 1e-9, 0.0, lams)
    vecs = np.empty((m, count))
    for j, lam in enumerate(lams):
        vecs[:, j] = eigenvector(form, float(lam))
    return form, lams, vecs
