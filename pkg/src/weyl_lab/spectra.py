"""Spectra as multiplicity lists, with exact and numerical construction.

A `Spectrum` is an ascending list of distinct eigenvalues with integer
multiplicities together with `complete_up_to`, the threshold below which the
list is certified complete.  Counting functions refuse to answer above that
threshold instead of silently undercounting.

Construction routes:

* `oracle_spectrum` - closed forms: k(k+p) for the weighted interval,
  (2 pi k / L)^2 with multiplicity 2 for the circle, the iterated
  indicial-shift form (s+i)(s+i+1) for suspension towers, and the integer
  levels m with multiplicity C(m+n-1, n-1) for the Gaussian space.
* `prufer_spectrum` - interval eigenvalues by phase shooting (no closed
  form is consulted; the count below lambda_max also comes from the phase).
* `fd_spectrum` - eigenvalues of the finite-difference pencil.
* `suspension_spectrum` / `tower_spectrum` - separation of variables: every
  base eigenvalue mu spawns the radial problem with potential mu/sin^2, and
  the union over the base spectrum (weighted by base multiplicities) is
  deduplicated by chain clustering.

Near-coincident numerical eigenvalues are merged when the gap to the
previous member is at most 1e-9 (1 + lambda); the merged position is the
multiplicity-weighted mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .discretize import _sturm_counts, assemble_form, tridiag_eigenvalues
from .errors import (CountingRangeError, DomainError, IncompleteBaseError,
                     UnsupportedVariantError)
from .shooting import (RadialPhase, indicial_exponent, interval_count,
                       prufer_interval_eigenvalues, radial_eigenvalues_batch)
from .spaces import Circle, Gaussian, SuspensionTower, WeightedInterval

MERGE_TOL_ABS = 1e-9
FINE_TIER_TOP = 500.0

# crossover between shooting and transfer under method="auto"; shooting is
# the more accurate of the two below this cutoff and the slower one above
AUTO_SHOOTING_TOP = 2000.0


@dataclass(frozen=True)
class Spectrum:
    """Ascending distinct eigenvalues, multiplicities, completeness bound."""
    lambdas: np.ndarray
    mults: np.ndarray
    complete_up_to: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        mul = np.asarray(self.mults, dtype=np.int64)
        if lam.shape != mul.shape or lam.ndim != 1:
            raise DomainError("lambdas and mults must be 1-d and aligned")
        if lam.size and (np.any(np.diff(lam) <= 0.0) or lam[0] < -1e-12):
            raise DomainError("eigenvalues must be ascending and >= 0")
        if np.any(mul < 1):
            raise DomainError("multiplicities must be positive integers")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "mults", mul)

    @property
    def total(self) -> int:
        return int(np.sum(self.mults))

    def expanded(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, ascending."""
        return np.repeat(self.lambdas, self.mults)


def merge_entries(lambdas: Iterable[float], mults: Iterable[int],
                  complete_up_to: float) -> Spectrum:
    """Sort, chain-cluster, and package raw (lambda, mult) pairs.

    A pair joins the current cluster when its gap to the previously absorbed
    member is at most 1e-9 (1 + lambda); cluster position is the
    multiplicity-weighted mean.  Chain clustering keeps a numerically split
    multiple eigenvalue together even when its copies straddle the
    single-gap tolerance.
    """
    lam = np.asarray(list(lambdas), dtype=float)
    mul = np.asarray(list(mults), dtype=np.int64)
    if lam.size == 0:
        return Spectrum(np.zeros(0), np.zeros(0, dtype=np.int64),
                        float(complete_up_to))
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    mul = mul[order]
    out_l: list[float] = []
    out_m: list[int] = []
    acc_pos = lam[0] * mul[0]
    acc_m = int(mul[0])
    last = lam[0]
    for x, w in zip(lam[1:], mul[1:]):
        if x - last <= MERGE_TOL_ABS * (1.0 + x):
            acc_pos += x * w
            acc_m += int(w)
        else:
            out_l.append(acc_pos / acc_m)
            out_m.append(acc_m)
            acc_pos = x * w
            acc_m = int(w)
        last = x
    out_l.append(acc_pos / acc_m)
    out_m.append(acc_m)
    val = np.maximum(np.array(out_l), 0.0)
    return Spectrum(val, np.array(out_m, dtype=np.int64),
                    float(complete_up_to))


def counting(spectrum: Spectrum, lam: float) -> int:
    """N(lam) = number of eigenvalues <= lam, with multiplicity."""
    if lam > spectrum.complete_up_to * (1.0 + 1e-12) + 1e-12:
        raise CountingRangeError(
            f"count at {lam} exceeds certified range {spectrum.complete_up_to}")
    j = int(np.searchsorted(spectrum.lambdas, lam, side="right"))
    return int(np.sum(spectrum.mults[:j]))


def ith_eigenvalue(spectrum: Spectrum, i: int) -> float:
    """The i-th eigenvalue (1-based, counted with multiplicity)."""
    if i < 1:
        raise IndexError("eigenvalue indices are 1-based")
    cum = np.cumsum(spectrum.mults)
    if cum.size == 0 or i > cum[-1]:
        raise IndexError(f"only {0 if cum.size == 0 else int(cum[-1])} "
                         f"eigenvalues certified, asked for {i}")
    j = int(np.searchsorted(cum, i, side="left"))
    return float(spectrum.lambdas[j])


# ---------------------------------------------------------------------------
# Closed-form spectra
# ---------------------------------------------------------------------------

def _interval_oracle(p: float, lambda_max: float) -> tuple[list, list]:
    lams, mults = [], []
    k = 0
    while k * (k + p) <= lambda_max:
        lams.append(k * (k + p))
        mults.append(1)
        k += 1
    return lams, mults


def oracle_spectrum(space, lambda_max: float) -> Spectrum:
    """Closed-form spectrum of a model space up to lambda_max.

    Suspension towers iterate the indicial shift: each base eigenvalue mu
    contributes (s+i)(s+i+1) for i >= 0 with s = sqrt(mu), starting from the
    base interval k(k+p).  For the Gaussian space the eigenvalues are the
    nonnegative integers m with multiplicity C(m+n-1, n-1).
    """
    if lambda_max < 0.0:
        raise DomainError("lambda_max must be >= 0")
    if isinstance(space, WeightedInterval):
        lams, mults = _interval_oracle(space.exponent, lambda_max)
        return merge_entries(lams, mults, lambda_max)
    if isinstance(space, Circle):
        lams, mults = [0.0], [1]
        k = 1
        while (2.0 * math.pi * k / space.length) ** 2 <= lambda_max:
            lams.append((2.0 * math.pi * k / space.length) ** 2)
            mults.append(2)
            k += 1
        return merge_entries(lams, mults, lambda_max)
    if isinstance(space, Gaussian):
        lams, mults = [], []
        for level in range(int(math.floor(lambda_max)) + 1):
            lams.append(float(level))
            mults.append(math.comb(level + space.dim - 1, space.dim - 1))
        return merge_entries(lams, mults, lambda_max)
    if isinstance(space, SuspensionTower):
        base_l, base_m = _interval_oracle(space.base_exponent, lambda_max)
        for _ in range(space.levels - 1):
            next_l, next_m = [], []
            for mu, wgt in zip(base_l, base_m):
                s = math.sqrt(mu)
                i = 0
                while (s + i) * (s + i + 1.0) <= lambda_max:
                    next_l.append((s + i) * (s + i + 1.0))
                    next_m.append(wgt)
                    i += 1
            base_l, base_m = next_l, next_m
        return merge_entries(base_l, base_m, lambda_max)
    raise UnsupportedVariantError(f"no closed-form spectrum for {space!r}")


# ---------------------------------------------------------------------------
# Numerical spectra
# ---------------------------------------------------------------------------

def prufer_spectrum(p: float, lambda_max: float, *,
                    tol: float = 1e-9, rtol: float = 1e-9) -> Spectrum:
    """Interval spectrum by phase shooting, complete up to lambda_max."""
    n = interval_count(p, lambda_max, rtol=rtol)
    if n == 0:
        return Spectrum(np.zeros(0), np.zeros(0, dtype=np.int64),
                        float(lambda_max))
    top = lambda_max * (1.0 + 1e-9) + 1e-9
    vals = prufer_interval_eigenvalues(p, range(n), tol=tol, rtol=rtol,
                                       bracket_top=top)
    return merge_entries(vals, np.ones(n, dtype=np.int64), lambda_max)


def fd_spectrum(p: float, lambda_max: float, m: int) -> Spectrum:
    """Spectrum of the m-node finite-difference pencil up to lambda_max.

    Complete for the discrete operator (the count below lambda_max is read
    off the Sturm sequence); the discrete eigenvalues approximate the
    continuum ones to O(h^2).
    """
    form = assemble_form(p, m)
    n = int(_sturm_counts(form.diag, form.offdiag,
                          np.array([lambda_max * (1.0 + 1e-12) + 1e-12]))[0])
    if n == 0:
        return Spectrum(np.zeros(0), np.zeros(0, dtype=np.int64),
                        float(lambda_max))
    vals = tridiag_eigenvalues(form, 0, n - 1)
    vals = np.where(np.abs(vals) < 1e-9, 0.0, vals)
    return merge_entries(vals, np.ones(n, dtype=np.int64), lambda_max)


def _tiered_radial_lists(q: float, mus: np.ndarray, lambda_max: float,
                         fine_tier_top: float) -> list[np.ndarray]:
    """Per-mu radial eigenvalue lists with a finer mesh below the tier cut.

    The low tier is re-solved on a doubled mesh and spliced in by index
    (entry i of either run approximates the same root of G = i pi), so the
    combination has no boundary duplication or loss.
    """
    cut = min(fine_tier_top, lambda_max)
    fine_phase = RadialPhase(q, n_side=2000, n_mid=400)
    fine = radial_eigenvalues_batch(q, mus, cut, phase=fine_phase)
    if lambda_max <= cut:
        return fine
    coarse = radial_eigenvalues_batch(q, mus, lambda_max)
    return [np.concatenate([f, c[f.size:]]) for f, c in zip(fine, coarse)]


def suspension_spectrum(base: Spectrum, lambda_max: float, *,
                        fine_tier_top: float = FINE_TIER_TOP) -> Spectrum:
    """Spectrum of the sin-warped suspension over a base spectrum.

    Every base eigenvalue mu contributes the radial spectrum of the
    potential mu/sin^2 with weight sin t, carrying the base multiplicity.
    The base list must be certified at least up to lambda_max (the lowest
    radial eigenvalue over mu is >= mu, so no higher base modes can reach
    below lambda_max); otherwise IncompleteBaseError.

    Low-lying eigenvalues (below `fine_tier_top`) are re-solved on a finer
    transfer mesh and spliced in by index, so that split copies of a
    structurally multiple eigenvalue land within the merge tolerance where
    multiplicity structure is actually inspected.
    """
    if base.complete_up_to < lambda_max * (1.0 - 1e-12):
        raise IncompleteBaseError(
            f"base certified to {base.complete_up_to}, need {lambda_max}")
    mus = base.lambdas[base.lambdas <= lambda_max * (1.0 + 1e-12)]
    wgts = base.mults[:mus.size]
    if mus.size == 0:
        return Spectrum(np.zeros(0), np.zeros(0, dtype=np.int64),
                        float(lambda_max))
    per_mu = _tiered_radial_lists(1.0, mus, lambda_max, fine_tier_top)
    lams: list[float] = []
    mults: list[int] = []
    for vals, w in zip(per_mu, wgts):
        lams.extend(vals.tolist())
        mults.extend([int(w)] * vals.size)
    return merge_entries(lams, mults, lambda_max)


def transfer_interval_spectrum(p: float, lambda_max: float) -> Spectrum:
    """Interval spectrum by the piecewise-exact transfer (zero potential).

    Same operator as `prufer_spectrum`, solved on the transfer mesh instead
    of by adaptive stepping.  The cost is independent of lambda, which is
    what tower assemblies need: their bases must stay accurate up to large
    lambda_max, where adaptive phase integration at tight tolerance is two
    orders of magnitude slower.  For p = 0 the frozen-coefficient cells are
    exact, so the transfer introduces no truncation error at all.
    """
    per_mu = _tiered_radial_lists(float(p), np.array([0.0]), lambda_max,
                                  FINE_TIER_TOP)
    vals = per_mu[0]
    return merge_entries(vals, np.ones(vals.size, dtype=np.int64), lambda_max)


def tower_spectrum(space: SuspensionTower, lambda_max: float) -> Spectrum:
    """Numerical spectrum of a suspension tower, built level by level.

    The innermost base is the weighted interval solved on the transfer
    mesh; each suspension layer is then assembled by separation of
    variables.  The base needs tighter accuracy than a standalone interval
    run because the indicial shift amplifies an error in mu by
    (2 sqrt(lam) + 1) / (2 sqrt(mu)), which is large for low base modes;
    the tiered transfer delivers that uniformly in lambda.
    """
    spec = transfer_interval_spectrum(space.base_exponent, lambda_max)
    for _ in range(space.levels - 1):
        spec = suspension_spectrum(spec, lambda_max)
    return spec


def compute_spectrum(space, lambda_max: float, method: str = "auto") -> Spectrum:
    """Spectrum dispatch: 'oracle', 'prufer', 'fd:<m>', 'auto', 'transfer'.

    'auto' picks a computed route wherever one exists: shooting for
    intervals up to moderate cutoffs and the piecewise-exact transfer
    beyond (shooting cost grows linearly in lambda_max, transfer cost is
    lambda-uniform), the level-by-level assembly for towers, and closed
    forms for the circle and the Gaussian space (both are classical
    Fourier/Hermite spectra; there is nothing to discretize).
    """
    if method == "oracle":
        return oracle_spectrum(space, lambda_max)
    if method.startswith("fd:"):
        if not isinstance(space, WeightedInterval):
            raise UnsupportedVariantError(
                "finite differences are defined for weighted intervals only")
        return fd_spectrum(space.exponent, lambda_max, int(method[3:]))
    if method == "prufer":
        if not isinstance(space, WeightedInterval):
            raise UnsupportedVariantError(
                "phase shooting is defined for weighted intervals only")
        return prufer_spectrum(space.exponent, lambda_max)
    if method == "transfer":
        if not isinstance(space, WeightedInterval):
            raise UnsupportedVariantError(
                "the transfer route is defined for weighted intervals only")
        return transfer_interval_spectrum(space.exponent, lambda_max)
    if method != "auto":
        raise UnsupportedVariantError(f"unknown spectrum method {method!r}")
    if isinstance(space, WeightedInterval):
        if lambda_max <= AUTO_SHOOTING_TOP:
            return prufer_spectrum(space.exponent, lambda_max)
        return transfer_interval_spectrum(space.exponent, lambda_max)
    if isinstance(space, SuspensionTower):
        return tower_spectrum(space, lambda_max)
    if isinstance(space, (Circle, Gaussian)):
        return oracle_spectrum(space, lambda_max)
    raise UnsupportedVariantError(f"no spectrum route for {space!r}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def spectrum_to_csv(spectrum: Spectrum) -> str:
    """CSV with a header row and a completeness trailer comment."""
    lines = ["lambda,multiplicity"]
    for lam, mul in zip(spectrum.lambdas, spectrum.mults):
        lines.append("%.17g,%d" % (lam, mul))
    lines.append("# complete_up_to=%.17g" % spectrum.complete_up_to)
    return "\n".join(lines) + "\n"


def spectrum_from_csv(text: str) -> Spectrum:
    lams: list[float] = []
    mults: list[int] = []
    complete = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line == "lambda,multiplicity":
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("complete_up_to="):
                complete = float(body.split("=", 1)[1])
            continue
        a, b = line.split(",")
        lams.append(float(a))
        mults.append(int(b))
    if complete is None:
        raise DomainError("spectrum file lacks a complete_up_to trailer")
    return Spectrum(np.array(lams), np.array(mults, dtype=np.int64), complete)
