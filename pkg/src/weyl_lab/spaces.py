"""Model metric measure spaces and their volume data.

Four variants:

* ``WeightedInterval(p)``: the interval [0, pi] with distance |s - t| and
  measure sin(t)^p dt.  For p = N - 1 this is the one dimensional model of
  curvature-dimension (N - 1, N).
* ``Circle(L)``: length-L circle with arc distance and arc measure.
* ``SuspensionTower(n, p)``: n - 1 spherical suspensions applied to a
  WeightedInterval(p), each with warping sin(t) and product measure
  sin(t) dt x (previous level).  Metrically the result is a hemisphere of
  the unit n-sphere; the measure is the iterated product, which differs
  from the n-dimensional Hausdorff measure unless p = 0, n = 2.
* ``Gaussian(n)``: R^n with the standard Gaussian measure.

Ball volumes on the interval go through the closed-form antiderivative of
sin^p (an incomplete beta function), so they are exact to roundoff for every
real exponent p >= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .errors import (BoundaryPointError, DomainError, NoncompactSpaceError,
                     UnsupportedVariantError)
from .numerics import adaptive_simpson


@dataclass(frozen=True)
class WeightedInterval:
    """[0, pi] with measure sin(t)^exponent dt."""
    exponent: float

    def __post_init__(self):
        if not (self.exponent >= 0.0 and math.isfinite(self.exponent)):
            raise DomainError("weight exponent must be finite and >= 0")


@dataclass(frozen=True)
class Circle:
    """Circle of circumference `length` with arc-length measure."""
    length: float

    def __post_init__(self):
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise DomainError("circle length must be finite and positive")


@dataclass(frozen=True)
class SuspensionTower:
    """Iterated sin-warped suspension over a WeightedInterval base.

    `levels` = n is both the number of the stage and the regular dimension;
    levels = 2 is a single suspension of the interval.
    """
    levels: int
    base_exponent: float = 0.0

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 2:
            raise DomainError("tower needs an integer level count >= 2")
        if not (self.base_exponent >= 0.0 and math.isfinite(self.base_exponent)):
            raise DomainError("base exponent must be finite and >= 0")


@dataclass(frozen=True)
class Gaussian:
    """R^dim with the standard Gaussian measure (total mass one)."""
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError("gaussian dimension must be an integer >= 1")


ModelSpace = Union[WeightedInterval, Circle, SuspensionTower, Gaussian]


@dataclass(frozen=True)
class RegularPointInfo:
    """Dimension and density at a point where the k-density exists.

    `theta` is the Radon-Nikodym density of the measure against the
    k-dimensional Hausdorff measure at the point.
    """
    k: int
    theta: float


# ---------------------------------------------------------------------------
# sin^p antiderivative
# ---------------------------------------------------------------------------

def sin_power_total(p: float) -> float:
    """Integral of sin(t)^p over [0, pi]: sqrt(pi) G((p+1)/2) / G(p/2 + 1)."""
    return math.sqrt(math.pi) * math.gamma((p + 1.0) / 2.0) \
        / math.gamma(p / 2.0 + 1.0)


def sin_power_antiderivative(p: float, y):
    """M(y) = integral of sin(t)^p over [0, y], 0 <= y <= pi, vectorized.

    Substituting u = cos(t)^2 turns the integral into an incomplete beta
    function: for y <= pi/2,

        M(y) = (T/2) * (1 - I_{cos^2 y}(1/2, (p+1)/2)),   T = M(pi),

    and M(y) = T - M(pi - y) on the other half.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any((y_arr < -1e-12) | (y_arr > math.pi + 1e-12)):
        raise DomainError("antiderivative argument outside [0, pi]")
    y_clip = np.clip(y_arr, 0.0, math.pi)
    total = sin_power_total(p)
    folded = np.minimum(y_clip, math.pi - y_clip)
    c2 = np.square(np.cos(folded))
    half = 0.5 * total * (1.0 - special.betainc(0.5, (p + 1.0) / 2.0, c2))
    out = np.where(y_clip <= math.pi / 2.0, half, total - half)
    if np.isscalar(y) or y_arr.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Gaussian radial density
# ---------------------------------------------------------------------------

def _gauss_radial_pdf(rho: float, n: int, delta: float) -> float:
    # density of |Z - c| at rho, Z standard n-dim normal, delta = |c|;
    # Bessel form kept stable through the exponentially scaled ive.
    if rho <= 0.0:
        if n == 1:
            return math.sqrt(2.0 / math.pi) * math.exp(-0.5 * delta * delta)
        return 0.0
    nu = 0.5 * n - 1.0
    z = rho * delta
    val = rho * (rho / delta) ** nu * math.exp(-0.5 * (rho - delta) ** 2)
    return val * float(special.ive(nu, z))


def _gaussian_ball(n: int, delta: float, r: float, tol: float) -> float:
    if delta < 1e-12:
        return float(special.gammainc(0.5 * n, 0.5 * r * r))
    return adaptive_simpson(lambda rho: _gauss_radial_pdf(rho, n, delta),
                            0.0, r, tol=tol)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def _check_interval_point(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0 or x > math.pi:
        raise DomainError(f"interval point {x!r} outside [0, pi]")
    return x


def ball_volume(space: ModelSpace, x, r: float, *, tol: float = 1e-10) -> float:
    """Measure of the metric ball B_r(x).

    Interval balls come from the exact antiderivative of the weight; circle
    balls are min(2r, L); Gaussian balls integrate the off-center radial
    density to absolute tolerance `tol`.  Towers are not supported (their
    balls have no one dimensional reduction).
    """
    if not (r > 0.0 and math.isfinite(r)):
        raise DomainError("ball radius must be finite and positive")
    if isinstance(space, WeightedInterval):
        x = _check_interval_point(x)
        lo = max(0.0, x - r)
        hi = min(math.pi, x + r)
        return float(sin_power_antiderivative(space.exponent, hi)
                     - sin_power_antiderivative(space.exponent, lo))
    if isinstance(space, Circle):
        x = float(x)
        if not math.isfinite(x):
            raise DomainError("circle point must be a finite angle")
        return min(2.0 * r, space.length)
    if isinstance(space, Gaussian):
        vec = np.atleast_1d(np.asarray(x, dtype=float))
        if vec.shape != (space.dim,):
            raise DomainError(
                f"gaussian point needs {space.dim} coordinates, got {vec.shape}")
        delta = float(np.linalg.norm(vec))
        return _gaussian_ball(space.dim, delta, r, tol)
    if isinstance(space, SuspensionTower):
        raise UnsupportedVariantError(
            "tower ball volumes are not reduced to closed form; "
            "use the spectral routes instead")
    raise UnsupportedVariantError(f"unknown space {space!r}")


def density_at(space: ModelSpace, x) -> RegularPointInfo:
    """Dimension and Hausdorff density at a regular point.

    Raises BoundaryPointError at interval endpoints and on tower singular
    axes, where the density degenerates.
    """
    if isinstance(space, WeightedInterval):
        x = float(x)
        if not math.isfinite(x) or x < 0.0 or x > math.pi:
            raise DomainError(f"interval point {x!r} outside [0, pi]")
        if x == 0.0 or x == math.pi:
            raise BoundaryPointError("density undefined at interval endpoints")
        return RegularPointInfo(1, math.sin(x) ** space.exponent)
    if isinstance(space, Circle):
        x = float(x)
        if not math.isfinite(x):
            raise DomainError("circle point must be a finite angle")
        return RegularPointInfo(1, 1.0)
    if isinstance(space, SuspensionTower):
        n = int(space.levels)
        coords = np.atleast_1d(np.asarray(x, dtype=float))
        if coords.shape != (n,):
            raise DomainError(
                f"tower point needs {n} coordinates "
                "(n-1 suspension angles, then the base coordinate)")
        if np.any(~np.isfinite(coords)) or np.any(coords < 0.0) \
                or np.any(coords > math.pi):
            raise DomainError("tower coordinates must lie in [0, pi]")
        if np.any(coords <= 0.0) or np.any(coords >= math.pi):
            raise BoundaryPointError(
                "point lies on a singular axis or boundary meridian")
        theta = math.sin(coords[-1]) ** space.base_exponent
        for j in range(n - 1):
            # level j+1 contributes sin(t)^(j+1-n): measure sin t dt against
            # Hausdorff sin^(n-j-1) t dt at that level
            theta *= math.sin(coords[j]) ** (j + 1 - n)
        return RegularPointInfo(n, theta)
    if isinstance(space, Gaussian):
        vec = np.atleast_1d(np.asarray(x, dtype=float))
        if vec.shape != (space.dim,):
            raise DomainError(
                f"gaussian point needs {space.dim} coordinates, got {vec.shape}")
        norm2 = float(np.dot(vec, vec))
        theta = (2.0 * math.pi) ** (-0.5 * space.dim) * math.exp(-0.5 * norm2)
        return RegularPointInfo(space.dim, theta)
    raise UnsupportedVariantError(f"unknown space {space!r}")


def regular_dimension(space: ModelSpace) -> int:
    """Essential dimension k of the regular set."""
    if isinstance(space, (WeightedInterval, Circle)):
        return 1
    if isinstance(space, SuspensionTower):
        return int(space.levels)
    if isinstance(space, Gaussian):
        return int(space.dim)
    raise UnsupportedVariantError(f"unknown space {space!r}")


def hausdorff_mass(space: ModelSpace) -> float:
    """H^k of the regular set (k = regular_dimension).

    The interval and tower masses ignore the weight: the interval is
    metrically [0, pi] whatever p is, and the tower is metrically a
    hemisphere of the unit n-sphere, H^n = (1/2) H^n(S^n).
    """
    if isinstance(space, WeightedInterval):
        return math.pi
    if isinstance(space, Circle):
        return space.length
    if isinstance(space, SuspensionTower):
        n = int(space.levels)
        return math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)
    if isinstance(space, Gaussian):
        raise NoncompactSpaceError(
            "gaussian space has infinite Hausdorff mass")
    raise UnsupportedVariantError(f"unknown space {space!r}")


def diameter(space: ModelSpace) -> float:
    if isinstance(space, WeightedInterval):
        return math.pi
    if isinstance(space, Circle):
        return 0.5 * space.length
    if isinstance(space, SuspensionTower):
        return math.pi
    if isinstance(space, Gaussian):
        return math.inf
    raise UnsupportedVariantError(f"unknown space {space!r}")


def total_mass(space: ModelSpace) -> float:
    if isinstance(space, WeightedInterval):
        return sin_power_total(space.exponent)
    if isinstance(space, Circle):
        return space.length
    if isinstance(space, SuspensionTower):
        return 2.0 ** (space.levels - 1) * sin_power_total(space.base_exponent)
    if isinstance(space, Gaussian):
        return 1.0
    raise UnsupportedVariantError(f"unknown space {space!r}")


@dataclass(frozen=True)
class RescaledView:
    """(X, d/r, C m): distances shrunk by r, measure scaled by C.

    A ball of radius s in the view is a ball of radius r*s upstairs, so
    view volumes are C * m(B_{r s}(x)), and the heat kernel obeys
    p_view(x, y, t) = C^{-1} p(x, y, r^2 t).
    """
    base: ModelSpace
    r: float
    C: float

    def ball_volume(self, x, s: float) -> float:
        return self.C * ball_volume(self.base, x, self.r * s)

    def diameter(self) -> float:
        return diameter(self.base) / self.r

    def total_mass(self) -> float:
        return self.C * total_mass(self.base)

    def diag_heat_kernel(self, kernel, x, t: float) -> float:
        """Evaluate the view's diagonal kernel from the base kernel callable."""
        return kernel(x, self.r * self.r * t) / self.C


def rescale(space: ModelSpace, r: float, C: float) -> RescaledView:
    if not (r > 0.0 and math.isfinite(r)):
        raise DomainError("rescale factor r must be finite and positive")
    if not (C > 0.0 and math.isfinite(C)):
        raise DomainError("measure scale C must be finite and positive")
    return RescaledView(space, float(r), float(C))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def space_to_json(space: ModelSpace) -> dict:
    if isinstance(space, WeightedInterval):
        return {"kind": "interval", "exponent": space.exponent}
    if isinstance(space, Circle):
        return {"kind": "circle", "length": space.length}
    if isinstance(space, SuspensionTower):
        return {"kind": "tower", "levels": int(space.levels),
                "exponent": space.base_exponent}
    if isinstance(space, Gaussian):
        return {"kind": "gaussian", "dim": int(space.dim)}
    raise UnsupportedVariantError(f"unknown space {space!r}")


def space_from_json(data: dict) -> ModelSpace:
    try:
        kind = data["kind"]
    except (TypeError, KeyError):
        raise DomainError("space description needs a 'kind' field")
    if kind == "interval":
        return WeightedInterval(float(data["exponent"]))
    if kind == "circle":
        return Circle(float(data["length"]))
    if kind == "tower":
        return SuspensionTower(int(data["levels"]),
                               float(data.get("exponent", 0.0)))
    if kind == "gaussian":
        return Gaussian(int(data["dim"]))
    raise UnsupportedVariantError(f"unknown space kind {kind!r}")
