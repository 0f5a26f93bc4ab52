"""The headline pipeline: criterion integral, ratio curves, trace formula.

Everything funnels into one statement: for the compact model spaces the
counting function obeys N(lam)/lam^(k/2) -> omega_k * H^k / (2 pi)^k, and
the equivalent trace normalization (4 pi t)^(k/2) Z(t) -> H^k.  The
criterion behind it is the finiteness (with matching limit) of the volume
integral int s^k / m(B_s(x)) dm(x) as s -> 0.  This module evaluates all
three routes independently and cross-checks them through the Karamata
transform bookkeeping, so an agreement is evidence and a disagreement is a
located bug, never a tuned constant.

Limits are attested, not computed: a sweep reports its finest value plus a
log-log trend slope, and "convergent" means the slope magnitude sits below
an explicit cut (0.05).  Dominated convergence is a proof device; the code's
counterpart is the reported empirical sup of the integrand density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (DomainError, NoncompactSpaceError,
                     UnsupportedVariantError, WeylLabError)
from .numerics import exact_sum, gauss_panel, log_trend, richardson_sqrt_t, \
    unit_ball_volume
from .spaces import (Circle, Gaussian, ModelSpace, SuspensionTower,
                     WeightedInterval, ball_volume, density_at, diameter,
                     hausdorff_mass, regular_dimension, space_to_json)
from .spectra import Spectrum, compute_spectrum, counting
from .heat import heat_trace
from .tauberian import AtomicMeasure, PowerTail, karamata_crosscheck

TREND_CONVERGENT = 0.05  # |log-log slope| below this attests a finite limit


# ---------------------------------------------------------------------------
# Criterion integral
# ---------------------------------------------------------------------------

def _criterion_checks(space: ModelSpace, k: int, s: float) -> None:
    if isinstance(space, SuspensionTower):
        raise UnsupportedVariantError(
            "criterion integral disabled for towers (no ball volumes); "
            "use the ratio/trace routes")
    if isinstance(space, Gaussian):
        raise NoncompactSpaceError(
            "criterion integral diverges on the Gaussian space")
    if k != regular_dimension(space):
        raise DomainError(
            f"exponent k={k} does not match the regular dimension "
            f"{regular_dimension(space)}")
    if not (0.0 < s < diameter(space)):
        raise DomainError(f"scale s={s!r} must lie in (0, diameter)")


def criterion_integral(space: ModelSpace, k: int, s: float,
                       quad_nodes: int = 64) -> float:
    """int over X of s^k / m(B_s(x)) dm(x) at one scale s.

    On the circle the integrand is identically 1/2.  On intervals the ball
    clips at the endpoints, so the domain splits at distance s from each
    end; inside each piece the integrand is smooth and a Gauss panel
    converges fast.
    """
    _criterion_checks(space, k, s)
    if isinstance(space, Circle):
        # m(B_s) = 2s for s < L/2; the integrand is exactly 1/2
        return 0.5 * space.length
    p = space.exponent

    def integrand(xs):
        xs = np.atleast_1d(xs)
        return np.array([s ** k / ball_volume(space, float(x), s)
                         * math.sin(float(x)) ** p for x in xs])

    breaks = [0.0, s, math.pi - s, math.pi]
    if 2.0 * s >= math.pi:
        breaks = [0.0, math.pi / 2.0, math.pi]
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        total += gauss_panel(integrand, a, b, quad_nodes)
    return total


def pointwise_criterion_integral(space: ModelSpace, k: int,
                                 quad_nodes: int = 64) -> float:
    """int over X of lim_(s->0) s^k / m(B_s(x)) dm(x), via densities.

    The pointwise limit at a regular point is 1/(omega_k * theta(x)), so
    this is the H^k(R*)/omega_k side of the criterion, computed from
    `density_at` with no ball volumes involved: an independent route from
    `criterion_integral`, kept separate on purpose.
    """
    if isinstance(space, SuspensionTower):
        raise UnsupportedVariantError(
            "pointwise criterion disabled for towers")
    if isinstance(space, Gaussian):
        raise NoncompactSpaceError(
            "pointwise criterion diverges on the Gaussian space")
    if k != regular_dimension(space):
        raise DomainError(
            f"exponent k={k} does not match the regular dimension "
            f"{regular_dimension(space)}")
    omega = unit_ball_volume(k)
    if isinstance(space, Circle):
        # theta = 1 everywhere: L / omega_1
        return space.length / omega
    p = space.exponent

    def integrand(xs):
        xs = np.atleast_1d(xs)
        return np.array([math.sin(float(x)) ** p
                         / (omega * density_at(space, float(x)).theta)
                         for x in xs])

    half = math.pi / 2.0
    return (gauss_panel(integrand, 0.0, half, quad_nodes)
            + gauss_panel(integrand, half, math.pi, quad_nodes))


@dataclass(frozen=True)
class CriterionVerdict:
    """Both routes to the criterion constant, with trend-attested flags."""
    s_grid: np.ndarray
    integral_curve: np.ndarray
    limit_estimate: float        # curve value at the finest s
    pointwise_integral: float    # density route, H^k(R*)/omega_k
    trend: float                 # log-log slope of the curve, last 3 points
    finite: bool                 # |trend| below the convergence cut
    equal: bool                  # the two routes agree within tol
    dominating_bound: float      # empirical sup of the integrand density

    def as_dict(self) -> dict:
        return {"s_grid": self.s_grid.tolist(),
                "integral_curve": self.integral_curve.tolist(),
                "limit_estimate": self.limit_estimate,
                "pointwise_integral": self.pointwise_integral,
                "trend": self.trend,
                "finite": self.finite,
                "equal": self.equal,
                "dominating_bound": self.dominating_bound}


def _dominating_bound(space: ModelSpace, k: int) -> float:
    """Empirical sup over (x, s) of s^k * density / m(B_s(x)).

    The criterion's dominated-convergence hypothesis needs this quantity
    bounded; the scan samples boundary-hugging points and small scales
    where it peaks.
    """
    if isinstance(space, Circle):
        return 0.5
    sup = 0.0
    s_samples = np.geomspace(1e-4, 1.0, 13)
    for s in s_samples:
        # boundary layer in units of s plus a spread of interior points
        xs = np.concatenate([s * np.linspace(0.02, 2.0, 15),
                             np.linspace(0.1, math.pi / 2.0, 7)])
        for x in xs:
            if not 0.0 < x < math.pi:
                continue
            val = (s ** k * math.sin(x) ** space.exponent
                   / ball_volume(space, x, s))
            sup = max(sup, val)
    return sup


def criterion_verdict(space: ModelSpace, k: int, s_grid: Sequence[float],
                      tol: float = 1e-3) -> CriterionVerdict:
    """Sweep the criterion integral toward s = 0 and compare both routes.

    finite: the sweep's log-log slope is below the convergence cut.
    equal: the finest sweep value matches the pointwise (density) integral
    within tol relative.  Together these attest the forward direction of
    the sharp-criterion equivalence on the sampled space.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.size == 0 or np.any(s_grid <= 0.0):
        raise DomainError("s_grid must be positive")
    if np.any(np.diff(s_grid) >= 0.0):
        raise DomainError("s_grid must decrease strictly toward 0")
    curve = np.array([criterion_integral(space, k, float(s)) for s in s_grid])
    pointwise = pointwise_criterion_integral(space, k)
    trend = log_trend(s_grid[::-1], curve[::-1])
    finite = bool(abs(trend) < TREND_CONVERGENT) if math.isfinite(trend) else False
    limit = float(curve[-1])
    equal = bool(abs(limit - pointwise) <= tol * (1.0 + abs(pointwise)))
    return CriterionVerdict(s_grid, curve, limit, pointwise, trend, finite,
                            equal, _dominating_bound(space, k))


# ---------------------------------------------------------------------------
# Ratio and trace curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioCurve:
    """N(lam)/lam^exponent along a grid, with its convergence trend."""
    lambda_grid: np.ndarray
    values: np.ndarray
    exponent: float
    trend: float
    limit_estimate: float

    def csv(self) -> str:
        lines = [f"# exponent: %.17g" % self.exponent, "lambda,ratio"]
        for lam, v in zip(self.lambda_grid, self.values):
            lines.append("%.17g,%.17g" % (lam, v))
        return "\n".join(lines) + "\n"


def weyl_ratio(spectrum: Spectrum, k: int, lambda_grid: Sequence[float],
               exponent: Optional[float] = None) -> RatioCurve:
    """Counting-function ratio curve N(lam)/lam^exponent.

    The default exponent k/2 is the compact normalization; the Gaussian
    regime passes its own exponent n explicitly.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0.0):
        raise DomainError("lambda_grid must be positive")
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("lambda_grid must increase strictly")
    expo = 0.5 * k if exponent is None else float(exponent)
    values = np.array([counting(spectrum, float(lam)) / lam ** expo
                       for lam in grid])
    trend = log_trend(grid, values)
    return RatioCurve(grid, values, expo, trend, float(values[-1]))


@dataclass(frozen=True)
class TraceCurve:
    """(4 pi t)^(k/2) Z(t) along a decreasing grid, plus extrapolation."""
    t_grid: np.ndarray
    values: np.ndarray
    limit: float

    def csv(self) -> str:
        lines = ["t,trace"]
        for t, v in zip(self.t_grid, self.values):
            lines.append("%.17g,%.17g" % (t, v))
        return "\n".join(lines) + "\n"


def fitted_tail(spectrum: Spectrum, exponent: float) -> PowerTail:
    """Power-law tail model calibrated near the certification edge.

    Only the model's density matters downstream (both the counting
    continuation and its Laplace tail are increments from the cutoff),
    so the coefficient is a least-squares fit of N(lam) against
    lam^exponent over the top half-window of the spectrum.  Fitting the
    jump midpoints N(lam_i) - mult_i/2 removes the half-step bias of a
    staircase, and the regression averages out step phase that a
    two-point fit at the edge inherits wholesale.  For counting
    functions that are exactly affine in lam^exponent (distinct simple
    clusters at k^2 and the like) the fit is exact.  Degenerate windows
    fall back to the edge value N(Lambda)/Lambda^g.
    """
    g = float(exponent)
    lam = spectrum.lambdas
    mul = spectrum.mults.astype(float)
    cum = np.cumsum(mul)
    top = spectrum.complete_up_to
    edge = float(cum[-1]) / top ** g if top > 0.0 else 0.0
    sel = lam >= lam[-1] / 2.0 if lam.size else np.zeros(0, dtype=bool)
    if int(np.sum(sel)) < 3:
        return PowerTail(edge, g)
    x = lam[sel] ** g
    y = (cum - mul / 2.0)[sel]
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    if denom <= 0.0:
        return PowerTail(edge, g)
    c = float(np.dot(xc, y - y.mean()) / denom)
    if not (c > 0.0 and math.isfinite(c)):
        return PowerTail(edge, g)
    return PowerTail(c, g)


def trace_formula(spectrum: Spectrum, k: int, t_grid: Sequence[float], *,
                  tail: Optional[PowerTail] = None) -> TraceCurve:
    """(4 pi t)^(k/2) Z(t) over a decreasing grid, extrapolated in sqrt(t).

    Truncation soundness at each t is policed by `heat_trace`; a grid
    reaching below the certified range must come with a tail model.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid <= 0.0):
        raise DomainError("t_grid must be positive")
    if np.any(np.diff(t_grid) >= 0.0):
        raise DomainError("t_grid must decrease strictly")
    values = np.array([
        (4.0 * math.pi * t) ** (0.5 * k) * heat_trace(spectrum, t, tail=tail)
        for t in t_grid])
    levels = min(2, t_grid.size - 1)
    limit = (richardson_sqrt_t(t_grid, values, levels=levels)
             if levels >= 1 else float(values[-1]))
    return TraceCurve(t_grid, values, limit)


# ---------------------------------------------------------------------------
# Composite report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeylConfig:
    """Grids and tolerances for a full report run."""
    method: str = "auto"
    lambda_max: float = 1e6
    s_grid: Optional[np.ndarray] = None
    t_grid: Optional[np.ndarray] = None
    lambda_grid: Optional[np.ndarray] = None
    tol: float = 0.02

    def resolved_s_grid(self) -> np.ndarray:
        if self.s_grid is not None:
            return np.asarray(self.s_grid, dtype=float)
        return np.geomspace(0.1, 1e-3, 7)

    def resolved_t_grid(self, lam_top: float) -> np.ndarray:
        if self.t_grid is not None:
            return np.asarray(self.t_grid, dtype=float)
        # the report always attaches a tail model, so the grid may dip
        # below the bare-truncation floor near 45/lam_top; lam_top*t = 5
        # keeps the junction region a small correction under the model
        t_min = 5.0 / lam_top
        return np.array([100.0 * t_min, 10.0 * t_min, t_min])

    def resolved_lambda_grid(self) -> np.ndarray:
        if self.lambda_grid is not None:
            return np.asarray(self.lambda_grid, dtype=float)
        return np.geomspace(self.lambda_max ** 0.25, self.lambda_max, 9)


@dataclass(frozen=True)
class WeylReport:
    """Everything the pipeline can say about one space, cross-checked.

    Sections that fail raise-worthy preconditions (criterion on a tower,
    anything on the Gaussian) are recorded in section_errors instead of
    failing the whole report.
    """
    space: dict
    k: int
    hausdorff: float
    predicted_weyl_limit: float
    counting_exponent: float
    regime: str
    criterion: Optional[CriterionVerdict]
    ratio: Optional[RatioCurve]
    trace: Optional[TraceCurve]
    karamata_a: Optional[float]
    karamata_c: Optional[float]
    consistent: bool
    residuals: dict = field(default_factory=dict)
    section_errors: dict = field(default_factory=dict)
    # carried for consumers that want to serialize or reuse the eigenvalue
    # data without paying for a second solve; not part of as_dict
    spectrum: Optional[Spectrum] = None

    def as_dict(self) -> dict:
        return {
            "space": self.space,
            "k": self.k,
            "hausdorff": self.hausdorff,
            "predicted_weyl_limit": self.predicted_weyl_limit,
            "counting_exponent": self.counting_exponent,
            "regime": self.regime,
            "criterion": None if self.criterion is None else self.criterion.as_dict(),
            "ratio": None if self.ratio is None else {
                "lambda_grid": self.ratio.lambda_grid.tolist(),
                "values": self.ratio.values.tolist(),
                "exponent": self.ratio.exponent,
                "trend": self.ratio.trend,
                "limit_estimate": self.ratio.limit_estimate},
            "trace": None if self.trace is None else {
                "t_grid": self.trace.t_grid.tolist(),
                "values": self.trace.values.tolist(),
                "limit": self.trace.limit},
            "karamata_a": self.karamata_a,
            "karamata_c": self.karamata_c,
            "consistent": self.consistent,
            "residuals": dict(self.residuals),
            "section_errors": dict(self.section_errors),
        }


def weyl_report(space: ModelSpace, config: WeylConfig = WeylConfig()) -> WeylReport:
    """Run the full pipeline on one space and cross-check the three routes.

    Compact spaces get the criterion sweep, the ratio curve at exponent
    k/2, the normalized trace curve, and the Karamata transform of the
    counting measure; consistency means ratio limit, trace limit, and the
    two Karamata constants all tie together within the configured
    tolerance.  The Gaussian space is reported spectrum-only, in its own
    counting regime with exponent n and limit 1/Gamma(n+1).
    """
    k = regular_dimension(space)
    errors: dict = {}
    gaussian = isinstance(space, Gaussian)
    if gaussian:
        expo = float(space.dim)
        regime = "non-RCD*-Weyl regime"
        hmass = math.nan
        predicted = 1.0 / math.gamma(space.dim + 1.0)
    else:
        expo = 0.5 * k
        regime = "compact-Weyl"
        hmass = hausdorff_mass(space)
        predicted = unit_ball_volume(k) * hmass / (2.0 * math.pi) ** k

    spectrum = compute_spectrum(space, config.lambda_max, config.method)

    criterion = None
    try:
        criterion = criterion_verdict(space, k, config.resolved_s_grid(),
                                      tol=config.tol)
    except WeylLabError as exc:
        errors["criterion"] = f"{type(exc).__name__}: {exc}"

    ratio = None
    try:
        ratio = weyl_ratio(spectrum, k, config.resolved_lambda_grid(),
                           exponent=expo)
    except WeylLabError as exc:
        errors["ratio"] = f"{type(exc).__name__}: {exc}"

    trace = None
    karamata_a = karamata_c = None
    residuals: dict = {}
    consistent = False
    if not gaussian:
        tail = fitted_tail(spectrum, expo)
        try:
            trace = trace_formula(spectrum, k, config.resolved_t_grid(
                spectrum.complete_up_to), tail=tail)
        except WeylLabError as exc:
            errors["trace"] = f"{type(exc).__name__}: {exc}"
        try:
            nu = AtomicMeasure.from_spectrum(spectrum, tail)
            top = spectrum.complete_up_to
            check = karamata_crosscheck(
                nu, expo,
                t_grid=config.resolved_t_grid(top),
                lambda_grid=np.geomspace(max(top * 1e-3, 1.0), top * 0.999, 9))
            karamata_a = check.a_est
            karamata_c = check.c_est
        except WeylLabError as exc:
            errors["karamata"] = f"{type(exc).__name__}: {exc}"
        # three-way consistency: ratio limit, trace limit, Karamata pair
        if ratio is not None and trace is not None and karamata_a is not None:
            gfac = math.gamma(expo + 1.0)
            residuals = {
                "ratio_vs_predicted": abs(ratio.limit_estimate - predicted)
                / (1.0 + abs(predicted)),
                "trace_vs_hausdorff": abs(trace.limit - hmass)
                / (1.0 + abs(hmass)),
                "trace_vs_karamata": abs(trace.limit
                                         - (4.0 * math.pi) ** expo * karamata_a)
                / (1.0 + abs(hmass)),
                "ratio_vs_karamata": abs(ratio.limit_estimate
                                         - karamata_a / gfac)
                / (1.0 + abs(predicted)),
            }
            consistent = all(r <= config.tol for r in residuals.values())
    else:
        if ratio is not None:
            residuals = {"ratio_vs_predicted":
                         abs(ratio.limit_estimate - predicted)
                         / (1.0 + abs(predicted))}
            consistent = residuals["ratio_vs_predicted"] <= config.tol

    return WeylReport(space_to_json(space), k, hmass, predicted, expo, regime,
                      criterion, ratio, trace, karamata_a, karamata_c,
                      consistent, residuals, errors, spectrum)
