"""Experiment runner: each pipeline as a subcommand with JSON/CSV artifacts.

The driver is deliberately thin.  It parses flags and an optional JSON
config into an ExperimentConfig, dispatches to one library pipeline, and
serializes the results under deterministic file names.  All floating
point output is printed with 17 significant digits so files round-trip
bit-exactly; reruns of the same config produce byte-identical artifacts
regardless of --threads (worker parallelism lives inside library calls,
which are contracted to deterministic reductions, so the flag is
validated and otherwise ignored by the orchestrator).

Exit status separates "the program failed" (1: bad flags, bad config,
I/O trouble) from "the math check failed" (2: an audit or consistency
verdict came back false), so CI can tell crashes from regressions.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .errors import DegenerateGridError, DomainError, WeylLabError
from .heat import resolution_for, short_time_diag
from .spaces import (ModelSpace, WeightedInterval, regular_dimension,
                     space_from_json, space_to_json)
from .spectra import compute_spectrum, counting, spectrum_to_csv
from .tauberian import (AtomicMeasure, default_audit_grids, karamata_crosscheck,
                        one_sided_audit)
from .weyl import WeylConfig, criterion_verdict, weyl_report

PIPELINES = ("spectrum", "heat", "tauberian", "criterion", "weyl")
ARTIFACT_NAMES = ("report.json", "ratio.csv", "trace.csv", "criterion.csv",
                  "spectrum.csv")


# ---------------------------------------------------------------------------
# Deterministic serialization
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """17 significant digits; enough to reproduce any double exactly."""
    return "%.17g" % x


def to_json(value, indent: int = 0) -> str:
    """Canonical JSON: sorted keys, %.17g floats, no locale surprises.

    The stdlib encoder formats floats with repr, which is already
    round-trip safe but whose digit count varies by value; a fixed 17
    significant digits keeps diffs stable when a value drifts across a
    representation boundary.  Non-finite floats have no JSON literal and
    are emitted as null.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return format_float(v) if math.isfinite(v) else "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [inner + to_json(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [inner + json.dumps(str(k)) + ": " + to_json(value[k], indent + 1)
                 for k in sorted(value, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise DomainError(f"cannot serialize {type(value).__name__} to JSON")


def curve_csv(header: str, xs, ys) -> str:
    lines = [header]
    for x, y in zip(xs, ys):
        lines.append("%.17g,%.17g" % (x, y))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """A sweep grid as endpoints plus resolution, linear or log spaced."""

    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.stop)
                and self.start < self.stop):
            raise DegenerateGridError(
                f"grid needs finite start < stop, got [{self.start}, {self.stop}]")
        if self.count < 2:
            raise DegenerateGridError(
                f"grid needs count >= 2, got {self.count}")
        if self.scale not in ("linear", "log"):
            raise DegenerateGridError(
                f"grid scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and self.start <= 0.0:
            raise DegenerateGridError("log grid needs start > 0")

    def array(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def as_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop,
                "count": self.count, "scale": self.scale}

    @staticmethod
    def from_dict(data: dict) -> "GridSpec":
        try:
            return GridSpec(start=float(data["start"]), stop=float(data["stop"]),
                            count=int(data["count"]),
                            scale=str(data.get("scale", "linear")))
        except (TypeError, KeyError, ValueError) as exc:
            raise DegenerateGridError(f"bad grid spec {data!r}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run needs; JSON round-trips through to_json/from_json."""

    pipeline: str
    space: Optional[dict] = None
    method: str = "auto"
    mesh: Optional[int] = None          # fd discretization size
    lambda_max: float = 1e4
    modes: int = 200
    point: Optional[float] = None
    k: Optional[int] = None
    gamma: Optional[float] = None
    atoms: Optional[str] = None
    s_grid: Optional[GridSpec] = None
    t_grid: Optional[GridSpec] = None
    lambda_grid: Optional[GridSpec] = None
    tol: float = 0.02
    out: str = "."
    threads: int = 1
    emit: Optional[tuple] = None        # artifact names to keep; None = all

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise DomainError(f"unknown pipeline {self.pipeline!r}")
        if not (self.tol > 0.0 and math.isfinite(self.tol)):
            raise DomainError(f"tolerance must be positive, got {self.tol}")
        if self.threads < 1:
            raise DomainError(f"threads must be >= 1, got {self.threads}")
        if not (self.lambda_max > 0.0 and math.isfinite(self.lambda_max)):
            raise DomainError(f"lambda_max must be positive, got {self.lambda_max}")
        if self.modes < 1:
            raise DomainError(f"modes must be >= 1, got {self.modes}")
        if self.mesh is not None and self.mesh < 2:
            raise DegenerateGridError(
                f"fd grid needs at least 2 points, got {self.mesh}")
        if self.emit is not None:
            object.__setattr__(self, "emit", tuple(self.emit))
            bad = set(self.emit) - set(ARTIFACT_NAMES)
            if bad:
                raise DomainError(f"unknown artifact names: {sorted(bad)}")

    def resolved_space(self) -> ModelSpace:
        if self.space is None:
            raise DomainError(f"pipeline {self.pipeline!r} needs a space")
        return space_from_json(self.space)

    def as_dict(self, runtime: bool = True) -> dict:
        """Full dict when runtime=True; report echo excludes fields that
        must not influence artifacts (threads, out)."""
        data = {}
        for f in fields(self):
            if not runtime and f.name in ("threads", "out"):
                continue
            v = getattr(self, f.name)
            if isinstance(v, GridSpec):
                v = v.as_dict()
            elif isinstance(v, tuple):
                v = list(v)
            data[f.name] = v
        return data

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(ExperimentConfig)}
        extra = set(data) - known
        if extra:
            raise DomainError(f"unknown config fields: {sorted(extra)}")
        kw = dict(data)
        for name in ("s_grid", "t_grid", "lambda_grid"):
            if kw.get(name) is not None:
                kw[name] = GridSpec.from_dict(kw[name])
        if kw.get("emit") is not None:
            kw["emit"] = tuple(kw["emit"])
        try:
            return ExperimentConfig(**kw)
        except TypeError as exc:
            raise DomainError(f"bad config: {exc}") from exc


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; that status is reserved
    here for failed verdicts, so parse errors raise instead."""

    def error(self, message):
        raise DomainError(f"argument error: {message}")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; explicit flags override")
    sub.add_argument("--out", help="output directory (default: current)")
    sub.add_argument("--threads", type=int, help="worker threads inside library calls")
    sub.add_argument("--tol", type=float, help="consistency tolerance")
    sub.add_argument("--emit", nargs="+", choices=list(ARTIFACT_NAMES),
                     help="restrict which artifacts are written")
    sub.add_argument("--dump-config", action="store_true",
                     help="print the resolved config as JSON and exit")


def _add_space(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--space", choices=["interval", "circle", "tower", "gaussian"])
    sub.add_argument("--exponent", type=float,
                     help="weight exponent (interval, tower base)")
    sub.add_argument("--length", type=float, help="circle length")
    sub.add_argument("--levels", type=int, help="suspension levels")
    sub.add_argument("--dim", type=int, help="Gaussian dimension")


def _add_grid(sub: argparse.ArgumentParser, name: str, what: str) -> None:
    sub.add_argument(f"--{name}", nargs=3, type=float, metavar=("START", "STOP", "N"),
                     help=f"{what} sweep as start stop count")
    sub.add_argument(f"--{name}-scale", choices=["linear", "log"],
                     help=f"{what} sweep spacing (default linear)")


def build_parser() -> _Parser:
    parser = _Parser(prog="weyl-lab", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="pipeline", required=True)

    sp = subs.add_parser("spectrum", help="eigenvalues below a cutoff")
    _add_space(sp)
    sp.add_argument("--method", help="oracle | prufer | transfer | fd | suspension | auto")
    sp.add_argument("--lambda-max", type=float)
    sp.add_argument("--grid", type=int, dest="mesh",
                    help="fd discretization size (method fd)")
    _add_common(sp)

    he = subs.add_parser("heat", help="short-time diagonal kernel sweep")
    _add_space(he)
    he.add_argument("--modes", type=int, help="spectral resolution size")
    he.add_argument("--point", type=float, help="diagonal point x")
    _add_grid(he, "t-grid", "time")
    _add_common(he)

    ta = subs.add_parser("tauberian", help="one-sided audits of a counting measure")
    ta.add_argument("--atoms", help="CSV of position,mass rows")
    ta.add_argument("--gamma", type=float, help="power-law order")
    _add_grid(ta, "t-grid", "Laplace time")
    _add_grid(ta, "lambda-grid", "counting threshold")
    _add_common(ta)

    cr = subs.add_parser("criterion", help="uniform-density criterion sweep")
    _add_space(cr)
    cr.add_argument("--k", type=int, help="dimension (default: regular dimension)")
    _add_grid(cr, "s-grid", "radius")
    _add_common(cr)

    we = subs.add_parser("weyl", help="full cross-checked report")
    _add_space(we)
    we.add_argument("--method", help="spectrum route for the report")
    we.add_argument("--lambda-max", type=float)
    _add_grid(we, "s-grid", "radius")
    _add_grid(we, "t-grid", "time")
    _add_grid(we, "lambda-grid", "counting threshold")
    _add_common(we)

    return parser


def _space_from_flags(ns: argparse.Namespace) -> Optional[dict]:
    kind = getattr(ns, "space", None)
    if kind is None:
        return None
    if kind == "interval":
        if ns.exponent is None:
            raise DomainError("--space interval needs --exponent")
        return {"kind": "interval", "exponent": ns.exponent}
    if kind == "circle":
        if ns.length is None:
            raise DomainError("--space circle needs --length")
        return {"kind": "circle", "length": ns.length}
    if kind == "tower":
        if ns.levels is None:
            raise DomainError("--space tower needs --levels")
        return {"kind": "tower", "levels": ns.levels,
                "exponent": 0.0 if ns.exponent is None else ns.exponent}
    if kind == "gaussian":
        if ns.dim is None:
            raise DomainError("--space gaussian needs --dim")
        return {"kind": "gaussian", "dim": ns.dim}
    raise DomainError(f"unknown space kind {kind!r}")


def _grid_from_flags(ns: argparse.Namespace, name: str) -> Optional[GridSpec]:
    triple = getattr(ns, name, None)
    if triple is None:
        return None
    start, stop, count = triple
    if count != int(count):
        raise DegenerateGridError(f"grid count must be an integer, got {count}")
    scale = getattr(ns, f"{name}_scale", None)
    return GridSpec(start=start, stop=stop, count=int(count),
                    scale=scale or "linear")


def parse_args(argv) -> tuple[ExperimentConfig, bool]:
    """Flags -> (config, dump_only).  --config supplies defaults that
    explicit flags then override, field by field."""
    ns = build_parser().parse_args(argv)

    base: dict = {"pipeline": ns.pipeline}
    if ns.config is not None:
        try:
            with open(ns.config) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise DomainError(f"cannot read config {ns.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DomainError(
                f"config {ns.config} is not valid JSON "
                f"(line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
        if not isinstance(loaded, dict):
            raise DomainError(f"config {ns.config} must hold a JSON object")
        base.update(loaded)
        base["pipeline"] = ns.pipeline

    overrides: dict = {}
    space = _space_from_flags(ns)
    if space is not None:
        overrides["space"] = space
    for name in ("method", "mesh", "lambda_max", "modes", "point", "k",
                 "gamma", "atoms", "tol", "out", "threads", "emit"):
        v = getattr(ns, name, None)
        if v is not None:
            overrides[name] = v
    for gname in ("s_grid", "t_grid", "lambda_grid"):
        g = _grid_from_flags(ns, gname)
        if g is not None:
            overrides[gname] = g.as_dict()

    base.update(overrides)
    return ExperimentConfig.from_dict(base), bool(ns.dump_config)


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

def _method_string(config: ExperimentConfig) -> str:
    m = config.method
    if m == "fd":
        if config.mesh is None:
            raise DegenerateGridError("method fd needs a --grid size")
        return f"fd:{config.mesh}"
    if m == "suspension":
        # the tower assembly is what 'auto' dispatches to for towers
        return "auto"
    return m


def _run_spectrum(config: ExperimentConfig) -> tuple[dict, dict, int]:
    space = config.resolved_space()
    spectrum = compute_spectrum(space, config.lambda_max, _method_string(config))
    results = {
        "distinct": int(spectrum.lambdas.size),
        "total_with_multiplicity": spectrum.total,
        "complete_up_to": spectrum.complete_up_to,
        "lowest": None if spectrum.lambdas.size == 0 else float(spectrum.lambdas[0]),
        "highest": None if spectrum.lambdas.size == 0 else float(spectrum.lambdas[-1]),
        "count_at_cutoff": float(counting(spectrum, config.lambda_max)),
    }
    return results, {"spectrum.csv": spectrum_to_csv(spectrum)}, 0


def _run_heat(config: ExperimentConfig) -> tuple[dict, dict, int]:
    space = config.resolved_space()
    point = config.point
    if point is None:
        point = math.pi / 2.0 if isinstance(space, WeightedInterval) else 0.0
    res = resolution_for(space, config.modes)
    if config.t_grid is not None:
        grid = np.sort(config.t_grid.array())[::-1]
    else:
        # two decades ending at the deepest time the mode budget certifies
        t_min = min(50.0 / float(res.lambdas[-1]), 1e-2)
        grid = np.geomspace(100.0 * t_min, t_min, 5)
    sweep = short_time_diag(space, point, grid, config.modes, res=res)
    k = regular_dimension(space) if config.k is None else config.k
    target = 1.0 / (4.0 * math.pi) ** (k / 2.0) * math.pi ** (k / 2.0) \
        / math.gamma(k / 2.0 + 1.0)
    ok = (abs(sweep.limit - target) <= config.tol)
    results = {
        "point": point,
        "node_distance": sweep.node_distance,
        "limit": sweep.limit,
        "target": target,
        "drift_slope": sweep.drift_slope,
        "within_tolerance": ok,
    }
    label = space_to_json(space)["kind"]
    return results, {"trace.csv": sweep.csv(label, point, target)}, 0 if ok else 2


def _run_tauberian(config: ExperimentConfig) -> tuple[dict, dict, int]:
    if config.atoms is None:
        raise DomainError("tauberian pipeline needs --atoms CSV")
    if config.gamma is None:
        raise DomainError("tauberian pipeline needs --gamma")
    try:
        with open(config.atoms) as fh:
            nu = AtomicMeasure.from_csv(fh.read())
    except OSError as exc:
        raise DomainError(f"cannot read atoms file {config.atoms}: {exc}") from exc
    except DomainError as exc:
        raise DomainError(f"{config.atoms}: {exc}") from exc
    default_t, default_lam = default_audit_grids(nu)
    lambda_grid = config.lambda_grid.array() if config.lambda_grid is not None \
        else default_lam
    t_grid = np.sort(config.t_grid.array())[::-1] if config.t_grid is not None \
        else default_t
    audit = one_sided_audit(nu, config.gamma, t_grid, lambda_grid)
    karamata = karamata_crosscheck(nu, config.gamma, t_grid=t_grid,
                                   lambda_grid=lambda_grid)
    results = {
        "audit": audit.as_dict(),
        "karamata": {
            "abel_constant": karamata.a_est,
            "counting_constant": karamata.c_est,
            "relation_residual": karamata.relation_residual,
            "alt_residual": karamata.alt_residual,
        },
    }
    return results, {}, 0 if audit.all_hold else 2


def _run_criterion(config: ExperimentConfig) -> tuple[dict, dict, int]:
    space = config.resolved_space()
    k = regular_dimension(space) if config.k is None else config.k
    s_grid = config.s_grid.array() if config.s_grid is not None \
        else np.geomspace(0.1, 1e-3, 7)
    s_grid = np.sort(s_grid)[::-1]
    verdict = criterion_verdict(space, k, s_grid, tol=config.tol)
    ok = verdict.finite and verdict.equal
    artifacts = {"criterion.csv": curve_csv("s,integral", verdict.s_grid,
                                            verdict.integral_curve)}
    return verdict.as_dict(), artifacts, 0 if ok else 2


def _run_weyl(config: ExperimentConfig) -> tuple[dict, dict, int]:
    space = config.resolved_space()
    wc = WeylConfig(
        method=config.method,
        lambda_max=config.lambda_max,
        s_grid=None if config.s_grid is None else config.s_grid.array(),
        t_grid=None if config.t_grid is None else config.t_grid.array(),
        lambda_grid=None if config.lambda_grid is None
        else config.lambda_grid.array(),
        tol=config.tol,
    )
    report = weyl_report(space, wc)
    artifacts = {}
    if report.ratio is not None:
        artifacts["ratio.csv"] = report.ratio.csv()
    if report.trace is not None:
        artifacts["trace.csv"] = report.trace.csv()
    if report.criterion is not None:
        artifacts["criterion.csv"] = curve_csv(
            "s,integral", report.criterion.s_grid, report.criterion.integral_curve)
    if report.spectrum is not None:
        artifacts["spectrum.csv"] = spectrum_to_csv(report.spectrum)
    return report.as_dict(), artifacts, 0 if report.consistent else 2


_RUNNERS = {
    "spectrum": _run_spectrum,
    "heat": _run_heat,
    "tauberian": _run_tauberian,
    "criterion": _run_criterion,
    "weyl": _run_weyl,
}


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------

def emit_outputs(artifacts: dict, directory: str) -> list:
    """Write artifacts under their fixed names; return the sorted manifest.

    Newline-normalized text written in binary mode so the bytes are the
    same on every platform and rerun.
    """
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise DomainError(f"cannot create output directory {directory}: {exc}") from exc
    manifest = []
    for name in sorted(artifacts):
        path = os.path.join(directory, name)
        try:
            with open(path, "wb") as fh:
                fh.write(artifacts[name].encode("utf-8"))
        except OSError as exc:
            raise DomainError(f"cannot write {path}: {exc}") from exc
        manifest.append(name)
    return manifest


def run_experiment(config: ExperimentConfig) -> int:
    """Dispatch, write artifacts, and map verdicts to the exit status."""
    results, curves, status = _RUNNERS[config.pipeline](config)
    report = {
        "pipeline": config.pipeline,
        "config": config.as_dict(runtime=False),
        "results": results,
        "status": status,
    }
    artifacts = dict(curves)
    if config.emit is not None:
        artifacts = {k: v for k, v in artifacts.items() if k in config.emit}
    artifacts["report.json"] = to_json(report) + "\n"
    manifest = emit_outputs(artifacts, config.out)
    for name in manifest:
        print(os.path.join(config.out, name))
    return status


def main(argv=None) -> int:
    try:
        config, dump_only = parse_args(argv)
        if dump_only:
            print(to_json(config.as_dict(runtime=True)))
            return 0
        return run_experiment(config)
    except WeylLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
