"""Error measurement, nearest-vertex baseline, log-log slope fits and grid scans.

Test points are drawn only inside store cubes, ``samples_per_cube`` per cube,
from a generator keyed by ``(seed, linear cube index)`` so every cube's sample
is independent of the others and of evaluation order.

Two error rates are reported.  ``error_pct`` is the misclassification rate
among the sampled points (points labelled 0 by the classifier are left out of
the denominator).  ``global_error_pct`` rescales it by the fraction of cubes
that hold boundary points, which estimates the misclassified share of the
whole domain; its decay with ``n_g`` is what the slope fits track.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .boundary import VARIANTS, BoundaryStore, build_counting
from .classifier import Classifier
from .cube_classifier import DEFAULT_DELTA
from .enumerate import count_simplices
from .grid import GridSpec, DomainError
from .oracle import Oracle, nearest_vertex_index, oracle_from_dict, random_radial, sanitize


class ConfigError(ValueError):
    """An evaluation config is invalid."""


@dataclass(frozen=True)
class EvalConfig:
    """Scan settings; see ``README.md`` for the JSON layout."""

    grid_sizes: tuple[int, ...]
    dimensions: tuple[int, ...]
    oracle: dict[str, Any] | None = None
    generator: dict[str, Any] | None = None
    oracle_seeds: tuple[int, ...] = (0,)
    variants: tuple[str, ...] = ("cube", "kuhn")
    q: int | str = "auto"
    samples_per_cube: int = 100
    seed: int = 0
    delta: float = DEFAULT_DELTA
    baseline: bool = True
    q_boost: bool = False
    include_timing: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid_sizes", tuple(int(n) for n in self.grid_sizes))
        object.__setattr__(self, "dimensions", tuple(int(d) for d in self.dimensions))
        object.__setattr__(self, "oracle_seeds", tuple(int(s) for s in self.oracle_seeds))
        object.__setattr__(self, "variants", tuple(self.variants))
        if not self.grid_sizes or any(n < 2 for n in self.grid_sizes):
            raise ConfigError("grid sizes must be >= 2")
        if not self.dimensions or any(d < 1 for d in self.dimensions):
            raise ConfigError("dimensions must be >= 1")
        if self.samples_per_cube < 1:
            raise ConfigError("samples_per_cube must be >= 1")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise ConfigError(f"variants must be drawn from {VARIANTS}")
        if (self.oracle is None) == (self.generator is None):
            raise ConfigError("give exactly one of 'oracle' and 'generator'")
        if self.generator is not None and self.generator.get("kind") != "random_radial":
            raise ConfigError("the only generator kind is 'random_radial'")
        if not (isinstance(self.q, int) and self.q >= 1) and self.q not in ("auto", "minimal"):
            raise ConfigError("q must be a positive integer, 'auto' or 'minimal'")
        if not self.delta >= 0:
            raise ConfigError("delta must be >= 0")
        if self.oracle is not None:
            d0 = oracle_from_dict(self.oracle).d
            if any(d != d0 for d in self.dimensions):
                raise ConfigError(f"the fixed oracle is {d0}-dimensional")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EvalConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> EvalConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for k in ("grid_sizes", "dimensions", "oracle_seeds", "variants"):
            out[k] = list(out[k])
        return out

    def q_for(self, n_g: int) -> int:
        if self.q == "auto":
            return math.ceil(math.log2(n_g)) + 2
        if self.q == "minimal":
            return max(1, math.ceil(math.log2(n_g - 1)))
        return int(self.q)

    def make_oracle(self, d: int, oracle_seed: int) -> Oracle:
        if self.oracle is not None:
            return oracle_from_dict(self.oracle)
        gen = self.generator
        return random_radial(d, int(gen["n_sites"]), float(gen["sigma"]), oracle_seed)


@dataclass(frozen=True)
class ErrorStats:
    total: int
    zero_labels: int
    misclassified: int
    correct: int
    boundary_cubes: int
    total_cubes: int
    nv_misclassified: int | None = None

    @property
    def error_pct(self) -> float:
        scored = self.total - self.zero_labels
        return 100.0 * self.misclassified / scored if scored else 0.0

    @property
    def cube_fraction(self) -> float:
        return self.boundary_cubes / self.total_cubes

    @property
    def global_error_pct(self) -> float:
        return self.error_pct * self.cube_fraction

    @property
    def nv_error_pct(self) -> float | None:
        if self.nv_misclassified is None:
            return None
        return 100.0 * self.nv_misclassified / self.total if self.total else 0.0

    @property
    def nv_global_error_pct(self) -> float | None:
        pct = self.nv_error_pct
        return None if pct is None else pct * self.cube_fraction


def cube_samples(g: GridSpec, c: Sequence[int], count: int, seed: int) -> np.ndarray:
    """``count`` uniform local points of cube ``c``, reproducible per ``(seed, c)``."""
    rng = np.random.default_rng([seed, g.cube_linear(c)])
    return rng.random((count, g.d))


def nearest_vertex_classify(g: GridSpec, labels: Callable[[np.ndarray], np.ndarray] | np.ndarray, x: np.ndarray) -> np.ndarray:
    """Label of the nearest grid vertex for each point (ties to the smaller vertex).

    ``labels`` is an ``(n_g,) * d`` array of vertex labels, or a function taking
    an ``(m, d)`` array of vertex multi-indices.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError(f"points must lie in [0, 1]^{g.d}")
    idx = nearest_vertex_index(g, x)
    if callable(labels):
        return np.asarray(labels(idx), dtype=np.int8)
    return np.asarray(labels)[tuple(idx.T)].astype(np.int8)


def memo_vertex_labels(o: Oracle, g: GridSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Sanitized vertex labels computed on demand and remembered."""
    cache: dict[int, int] = {}
    shape = (g.n_g,) * g.d

    def lookup(idx: np.ndarray) -> np.ndarray:
        lin = np.ravel_multi_index(tuple(np.asarray(idx).T), shape)
        missing = np.array(sorted(set(lin.tolist()) - cache.keys()), dtype=np.int64)
        if len(missing):
            pts = np.stack(np.unravel_index(missing, shape), axis=1) / (g.n_g - 1)
            for k, v in zip(missing.tolist(), sanitize(o.evaluate_many(pts)).tolist()):
                cache[k] = v
        return np.array([cache[k] for k in lin.tolist()], dtype=np.int8)

    return lookup


def measure_error(cl: Classifier, o: Oracle, samples_per_cube: int = 100, seed: int = 0, baseline: bool = True) -> ErrorStats:
    """Classify ``samples_per_cube`` random points in every store cube and compare with ``o``."""
    if samples_per_cube < 1:
        raise ValueError("samples_per_cube must be >= 1")
    s = cl.store
    g = s.grid
    if not s.n_cubes:
        return ErrorStats(0, 0, 0, 0, 0, g.n_cubes, 0 if baseline else None)
    locals_, globals_, labels = [], [], []
    for c in s.cube_ids():
        u = cube_samples(g, c, samples_per_cube, seed)
        labels.append(cl.classify_in_store_cube(c, u))
        locals_.append(u)
        globals_.append((np.asarray(c, dtype=float) + u) / (g.n_g - 1))
    x = np.concatenate(globals_)
    got = np.concatenate(labels).astype(np.int8)
    truth = o.evaluate_many(x)
    zero = int(np.sum(got == 0))
    wrong = int(np.sum((got != truth) & (got != 0) & (truth != 0)))
    nv_wrong = None
    if baseline:
        nv = nearest_vertex_classify(g, memo_vertex_labels(o, g), x)
        nv_wrong = int(np.sum((nv != truth) & (truth != 0)))
    total = len(x)
    return ErrorStats(total, zero, wrong, total - zero - wrong, s.n_cubes, g.n_cubes, nv_wrong)


def slope_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of ``log10(value)`` on ``log10(n_g)`` and its R^2."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("slope fit needs at least 3 points")
    if any(not v > 0 for _, v in pts) or any(not n > 0 for n, _ in pts):
        raise DomainError("slope fit needs positive values")
    lx = np.log10([float(n) for n, _ in pts])
    ly = np.log10([float(v) for _, v in pts])
    if np.ptp(lx) == 0:
        raise DomainError("slope fit needs at least two distinct grid sizes")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), min(max(r2, 0.0), 1.0)


ROW_FIELDS = (
    "oracle_seed",
    "d",
    "n_g",
    "variant",
    "q",
    "boundary_points",
    "boundary_cubes",
    "total_cubes",
    "simplices",
    "oracle_calls",
    "samples",
    "zero_labels",
    "misclassified",
    "error_pct",
    "global_error_pct",
    "nv_misclassified",
    "nv_error_pct",
    "nv_global_error_pct",
)
SLOPE_FIELDS = ("d", "series", "metric", "points", "slope", "r2")


@dataclass
class EvalReport:
    rows: list[dict[str, Any]] = field(default_factory=list)
    slopes: list[dict[str, Any]] = field(default_factory=list)

    def series(self, d: int, variant: str, metric: str) -> list[tuple[int, float]]:
        """Mean of ``metric`` over oracle seeds per grid size."""
        acc: dict[int, list[float]] = {}
        for r in self.rows:
            if r["d"] == d and r["variant"] == variant and r[metric] is not None:
                acc.setdefault(r["n_g"], []).append(float(r[metric]))
        return [(n, float(np.mean(v))) for n, v in sorted(acc.items())]

    def slope(self, d: int, series: str, metric: str) -> dict[str, Any] | None:
        for s in self.slopes:
            if s["d"] == d and s["series"] == series and s["metric"] == metric:
                return s
        return None


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(report: EvalReport, include_timing: bool = False) -> tuple[str, str]:
    """Row table and slope table as CSV text (timing only when asked, to keep runs byte-identical)."""
    cols = ROW_FIELDS + (("wall_time_s",) if include_timing else ())
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(cols)
    for r in report.rows:
        w.writerow([_fmt(r.get(k)) for k in cols])
    slopes = io.StringIO()
    w = csv.writer(slopes, lineterminator="\n")
    w.writerow(SLOPE_FIELDS)
    for s in report.slopes:
        w.writerow([_fmt(s[k]) for k in SLOPE_FIELDS])
    return rows.getvalue(), slopes.getvalue()


def slopes_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_slopes" + (out.suffix or ".csv"))


def save_report(report: EvalReport, out: str | Path, include_timing: bool = False) -> tuple[Path, Path]:
    rows, slopes = write_csv(report, include_timing)
    out = Path(out)
    out.write_text(rows)
    sp = slopes_path(out)
    sp.write_text(slopes)
    return out, sp


def _run_cell(cfg_dict: dict[str, Any], oracle_seed: int, d: int, n_g: int, variant: str) -> dict[str, Any]:
    cfg = EvalConfig.from_dict(cfg_dict)
    start = time.perf_counter()
    o = cfg.make_oracle(d, oracle_seed)
    g = GridSpec(d, n_g)
    q = cfg.q_for(n_g)
    store, calls = build_counting(o, g, variant, q, q_boost=cfg.q_boost)
    stats = measure_error(Classifier(store, cfg.delta), o, cfg.samples_per_cube, cfg.seed, cfg.baseline)
    counts = count_simplices(store) if d >= 2 else None
    return {
        "oracle_seed": oracle_seed,
        "d": d,
        "n_g": n_g,
        "variant": variant,
        "q": q,
        "boundary_points": store.n_points,
        "boundary_cubes": store.n_cubes,
        "total_cubes": g.n_cubes,
        "simplices": counts.simplices if counts else 0,
        "oracle_calls": calls,
        "samples": stats.total,
        "zero_labels": stats.zero_labels,
        "misclassified": stats.misclassified,
        "error_pct": stats.error_pct,
        "global_error_pct": stats.global_error_pct,
        "nv_misclassified": stats.nv_misclassified,
        "nv_error_pct": stats.nv_error_pct,
        "nv_global_error_pct": stats.nv_global_error_pct,
        "wall_time_s": time.perf_counter() - start,
    }


_SLOPE_METRICS = (
    ("global_error_pct", "error"),
    ("simplices", "simplices"),
    ("boundary_points", "boundary_points"),
)


def _fit_slopes(report: EvalReport, cfg: EvalConfig) -> None:
    if len(cfg.grid_sizes) < 3:
        return
    for d in cfg.dimensions:
        for variant in cfg.variants:
            for column, metric in _SLOPE_METRICS:
                report.slopes.append(_slope_row(d, variant, metric, report.series(d, variant, column)))
        if cfg.baseline:
            report.slopes.append(_slope_row(d, "nearest_vertex", "error", report.series(d, cfg.variants[0], "nv_global_error_pct")))


def _slope_row(d: int, series: str, metric: str, pts: list[tuple[int, float]]) -> dict[str, Any]:
    try:
        slope, r2 = slope_fit(pts)
    except (ValueError, DomainError):
        slope, r2 = float("nan"), float("nan")
    return {"d": d, "series": series, "metric": metric, "points": len(pts), "slope": slope, "r2": r2}


def scan(cfg: EvalConfig, workers: int = 1) -> EvalReport:
    """Build, measure and count every (oracle seed, d, n_g, variant) cell, then fit slopes.

    Rows come out in key order whatever ``workers`` is, so reports are
    reproducible.
    """
    cells = [
        (seed, d, n, v)
        for seed in (cfg.oracle_seeds if cfg.generator is not None else (0,))
        for d in cfg.dimensions
        for n in cfg.grid_sizes
        for v in cfg.variants
    ]
    payload = cfg.to_dict()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, payload, *cell) for cell in cells]
            rows = [f.result() for f in futures]
    else:
        rows = [_run_cell(payload, *cell) for cell in cells]
    report = EvalReport(rows=rows)
    _fit_slopes(report, cfg)
    return report


def store_oracle_calls_expected(store: BoundaryStore) -> int:
    """Oracle calls a cube-variant build makes: every vertex once, then ``q`` per boundary point."""
    return store.grid.n_vertices + store.q * store.n_points
