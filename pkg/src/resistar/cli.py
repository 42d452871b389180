"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data or contract error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .boundary import VARIANTS, ContractViolation, build_counting
from .classifier import Classifier
from .cube_classifier import DEFAULT_DELTA
from .enumerate import count_simplices, count_simplices_streamed
from .evaluation import ConfigError, EvalConfig, save_report, scan
from .grid import DomainError, GridSpec
from .oracle import load_oracle
from .slicer import Hyperplane, UsageError, export_mesh, slice as slice_store
from .store_io import StoreFormatError, load_store, save_store

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

_PLANE = re.compile(r"^\s*x?(\d+)\s*=\s*([-+0-9.eE]+)\s*$")

ROWS_HELP = """\
report CSV columns (one row per oracle seed, d, n_g, variant):
  oracle_seed, d, n_g, variant, q
  boundary_points     points stored, once per edge
  boundary_cubes      cubes holding boundary points (the sampled cubes)
  total_cubes         (n_g - 1)^d
  simplices           resistar simplex count
  oracle_calls        oracle evaluations made by the build
  samples, zero_labels, misclassified
  error_pct           misclassified / (samples - zero_labels) * 100
  global_error_pct    error_pct * boundary_cubes / total_cubes
  nv_misclassified, nv_error_pct, nv_global_error_pct   nearest-vertex baseline
  wall_time_s         only with --timing
slopes CSV (<out>_slopes.csv): d, series, metric, points, slope, r2
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 on usage errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _plane(text: str) -> tuple[int, float]:
    m = _PLANE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected axis=value (1-based axis), got {text!r}")
    axis = int(m.group(1))
    if axis < 1:
        raise argparse.ArgumentTypeError("axes are numbered from 1")
    return axis - 1, float(m.group(2))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="resistar", description="Resistar boundary approximation tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="build a boundary store from an oracle spec")
    b.add_argument("--oracle", required=True, help="oracle spec JSON file")
    b.add_argument("--d", type=int, help="dimension (checked against the oracle)")
    b.add_argument("--ng", type=int, required=True, help="grid points per axis")
    b.add_argument("--q", type=int, help="dichotomies per edge (default ceil(log2(ng - 1)))")
    b.add_argument("--variant", choices=VARIANTS, default="cube")
    b.add_argument("--q-boost", action="store_true", help="extra dichotomies on long Kuhn edges")
    b.add_argument("--format", choices=("binary", "text"), default=None, help="store layout (default from suffix)")
    b.add_argument("--out", required=True)

    c = sub.add_parser("classify", help="classify points against a store")
    c.add_argument("--store", required=True)
    c.add_argument("--points", required=True, help="CSV with d coordinates per row (header optional)")
    c.add_argument("--out", required=True, help="CSV of x1..xd,label")
    c.add_argument("--delta", type=float, default=DEFAULT_DELTA)

    e = sub.add_parser(
        "evaluate", help="run an evaluation scan", epilog=ROWS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    e.add_argument("--config", required=True, help="evaluation config JSON file")
    e.add_argument("--out", required=True, help="report CSV (slopes go to <out>_slopes.csv)")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--timing", action="store_true", help="add wall_time_s (makes output run-dependent)")

    n = sub.add_parser("count", help="count boundary points and simplices of a store")
    n.add_argument("--store", required=True)
    n.add_argument("--streamed", action="store_true", help="also count by walking every face chain")

    s = sub.add_parser("slice", help="cut a store's resistar with d - 3 axis planes")
    s.add_argument("--store", required=True)
    s.add_argument("--plane", type=_plane, action="append", default=[], help="axis=value, 1-based axis, e.g. x4=0.46")
    s.add_argument("--format", choices=("obj", "json"), default="obj")
    s.add_argument("--out", required=True)
    return p


def _read_points(path: str, d: int) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or all(not v.strip() for v in row):
                continue
            try:
                vals = [float(v) for v in row]
            except ValueError:
                if k == 0 and not rows:
                    continue  # header
                raise DomainError(f"line {k + 1}: non-numeric value") from None
            if len(vals) != d:
                raise DomainError(f"line {k + 1}: expected {d} coordinates, got {len(vals)}")
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, d)


def _cmd_build(a: argparse.Namespace) -> int:
    o = load_oracle(a.oracle)
    if a.d is not None and a.d != o.d:
        raise ContractViolation(f"--d {a.d} does not match the {o.d}-dimensional oracle")
    g = GridSpec(o.d, a.ng)
    q = a.q if a.q is not None else max(1, math.ceil(math.log2(g.n_g - 1)))
    store, calls = build_counting(o, g, a.variant, q, q_boost=a.q_boost)
    save_store(store, a.out, a.format)
    print(
        json.dumps(
            {
                "d": g.d,
                "n_g": g.n_g,
                "variant": a.variant,
                "q": q,
                "boundary_points": store.n_points,
                "boundary_cubes": store.n_cubes,
                "oracle_calls": calls,
            }
        )
    )
    return EXIT_OK


def _cmd_classify(a: argparse.Namespace) -> int:
    store = load_store(a.store)
    pts = _read_points(a.points, store.d)
    labels = Classifier(store, a.delta).classify_many(pts) if len(pts) else np.zeros(0, dtype=np.int8)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(store.d)] + ["label"])
        for x, lab in zip(pts.tolist(), labels.tolist()):
            w.writerow([repr(v) for v in x] + [lab])
    return EXIT_OK


def _cmd_evaluate(a: argparse.Namespace) -> int:
    cfg = EvalConfig.load(a.config)
    if a.workers < 1:
        raise ConfigError("--workers must be >= 1")
    report = scan(cfg, workers=a.workers)
    rows, slopes = save_report(report, a.out, a.timing or cfg.include_timing)
    print(f"wrote {rows} and {slopes}")
    return EXIT_OK


def _cmd_count(a: argparse.Namespace) -> int:
    store = load_store(a.store)
    rec = count_simplices(store).as_record()
    if a.streamed:
        rec["simplices_streamed"] = count_simplices_streamed(store)
    print(json.dumps(rec))
    return EXIT_OK


def _cmd_slice(a: argparse.Namespace) -> int:
    store = load_store(a.store)
    planes = [Hyperplane.axis_aligned(store.d, axis, value) for axis, value in a.plane]
    mesh = slice_store(store, planes)
    Path(a.out).write_bytes(export_mesh(mesh, a.format))
    print(json.dumps({"polygons": len(mesh), "format": a.format, "out": a.out}))
    return EXIT_OK


_COMMANDS = {
    "build": _cmd_build,
    "classify": _cmd_classify,
    "evaluate": _cmd_evaluate,
    "count": _cmd_count,
    "slice": _cmd_slice,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"resistar: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        ContractViolation,
        DomainError,
        StoreFormatError,
        ConfigError,
        OSError,
        KeyError,
        ValueError,
    ) as exc:
        print(f"resistar: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
