"""``specdist`` command line: estimate, simulate and verify.

Exit codes: 0 success, 1 a verification check failed, 2 bad flags or
unreadable/malformed input, 3 a domain or numerical error in the estimators.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .distances import DistanceKind, distance
from .errors import DimensionMismatch, NonFinite, SpecDistError
from .estimators import ContourConfig
from .simharness import ESTIMATOR_TAGS, ExperimentConfig, Field, run_experiment
from .spectral import known_c1_eigenvalues, sample_eigenvalues
from .verify import SUITES, run_suites

__all__ = [
    "SCHEMA_VERSION",
    "RunManifest",
    "InputError",
    "read_samples",
    "dumps",
    "cmd_estimate",
    "cmd_simulate",
    "cmd_verify",
    "build_parser",
    "main",
]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3
CSV_COLUMNS = ("p", "n1", "n2", "method", "mean", "std", "rel_error", "population", "trials", "note")


class InputError(Exception):
    """Unreadable or malformed input file, or inconsistent flags."""


class UsageError(Exception):
    pass


@dataclass(slots=True)
class RunManifest:
    """Provenance block written next to (or inside) every output."""

    command: str
    config: dict[str, Any]
    version: str = __version__
    seconds: float | None = None
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "library_version": self.version,
            "wall_clock_seconds": self.seconds,
            "outputs": list(self.outputs),
        }


# Serialization ---------------------------------------------------------------


def _number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits; NaN/inf become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _number(float(obj))
    return json.dumps(str(obj))


def _csv_number(x: float) -> str:
    return "" if not math.isfinite(x) else format(x, ".17g")


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from exc


# Sample files --------------------------------------------------------------------


def _parse_token(tok: str, where: str) -> complex | float:
    s = tok.strip()
    if not s:
        raise InputError(f"{where}: empty field")
    try:
        if s[-1] in "ij":
            return complex(s[:-1] + "j")
        return float(s)
    except ValueError:
        raise InputError(f"{where}: cannot parse {s!r} as a real or a+bi literal") from None


def read_samples(path: str | os.PathLike) -> np.ndarray:
    """Read a headerless CSV (one observation per row) into a ``p x n`` matrix."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows: list[list[complex | float]] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        rows.append([_parse_token(tok, f"{path}:{lineno}") for tok in row])
    if not rows:
        raise InputError(f"{path}: no observations")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise InputError(f"{path}: row {i + 1} has {len(r)} columns, expected {width}")
    is_complex = any(isinstance(v, complex) for r in rows for v in r)
    data = np.array(rows, dtype=complex if is_complex else float)
    return np.ascontiguousarray(data.T)


# Helpers --------------------------------------------------------------------------


def _distance_kind(name: str, alpha: float | None) -> DistanceKind:
    if name == "renyi":
        if alpha is None:
            raise UsageError("--alpha is required for the renyi divergence")
        return DistanceKind.renyi(alpha)
    if alpha is not None:
        raise UsageError("--alpha only applies to --distance renyi")
    return DistanceKind(name)


def _error_name(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


def _emit_error(exc: BaseException, output: str, manifest: RunManifest | None) -> None:
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "error": _error_name(exc)}
    if manifest is not None:
        doc["manifest"] = manifest.to_dict()
    sys.stderr.write(f"specdist: {_error_name(exc)}\n")
    try:
        _write_text(output, dumps(doc) + "\n")
    except InputError:
        pass


def _int_list(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--p-list must be comma separated integers, got {text!r}") from None
    if not out or any(v < 1 for v in out):
        raise UsageError("--p-list needs positive integers")
    return out


# Commands -------------------------------------------------------------------------


def cmd_estimate(args: argparse.Namespace) -> int:
    """Estimate one distance from two sample files and print a JSON report."""
    config = {
        "x1": args.x1, "x2": args.x2, "c1_matrix": args.c1_matrix,
        "distance": args.distance, "alpha": args.alpha, "method": args.method,
        "c1_known": args.c1_known, "kl_convention": args.kl_convention,
        "fisher_exact": args.fisher_exact, "contour_points": args.contour_points,
    }
    manifest = RunManifest("estimate", config, outputs=[args.output])
    start = time.perf_counter()
    try:
        kind = _distance_kind(args.distance, args.alpha)
        x2 = read_samples(args.x2)
        if args.c1_known:
            p = x2.shape[0]
            c1 = np.eye(p) if args.c1_matrix is None else read_samples(args.c1_matrix)
            model = known_c1_eigenvalues(c1, x2)
        else:
            if args.x1 is None:
                raise UsageError("--x1 is required unless --c1-known is given")
            model = sample_eigenvalues(read_samples(args.x1), x2)
        contour = ContourConfig(points=args.contour_points)
        rep = distance(model, kind, args.method, c1_known=args.c1_known,
                       kl_convention=args.kl_convention, fisher_exact=args.fisher_exact,
                       contour=contour)
    except UsageError as exc:
        _emit_error(exc, args.output, manifest)
        return EXIT_INPUT
    except (InputError, DimensionMismatch, NonFinite) as exc:
        _emit_error(exc, args.output, manifest)
        return EXIT_INPUT
    except (SpecDistError, ArithmeticError) as exc:
        _emit_error(exc, args.output, manifest)
        return EXIT_DOMAIN

    if not args.no_timing:
        manifest.seconds = time.perf_counter() - start
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "distance": kind.label(),
        "p": model.p,
        "n1": model.n1 if math.isfinite(model.n1) else None,
        "n2": model.n2,
        "value": rep.value,
        "method": rep.method.value,
    }
    if rep.kappa0 is not None:
        doc["kappa0"] = rep.kappa0
    doc.update({"warnings": list(rep.warnings), "validity": rep.validity,
                "manifest": manifest.to_dict()})
    try:
        _write_text(args.output, dumps(doc) + "\n")
    except InputError as exc:
        sys.stderr.write(f"specdist: {exc}\n")
        return EXIT_INPUT
    return EXIT_OK


def _simulate_cells(args: argparse.Namespace) -> list[tuple[int, int | None, int | None, str | None]]:
    cells = []
    for p in _int_list(args.p_list):
        n1 = args.n1 if args.n1 is not None else round(p / args.c1)
        n2 = args.n2 if args.n2 is not None else round(p / args.c2)
        note = None
        if n1 <= p:
            note = f"DomainError: n1 must exceed p (n1={n1}, p={p})"
        elif n2 < 1:
            note = f"DomainError: n2 must be positive (n2={n2})"
        cells.append((p, n1, n2, note))
    return cells


def cmd_simulate(args: argparse.Namespace) -> int:
    """Monte Carlo sweep over ``--p-list``; writes results.csv and manifest.json."""
    if (args.n1 is None) == (args.c1 is None) or (args.n2 is None) == (args.c2 is None):
        sys.stderr.write("specdist: give exactly one of --n1/--c1 and one of --n2/--c2\n")
        return EXIT_INPUT
    try:
        kind = _distance_kind(args.distance, args.alpha)
        estimators = tuple(t.strip() for t in args.estimators.split(",") if t.strip())
        for tag in estimators:
            if tag.removesuffix("-c1known") not in ESTIMATOR_TAGS:
                raise UsageError(f"unknown estimator {tag!r}; choose from {ESTIMATOR_TAGS}")
        cells = _simulate_cells(args)
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        if not abs(args.toeplitz_a) < 1.0:
            raise UsageError("--toeplitz-a must satisfy |a| < 1")
    except (UsageError, SpecDistError) as exc:
        sys.stderr.write(f"specdist: {_error_name(exc)}\n")
        return EXIT_INPUT

    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        sys.stderr.write(f"specdist: cannot create {out_dir}: {exc}\n")
        return EXIT_INPUT
    csv_path, manifest_path = out_dir / "results.csv", out_dir / "manifest.json"
    config = {
        "p_list": [c[0] for c in cells], "n1": args.n1, "n2": args.n2, "c1": args.c1,
        "c2": args.c2, "toeplitz_a": args.toeplitz_a, "field": args.field,
        "trials": args.trials, "seed": args.seed, "distance": kind.label(),
        "kl_convention": args.kl_convention, "estimators": list(estimators),
    }
    manifest = RunManifest("simulate", config, outputs=[str(csv_path), str(manifest_path)])
    start = time.perf_counter()

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    cell_notes = []
    for p, n1, n2, note in cells:
        if note is not None:
            for tag in estimators:
                writer.writerow([p, n1, n2, tag, "", "", "", "", 0, note])
            continue
        try:
            summary = run_experiment(ExperimentConfig(
                p, n1, n2, toeplitz_a=args.toeplitz_a, field=Field(args.field),
                trials=args.trials, seed=args.seed, estimators=estimators, kind=kind,
                kl_convention=args.kl_convention, workers=args.workers))
        except (SpecDistError, ArithmeticError) as exc:
            for tag in estimators:
                writer.writerow([p, n1, n2, tag, "", "", "", "", 0, _error_name(exc)])
            continue
        for tag in estimators:
            m = summary.methods[tag]
            first = next((w for w in summary.warnings if f" {tag}:" in w), "")
            note = f"{m.failures} of {args.trials} trials failed; first: {first}" if m.failures else ""
            writer.writerow([p, n1, n2, tag, _csv_number(m.mean), _csv_number(m.std),
                             _csv_number(m.rel_error), _csv_number(summary.population_value),
                             m.trials_ok, note])
        cell_notes.extend(summary.warnings[:5])

    if not args.no_timing:
        manifest.seconds = time.perf_counter() - start
    doc = manifest.to_dict()
    doc["notes"] = cell_notes
    try:
        _write_text(str(csv_path), buf.getvalue())
        _write_text(str(manifest_path), dumps(doc) + "\n")
    except InputError as exc:
        sys.stderr.write(f"specdist: {exc}\n")
        return EXIT_INPUT
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run invariant suites; print a PASS/FAIL table and write the JSON report."""
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.models is not None and args.models < 1:
        sys.stderr.write("specdist: --models must be positive\n")
        return EXIT_INPUT
    start = time.perf_counter()
    reports = run_suites(names, args.models, args.seed)
    config = {"suite": args.suite, "models": args.models, "seed": args.seed}
    manifest = RunManifest("verify", config, outputs=[args.output] if args.output else [])
    if not args.no_timing:
        manifest.seconds = time.perf_counter() - start

    table = sys.stderr if args.output == "-" else sys.stdout
    for rep in reports:
        for c in rep.checks:
            status = "PASS" if c.passed else "FAIL"
            line = (f"{status}  {rep.suite + '/' + c.name:<44} worst={c.worst:.3e} "
                    f"tol={c.tolerance:.1e} cases={c.cases}")
            if c.detail:
                line += f"  [{c.detail}]"
            table.write(line + "\n")
    failed = [f for rep in reports for f in rep.failures()]
    table.write(("all checks passed" if not failed else "FAILED: " + ", ".join(failed)) + "\n")
    table.flush()

    doc = {
        "schema_version": SCHEMA_VERSION,
        "passed": not failed,
        "failed": failed,
        "suites": [rep.to_dict() for rep in reports],
        "manifest": manifest.to_dict(),
    }
    if args.output:
        try:
            _write_text(args.output, dumps(doc) + "\n")
        except InputError as exc:
            sys.stderr.write(f"specdist: {exc}\n")
            return EXIT_INPUT
    return EXIT_VERIFY if failed else EXIT_OK


# Parser ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 already; keep the prefix
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"specdist: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specdist", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"specdist {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    distances = ("fisher", "bhattacharyya", "kl", "renyi")

    est = sub.add_parser("estimate", help="estimate a distance from two sample files")
    est.add_argument("--x1", help="samples of the first population (CSV, one row per observation)")
    est.add_argument("--x2", required=True, help="samples of the second population")
    est.add_argument("--distance", choices=distances, default="fisher")
    est.add_argument("--alpha", type=float, help="Renyi order in (0, 1)")
    est.add_argument("--method", choices=("rmt", "plugin", "contour"), default="rmt")
    est.add_argument("--c1-known", action="store_true",
                     help="first covariance known exactly (identity unless --c1-matrix)")
    est.add_argument("--c1-matrix", help="CSV with the known p x p first covariance")
    est.add_argument("--kl-convention", choices=("paper", "standard"), default="paper")
    est.add_argument("--fisher-exact", action="store_true",
                     help="dilogarithm form of the squared Fisher estimate")
    est.add_argument("--contour-points", type=int, default=2048)
    est.add_argument("--output", default="-", help="output path, '-' for standard output")
    est.add_argument("--no-timing", action="store_true", help="omit wall-clock time")
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="Monte Carlo sweep with a Toeplitz second covariance")
    sim.add_argument("--p-list", required=True, help="comma separated dimensions")
    sim.add_argument("--n1", type=int)
    sim.add_argument("--n2", type=int)
    sim.add_argument("--c1", type=float, help="fixed ratio p/n1 (n1 = round(p/c1))")
    sim.add_argument("--c2", type=float, help="fixed ratio p/n2 (n2 = round(p/c2))")
    sim.add_argument("--toeplitz-a", type=float, default=0.3)
    sim.add_argument("--field", choices=[f.value for f in Field], default="real")
    sim.add_argument("--trials", type=int, default=10000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--distance", choices=distances, default="fisher")
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--kl-convention", choices=("paper", "standard"), default="paper")
    sim.add_argument("--estimators", default="rmt,plugin",
                     help="comma separated: rmt, rmt-exact, plugin, contour (suffix -c1known)")
    sim.add_argument("--workers", type=int, help="threads (capped by SPECDIST_THREADS)")
    sim.add_argument("--out-dir", required=True)
    sim.add_argument("--no-timing", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run the invariant suites")
    ver.add_argument("--suite", choices=("all", *SUITES), default="all")
    ver.add_argument("--models", type=int, help="models (or points) per suite")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--output", help="JSON report path, '-' for standard output")
    ver.add_argument("--no-timing", action="store_true")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
