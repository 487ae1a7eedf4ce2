"""``cvqkd`` command line: sweeps, thresholds, figure data and self-checks.

Every CSV written to ``--out`` gets a sibling JSON manifest. Sweep points
are farmed out to ``CVQKD_THREADS`` worker processes; results are always
gathered in sweep order so output bytes never depend on the worker count.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .adversary import Attack, Direction, RateQuery, Scheme, compute_kgr
from .channel import ProtocolParams
from .errors import DomainError, NoThresholdError, TruncationSaturationWarning
from .info import Numerics, beta_threshold, default_grid, hd_mutual_info_ab, pnr_mutual_info
from .quantum import TruncationPolicy

MI_COLUMNS = ("scheme", "sigma2", "beta", "phi", "eta", "order", "mi_bits")
THRESHOLD_COLUMNS = ("sigma2", "beta_th", "tol")
KGR_COLUMNS = ("scheme", "attack", "direction", "sigma2", "beta", "eta",
               "delta_i_bits", "info_first", "info_second", "trunc_warning")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    points: int

    VARIABLES = ("eta", "beta", "sigma2")

    def __post_init__(self):
        if self.variable not in self.VARIABLES:
            raise DomainError(f"sweep variable must be one of {self.VARIABLES}, got {self.variable!r}")
        if not self.start < self.stop:
            raise DomainError(f"sweep needs start < stop, got {self.start} >= {self.stop}")
        if self.points < 2:
            raise DomainError(f"sweep needs at least 2 points, got {self.points}")

    @classmethod
    def parse(cls, text: str) -> SweepSpec:
        parts = text.split(":")
        if len(parts) != 4:
            raise DomainError(f"sweep must look like VAR:START:STOP:POINTS, got {text!r}")
        try:
            return cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))
        except ValueError as exc:
            raise DomainError(f"bad sweep {text!r}: {exc}") from None

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.points)]

    def __str__(self) -> str:
        return f"{self.variable}:{self.start:g}:{self.stop:g}:{self.points}"


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------

def fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def worker_count() -> int:
    raw = os.environ.get("CVQKD_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise UsageError(f"CVQKD_THREADS must be an integer, got {raw!r}") from None
    if count < 1:
        raise UsageError(f"CVQKD_THREADS must be at least 1, got {count}")
    return count


def run_ordered(fn, tasks: list) -> list:
    """``[fn(t) for t in tasks]``, possibly across processes, in task order."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


@dataclass
class RunRecord:
    """Collects everything the manifest needs while a command runs."""

    command: str
    argv: list[str]
    settings: dict
    warnings: list[str] = dataclasses.field(default_factory=list)
    annotations: list[str] = dataclasses.field(default_factory=list)
    files: dict[str, str] = dataclasses.field(default_factory=dict)

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "settings": self.settings,
            "tool_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "warnings": self.warnings,
            "annotations": self.annotations,
            "files": self.files,
        }


def emit(record: RunRecord, out: Path | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_bytes(text.encode())
    record.files[name] = hashlib.sha256(text.encode()).hexdigest()


def write_manifest(record: RunRecord, out: Path | None, name: str = "manifest.json") -> None:
    if out is None:
        return
    (out / name).write_text(json.dumps(record.manifest(), indent=2) + "\n")


# --------------------------------------------------------------------------
# Tasks (top level so worker processes can pickle them)
# --------------------------------------------------------------------------

def _captured(fn, *args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationSaturationWarning)
        result = fn(*args)
    return result, [str(w.message) for w in caught]


def _mi_value(scheme: str, params: ProtocolParams, numerics: Numerics) -> float:
    if scheme == Scheme.HD.value:
        return hd_mutual_info_ab(params.sigma2, params.eta)
    if params.eta == 0.0:
        return 0.0
    return pnr_mutual_info(params, default_grid(params, numerics.order), policy=numerics.policy)


def mi_task(task):
    scheme, params, numerics = task
    value, notes = _captured(_mi_value, scheme, params, numerics)
    row = {"scheme": scheme, "sigma2": params.sigma2, "beta": params.beta, "phi": params.phi,
           "eta": params.eta, "order": numerics.order, "mi_bits": value}
    return row, notes


def _threshold_value(sigma2: float, tol: float, numerics: Numerics):
    try:
        return beta_threshold(sigma2, tol, numerics.order, numerics.policy), None
    except NoThresholdError as exc:
        return None, str(exc)


def threshold_task(task):
    sigma2, tol, numerics = task
    (value, failure), notes = _captured(_threshold_value, sigma2, tol, numerics)
    if failure is not None:
        notes.append(failure)
    row = {"sigma2": sigma2, "beta_th": "" if value is None else value, "tol": tol}
    return row, notes


def kgr_task(query: RateQuery):
    point = compute_kgr(query)
    p = query.params
    row = {"scheme": query.scheme.value, "attack": query.attack.value,
           "direction": query.direction.value, "sigma2": p.sigma2, "beta": p.beta, "eta": p.eta,
           "delta_i_bits": point.delta_i, "info_first": point.components.first,
           "info_second": point.components.second,
           "trunc_warning": "; ".join(point.components.warnings)}
    return row, list(point.components.warnings)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def _numerics(args) -> Numerics:
    return Numerics(order=args.order, policy=TruncationPolicy(tail_mass=args.tail_mass))


def _base_params(args, **overrides) -> ProtocolParams:
    values = {"sigma2": args.sigma2, "beta": args.beta, "phi": args.phi,
              "eta": 1.0 if args.eta is None else args.eta}
    values.update(overrides)
    return ProtocolParams(**values)


def _sweep_params(args, sweep: SweepSpec | None, **overrides) -> list[ProtocolParams]:
    if sweep is None:
        return [_base_params(args, **overrides)]
    return [_base_params(args, **{**overrides, sweep.variable: v}) for v in sweep.values()]


def _settings(args, numerics: Numerics, **extra) -> dict:
    out = {
        "params": dataclasses.asdict(_base_params(args)),
        "numerics": {"order": numerics.order, "cutoff_scale": numerics.cutoff_scale,
                     **dataclasses.asdict(numerics.policy)},
        "seed": args.seed,
        "sweep": None if args.sweep is None else str(args.sweep),
    }
    out.update(extra)
    return out


def _collect(record: RunRecord, results):
    rows = []
    for row, notes in results:
        rows.append(row)
        record.warnings.extend(notes)
    return rows


def _annotate_insecure(record: RunRecord, rows, label: str = "") -> None:
    for row in rows:
        if row["delta_i_bits"] <= 0:
            record.annotations.append(
                f"{label}{row['scheme']}/{row['attack']}/{row['direction']} eta={fmt(row['eta'])}: "
                f"no secure key (delta_i={row['delta_i_bits']:.6g} bits)")


def cmd_mi(args, record: RunRecord) -> int:
    numerics = _numerics(args)
    record.settings = _settings(args, numerics, scheme=args.scheme)
    tasks = [(args.scheme, p, numerics) for p in _sweep_params(args, args.sweep)]
    rows = _collect(record, run_ordered(mi_task, tasks))
    emit(record, args.out, "mi.csv", render_csv(MI_COLUMNS, rows))
    write_manifest(record, args.out)
    return EXIT_OK


def _threshold_rows(args, record: RunRecord, sweep: SweepSpec, numerics: Numerics):
    tasks = [(s, args.tol, numerics) for s in sweep.values()]
    return _collect(record, run_ordered(threshold_task, tasks))


def cmd_threshold(args, record: RunRecord) -> int:
    sweep = args.sweep or SweepSpec("sigma2", 1.0, 3.0, 9)
    if sweep.variable != "sigma2":
        raise UsageError("threshold sweeps sigma2 only")
    numerics = _numerics(args)
    record.settings = _settings(args, numerics, tol=args.tol, sweep=str(sweep))
    rows = _threshold_rows(args, record, sweep, numerics)
    emit(record, args.out, "threshold.csv", render_csv(THRESHOLD_COLUMNS, rows))
    write_manifest(record, args.out)
    return EXIT_FAILURE if any(r["beta_th"] == "" for r in rows) else EXIT_OK


def _expand(choice: str, enum_cls) -> list:
    return list(enum_cls) if choice == "all" else [enum_cls(choice)]


def _kgr_curves(args, attack: Attack, sweep: SweepSpec, numerics: Numerics):
    """``{(scheme, direction): rows}`` for every requested curve."""
    curves = [(s, d) for s in _expand(args.scheme, Scheme) for d in _expand(args.direction, Direction)]
    params = _sweep_params(args, sweep)
    tasks = [RateQuery(s, attack, d, p, numerics) for s, d in curves for p in params]
    results = run_ordered(kgr_task, tasks)
    return {curve: results[i * len(params):(i + 1) * len(params)] for i, curve in enumerate(curves)}


def _eta_sweep(args) -> SweepSpec | None:
    if args.sweep is not None or args.eta is not None:
        return args.sweep
    return SweepSpec("eta", 0.05, 1.0, 20)


def cmd_kgr(args, record: RunRecord) -> int:
    sweep = _eta_sweep(args)
    numerics = _numerics(args)
    record.settings = _settings(args, numerics, attack=args.attack, scheme=args.scheme,
                                direction=args.direction, sweep=None if sweep is None else str(sweep))
    rows = []
    for curve_rows in _kgr_curves(args, Attack(args.attack), sweep, numerics).values():
        rows.extend(_collect(record, curve_rows))
    _annotate_insecure(record, rows)
    emit(record, args.out, "kgr.csv", render_csv(KGR_COLUMNS, rows))
    write_manifest(record, args.out)
    return EXIT_OK


FIGURE_SIGMA2 = (1.0, 2.0, 3.0)


def cmd_figure(args, record: RunRecord) -> int:
    out = args.out or Path(f"figure{args.id}")
    numerics = _numerics(args)
    fig = args.id
    if fig == 2:
        sweep = args.sweep or SweepSpec("beta", 0.25, 4.0, 16)
        if sweep.variable != "beta":
            raise UsageError("figure 2 sweeps beta only")
        record.settings = _settings(args, numerics, sweep=str(sweep), sigma2_values=FIGURE_SIGMA2,
                                    eta_fixed=1.0)
        for s2 in FIGURE_SIGMA2:
            for scheme in (Scheme.PNR.value, Scheme.HD.value):
                params = [ProtocolParams(sigma2=s2, beta=b, phi=args.phi, eta=1.0) for b in sweep.values()]
                rows = _collect(record, run_ordered(mi_task, [(scheme, p, numerics) for p in params]))
                emit(record, out, f"fig2_{scheme}_sigma2_{s2:g}.csv", render_csv(MI_COLUMNS, rows))
    elif fig == 3:
        sweep = args.sweep or SweepSpec("sigma2", 1.0, 3.0, 9)
        if sweep.variable != "sigma2":
            raise UsageError("figure 3 sweeps sigma2 only")
        record.settings = _settings(args, numerics, tol=args.tol, sweep=str(sweep))
        rows = _threshold_rows(args, record, sweep, numerics)
        emit(record, out, "fig3_threshold.csv", render_csv(THRESHOLD_COLUMNS, rows))
    else:
        sweep = _eta_sweep(args)
        attack = Attack.INDIVIDUAL if fig == 4 else Attack.COLLECTIVE
        record.settings = _settings(args, numerics, attack=attack.value,
                                    sweep=None if sweep is None else str(sweep))
        for (scheme, direction), results in _kgr_curves(args, attack, sweep, numerics).items():
            rows = _collect(record, results)
            _annotate_insecure(record, rows)
            emit(record, out, f"fig{fig}_{scheme.value}_{direction.value}.csv",
                 render_csv(KGR_COLUMNS, rows))
    write_manifest(record, out)
    return EXIT_OK


def cmd_selfcheck(args, record: RunRecord) -> int:
    from .selfcheck import run_checks

    record.settings = {"fast": args.fast, "seed": args.seed, "force_tolerance": args.force_tolerance}
    results = run_checks(fast=args.fast, tolerance=args.force_tolerance, seed=args.seed)
    failed = [r for r in results if not r.passed]
    record.annotations = [r.line() for r in results]
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_manifest(record, args.out)
    if failed:
        print(f"{len(failed)} check(s) failed: " + ", ".join(r.name for r in failed))
        return EXIT_FAILURE
    print(f"all {len(results)} checks passed")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _sweep_arg(text: str) -> SweepSpec:
    try:
        return SweepSpec.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sigma2", type=float, default=2.0, help="modulation variance per quadrature")
    common.add_argument("--beta", type=float, default=2.0, help="local-oscillator amplitude")
    common.add_argument("--phi", type=float, default=0.0, help="local-oscillator phase (rad)")
    common.add_argument("--eta", type=float, default=None,
                        help="channel transmissivity (default 1; kgr and figures 4-5 sweep it)")
    common.add_argument("--sweep", type=_sweep_arg, default=None, metavar="VAR:START:STOP:POINTS")
    common.add_argument("--order", type=int, default=64, help="Gauss-Hermite order per dimension")
    common.add_argument("--tail-mass", type=float, default=1e-10, help="truncation tail budget")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None, metavar="DIR")

    parser = argparse.ArgumentParser(prog="cvqkd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mi", parents=[common], help="mutual information I(A;B)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="pnr")
    p.set_defaults(handler=cmd_mi)

    p = sub.add_parser("threshold", parents=[common], help="LO threshold beta_th vs sigma2")
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(handler=cmd_threshold)

    p = sub.add_parser("kgr", parents=[common], help="key generation rate")
    p.add_argument("--attack", choices=[a.value for a in Attack], required=True)
    p.add_argument("--scheme", choices=[s.value for s in Scheme] + ["all"], default="all")
    p.add_argument("--direction", choices=[d.value for d in Direction] + ["all"], default="all")
    p.set_defaults(handler=cmd_kgr)

    p = sub.add_parser("figure", parents=[common], help="data behind one of the figures")
    p.add_argument("id", type=int, choices=(2, 3, 4, 5))
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(handler=cmd_figure, scheme="all", direction="all")

    p = sub.add_parser("selfcheck", help="oracle agreement checks")
    p.add_argument("--fast", action="store_true", help="10^6 instead of 10^7 Monte Carlo samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, metavar="DIR")
    p.add_argument("--force-tolerance", type=float, default=None, metavar="TOL",
                   help="replace every check tolerance (to show the checks can fail)")
    p.set_defaults(handler=cmd_selfcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    record = RunRecord(command=" ".join(argv[:2] if args.command == "figure" else argv[:1]),
                       argv=argv, settings={})
    try:
        if args.command != "selfcheck":
            if args.order < 8 or args.order % 2:
                raise UsageError("--order must be an even integer >= 8")
            _base_params(args)
        code = args.handler(args, record)
    except (UsageError, DomainError) as exc:
        parser.error(str(exc))
    except Exception as exc:  # computation failure
        print(f"cvqkd: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for note in record.annotations if args.command != "selfcheck" else ():
        print(note, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
