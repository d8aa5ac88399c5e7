"""Command-line front end.

Subcommands::

    spade-ht entropy-sweep --config sweep.json --output entropy.csv
    spade-ht simulate --config protocol.json --output beta.csv [--summary run.json]
    spade-ht test counts.csv --calibration h0.csv [--alpha 0.05]
    spade-ht estimate-crosstalk h0.csv [--n-total 1010] [--alpha 0.05]

Exit codes: 0 success, 2 config/validation error, 3 data parse error,
4 numeric-regime error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .crosstalk import CrosstalkMatrix
from .errors import (ConfigError, DomainError, EmptyBatch, InfiniteDivergence,
                     MissingThresholdSource, NoRoot, OutOfExpansionRange, OutOfRegime,
                     ParseError)
from .experiment import ProtocolConfig, replicate_experiment
from .records import (CountsRecord, batch_records, group_by_label, read_counts,
                      render_counts, render_csv, to_batch, write_atomic)
from .sweeps import ENTROPY_COLUMNS, EntropySweepConfig, entropy_sweep_rows
from .testing import (TestSpec, ThresholdSource, analytic_threshold, calibrated_threshold,
                      estimate_crosstalk, rate_stderr, reject_h0)

SIMULATE_COLUMNS = ("epsilon", "d_a", "beta_hat", "beta_stderr", "beta_theory",
                    "beta_di_theory", "n_star", "alpha_hat")

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_REGIME = 0, 2, 3, 4


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def envelope(config: dict, seed, results: dict, started: float) -> dict:
    return _jsonable({
        "config": config,
        "seed": seed,
        "results": results,
        "runtime_ms": round((time.perf_counter() - started) * 1000.0, 3),
        "version": __version__,
    })


def _emit_json(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)


def _parse_override(item: str) -> tuple[str, object]:
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def load_config(path: str | None, overrides: list[tuple[str, object]]) -> tuple[dict, dict]:
    """Read a JSON config and apply overrides.

    Keys starting with ``_`` are metadata (for instance a previous run's
    ``_overrides`` record) and are dropped, so a config echo can be fed back.
    """
    raw: dict = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    raw = {k: v for k, v in raw.items() if not k.startswith("_")}
    applied = {}
    for key, value in overrides:
        raw[key] = value
        applied[key] = value
    return raw, applied


def _config_from(cls, raw: dict):
    try:
        return cls.from_dict(raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# -- subcommands -------------------------------------------------------------

def cmd_entropy_sweep(args) -> int:
    started = time.perf_counter()
    raw, applied = load_config(args.config, args.set)
    cfg = _config_from(EntropySweepConfig, raw)
    rows = entropy_sweep_rows(cfg)
    write_atomic(args.output, render_csv(ENTROPY_COLUMNS, rows))
    if args.summary:
        echo = {**cfg.to_dict(), "_overrides": applied}
        _emit_json(envelope(echo, None, {"rows": len(rows), "output": args.output}, started),
                   args.summary)
    return EXIT_OK


def simulate_csv(report) -> str:
    return render_csv(SIMULATE_COLUMNS, [
        (r.epsilon, r.d_a, r.beta_hat, r.beta_stderr, r.beta_theory, r.beta_di_theory,
         r.n_star, r.alpha_hat) for r in report.rows])


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(("seed", args.seed))
    if args.workers is not None:
        overrides.append(("workers", args.workers))
    raw, applied = load_config(args.config, overrides)
    cfg = _config_from(ProtocolConfig, raw)
    report = replicate_experiment(cfg)

    write_atomic(args.output, simulate_csv(report))
    if args.counts_output:
        records: list[CountsRecord] = []
        for batch in report.batches:
            records += batch_records(batch, cfg.window_label)
        write_atomic(args.counts_output, render_counts(records))
    if args.calibration_output:
        write_atomic(args.calibration_output,
                     render_counts(batch_records(report.calibration, cfg.window_label,
                                                 labels=False)))
    summary_path = args.summary or str(Path(args.output).with_suffix(".json"))
    # workers only changes scheduling; kept in the echo for completeness
    echo = {**cfg.to_dict(), "_overrides": applied}
    results = {**report.summary(), "output": args.output,
               "rows": [vars(r) for r in report.rows]}
    _emit_json(envelope(echo, cfg.seed, results, started), summary_path)
    return EXIT_OK


def _threshold(args, records: list[CountsRecord]) -> tuple[TestSpec, dict]:
    if args.calibration:
        cal = read_counts(args.calibration)
        if not cal:
            raise EmptyBatch(f"{args.calibration}: no calibration rows")
        spec = TestSpec(args.alpha, calibrated_threshold(to_batch(cal), args.alpha),
                        ThresholdSource.CALIBRATED)
        return spec, {"calibration_file": args.calibration, "calibration_rows": len(cal)}
    if args.c10 is None:
        raise MissingThresholdSource(
            "give --calibration FILE, or --c10 with --n-total (or an n_total column)")
    n_total = args.n_total
    if n_total is None:
        totals = [r.n_total for r in records if r.n_total is not None]
        if not totals or len(totals) != len(records):
            raise MissingThresholdSource("--c10 needs --n-total or an n_total column")
        n_total = int(round(float(np.mean(totals))))
    c01 = args.c10 if args.c01 is None else args.c01
    ct = CrosstalkMatrix.from_off_diagonal(args.c10, c01)
    spec = TestSpec(args.alpha, analytic_threshold(n_total, ct, args.alpha),
                    ThresholdSource.ANALYTIC)
    return spec, {"c10": args.c10, "c01": c01, "n_total": n_total}


def run_test(args) -> dict:
    records = read_counts(args.counts)
    spec, source_info = _threshold(args, records)
    verdicts = []
    for r in records:
        v = {"rep": r.rep, "window": r.window, "n1": r.n1,
             "decision": "H1" if r.n1 > spec.n_star else "H0"}
        if r.label is not None:
            v["epsilon"], v["d_a"] = r.label
        verdicts.append(v)
    groups = []
    for label, recs in group_by_label(records).items():
        rejected = reject_h0([r.n1 for r in recs], spec)
        beta_hat = float(np.mean(~rejected))
        g = {"trials": len(recs), "rejections": int(rejected.sum()),
             "beta_hat": beta_hat, "beta_stderr": rate_stderr(beta_hat, len(recs))}
        if label is not None:
            g = {"epsilon": label[0], "d_a": label[1], **g}
        groups.append(g)
    return {"n_star": spec.n_star, "alpha": spec.alpha, "source": spec.source.value,
            **source_info, "verdicts": verdicts, "groups": groups}


def cmd_test(args) -> int:
    started = time.perf_counter()
    results = run_test(args)
    config = {"counts": args.counts, "alpha": args.alpha, "calibration": args.calibration,
              "c10": args.c10, "c01": args.c01, "n_total": args.n_total}
    _emit_json(envelope(config, None, results, started), args.output)
    return EXIT_OK


def cmd_estimate_crosstalk(args) -> int:
    started = time.perf_counter()
    records = read_counts(args.counts) if args.counts else []
    if args.n_star is not None:
        n_star = float(args.n_star)
    else:
        if not records:
            raise EmptyBatch("no H0 counts to take a percentile from")
        n_star = float(calibrated_threshold(to_batch(records), args.alpha))
    n_total = args.n_total
    if n_total is None:
        totals = [r.n_total for r in records if r.n_total is not None]
        if not totals:
            raise ConfigError("give --n-total or a counts file with an n_total column")
        n_total = float(np.mean(totals))
    c10 = estimate_crosstalk(n_star, n_total, args.alpha)
    results = {"C10": c10, "n_star": n_star, "n_total": n_total, "alpha": args.alpha,
               "degenerate": n_star <= 0}
    config = {"counts": args.counts, "alpha": args.alpha, "n_total": args.n_total,
              "n_star": args.n_star}
    _emit_json(envelope(config, None, results, started), args.output)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spade-ht", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], type=_parse_override,
                        metavar="KEY=VALUE", help="override one config field (JSON value)")

    sp = sub.add_parser("entropy-sweep", help="relative entropies over a parameter grid")
    with_config(sp)
    sp.add_argument("--output", required=True, help="CSV output path")
    sp.add_argument("--summary", help="optional JSON summary path")
    sp.set_defaults(func=cmd_entropy_sweep)

    sp = sub.add_parser("simulate", help="Monte Carlo replication of the calibrate-and-test protocol")
    with_config(sp)
    sp.add_argument("--output", required=True, help="CSV output path")
    sp.add_argument("--summary", help="JSON summary path (default: output with .json suffix)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--counts-output", help="write H1 counts in the counts-record format")
    sp.add_argument("--calibration-output", help="write calibration (H0) counts")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("test", help="apply the threshold test to a counts file")
    sp.add_argument("counts")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--calibration", help="H0 counts file for the empirical threshold")
    sp.add_argument("--c10", type=float, help="crosstalk for the analytic threshold")
    sp.add_argument("--c01", type=float)
    sp.add_argument("--n-total", type=int)
    sp.add_argument("--output", help="JSON output path (default: stdout)")
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("estimate-crosstalk", help="invert the threshold formula for C")
    sp.add_argument("counts", nargs="?", help="H0 counts file")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--n-total", type=float)
    sp.add_argument("--n-star", type=float, help="use this threshold instead of the percentile")
    sp.add_argument("--output", help="JSON output path (default: stdout)")
    sp.set_defaults(func=cmd_estimate_crosstalk)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OutOfRegime, OutOfExpansionRange, NoRoot, InfiniteDivergence) as exc:
        print(f"numeric regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (ConfigError, DomainError, EmptyBatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
