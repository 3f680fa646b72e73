"""Command-line front end: parse a run configuration, execute the grid,
and emit plot-ready CSV plus manifest and optional text summary."""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import (
    CellKey,
    ExperimentConfig,
    GridResult,
    MseTrace,
    first_iteration_below,
    run_grid,
    steady_state_mse,
)

__all__ = [
    "CSV_HEADER",
    "RunManifest",
    "UsageError",
    "emit_csv",
    "emit_summary",
    "main",
    "parse_config",
    "replay_manifest",
    "write_plot_script",
]

CSV_HEADER = "algorithm,snr_db,mu,k,nt,nr,iteration,avg_mse,avg_mse_db"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ALL_DIVERGED = 3


class UsageError(ValueError):
    """Bad flag, bad value, or violated configuration invariant."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with status 2 by default
        raise UsageError(message)


def _csv_list(convert, name):
    def parse(text: str):
        try:
            return tuple(convert(part.strip()) for part in text.split(",") if part.strip())
        except ValueError:
            raise UsageError(f"{name}: could not parse {text!r}") from None

    return parse


def _scalar(convert, name):
    def parse(text: str):
        try:
            return convert(text)
        except ValueError:
            raise UsageError(f"{name}: could not parse {text!r}") from None

    return parse


def _names(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _argtype(convert):
    # argparse rewrites ValueError into a generic message; ArgumentTypeError
    # text is passed through verbatim, keeping the offending key visible
    def parse(text: str):
        try:
            return convert(text)
        except UsageError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


# Config-file keys share names and parsers with the flags.
_FIELD_PARSERS = {
    "nt": _scalar(int, "nt"),
    "nr": _scalar(int, "nr"),
    "length": _scalar(int, "length"),
    "k": _csv_list(int, "k"),
    "snr_db": _csv_list(float, "snr_db"),
    "mu": _csv_list(float, "mu"),
    "algorithms": _names,
    "runs": _scalar(int, "runs"),
    "iterations": _scalar(int, "iterations"),
    "seed": _scalar(int, "seed"),
    "generator": str,
    "lambda_lp": _scalar(float, "lambda_lp"),
    "lambda_l0": _scalar(float, "lambda_l0"),
    "p": _scalar(float, "p"),
    "epsilon": _scalar(float, "epsilon"),
    "beta": _scalar(float, "beta"),
    "fading_period": _scalar(int, "fading_period"),
}

# Config-file key -> ExperimentConfig field.
_FIELD_NAMES = {key: ("sparsity" if key == "k" else key) for key in _FIELD_PARSERS}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sparsemimo",
        description="Monte-Carlo MSE learning curves for adaptive sparse MIMO channel estimation.",
    )
    parser.add_argument("--config", type=Path, help="flat key=value configuration file")
    parser.add_argument("--algorithms", type=_argtype(_FIELD_PARSERS["algorithms"]),
                        help="comma-separated subset of lms,nlms,lp_nlms,l0_nlms")
    parser.add_argument("--nt", type=_argtype(_FIELD_PARSERS["nt"]), help="transmit antenna count")
    parser.add_argument("--nr", type=_argtype(_FIELD_PARSERS["nr"]), help="receive antenna count")
    parser.add_argument("--length", type=_argtype(_FIELD_PARSERS["length"]), help="taps per link")
    parser.add_argument("--k", type=_argtype(_FIELD_PARSERS["k"]), help="comma-separated dominant-tap counts")
    parser.add_argument("--snr-db", dest="snr_db", type=_argtype(_FIELD_PARSERS["snr_db"]),
                        help="comma-separated SNR values in dB (inf = noiseless)")
    parser.add_argument("--mu", type=_argtype(_FIELD_PARSERS["mu"]), help="comma-separated step sizes in (0, 2)")
    parser.add_argument("--lambda-lp", dest="lambda_lp", type=_argtype(_FIELD_PARSERS["lambda_lp"]),
                        help="fractional-norm penalty weight (default: 1e-4 x noise power)")
    parser.add_argument("--lambda-l0", dest="lambda_l0", type=_argtype(_FIELD_PARSERS["lambda_l0"]),
                        help="zero-attractor penalty weight (default: 1e-3 x noise power)")
    parser.add_argument("--p", type=_argtype(_FIELD_PARSERS["p"]), help="fractional norm exponent in (0, 1]")
    parser.add_argument("--epsilon", type=_argtype(_FIELD_PARSERS["epsilon"]), help="attractor denominator guard")
    parser.add_argument("--beta", type=_argtype(_FIELD_PARSERS["beta"]), help="attraction band is |h| <= 1/beta")
    parser.add_argument("--runs", type=_argtype(_FIELD_PARSERS["runs"]), help="Monte-Carlo runs per cell")
    parser.add_argument("--iterations", type=_argtype(_FIELD_PARSERS["iterations"]), help="updates per run")
    parser.add_argument("--seed", type=_argtype(_FIELD_PARSERS["seed"]), help="master seed")
    parser.add_argument("--generator", choices=("gaussian", "bpsk", "ofdm"), help="training signal kind")
    parser.add_argument("--fading-period", dest="fading_period", type=_argtype(_FIELD_PARSERS["fading_period"]),
                        help="redraw the channel every N iterations (default: static)")
    parser.add_argument("--out", type=Path, default=Path("results.csv"), help="output CSV path")
    parser.add_argument("--summary", action="store_true", help="print a per-cell text summary")
    parser.add_argument("--workers", type=_argtype(_scalar(int, "workers")), default=1,
                        help="parallel worker processes (results identical for any count)")
    parser.add_argument("--plot-script", dest="plot_script", type=Path,
                        help="also write a plotting script template for the CSV")
    return parser


def _load_config_file(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config: {path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELD_PARSERS:
            raise UsageError(f"config: unknown key {key!r} at {path}:{lineno}")
        values[_FIELD_NAMES[key]] = _FIELD_PARSERS[key](value.strip())
    return values


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    values = _load_config_file(args.config) if args.config else {}
    for key, field in _FIELD_NAMES.items():
        flag_value = getattr(args, key)
        if flag_value is not None:
            values[field] = flag_value
    try:
        return ExperimentConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_config(argv) -> ExperimentConfig:
    """Resolve flags and optional config file into an ExperimentConfig.

    Precedence: built-in defaults < config file < command-line flags.
    """
    args = build_parser().parse_args(list(argv))
    return _build_config(args)


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_csv(traces, path) -> None:
    """Write all traces as long-format CSV (one row per iteration point).

    Rows are ordered by cell key, then iteration; floats are written in
    shortest round-trip form so parsing the file recovers them exactly.
    """
    items = sorted(traces.items())
    if not items:
        raise ValueError("no traces to emit")
    lines = [CSV_HEADER]
    for key, trace in items:
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(trace.values)
        prefix = f"{key.algorithm},{_fmt(key.snr_db)},{_fmt(key.mu)},{key.k},{key.nt},{key.nr}"
        for i in range(trace.values.size):
            lines.append(f"{prefix},{i},{_fmt(trace.values[i])},{_fmt(db[i])}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _ss_db(trace: MseTrace) -> float:
    ss = steady_state_mse(trace)
    return 10.0 * math.log10(ss) if ss > 0 else -math.inf


def _tie(a: float, b: float) -> bool:
    if a == b:
        return True
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(a - b) < 0.1


def emit_summary(traces) -> str:
    """Per-cell steady-state table with ordering verdicts.

    Algorithms are listed best (lowest steady-state MSE) first; values
    within 0.1 dB are declared a tie. When one algorithm was run at
    several sparsity levels, its spread across them is reported.
    """
    items = [(key, traces[key]) for key in sorted(traces)]
    if not items:
        raise ValueError("no traces to summarize")
    cells: dict[tuple, dict[str, MseTrace]] = {}
    for key, trace in items:
        cells.setdefault((key.nt, key.nr, key.k, key.snr_db, key.mu), {})[key.algorithm] = trace
    out = []
    for (nt, nr, k, snr, mu), algs in cells.items():
        out.append(f"cell nt={nt} nr={nr} k={k} snr_db={snr:g} mu={mu:g}")
        ranked = sorted(algs.items(), key=lambda item: _ss_db(item[1]))
        for name, trace in ranked:
            ss = _ss_db(trace)
            reach = first_iteration_below(trace, 2.0 * steady_state_mse(trace))
            out.append(f"  {name:<8} steady-state {ss:8.2f} dB   reaches 2x floor @ iter {reach}")
        if len(ranked) > 1:
            parts = [ranked[0][0]]
            for (prev, ptrace), (name, trace) in zip(ranked, ranked[1:]):
                sep = " ~ " if _tie(_ss_db(ptrace), _ss_db(trace)) else " < "
                parts.append(sep + name)
            out.append("  verdict: " + "".join(parts))
    spreads: dict[tuple, dict[int, float]] = {}
    for key, trace in items:
        spreads.setdefault((key.algorithm, key.nt, key.nr, key.snr_db, key.mu), {})[key.k] = _ss_db(trace)
    for (alg, nt, nr, snr, mu), per_k in sorted(spreads.items()):
        if len(per_k) > 1:
            lo, hi = min(per_k.values()), max(per_k.values())
            ks = ",".join(str(k) for k in sorted(per_k))
            out.append(
                f"{alg} sparsity sensitivity at nt={nt} nr={nr} snr_db={snr:g} mu={mu:g}: "
                f"spread over k={{{ks}}} is {hi - lo:.2f} dB"
            )
    return "\n".join(out) + "\n"


@dataclasses.dataclass
class RunManifest:
    """Everything needed to reproduce one results file byte-for-byte."""

    config: dict
    version: str
    seed: int
    started: str
    finished: str
    divergence_counts: dict

    @classmethod
    def collect(cls, config: ExperimentConfig, result: GridResult, started: str, finished: str) -> "RunManifest":
        counts = {}
        for key in result:
            counts[_key_string(key)] = len(result[key].metadata.get("diverged_runs", []))
        for key in result.failures:
            counts[_key_string(key)] = config.runs
        return cls(
            config=dataclasses.asdict(config),
            version=__version__,
            seed=config.seed,
            started=started,
            finished=finished,
            divergence_counts=counts,
        )

    def write(self, path) -> None:
        payload = dataclasses.asdict(self)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        return cls(**payload)

    def experiment_config(self) -> ExperimentConfig:
        values = dict(self.config)
        for name in ("sparsity", "snr_db", "mu", "algorithms"):
            values[name] = tuple(values[name])
        return ExperimentConfig(**values)


def _key_string(key: CellKey) -> str:
    return f"algorithm={key.algorithm} snr_db={key.snr_db:g} mu={key.mu:g} k={key.k} nt={key.nt} nr={key.nr}"


def manifest_path_for(out_path) -> Path:
    out = Path(out_path)
    return out.with_name(out.stem + ".manifest.json")


def replay_manifest(manifest_path, out_path, workers: int = 1) -> GridResult:
    """Re-run the experiment recorded in a manifest and rewrite its CSV."""
    manifest = RunManifest.load(manifest_path)
    result = run_grid(manifest.experiment_config(), workers=workers)
    emit_csv(result, out_path)
    return result


PLOT_TEMPLATE = """#!/usr/bin/env python3
# Learning-curve plot template for {csv}
# The CSV is long format with header:
#   {header}
# Each (algorithm, snr_db, mu, k, nt, nr) combination is one curve of
# avg_mse_db against iteration.
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

curves = defaultdict(list)
with open({csv!r}, newline="") as handle:
    for row in csv.DictReader(handle):
        label = "{{algorithm}} snr={{snr_db}} mu={{mu}} k={{k}} {{nt}}x{{nr}}".format(**row)
        curves[label].append((int(row["iteration"]), float(row["avg_mse_db"])))

for label, points in sorted(curves.items()):
    points.sort()
    plt.plot([p[0] for p in points], [p[1] for p in points], label=label)

plt.xlabel("iteration")
plt.ylabel("average MSE (dB)")
plt.legend(fontsize="x-small")
plt.grid(True, alpha=0.3)
plt.tight_layout()
plt.show()
"""


def write_plot_script(path, csv_path) -> None:
    text = PLOT_TEMPLATE.format(csv=str(csv_path), header=CSV_HEADER)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = _build_config(args)
        if args.workers < 1:
            raise UsageError("workers: must be at least 1")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    started = _utc_now()
    result = run_grid(config, workers=args.workers)
    finished = _utc_now()

    for key, reason in result.failures.items():
        print(f"warning: {_key_string(key)}: {reason}", file=sys.stderr)
    if not result:
        print("error: every run of every cell diverged; no results to write", file=sys.stderr)
        return EXIT_ALL_DIVERGED

    try:
        emit_csv(result, args.out)
        manifest = RunManifest.collect(config, result, started, finished)
        manifest.write(manifest_path_for(args.out))
        if args.plot_script:
            write_plot_script(args.plot_script, args.out)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.summary:
        print(emit_summary(result), end="")
    print(f"wrote {len(result)} cell traces to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
