"""Command-line frontend: optimize, evaluate, experiment, stats, fit,
rmsd, mirror, sequences.

Exit codes: 0 success, 2 usage/config error, 3 data error (bad files,
unknown labels, dimension mismatches), 4 runtime failure.  Every
subcommand takes --json for machine-readable output; deterministic modes
print byte-identical output for identical flags and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, harness, model, optimizer
from .errors import (AbfoldError, ConfigError, DataError, DimensionError,
                     GeometryError, InvalidResidueError)

_DATA_ERRORS = (DataError, DimensionError, GeometryError, InvalidResidueError)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def _fmt(value: float, full: bool) -> str:
    return repr(float(value)) if full else f"{value:.4f}"


def _load_sequence(args) -> model.Sequence:
    if getattr(args, "seq", None):
        return model.get_sequence(args.seq)
    seqs = model.read_sequences(args.seq_file, kd=args.kd)
    if len(seqs) != 1:
        raise DataError(f"{args.seq_file}: expected one sequence, "
                        f"found {len(seqs)}")
    return seqs[0]


def _add_sequence_args(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--seq", metavar="LABEL",
                   help="built-in sequence label (see 'sequences')")
    g.add_argument("--seq-file", metavar="FILE",
                   help="FASTA-like sequence file")
    p.add_argument("--kd", action="store_true",
                   help="sequence file holds 20-letter codes; collapse to AB")


def _read_conf(path, radians: bool):
    return model.read_conformation(path, degrees=not radians)


# --------------------------------------------------------------------------

def cmd_sequences(args) -> int:
    seqs = model.builtin_sequences()
    if args.label:
        seqs = [s for s in seqs if s.label == args.label]
        if not seqs:
            raise DataError(f"unknown sequence label {args.label!r}")
    if args.json:
        rows = [{"label": s.label, "length": len(s), "dimension": s.dimension,
                 "residues": s.residues} for s in seqs]
        print(json.dumps(rows, indent=2))
    else:
        for s in seqs:
            print(f"{s.label} {len(s)} {s.dimension} {s.residues}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    seq = _load_sequence(args)
    label, conf = _read_conf(args.conf, args.radians)
    if conf.length != len(seq):
        raise DataError(
            f"{args.conf}: conformation has {conf.dimension} angles "
            f"(L={conf.length}) but sequence {seq.label or seq.residues!r} "
            f"needs D={seq.dimension}")
    raw = model.energy(seq, conf)
    value = raw if args.raw else model.reported_energy(raw)
    if args.json:
        print(json.dumps({"label": label, "raw": raw,
                          "reported": model.reported_energy(raw)}))
    else:
        print(_fmt(value, args.full_precision))
    return EXIT_OK


def _optimizer_config(args, seq) -> optimizer.OptimizerConfig:
    nse_limit = args.nse if args.nse is not None else args.nse_cap
    cfg = optimizer.OptimizerConfig(
        np_size=args.np, pb=args.pb, lb=args.lb, c=args.c, seed=args.seed,
        nse_limit=int(nse_limit) if nse_limit is not None else None,
        time_limit=args.time_limit, target=args.target,
        local_search=not args.no_local_search,
        component_reinit=not args.no_component_reinit,
        temporal_locality=not args.no_temporal_locality,
        move_mode=args.move_mode, trace=args.trace is not None)
    return cfg.validate(seq.dimension)


def cmd_optimize(args) -> int:
    seq = _load_sequence(args)
    cfg = _optimizer_config(args, seq)
    rec = optimizer.run(seq, cfg)
    out = args.out or f"{seq.label or 'sequence'}_best.conf"
    model.write_conformation(out, seq.label or "best", rec.conformation)
    if args.trace is not None and rec.trace is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for nse, elapsed, energy in rec.trace:
                fh.write(f"{nse} {elapsed:.3f} {energy!r}\n")
    if args.json:
        print(json.dumps({**rec.record_dict(), "stop": rec.stop_reason,
                          "conformation_file": out}))
    else:
        print(f"{seq.label} {_fmt(rec.energy, args.full_precision)} "
              f"{rec.nse} {rec.time_s:.2f}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    doc = harness.load_experiment_config(args.config)
    seq_spec = doc["sequence"]
    if isinstance(seq_spec, str):
        seq = model.get_sequence(seq_spec)
    elif isinstance(seq_spec, dict) and "residues" in seq_spec:
        seq = model.Sequence(seq_spec["residues"], seq_spec.get("label", ""))
    elif isinstance(seq_spec, dict) and "codes" in seq_spec:
        seq = model.Sequence(model.kd_transform(seq_spec["codes"]),
                             seq_spec.get("label", ""))
    else:
        raise DataError("config 'sequence' must be a label or an object "
                        "with 'residues' or 'codes'")
    n_runs = int(doc.get("n_runs", 1))
    jobs = args.jobs if args.jobs is not None else int(doc.get("jobs", 1))
    cfg_keys = ("pb", "lb", "c", "seed", "nse_limit", "time_limit", "target",
                "local_search", "component_reinit", "temporal_locality",
                "move_mode")
    kwargs = {k: doc[k] for k in cfg_keys if k in doc}
    if "np" in doc:
        kwargs["np_size"] = int(doc["np"])
    if "np_size" in doc:
        kwargs["np_size"] = int(doc["np_size"])
    if "nse_limit" in kwargs and kwargs["nse_limit"] is not None:
        kwargs["nse_limit"] = int(float(kwargs["nse_limit"]))
    cfg = optimizer.OptimizerConfig(**kwargs).validate(seq.dimension)
    results_dir = args.results or os.environ.get("ABFOLD_RESULTS_DIR")
    records, summary = harness.run_experiment(seq, cfg, n_runs,
                                              parallelism=jobs,
                                              results_dir=results_dir)
    if args.json:
        print(json.dumps(summary.to_dict()))
    else:
        _print_summary(summary)
    return EXIT_OK


def _print_summary(s: harness.ExperimentSummary):
    def cell(v):
        return "-" if v is None else f"{v:.4f}" if abs(v) < 1e6 else f"{v:.4e}"
    print(f"runs {s.n_runs}  hits {s.n_hits}")
    print(f"E_mean {cell(s.e_mean)}  E_best {cell(s.e_best)}  "
          f"E_std {cell(s.e_std)}  hit_r {cell(s.hit_r)}")
    print(f"NSE_mean {cell(s.nse_mean)}  NSE_std {cell(s.nse_std)}  "
          f"CI95 [{cell(s.ci95_low)}, {cell(s.ci95_high)}]")
    print(f"t_mean {cell(s.t_mean)}  v_mean {cell(s.v_mean)}")


def cmd_stats(args) -> int:
    records = harness.load_records(args.records)
    summary = harness.summarize(records, target=args.target)
    if args.json:
        print(json.dumps(summary.to_dict()))
    else:
        _print_summary(summary)
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.points:
        pts = []
        for ln in open(args.points, encoding="utf-8"):
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split()
            if len(parts) != 2:
                raise DataError(f"{args.points}: expected 'L y' lines")
            pts.append((float(parts[0]), float(parts[1])))
    else:
        pts = []
        for item in args.data.split(","):
            l_str, y_str = item.split(":")
            pts.append((float(l_str), float(y_str)))
    try:
        a, b = harness.fit_exponential(pts)
    except ConfigError as exc:
        raise DataError(str(exc)) from exc
    if args.json:
        print(json.dumps({"a": a, "b": b}))
    else:
        print(f"{a!r} {b!r}")
    return EXIT_OK


def cmd_rmsd(args) -> int:
    _, ca = _read_conf(args.conf_a, args.radians)
    _, cb = _read_conf(args.conf_b, args.radians)
    value = analysis.superposed_rmsd(model.compute_positions(ca),
                                     model.compute_positions(cb))
    if args.json:
        print(json.dumps({"rmsd": value}))
    else:
        print(repr(value))
    return EXIT_OK


def cmd_mirror(args) -> int:
    label, conf = _read_conf(args.conf, args.radians)
    mirrored = analysis.mirror(conf)
    if args.out:
        model.write_conformation(args.out, label, mirrored,
                                 degrees=not args.radians)
    else:
        values = (mirrored.as_vector() if args.radians
                  else mirrored.to_degrees())
        print(label)
        print(" ".join(repr(float(v)) for v in values))
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="abfold",
        description="AB off-lattice protein folding toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sequences", help="list the built-in sequence corpus")
    p.add_argument("--label", help="show one label only")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sequences)

    p = sub.add_parser("evaluate", help="energy of a conformation file")
    _add_sequence_args(p)
    p.add_argument("--conf", required=True, help="conformation file")
    p.add_argument("--radians", action="store_true",
                   help="conformation file is in radians (default degrees)")
    p.add_argument("--raw", action="store_true",
                   help="print the raw (unnegated) energy")
    p.add_argument("--full-precision", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="run the optimizer on one sequence")
    _add_sequence_args(p)
    p.add_argument("--np", type=int, default=20, help="population size")
    p.add_argument("--pb", type=int, help="best-stagnation multiplier")
    p.add_argument("--lb", type=int, help="local-best stagnation multiplier")
    p.add_argument("--c", type=int, help="components redrawn per restart")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nse", type=float, help="evaluation budget")
    p.add_argument("--nse-cap", type=float,
                   help="synonym for --nse (budget alongside --target)")
    p.add_argument("--time-limit", type=float, help="wall-clock limit, seconds")
    p.add_argument("--target", type=float, help="reported energy to reach")
    p.add_argument("--no-local-search", action="store_true")
    p.add_argument("--no-component-reinit", action="store_true")
    p.add_argument("--no-temporal-locality", action="store_true")
    p.add_argument("--move-mode", choices=("offset", "absolute"),
                   default="offset")
    p.add_argument("--out", help="best conformation output file")
    p.add_argument("--trace", help="write convergence trace to this file")
    p.add_argument("--full-precision", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("experiment", help="multi-run experiment from a config")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--results", help="results directory "
                                     "(default $ABFOLD_RESULTS_DIR)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("stats", help="summarize a records.jsonl file")
    p.add_argument("--records", required=True)
    p.add_argument("--target", type=float)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fit", help="fit y = a*b^L to (L, y) points")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--points", help="file of 'L y' lines")
    g.add_argument("--data", help="inline 'L:y,L:y,...'")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rmsd", help="superposed RMSD between two conformations")
    p.add_argument("conf_a")
    p.add_argument("conf_b")
    p.add_argument("--radians", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rmsd)

    p = sub.add_parser("mirror", help="negate the torsion angles")
    p.add_argument("conf")
    p.add_argument("--out", help="write result here instead of stdout")
    p.add_argument("--radians", action="store_true")
    p.set_defaults(func=cmd_mirror)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "nse", None) is None \
            and getattr(args, "nse_cap", None) is None \
            and args.command == "optimize" \
            and args.time_limit is None and args.target is None:
        ap.error("optimize needs a stopping criterion: "
                 "--nse/--nse-cap, --time-limit or --target")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"abfold: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"abfold: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"abfold: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AbfoldError as exc:
        print(f"abfold: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
