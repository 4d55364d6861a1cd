"""Multi-run experiments, run statistics, subsequences, exponential fits.

A single experiment repeats independent optimizer runs (seed = base seed
+ run index so adding runs never perturbs earlier ones), optionally in
parallel processes, and aggregates the published statistics: energy
mean/best/std over all runs, hit ratio against a target, evaluation-count
moments over the hitting runs only, and the rule-of-thumb 95% confidence
interval (1 +/- 1.96/sqrt(N_h)) * NSE_mean.  Records and summaries can be
persisted as line-delimited JSON plus a summary document.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, DataError
from .model import Sequence
from .optimizer import OptimizerConfig, RunRecord, run

__all__ = ["ExperimentSummary", "RunRecord", "summarize", "make_subsequences",
           "fit_exponential", "run_experiment", "load_records"]


@dataclass(frozen=True)
class ExperimentSummary:
    """Aggregate statistics over one experiment's runs.

    NSE fields are None when no run hit the target (rendered '-').
    """

    n_runs: int
    n_hits: int
    e_mean: float
    e_best: float
    e_std: float
    hit_r: float
    nse_mean: float | None
    nse_std: float | None
    ci95_low: float | None
    ci95_high: float | None
    t_mean: float
    v_mean: float

    def to_dict(self) -> dict:
        return asdict(self)


def _sample_std(values: np.ndarray) -> float:
    # sample standard deviation (N-1 divisor); a single value has spread 0
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def summarize(records: list[RunRecord], target: float | None = None) -> ExperimentSummary:
    """Aggregate run records; recompute hits against target when given.

    Energy statistics cover all runs (reported convention, so best = max);
    evaluation-count statistics cover hitting runs only.
    """
    if not records:
        raise DataError("cannot summarize an empty record list")
    e = np.array([r.energy for r in records])
    t = np.array([r.time_s for r in records])
    v = np.array([r.speed for r in records])
    if target is not None:
        hits = [r for r in records if r.energy >= target]
    else:
        hits = [r for r in records if r.hit]
    n = len(records)
    nh = len(hits)
    if nh:
        nse = np.array([r.nse for r in hits], dtype=np.float64)
        nse_mean = float(np.mean(nse))
        nse_std = _sample_std(nse)
        half = 1.96 / math.sqrt(nh)
        ci_low, ci_high = (1.0 - half) * nse_mean, (1.0 + half) * nse_mean
    else:
        nse_mean = nse_std = ci_low = ci_high = None
    return ExperimentSummary(
        n_runs=n, n_hits=nh,
        e_mean=float(np.mean(e)), e_best=float(np.max(e)), e_std=_sample_std(e),
        hit_r=100.0 * nh / n,
        nse_mean=nse_mean, nse_std=nse_std, ci95_low=ci_low, ci95_high=ci_high,
        t_mean=float(np.mean(t)), v_mean=float(np.mean(v)))


def make_subsequences(seq: Sequence, k: int) -> list[Sequence]:
    """k truncations of seq: the i-th drops the last i monomers."""
    if k < 0:
        raise ConfigError("k must be >= 0")
    if len(seq) - k < 3:
        raise ConfigError(f"dropping {k} monomers from {len(seq)} leaves "
                          "fewer than 3")
    out = []
    for i in range(1, k + 1):
        residues = seq.residues[:-i]
        out.append(Sequence(residues, f"{seq.label}-L{len(residues)}"))
    return out


def fit_exponential(points) -> tuple[float, float]:
    """Least-squares fit of y = a * b**L in log space.

    points is a sequence of (L, y) pairs with y > 0; at least two distinct
    L values are required (the design matrix must have full rank).
    """
    pts = [(float(l), float(y)) for l, y in points]
    if len(pts) < 2:
        raise ConfigError("need at least 2 points to fit")
    if any(y <= 0.0 for _, y in pts):
        raise ConfigError("fit requires positive y values")
    ls = np.array([l for l, _ in pts])
    logy = np.log([y for _, y in pts])
    design = np.column_stack([np.ones_like(ls), ls])
    coef, _res, rank, _sv = np.linalg.lstsq(design, logy, rcond=None)
    if rank < 2:
        raise ConfigError("fit is rank-deficient: all L values identical")
    return float(np.exp(coef[0])), float(np.exp(coef[1]))


# --------------------------------------------------------------------------
# experiments

def _run_one(args) -> RunRecord:
    residues, label, cfg_kwargs = args
    seq = Sequence(residues, label)
    rec = run(seq, OptimizerConfig(**cfg_kwargs))
    rec.conformation = None  # records stay light; the caller keeps summaries
    rec.trace = None
    return rec


def run_experiment(seq: Sequence, config: OptimizerConfig, n_runs: int,
                   parallelism: int = 1, results_dir: str | None = None,
                   ) -> tuple[list[RunRecord], ExperimentSummary]:
    """n_runs independent runs with per-run seed = config.seed + index.

    Runs share nothing, so energy results are independent of the
    parallelism degree (time fields are not).  With results_dir set,
    records append to records.jsonl as runs finish and the summary lands
    in summary.json.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    config.validate(seq.dimension)
    base_kwargs = {k: getattr(config, k) for k in (
        "np_size", "pb", "lb", "c", "nse_limit", "time_limit", "target",
        "local_search", "component_reinit", "temporal_locality", "move_mode")}
    jobs = []
    for idx in range(n_runs):
        kw = dict(base_kwargs)
        kw["seed"] = config.seed + idx
        jobs.append((seq.residues, seq.label, kw))

    writer = None
    if results_dir is not None:
        os.makedirs(results_dir, exist_ok=True)
        writer = open(os.path.join(results_dir, "records.jsonl"), "a",
                      encoding="utf-8")

    def persist(idx: int, rec: RunRecord):
        if writer is not None:
            row = {"run": idx, **rec.record_dict()}
            writer.write(json.dumps(row) + "\n")
            writer.flush()

    records: list[RunRecord | None] = [None] * n_runs
    try:
        if parallelism == 1:
            for idx, job in enumerate(jobs):
                records[idx] = _run_one(job)
                persist(idx, records[idx])
        else:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                futures = {pool.submit(_run_one, job): idx
                           for idx, job in enumerate(jobs)}
                for fut in as_completed(futures):
                    idx = futures[fut]
                    records[idx] = fut.result()
                    persist(idx, records[idx])
    finally:
        if writer is not None:
            writer.close()

    done = [r for r in records if r is not None]
    summary = summarize(done, target=config.target)
    if results_dir is not None:
        with open(os.path.join(results_dir, "summary.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(summary.to_dict(), fh, indent=2)
            fh.write("\n")
    return done, summary


def load_records(path) -> list[RunRecord]:
    """Read line-delimited run records written by run_experiment."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            try:
                row = json.loads(ln)
                records.append(RunRecord(
                    label=row.get("label", ""), seed=int(row.get("seed", 0)),
                    energy=float(row["E"]), nse=int(row["NSE"]),
                    time_s=float(row["t"]), speed=float(row["v"]),
                    hit=row.get("hit")))
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise DataError(f"{path}: bad record line {ln[:60]!r}") from exc
    if not records:
        raise DataError(f"{path}: no records found")
    return records


def load_experiment_config(path) -> dict:
    """Experiment config document (JSON): sequence + optimizer settings.

    Keys: sequence (label or {label, residues} or {label, codes} for K-D
    input), n_runs, jobs, and any OptimizerConfig field.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "sequence" not in doc:
        raise DataError(f"{path}: expected an object with a 'sequence' key")
    return doc
