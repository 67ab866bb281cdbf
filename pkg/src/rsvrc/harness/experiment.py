"""Replicated runs, per-replicate and aggregate CSV files, threshold summaries."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .. import rng as rngs
from ..diagnostics import certify_values
from ..errors import ContractViolation, DomainError, InvariantViolation, SolverFailure, UsageError
from ..optimizer import RECORD_COLUMNS, RunRecord, SolverConfig, crc_run, rsvrc_run
from .data import PROBLEMS, Dataset, simulate_classifier, simulate_student_t

METRICS = ("seconds", "f", "grad_norm", "lambda_min", "mu")
STATS = ("min", "p25", "median", "p75", "max")
THRESHOLDS = (1e-2, 1e-3, 1e-4)
ALGORITHMS = ("rsvrc", "crc")

DEFAULTS = {
    "student_t": dict(dim=10, N=10_000, nu=3.0, tau2=0.1, sigma=0.01, b_g=500, b_h=500, T=5),
    "sphere_classifier": dict(dim=20, N=100_000, nu=0.0, tau2=0.02, sigma=0.1, b_g=5000, b_h=5000, T=5),
}


@dataclass
class ExperimentConfig:
    problem: str = "student_t"
    dim: int | None = None  # p for student_t, d for sphere_classifier
    N: int | None = None
    nu: float | None = None
    tau2: float | None = None
    algorithm: str = "rsvrc"
    sigma: float | None = None
    S: int = 40
    T: int | None = None
    b_g: int | None = None
    b_h: int | None = None
    delta: float = 0.0
    with_replacement: bool = True
    record_every: int = 1
    L_H_estimate: float | None = None
    max_inner_iter: int = 10_000
    crc_iters: int | None = None
    replicates: int = 1
    seed: int = 0
    out_dir: str = "results"
    timing: bool = True
    random_init: bool = False
    epsilon: float = 1e-4
    jobs: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise UsageError(f"problem must be one of {PROBLEMS}")
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"algorithm must be one of {ALGORITHMS}")
        for k, v in DEFAULTS[self.problem].items():
            if getattr(self, k) is None:
                setattr(self, k, v)
        if self.replicates < 1:
            raise ContractViolation("replicates must be at least 1")
        if self.seed < 0:
            raise ContractViolation("seed must be nonnegative")
        self.solver()  # validates nested invariants

    def solver(self) -> SolverConfig:
        return SolverConfig(sigma=self.sigma, S=self.S, T=self.T, b_g=self.b_g, b_h=self.b_h, delta=self.delta,
                            seed=self.seed, with_replacement=self.with_replacement,
                            record_every=self.record_every, L_H_estimate=self.L_H_estimate,
                            max_inner_iter=self.max_inner_iter)

    def data_key(self) -> tuple:
        return (self.problem, self.dim, self.N, self.nu, self.tau2, self.seed)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            d = json.load(fh)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


def make_dataset(cfg: ExperimentConfig, replicate: int) -> Dataset:
    if cfg.problem == "student_t":
        return simulate_student_t(cfg.dim, cfg.N, cfg.nu, cfg.tau2, cfg.seed, replicate)
    return simulate_classifier(cfg.dim, cfg.N, cfg.tau2, cfg.seed, replicate)


def initial_point(cfg: ExperimentConfig, manifold, replicate: int):
    if cfg.random_init:
        return manifold.random_point(rngs.stream(cfg.seed, replicate, rngs.INIT))
    if cfg.problem == "student_t":
        return np.eye(cfg.dim)
    return np.ones(cfg.dim) / math.sqrt(cfg.dim)


@dataclass
class ReplicateResult:
    replicate: int
    status: str
    message: str
    records: list[RunRecord] = field(default_factory=list)
    wall_seconds: float = 0.0  # whole replicate including data generation and snapshots


def run_replicate(cfg: ExperimentConfig, replicate: int) -> ReplicateResult:
    t0 = time.perf_counter()
    res = _run_replicate(cfg, replicate)
    res.wall_seconds = time.perf_counter() - t0
    return res


def _run_replicate(cfg: ExperimentConfig, replicate: int) -> ReplicateResult:
    ds = make_dataset(cfg, replicate)
    obj = ds.objective()
    x0 = initial_point(cfg, obj.manifold, replicate)
    scfg = cfg.solver()
    records: list[RunRecord] = []
    try:
        if cfg.algorithm == "rsvrc":
            res = rsvrc_run(obj, scfg, x0, rng=rngs.stream(cfg.seed, replicate, rngs.BATCH),
                            output_rng=rngs.stream(cfg.seed, replicate, rngs.OUTPUT), timing=cfg.timing)
        else:
            res = crc_run(obj, scfg, x0, cfg.crc_iters, timing=cfg.timing)
        records = res.records
    except (SolverFailure, DomainError) as exc:
        partial = getattr(exc, "records", [])
        return ReplicateResult(replicate, "failed", f"{type(exc).__name__}: {exc}", list(partial))
    return ReplicateResult(replicate, "ok", "", records)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_records_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow([_fmt(v) for v in r.row()])


def read_records_csv(path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [RunRecord(int(r["s"]), int(r["t"]), int(r["so_calls"]), float(r["seconds"]), float(r["f"]),
                      float(r["grad_norm"]), float(r["lambda_min"]), float(r["mu"])) for r in rows]


def aggregate(runs: list[list[RunRecord]]) -> list[dict]:
    """Per-snapshot min/25th/median/75th/max of every metric across replicates.

    Snapshots are matched by ``(s, t)``; replicates that stopped early simply
    contribute to fewer rows.
    """
    keys: list[tuple[int, int]] = []
    by_key: dict[tuple[int, int], list[RunRecord]] = {}
    for recs in runs:
        for r in recs:
            k = (r.s, r.t)
            if k not in by_key:
                by_key[k] = []
                keys.append(k)
            by_key[k].append(r)
    rows = []
    for k in sorted(keys):
        rs = by_key[k]
        so = {r.so_calls for r in rs}
        if len(so) != 1:
            raise InvariantViolation(f"oracle counts differ across replicates at snapshot {k}")
        row = {"s": k[0], "t": k[1], "so_calls": rs[0].so_calls, "n": len(rs)}
        for m in METRICS:
            vals = np.array([getattr(r, m) for r in rs])
            q = np.percentile(vals, [0, 25, 50, 75, 100])
            # guard against interpolation rounding breaking the ordering
            q = np.maximum.accumulate(q)
            for name, v in zip(STATS, q):
                row[f"{m}_{name}"] = float(v)
        rows.append(row)
    return rows


def aggregate_columns() -> list[str]:
    return ["s", "t", "so_calls", "n"] + [f"{m}_{s}" for m in METRICS for s in STATS]


def write_aggregate_csv(path, rows) -> None:
    cols = aggregate_columns()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in cols])


def read_aggregate_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (int(v) if k in ("s", "t", "so_calls", "n") else float(v)) for k, v in r.items()}
                for r in csv.DictReader(fh)]


def first_crossing(records: list[RunRecord], threshold: float):
    """``(so_calls, seconds)`` at the first snapshot with ``grad_norm <= threshold``."""
    for r in records:
        if r.grad_norm <= threshold:
            return r.so_calls, r.seconds
    return None, None


def expected_so_calls(cfg: ExperimentConfig, s: int, t: int, n: int) -> int:
    """Analytic oracle count at snapshot ``(s, t)``."""
    if cfg.algorithm == "crc":
        return s * n
    if s == 0:
        return 0
    return s * n + ((s - 1) * cfg.T + t) * (cfg.b_g + cfg.b_h)


def check_accounting(cfg: ExperimentConfig, records: list[RunRecord]) -> None:
    prev = -1
    for r in records:
        want = expected_so_calls(cfg, r.s, r.t, cfg.N)
        if r.so_calls != want:
            raise InvariantViolation(f"snapshot ({r.s}, {r.t}) has {r.so_calls} oracle calls, expected {want}")
        if r.so_calls < prev:
            raise InvariantViolation("oracle-call column decreased")
        prev = r.so_calls


SUMMARY_COLUMNS = (["replicate", "status", "f", "grad_norm", "lambda_min", "mu", "eps_equivalent", "certified"]
                   + [f"{k}_to_{t:g}" for t in THRESHOLDS for k in ("so_calls", "seconds")] + ["message"])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    replicates: list[ReplicateResult]
    aggregate: list[dict]
    summary: list[dict]

    @property
    def failures(self) -> list[ReplicateResult]:
        return [r for r in self.replicates if r.status != "ok"]


def summarize(cfg: ExperimentConfig, rep: ReplicateResult) -> dict:
    row = {"replicate": rep.replicate, "status": rep.status, "message": rep.message}
    if rep.records:
        last = rep.records[-1]
        rep_cert = certify_values(last.grad_norm, last.lambda_min, cfg.epsilon, cfg.solver().lipschitz)
        row.update(f=last.f, grad_norm=last.grad_norm, lambda_min=last.lambda_min, mu=last.mu,
                   eps_equivalent=rep_cert.epsilon_equivalent, certified=int(rep_cert.passed))
    for t in THRESHOLDS:
        so, sec = first_crossing(rep.records, t)
        row[f"so_calls_to_{t:g}"] = "" if so is None else so
        row[f"seconds_to_{t:g}"] = "" if sec is None else sec
    return row


def _write_summary(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            out = []
            for c in SUMMARY_COLUMNS:
                v = row.get(c, "")
                out.append(v if isinstance(v, str) else _fmt(v))
            w.writerow(out)


def _summary_line(cfg, summary) -> str:
    parts = [f"{cfg.algorithm} on {cfg.problem}: {sum(r['status'] == 'ok' for r in summary)}/{len(summary)} ok"]
    for t in THRESHOLDS:
        so = [r[f"so_calls_to_{t:g}"] for r in summary if r[f"so_calls_to_{t:g}"] != ""]
        sec = [r[f"seconds_to_{t:g}"] for r in summary if r[f"seconds_to_{t:g}"] != ""]
        if so:
            parts.append(f"|grad|<={t:g}: {len(so)} reached, median {np.median(so):.0f} SO calls, "
                         f"{np.median(sec):.3g} s")
        else:
            parts.append(f"|grad|<={t:g}: not reached")
    return "; ".join(parts)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every replicate, then write per-replicate, aggregate and summary files."""
    reps = list(range(cfg.replicates))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run_replicate, [cfg] * len(reps), reps))
    else:
        results = [run_replicate(cfg, r) for r in reps]
    for res in results:
        check_accounting(cfg, res.records)
    agg = aggregate([r.records for r in results])
    summary = [summarize(cfg, r) for r in results]
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "config.json"), "w") as fh:
            json.dump(cfg.as_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        for res in results:
            write_records_csv(os.path.join(cfg.out_dir, f"replicate_{res.replicate:03d}.csv"), res.records)
        write_aggregate_csv(os.path.join(cfg.out_dir, "aggregate.csv"), agg)
        _write_summary(os.path.join(cfg.out_dir, "summary.csv"), summary)
        with open(os.path.join(cfg.out_dir, "summary.txt"), "w") as fh:
            fh.write(_summary_line(cfg, summary) + "\n")
    return ExperimentResult(cfg, results, agg, summary)


COMPARE_COLUMNS = ("algorithm", "replicate") + RECORD_COLUMNS


def compare_algorithms(cfg_rsvrc: ExperimentConfig, cfg_crc: ExperimentConfig, out_dir: str | None = None):
    """Run both algorithms on identical data and write aligned tables.

    ``comparison.csv`` stacks every snapshot of both algorithms (long format,
    so metric-vs-SO-calls and metric-vs-time are direct column pairs);
    ``comparison_summary.csv`` pairs replicates by the SO calls each needed
    to reach every gradient threshold.
    """
    if cfg_rsvrc.data_key() != cfg_crc.data_key() or cfg_rsvrc.replicates != cfg_crc.replicates:
        raise ContractViolation("compared configurations must share problem, data parameters, seed and replicates")
    if cfg_rsvrc.algorithm != "rsvrc" or cfg_crc.algorithm != "crc":
        raise ContractViolation("expected one rsvrc and one crc configuration")
    out_dir = out_dir or cfg_rsvrc.out_dir
    a = run_experiment(_with_dir(cfg_rsvrc, os.path.join(out_dir, "rsvrc")))
    b = run_experiment(_with_dir(cfg_crc, os.path.join(out_dir, "crc")))
    with open(os.path.join(out_dir, "comparison.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COMPARE_COLUMNS)
        for name, res in (("rsvrc", a), ("crc", b)):
            for rep in res.replicates:
                for r in rep.records:
                    w.writerow([name, str(rep.replicate)] + [_fmt(v) for v in r.row()])
    pairs = paired_thresholds(a, b)
    cols = ["replicate"] + [f"{alg}_so_calls_to_{t:g}" for t in THRESHOLDS for alg in ALGORITHMS] + \
        [f"rsvrc_fewer_to_{t:g}" for t in THRESHOLDS]
    with open(os.path.join(out_dir, "comparison_summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in pairs:
            w.writerow(["" if row[c] is None else _fmt(row[c]) for c in cols])
    return a, b, pairs


def paired_thresholds(a: ExperimentResult, b: ExperimentResult) -> list[dict]:
    rows = []
    for ra, rb in zip(a.replicates, b.replicates):
        row = {"replicate": ra.replicate}
        for t in THRESHOLDS:
            sa, _ = first_crossing(ra.records, t)
            sb, _ = first_crossing(rb.records, t)
            row[f"rsvrc_so_calls_to_{t:g}"] = sa
            row[f"crc_so_calls_to_{t:g}"] = sb
            fewer = sa is not None and (sb is None or sa < sb)
            row[f"rsvrc_fewer_to_{t:g}"] = int(fewer)
        rows.append(row)
    return rows


def _with_dir(cfg: ExperimentConfig, out_dir: str) -> ExperimentConfig:
    d = cfg.as_dict()
    d["out_dir"] = out_dir
    return ExperimentConfig.from_dict(d)
