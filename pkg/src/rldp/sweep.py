"""Synthetic utility sweeps: Jeffreys-prior truths, sampled datasets, built protocols.

Each trial draws a ground truth P* from the Jeffreys prior, samples a dataset
of size n, forms the estimate Phat and its confidence set, then builds every
requested method at every eps and records utility at Phat (and optionally at
P*). Trials draw from independent seeded streams, so results do not depend on
the number of workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from rldp.audit import stress_rldp
from rldp.core import Alphabet
from rldp.errors import DomainError, ParseError
from rldp.infotheory import entropy
from rldp.protocols import Method, build_grr, build_srr, build_ue, materialize, optimize_protocol
from rldp.protocols.utility import utility
from rldp.randstats import SeededRng, empirical_distribution, sample_dataset, sample_jeffreys, trial_rng
from rldp.uncertainty import ConfidenceSet

COLUMNS = ("method", "eps", "trial", "utility", "normalized_utility", "runtime_ms",
           "params", "true_utility", "true_normalized_utility", "audit")
AGGREGATE_TRIAL = -1
#: XOR-ed into the seed for the audit spot-check stream.
AUDIT_SALT = 0xA0D17
MAX_REDRAWS = 1000


@dataclass
class SweepConfig:
    methods: Sequence[str]
    eps_grid: Sequence[float]
    a1: int = 3
    a2: int = 3
    n: int = 1000
    trials: int = 200
    alpha: float = 0.05
    seed: int = 0
    robustness: bool = False
    timing: bool = False
    audit_share: float = 0.05
    audit_samples: int = 1000
    workers: Optional[int] = None

    def __post_init__(self):
        self.methods = [Method.parse(m).value for m in self.methods]
        if not self.methods:
            raise DomainError("at least one method is required")
        if any(e < 0 or not math.isfinite(e) for e in self.eps_grid):
            raise DomainError("eps values must be finite and nonnegative")


@dataclass
class SweepRecord:
    method: str
    eps: float
    trial: int
    utility: float
    normalized_utility: float
    runtime_ms: int = 0
    params: str = ""
    true_utility: Optional[float] = None
    true_normalized_utility: Optional[float] = None
    audit: str = ""
    extra: dict = field(default_factory=dict)

    def row(self) -> list:
        fmt = lambda v: "" if v is None else repr(float(v))  # noqa: E731
        return [self.method, repr(float(self.eps)), str(self.trial), fmt(self.utility),
                fmt(self.normalized_utility), str(int(self.runtime_ms)), self.params,
                fmt(self.true_utility), fmt(self.true_normalized_utility), self.audit]


def parse_eps_grid(text: str) -> list:
    """``start:stop:count`` with both endpoints included, or a comma list."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            count = int(count)
            if count < 1:
                raise ValueError("count must be positive")
            return [float(v) for v in np.linspace(float(start), float(stop), count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"bad eps grid {text!r}: expected start:stop:count ({exc})") from None


def flatten_params(params: dict) -> str:
    parts = []
    for key in sorted(params):
        val = params[key]
        if isinstance(val, (list, tuple, np.ndarray)):
            val = "|".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in val)
        elif isinstance(val, (float, np.floating)):
            val = repr(float(val))
        parts.append(f"{key}={val}")
    return ";".join(parts)


def build_method(method: str, F: ConfidenceSet, eps: float):
    """Build (and optimize, where the family has free parameters) one protocol."""
    m = Method.parse(method)
    if m is Method.GRR:
        return build_grr(F.alphabet, eps)
    if m is Method.SRR:
        return build_srr(F.alphabet, eps)
    if m is Method.UE:
        return build_ue(F.alphabet, eps)
    if m is Method.POLYOPT:
        from rldp.polyopt import polyopt_build

        return polyopt_build(F, eps)[0]
    return optimize_protocol(F, m, eps)


def draw_trial(alphabet: Alphabet, n: int, alpha: float, rng: SeededRng):
    """Truth, estimate and confidence set for one trial.

    Draws whose estimate has an empty row of S are discarded and redrawn,
    since conditional protocols are undefined there.
    """
    for _ in range(MAX_REDRAWS):
        truth = sample_jeffreys(alphabet, rng)
        counts = sample_dataset(truth, n, rng)
        if np.all(counts.reshape(alphabet.a1, alphabet.a2).sum(axis=1) > 0):
            est = empirical_distribution(counts, alphabet)
            return truth, est, ConfidenceSet.from_sample(est, n, alpha)
    raise DomainError(f"no draw with every S value observed after {MAX_REDRAWS} attempts; increase n")


def run_trial(cfg: SweepConfig, trial: int) -> list:
    alphabet = Alphabet(cfg.a1, cfg.a2)
    truth, est, F = draw_trial(alphabet, cfg.n, cfg.alpha, trial_rng(cfg.seed, trial))
    h_est, h_true = entropy(est), entropy(truth)
    audit_rng = trial_rng(cfg.seed ^ AUDIT_SALT, trial)
    records = []
    cell = 0
    for method in cfg.methods:
        for eps in cfg.eps_grid:
            t0 = time.perf_counter()
            spec = build_method(method, F, eps)
            u = utility(spec, est)
            ms = int(round(1000 * (time.perf_counter() - t0))) if cfg.timing else 0
            rec = SweepRecord(method, eps, trial, u, u / h_est if h_est > 0 else 0.0, ms,
                              flatten_params(spec.params))
            if cfg.robustness:
                tu = utility(spec, truth)
                rec.true_utility = tu
                rec.true_normalized_utility = tu / h_true if h_true > 0 else 0.0
            if audit_rng.uniform() < cfg.audit_share:
                rep = stress_rldp(materialize(spec), F, eps, cfg.audit_samples, audit_rng.spawn(cell + 1))
                rec.audit = "pass" if rep.passed else "fail"
            records.append(rec)
            cell += 1
    return records


def _order(cfg: SweepConfig):
    rank = {m: i for i, m in enumerate(cfg.methods)}
    return lambda r: (r.trial, rank[r.method], r.eps)


def aggregate(records: list, cfg: SweepConfig) -> list:
    """Mean of each numeric column per (method, eps), tagged with trial = -1."""
    out = []
    for method in cfg.methods:
        for eps in cfg.eps_grid:
            group = [r for r in records if r.method == method and r.eps == eps]
            if not group:
                continue
            mean = lambda vals: math.fsum(vals) / len(vals)  # noqa: E731
            rec = SweepRecord(method, eps, AGGREGATE_TRIAL,
                              mean([r.utility for r in group]),
                              mean([r.normalized_utility for r in group]),
                              int(round(mean([r.runtime_ms for r in group]))))
            if cfg.robustness:
                rec.true_utility = mean([r.true_utility for r in group])
                rec.true_normalized_utility = mean([r.true_normalized_utility for r in group])
            audits = [r.audit for r in group if r.audit]
            if audits:
                rec.audit = "fail" if "fail" in audits else "pass"
            out.append(rec)
    return out


def worker_count(cfg: SweepConfig) -> int:
    if cfg.workers is not None:
        return max(1, int(cfg.workers))
    env = os.environ.get("RLDP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParseError(f"RLDP_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_sweep(cfg: SweepConfig) -> list:
    """All per-trial records in (trial, method, eps) order, then the aggregates."""
    workers = min(worker_count(cfg), max(1, cfg.trials))
    if workers == 1:
        chunks = [run_trial(cfg, t) for t in range(cfg.trials)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_trial, [cfg] * cfg.trials, range(cfg.trials)))
    records = sorted((r for chunk in chunks for r in chunk), key=_order(cfg))
    return records + aggregate(records, cfg)


def write_csv(records: list, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow(rec.row())


def records_to_csv(records: list) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()
