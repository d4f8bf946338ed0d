"""Per-row classification latency: rule engine versus learned models.

Workloads are timed round-robin (one trial of each, repeated) so that slow
drifts of the host clock rate hit every workload alike.  Times exclude file
I/O and encoding: rule rows are prebuilt records, learned rows are prepared
graph (or feature) batches.
"""

from __future__ import annotations

import gc
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .dataset import Dataset
from .domain import SnapshotRecord, SystemModel
from .genc import simulate, synthesize_entities
from .graph import encode_dataset
from .learn.features import dataset_tabular
from .learn.metrics import mean_se
from .learn.model import ClassifierModel, Predictor, prepare
from .rules import annotate

SCALING_MS = (5, 10, 20, 30, 50)
INFER_BATCH = 256  # keeps a batch's activations cache-resident


@dataclass
class Timing:
    method: str
    m: int
    dataset: str
    rows: int
    per_row_us: float  # median over trials
    mean_us: float
    se_us: float
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Workload:
    """A callable that classifies ``rows`` rows once per call."""

    fn: Callable[[], object]
    rows: int


def interleaved(workloads: list[Workload], trials: int = 5) -> list[tuple[float, float, float]]:
    """(median, mean, s.e.) microseconds per row for each workload."""
    if trials < 1:
        raise ValueError("need at least one trial")
    per: list[list[float]] = [[] for _ in workloads]
    clock = time.perf_counter_ns
    was_enabled = gc.isenabled()
    gc.disable()  # collector pauses otherwise dominate the spread
    try:
        for _ in range(trials):
            for i, w in enumerate(workloads):
                t0 = clock()
                w.fn()
                per[i].append((clock() - t0) / 1e3 / max(1, w.rows))
    finally:
        if was_enabled:
            gc.enable()
    out = []
    for p in per:
        mean, se = mean_se(p)
        out.append((float(np.median(p)), mean, se))
    return out


# -- workloads ------------------------------------------------------------------


def rule_workload(records, mappings, warmup_rows: int = 100) -> Workload:
    recs = list(records)
    for r in recs[:warmup_rows]:
        annotate(r, mappings)

    def run():
        for r in recs:
            annotate(r, mappings)

    return Workload(run, len(recs))


def learned_workload(
    model: ClassifierModel, ds: Dataset, idx=None, batch: int = INFER_BATCH, warmup_batches: int = 100
) -> Workload:
    """Batched inference over rows ``idx`` of ``ds`` with the single-precision predictor."""
    idx = np.arange(len(ds)) if idx is None else np.asarray(idx)
    if idx.size == 0:
        raise ValueError("no rows to time")
    pred = Predictor(model)
    chunks = [idx[i : i + batch] for i in range(0, len(idx), batch)]
    if model.is_graph:
        batches = [prepare(encode_dataset(ds, c)) for c in chunks]
    else:
        batches = [dataset_tabular(ds, c) for c in chunks]

    def run():
        for b in batches:
            pred(b)

    for i in range(warmup_batches):
        pred(batches[i % len(batches)])
    return Workload(run, len(idx))


def time_rule_engine(records, mappings, trials: int = 5, warmup: int = 100) -> tuple[float, float, float]:
    """Microseconds per row (median, mean, s.e.) of the row-at-a-time rule engine."""
    return interleaved([rule_workload(records, mappings, warmup)], trials)[0]


# -- datasets -------------------------------------------------------------------


def records_with_v(model: SystemModel, v_size: int, n_rows: int = 2000, seed: int = 0) -> list[SnapshotRecord]:
    """Rows whose violation set has exactly ``v_size`` KPIs; the changed ICP is
    a shared one and the instructing xApp one of its owners."""
    rng = np.random.default_rng(seed)
    p2x = model.mappings.p2x
    shared = [p for p, o in p2x.items() if len(o) == 2] or [p for p, o in p2x.items() if o]
    P, K = model.p_count, model.k_count
    if not 0 <= v_size <= K:
        raise ValueError(f"v_size must lie in [0, {K}]")
    zp, zk = np.zeros(P), np.zeros(K)
    out = []
    for i in range(n_rows):
        pc = int(shared[rng.integers(len(shared))])
        owners = p2x[pc]
        xi = int(owners[rng.integers(len(owners))])
        vk = tuple(sorted(int(k) for k in rng.choice(K, size=v_size, replace=False)))
        out.append(SnapshotRecord(i + 1, xi, pc, zp, zk, zk, vk))
    return out


def stress_records(m: int, n_rows: int = 2000, seed: int = 0, share_prob: float = 0.9) -> tuple[SystemModel, list[SnapshotRecord]]:
    """Rows with inflated sets: every KPI violated, a shared changed ICP and
    mostly two managers per KPI, so the rule engine does its full work."""
    model = synthesize_entities(m, share_prob=share_prob, seed=seed)
    return model, records_with_v(model, model.k_count, n_rows, seed)


def natural_dataset(m: int, intensity: str = "high", steps: int = 8192, seed: int = 0) -> Dataset:
    return simulate(synthesize_entities(m, seed=seed), intensity, steps, seed=seed)


def alarm_rows(ds: Dataset) -> np.ndarray:
    """Rows a CMS would hand to the classifier: a violation and a logged change."""
    return np.flatnonzero(ds.vk.any(axis=1) & (ds.rcp_icp >= 0))


# -- reports --------------------------------------------------------------------


def scaling_table(
    ms=SCALING_MS,
    models: dict[int, ClassifierModel] | None = None,
    stress_rows: int = 2000,
    natural_steps: int = 8192,
    trials: int = 5,
    seed: int = 0,
) -> list[Timing]:
    """Rule engine on stress rows, plus rule engine and model on natural
    High-intensity rows for each m with a model.  All workloads are timed
    interleaved."""
    ms = list(ms)
    labels: list[tuple[str, int, str]] = []
    loads: list[Workload] = []
    for m in ms:
        smodel, recs = stress_records(m, stress_rows, seed)
        labels.append(("rule", m, "stress"))
        loads.append(rule_workload(recs, smodel.mappings))
    for m in ms:
        if models and m in models:
            ds = natural_dataset(m, steps=natural_steps, seed=seed)
            labels.append(("rule", m, "genc-high"))
            loads.append(rule_workload(list(ds), ds.model.mappings))
            labels.append((models[m].architecture, m, "genc-high"))
            loads.append(learned_workload(models[m], ds))
    stats = interleaved(loads, trials)
    return [Timing(meth, m, name, w.rows, *st, trials) for (meth, m, name), w, st in zip(labels, loads, stats)]


def compare_on_dataset(
    ds: Dataset, models: dict[str, ClassifierModel], idx=None, trials: int = 5, name: str = "dataset"
) -> list[Timing]:
    """Rule engine and every given model on the same rows of one dataset."""
    idx = np.arange(len(ds)) if idx is None else np.asarray(idx)
    m = ds.model.m
    labels = [("rule", m, name)]
    loads = [rule_workload([ds.record(int(i)) for i in idx], ds.model.mappings)]
    for arch, model in models.items():
        labels.append((arch, m, name))
        loads.append(learned_workload(model, ds, idx))
    stats = interleaved(loads, trials)
    return [Timing(meth, mm, nm, w.rows, *st, trials) for (meth, mm, nm), w, st in zip(labels, loads, stats)]


def doubling_times(m: int = 50, v: int | None = None, n_rows: int = 2000, trials: int = 5, seed: int = 0):
    """Rule-engine medians (us/row) at |V| = v/2, v and 2v on one stress model
    whose set sizes stay fixed."""
    model = synthesize_entities(m, share_prob=0.9, seed=seed)
    v = model.k_count // 2 if v is None else v
    if 2 * v > model.k_count:
        raise ValueError(f"2v must not exceed K={model.k_count}")
    loads = [rule_workload(records_with_v(model, s, n_rows, seed), model.mappings) for s in (v // 2, v, 2 * v)]
    return tuple(st[0] for st in interleaved(loads, trials))


def speedup_summary(timings: list[Timing]) -> list[dict]:
    """Rule-over-learned per-row ratio; pairs rows of the same dataset first,
    else the rule timing at the same m."""
    rule = {(t.m, t.dataset): t for t in timings if t.method == "rule"}
    by_m = {t.m: t for t in timings if t.method == "rule"}
    rows = []
    for t in timings:
        if t.method == "rule":
            continue
        r = rule.get((t.m, t.dataset)) or by_m.get(t.m)
        if r is None:
            continue
        rows.append(
            {
                "m": t.m,
                "method": t.method,
                "dataset": t.dataset,
                "rule_dataset": r.dataset,
                "rule_us": r.per_row_us,
                "learned_us": t.per_row_us,
                "speedup": r.per_row_us / t.per_row_us if t.per_row_us > 0 else float("inf"),
            }
        )
    return rows
