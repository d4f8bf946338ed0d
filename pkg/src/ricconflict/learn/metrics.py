"""Accuracy / macro-F1 / confusion utilities, evaluation reports and latency."""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..domain import LABELS, N_CLASSES
from ..graph import GraphBatch
from .model import ClassifierModel, Predictor, predict, prepare


def confusion_matrix(y_true, y_pred, n_classes: int = N_CLASSES) -> np.ndarray:
    yt = np.asarray(y_true, dtype=np.int64)
    yp = np.asarray(y_pred, dtype=np.int64)
    return np.bincount(yt * n_classes + yp, minlength=n_classes * n_classes).reshape(n_classes, n_classes)


def per_class_prf(cm: np.ndarray):
    tp = np.diag(cm).astype(np.float64)
    pred = cm.sum(axis=0)
    true = cm.sum(axis=1)
    prec = np.divide(tp, pred, out=np.zeros_like(tp), where=pred > 0)
    rec = np.divide(tp, true, out=np.zeros_like(tp), where=true > 0)
    s = prec + rec
    f1 = np.divide(2 * prec * rec, s, out=np.zeros_like(tp), where=s > 0)
    return prec, rec, f1


def macro_f1(y_true, y_pred, n_classes: int = N_CLASSES) -> float:
    """Unweighted mean F1 over classes seen in either labels or predictions."""
    cm = confusion_matrix(y_true, y_pred, n_classes)
    _, _, f1 = per_class_prf(cm)
    seen = (cm.sum(axis=0) + cm.sum(axis=1)) > 0
    return float(f1[seen].mean() * 100.0) if seen.any() else 0.0


def accuracy(y_true, y_pred) -> float:
    yt = np.asarray(y_true)
    if yt.size == 0:
        raise ValueError("empty test set")
    return float(np.mean(yt == np.asarray(y_pred)) * 100.0)


def mean_se(values) -> tuple[float, float]:
    v = [float(x) for x in values]
    if not v:
        return math.nan, math.nan
    if len(v) == 1:
        return v[0], 0.0
    return statistics.fmean(v), statistics.stdev(v) / math.sqrt(len(v))


@dataclass
class EvalReport:
    method: str
    accuracy: float
    accuracy_se: float
    macro_f1: float
    macro_f1_se: float
    precision: list[float]
    recall: list[float]
    f1: list[float]
    confusion: list[list[int]]
    runs: int
    latency_us: float = math.nan
    latency_us_se: float = math.nan
    per_run: list[dict] = field(default_factory=list)
    context: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classes"] = [lab.display for lab in LABELS]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    CSV_FIELDS = ("method", "m", "intensity", "runs", "accuracy", "accuracy_se", "macro_f1", "macro_f1_se", "latency_us", "latency_us_se")

    def csv_row(self) -> dict:
        d = {k: getattr(self, k) for k in self.CSV_FIELDS if hasattr(self, k)}
        d["m"] = self.context.get("m", "")
        d["intensity"] = self.context.get("intensity", "")
        return {k: d[k] for k in self.CSV_FIELDS}


def score(y_true, y_pred) -> dict:
    cm = confusion_matrix(y_true, y_pred)
    prec, rec, f1 = per_class_prf(cm)
    return {
        "accuracy": accuracy(y_true, y_pred),
        "macro_f1": macro_f1(y_true, y_pred),
        "precision": prec.tolist(),
        "recall": rec.tolist(),
        "f1": f1.tolist(),
        "confusion": cm.tolist(),
    }


def combine_runs(method: str, runs: list[dict], context: dict | None = None) -> EvalReport:
    """Aggregate per-run scores into mean +- standard error."""
    if not runs:
        raise ValueError("no runs to combine")
    acc, acc_se = mean_se(r["accuracy"] for r in runs)
    f1m, f1_se = mean_se(r["macro_f1"] for r in runs)
    lat, lat_se = mean_se(r["latency_us"] for r in runs if "latency_us" in r)
    cm = np.sum([np.asarray(r["confusion"]) for r in runs], axis=0)
    prec, rec, f1 = per_class_prf(cm)
    return EvalReport(
        method=method,
        accuracy=acc,
        accuracy_se=acc_se,
        macro_f1=f1m,
        macro_f1_se=f1_se,
        precision=prec.tolist(),
        recall=rec.tolist(),
        f1=f1.tolist(),
        confusion=cm.tolist(),
        runs=len(runs),
        latency_us=lat,
        latency_us_se=lat_se,
        per_run=runs,
        context=dict(context or {}),
    )


def predict_all(model: ClassifierModel, inputs, chunk: int = 8192) -> np.ndarray:
    if isinstance(inputs, GraphBatch):
        n = inputs.n_graphs
        return np.concatenate(
            [predict(model, inputs.take(np.arange(lo, min(n, lo + chunk)))) for lo in range(0, n, chunk)]
        ) if n else np.zeros(0, dtype=np.int64)
    return predict(model, inputs)


def latency_per_sample(fn, n_samples: int, warmup: int = 100, trials: int = 5, repeat: int = 1) -> tuple[float, float, float]:
    """Wall-clock microseconds per sample of ``fn()`` (which handles ``n_samples``).

    Runs ``warmup`` untimed calls, then ``trials`` timed trials of ``repeat``
    calls each.  Returns ``(median, mean, standard error)``.
    """
    for _ in range(warmup):
        fn()
    per = []
    for _ in range(trials):
        t0 = time.perf_counter_ns()
        for _ in range(repeat):
            fn()
        per.append((time.perf_counter_ns() - t0) / 1e3 / (repeat * n_samples))
    m, se = mean_se(per)
    return statistics.median(per), m, se


def model_latency(model: ClassifierModel, inputs, warmup: int = 100, trials: int = 5, batch: int = 256) -> tuple[float, float, float]:
    """Batched single-precision inference latency per row over up to 16
    batches; encoding and batch preparation are done beforehand."""
    pred = Predictor(model)
    if isinstance(inputs, GraphBatch):
        n = min(inputs.n_graphs, 16 * batch)
        batches = [prepare(inputs.take(np.arange(lo, min(n, lo + batch)))) for lo in range(0, n, batch)]
    else:
        n = min(len(inputs), 16 * batch)
        batches = [inputs[lo : min(n, lo + batch)] for lo in range(0, n, batch)]
    if not batches:
        raise ValueError("no rows to time")
    for i in range(warmup):
        pred(batches[i % len(batches)])

    def run():
        for b in batches:
            pred(b)

    return latency_per_sample(run, n, 0, trials)


def evaluate(model: ClassifierModel, inputs, y_true, latency: bool = True, warmup: int = 100) -> dict:
    """Score one trained model on held-out rows (one run)."""
    y_true = np.asarray(y_true)
    if y_true.size == 0:
        raise ValueError("empty test set")
    out = score(y_true, predict_all(model, inputs))
    if latency:
        med, _, _ = model_latency(model, inputs, warmup=warmup)
        out["latency_us"] = med
    return out


def stratified_split(y, test_frac: float = 0.2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; every class with >= 2 rows lands in both parts."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        rng.shuffle(idx)
        k = int(round(idx.size * test_frac))
        if idx.size >= 2:
            k = min(max(k, 1), idx.size - 1)
        test.append(idx[:k])
        train.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
