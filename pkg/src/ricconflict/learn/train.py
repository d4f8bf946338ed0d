"""Mini-batch training with Adam and hand-derived gradients."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..dataset import Dataset
from ..graph import FEATURE_WIDTH, GraphBatch, encode_columns
from ..rules import annotate_arrays
from .features import RecordCodec, tabular_features, tabular_width
from .model import ARCHITECTURES, ClassifierModel, init_model, loss_and_grads, predict, prepare
from .smote import smote

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 30
    batch: int = 256
    lr: float = 0.01
    seed: int = 0
    hidden: int = 64
    layers: int = 2
    # rows drawn (with replacement) per epoch; None = one pass over the data.
    # With SMOTE rows present this many are drawn from the real rows and as
    # many again from the synthetic ones, so augmentation never thins out
    # the real data.
    epoch_size: int | None = None
    smote_k: int = 5
    smote_target: int | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingData:
    """Model-ready inputs: a graph batch or a tabular matrix, plus labels."""

    inputs: GraphBatch | np.ndarray
    y: np.ndarray
    n_synthetic: int = 0

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def take(self, idx):
        if isinstance(self.inputs, GraphBatch):
            return self.inputs.take(idx)
        return self.inputs[idx]


def _oversample(ds: Dataset, idx: np.ndarray, config: TrainConfig):
    """SMOTE on record vectors, decoded back to rows and relabelled by the oracle."""
    codec = RecordCodec(ds.model)
    z = codec.encode(ds.rcp_xapp[idx], ds.rcp_icp[idx], ds.vk[idx], ds.icp_values[idx], ds.kpi_values[idx])
    res = smote(z, ds.labels[idx], k_neighbors=config.smote_k, target_count=config.smote_target, seed=config.seed)
    xi, pc, vk, icp, kpi = codec.decode(res.synthetic)
    lab = annotate_arrays(ds.model, xi, pc, vk)
    bad = int(np.count_nonzero(lab != res.y[res.n_original :]))
    if bad:
        log.warning("%d synthetic rows changed class after snapping", bad)
    return xi, pc, vk, icp, kpi, lab


def build_training_data(ds: Dataset, idx, architecture: str, config: TrainConfig | None = None) -> TrainingData:
    config = config or TrainConfig()
    idx = np.asarray(idx)
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {architecture!r}")
    cols = [ds.rcp_xapp[idx], ds.rcp_icp[idx], ds.vk[idx], ds.icp_values[idx], ds.kpi_values[idx], ds.labels[idx]]
    n_syn = 0
    if architecture == "graphmp-smote":
        syn = _oversample(ds, idx, config)
        n_syn = len(syn[0])
        cols = [np.concatenate([c, s]) for c, s in zip(cols, syn)]
    y = np.asarray(cols[5], dtype=np.int64)
    if architecture == "tabular":
        return TrainingData(tabular_features(ds.model, cols[0], cols[1], cols[2]), y)
    return TrainingData(encode_columns(ds.model, *cols), y, n_syn)


def fit(model: ClassifierModel, data: TrainingData, config: TrainConfig) -> ClassifierModel:
    """Adam on mean cross-entropy; deterministic given ``config.seed``."""
    rng = np.random.default_rng(config.seed + 1)
    n = len(data)
    if n == 0:
        raise ValueError("empty training set")
    p = model.params
    m1 = {k: np.zeros_like(v) for k, v in p.items()}
    m2 = {k: np.zeros_like(v) for k, v in p.items()}
    step = 0
    history = []
    t0 = time.perf_counter()
    n_real = n - data.n_synthetic
    for epoch in range(config.epochs):
        if config.epoch_size is None:
            order = rng.permutation(n)
        elif data.n_synthetic and n_real:
            order = np.concatenate(
                [rng.integers(n_real, size=config.epoch_size), rng.integers(n_real, n, size=config.epoch_size)]
            )
            rng.shuffle(order)
        else:
            order = rng.integers(n, size=config.epoch_size)
        tot = 0.0
        for lo in range(0, order.size, config.batch):
            ids = order[lo : lo + config.batch]
            inp = data.take(ids)
            if model.is_graph:
                inp = prepare(inp)
            loss, grads = loss_and_grads(model, inp, data.y[ids])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}, step {step}")
            step += 1
            b1c = 1 - config.beta1**step
            b2c = 1 - config.beta2**step
            for k, g in grads.items():
                m1[k] = config.beta1 * m1[k] + (1 - config.beta1) * g
                m2[k] = config.beta2 * m2[k] + (1 - config.beta2) * g * g
                p[k] -= config.lr * (m1[k] / b1c) / (np.sqrt(m2[k] / b2c) + config.eps)
            tot += loss * ids.size
        history.append(tot / order.size)
        log.debug("epoch %d loss %.5f", epoch, history[-1])
    model.metrics.update(
        loss_history=history,
        steps=step,
        train_seconds=time.perf_counter() - t0,
        n_train=n,
        n_synthetic=data.n_synthetic,
    )
    return model


def train(ds: Dataset, architecture: str, config: TrainConfig | None = None, idx=None) -> ClassifierModel:
    """Train ``architecture`` on rows ``idx`` of ``ds`` against its oracle labels."""
    config = config or TrainConfig()
    idx = np.arange(len(ds)) if idx is None else np.asarray(idx)
    if idx.size == 0:
        raise ValueError("empty training set")
    data = build_training_data(ds, idx, architecture, config)
    width = FEATURE_WIDTH if architecture != "tabular" else tabular_width(ds.model)
    encoding = {
        "feature_width": width,
        "icp_scale": 100.0,
        "m": ds.model.m,
        "p_count": ds.model.p_count,
        "k_count": ds.model.k_count,
        "config": config.to_dict(),
    }
    model = init_model(architecture, width, config.hidden, config.layers, config.seed, encoding)
    fit(model, data, config)
    # accuracy on the real training rows; synthetic ones say little about fit
    inp, n_real = data.inputs, len(data) - data.n_synthetic
    pred = np.concatenate([predict(model, _slice(inp, lo, min(lo + 8192, n_real))) for lo in range(0, n_real, 8192)])
    model.metrics["train_accuracy"] = float(np.mean(pred == data.y[:n_real]) * 100.0)
    return model


def _slice(inp, lo, hi):
    if isinstance(inp, GraphBatch):
        return inp.take(np.arange(lo, min(hi, inp.n_graphs)))
    return inp[lo:hi]
