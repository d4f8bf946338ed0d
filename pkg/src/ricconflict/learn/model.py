"""Classifier parameters, forward passes and hand-derived gradients.

Two architectures share the same dense head:

* ``graphmp``: message passing with mean neighbour aggregation,
  ``h' = relu(h W_self + mean_nbr(h) W_neigh + b)``, a mean readout per graph
  and a softmax output layer.
* ``tabular``: a feed-forward stack over a flat feature vector.

Parameters live in a plain ``dict[str, ndarray]`` so optimizers and the
gradient checker can treat every weight uniformly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp

from .._accel import dispatch, njit
from ..domain import N_CLASSES
from ..graph import GraphBatch, HeteroGraph

FORMAT_VERSION = 1
ARCHITECTURES = ("tabular", "graphmp", "graphmp-smote")


@dataclass
class ClassifierModel:
    architecture: str
    params: dict[str, np.ndarray]
    hidden: int
    layers: int
    in_width: int
    encoding: dict[str, Any] = field(default_factory=dict)
    metrics: dict[str, Any] = field(default_factory=dict)

    @property
    def is_graph(self) -> bool:
        return self.architecture.startswith("graphmp")

    def copy(self) -> "ClassifierModel":
        return ClassifierModel(
            self.architecture,
            {k: v.copy() for k, v in self.params.items()},
            self.hidden,
            self.layers,
            self.in_width,
            dict(self.encoding),
            dict(self.metrics),
        )

    # -- I/O -------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "architecture": self.architecture,
            "hidden": self.hidden,
            "layers": self.layers,
            "in_width": self.in_width,
            "encoding": self.encoding,
            "metrics": self.metrics,
            "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in self.params.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        params = {k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in d["params"].items()}
        return cls(d["architecture"], params, d["hidden"], d["layers"], d["in_width"], d.get("encoding", {}), d.get("metrics", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def init_model(
    architecture: str,
    in_width: int,
    hidden: int = 64,
    layers: int = 2,
    seed: int = 0,
    encoding: dict | None = None,
) -> ClassifierModel:
    """He-initialized weights, zero biases."""
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {architecture!r}")
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    width = in_width
    graph = architecture.startswith("graphmp")
    for l in range(layers):
        scale = np.sqrt(2.0 / width)
        if graph:
            params[f"Ws{l}"] = rng.normal(0.0, scale, (width, hidden))
            params[f"Wn{l}"] = rng.normal(0.0, scale, (width, hidden))
        else:
            params[f"W{l}"] = rng.normal(0.0, scale, (width, hidden))
        params[f"b{l}"] = np.zeros(hidden)
        width = hidden
    params["Wo"] = rng.normal(0.0, np.sqrt(1.0 / width), (width, N_CLASSES))
    params["bo"] = np.zeros(N_CLASSES)
    return ClassifierModel(architecture, params, hidden, layers, in_width, dict(encoding or {}))


# -- neighbour aggregation ------------------------------------------------------


@njit
def _neighbor_sum_loop(indptr, indices, h):
    n = indptr.shape[0] - 1
    out = np.zeros((n, h.shape[1]))
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            for c in range(h.shape[1]):
                out[i, c] += h[j, c]
    return out


def _neighbor_sum_sparse(indptr, indices, h):
    n = indptr.shape[0] - 1
    a = sp.csr_matrix((np.ones(indices.shape[0]), indices, indptr), shape=(n, h.shape[0]))
    return np.asarray(a @ h)


neighbor_sum = dispatch(_neighbor_sum_loop, _neighbor_sum_sparse)


@njit
def _neighbor_mean_loop(indptr, indices, inv_deg, h):
    n = indptr.shape[0] - 1
    w = h.shape[1]
    out = np.zeros((n, w), dtype=h.dtype)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            for c in range(w):
                out[i, c] += h[j, c]
        s = inv_deg[i]
        for c in range(w):
            out[i, c] *= s
    return out


def _neighbor_mean_sparse(indptr, indices, inv_deg, h):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    a = sp.csr_matrix((inv_deg[rows].astype(h.dtype), indices, indptr), shape=(n, h.shape[0]))
    return np.asarray(a @ h)


neighbor_mean = dispatch(_neighbor_mean_loop, _neighbor_mean_sparse)


class Adjacency:
    """Symmetric CSR neighbourhoods with inverse degrees (0 for isolated nodes)."""

    def __init__(self, edges: np.ndarray, n: int):
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        self.indices = np.ascontiguousarray(dst)
        deg = np.diff(self.indptr).astype(np.float64)
        self.inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        self.inv_deg = self.inv[:, None]

    def mean(self, h: np.ndarray) -> np.ndarray:
        return neighbor_mean(self.indptr, self.indices, self.inv.astype(h.dtype, copy=False), np.ascontiguousarray(h))

    def mean_T(self, g: np.ndarray) -> np.ndarray:
        # transpose of D^-1 A for symmetric A is A D^-1
        return neighbor_sum(self.indptr, self.indices, np.ascontiguousarray(self.inv_deg * g))


@dataclass
class PreparedBatch:
    """Graph batch with its aggregation operators built once."""

    x: np.ndarray
    adj: Adjacency
    node_graph: np.ndarray
    counts: np.ndarray
    y: np.ndarray
    ptr: np.ndarray  # node offsets per graph

    @property
    def n_graphs(self) -> int:
        return int(self.counts.shape[0])


def prepare(batch: GraphBatch | HeteroGraph) -> PreparedBatch:
    if isinstance(batch, HeteroGraph):
        batch = GraphBatch.from_graphs([batch])
    counts = np.diff(batch.graph_ptr).astype(np.float64)
    ptr = np.asarray(batch.graph_ptr, dtype=np.int64)
    return PreparedBatch(batch.x, Adjacency(batch.edges, batch.n_nodes), batch.node_graph, counts, batch.y, ptr)


@njit
def _segment_sum_loop(ptr, h):
    g = ptr.shape[0] - 1
    w = h.shape[1]
    out = np.zeros((g, w), dtype=h.dtype)
    for i in range(g):
        for r in range(ptr[i], ptr[i + 1]):
            for c in range(w):
                out[i, c] += h[r, c]
    return out


def _segment_sum_numpy(ptr, h):
    node_graph = np.repeat(np.arange(ptr.shape[0] - 1), np.diff(ptr))
    out = np.zeros((ptr.shape[0] - 1, h.shape[1]), dtype=h.dtype)
    np.add.at(out, node_graph, h)
    return out


segment_sum = dispatch(_segment_sum_loop, _segment_sum_numpy)


def _segment_mean(h, ptr, counts):
    return segment_sum(ptr, np.ascontiguousarray(h)) / np.maximum(counts, 1.0).astype(h.dtype)[:, None]


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# -- forward / backward -------------------------------------------------------


def _check_width(model: ClassifierModel, width: int):
    if width != model.in_width:
        raise ValueError(f"feature width {width} does not match model width {model.in_width}")


def forward_logits(model: ClassifierModel, data, cache: dict | None = None) -> np.ndarray:
    """Logits for a prepared graph batch or a tabular feature matrix."""
    p = model.params
    if model.is_graph:
        if not isinstance(data, PreparedBatch):
            data = prepare(data)
        _check_width(model, data.x.shape[1])
        h = data.x
        hs, ss, aggs = [h], [], []
        for l in range(model.layers):
            agg = data.adj.mean(h)
            s = h @ p[f"Ws{l}"] + agg @ p[f"Wn{l}"] + p[f"b{l}"]
            h = np.maximum(s, 0.0)
            aggs.append(agg)
            ss.append(s)
            hs.append(h)
        r = _segment_mean(h, data.ptr, data.counts)
    else:
        x = np.atleast_2d(np.asarray(data, dtype=np.float64))
        _check_width(model, x.shape[1])
        h = x
        hs, ss, aggs = [h], [], []
        for l in range(model.layers):
            s = h @ p[f"W{l}"] + p[f"b{l}"]
            h = np.maximum(s, 0.0)
            ss.append(s)
            hs.append(h)
        r = h
    z = r @ p["Wo"] + p["bo"]
    if cache is not None:
        cache.update(hs=hs, ss=ss, aggs=aggs, r=r, data=data)
    return z


def predict_proba(model: ClassifierModel, data) -> np.ndarray:
    return softmax(forward_logits(model, data))


def forward(model: ClassifierModel, g) -> np.ndarray:
    """Class probabilities for a single graph (or tabular row)."""
    return predict_proba(model, g)[0]


def predict(model: ClassifierModel, data) -> np.ndarray:
    return np.argmax(forward_logits(model, data), axis=1)


# -- inference kernels --------------------------------------------------------------


@njit
def _mp_layer_loop(h, indptr, indices, inv_deg, Ws, Wn, b):
    n, w = h.shape
    agg = np.zeros((n, w), dtype=h.dtype)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            for c in range(w):
                agg[i, c] += h[j, c]
        s = inv_deg[i]
        for c in range(w):
            agg[i, c] *= s
    out = np.dot(h, Ws) + np.dot(agg, Wn)
    for i in range(n):
        for c in range(out.shape[1]):
            v = out[i, c] + b[c]
            out[i, c] = v if v > 0 else 0.0
    return out


def _mp_layer_numpy(h, indptr, indices, inv_deg, Ws, Wn, b):
    s = h @ Ws
    s += _neighbor_mean_sparse(indptr, indices, inv_deg, h) @ Wn
    s += b
    return np.maximum(s, 0.0, out=s)


@njit
def _readout_loop(h, ptr, Wo, bo):
    g = ptr.shape[0] - 1
    w = h.shape[1]
    r = np.zeros((g, w), dtype=h.dtype)
    for i in range(g):
        for q in range(ptr[i], ptr[i + 1]):
            for c in range(w):
                r[i, c] += h[q, c]
        cnt = ptr[i + 1] - ptr[i]
        if cnt > 0:
            for c in range(w):
                r[i, c] /= cnt
    z = np.dot(r, Wo)
    for i in range(g):
        for c in range(z.shape[1]):
            z[i, c] += bo[c]
    return z


def _readout_numpy(h, ptr, Wo, bo):
    counts = np.diff(ptr).astype(h.dtype)
    return _segment_mean(h, ptr, counts) @ Wo + bo


mp_layer = dispatch(_mp_layer_loop, _mp_layer_numpy)
readout = dispatch(_readout_loop, _readout_numpy)


class Predictor:
    """Inference-only view of a trained model with weights cast once.

    Single precision halves the matmul cost; labels agree with the float64
    path except at near-ties of the logits.
    """

    def __init__(self, model: ClassifierModel, dtype=np.float32):
        self.model = model
        self.dtype = np.dtype(dtype)
        self.params = {k: np.ascontiguousarray(v, dtype=self.dtype) for k, v in model.params.items()}

    def logits(self, data) -> np.ndarray:
        m, p, dt = self.model, self.params, self.dtype
        if m.is_graph:
            if not isinstance(data, PreparedBatch):
                data = prepare(data)
            _check_width(m, data.x.shape[1])
            adj = data.adj
            h = np.ascontiguousarray(data.x, dtype=dt)
            inv = adj.inv.astype(dt)
            for l in range(m.layers):
                h = mp_layer(h, adj.indptr, adj.indices, inv, p[f"Ws{l}"], p[f"Wn{l}"], p[f"b{l}"])
            return readout(h, data.ptr, p["Wo"], p["bo"])
        h = np.atleast_2d(np.asarray(data, dtype=dt))
        _check_width(m, h.shape[1])
        for l in range(m.layers):
            s = h @ p[f"W{l}"]
            s += p[f"b{l}"]
            h = np.maximum(s, 0.0, out=s)
        return h @ p["Wo"] + p["bo"]

    def predict(self, data) -> np.ndarray:
        return np.argmax(self.logits(data), axis=1)

    __call__ = predict


def loss_and_grads(model: ClassifierModel, data, y, scale: float = 1.0):
    """Mean cross-entropy (times ``scale``) and its gradient for every parameter."""
    cache: dict = {}
    z = forward_logits(model, data, cache)
    y = np.asarray(y, dtype=np.int64)
    n = z.shape[0]
    prob = softmax(z)
    logp = np.log(np.clip(prob[np.arange(n), y], 1e-300, None))
    loss = -scale * float(logp.mean())

    p = model.params
    grads: dict[str, np.ndarray] = {}
    dz = prob.copy()
    dz[np.arange(n), y] -= 1.0
    dz *= scale / n
    r = cache["r"]
    grads["Wo"] = r.T @ dz
    grads["bo"] = dz.sum(axis=0)
    dr = dz @ p["Wo"].T
    hs, ss = cache["hs"], cache["ss"]
    if model.is_graph:
        data = cache["data"]
        dh = (dr / np.maximum(data.counts, 1.0)[:, None])[data.node_graph]
        for l in reversed(range(model.layers)):
            ds = dh * (ss[l] > 0)
            grads[f"Ws{l}"] = hs[l].T @ ds
            grads[f"Wn{l}"] = cache["aggs"][l].T @ ds
            grads[f"b{l}"] = ds.sum(axis=0)
            if l:
                dh = ds @ p[f"Ws{l}"].T + data.adj.mean_T(ds @ p[f"Wn{l}"].T)
    else:
        dh = dr
        for l in reversed(range(model.layers)):
            ds = dh * (ss[l] > 0)
            grads[f"W{l}"] = hs[l].T @ ds
            grads[f"b{l}"] = ds.sum(axis=0)
            if l:
                dh = ds @ p[f"W{l}"].T
    return loss, grads


def gradient_check(model: ClassifierModel, g, label, h: float = 1e-5, floor: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    entries whose true gradient is ~0 from dividing round-off by round-off.
    """
    data = prepare(g) if model.is_graph and not isinstance(g, PreparedBatch) else g
    y = np.atleast_1d(np.asarray(label, dtype=np.int64))
    _, grads = loss_and_grads(model, data, y)
    worst = 0.0
    for name, w in model.params.items():
        num = np.empty_like(w)
        flat = w.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lp, _ = loss_and_grads(model, data, y)
            flat[i] = old - h
            lm, _ = loss_and_grads(model, data, y)
            flat[i] = old
            num.reshape(-1)[i] = (lp - lm) / (2 * h)
        a = grads[name]
        rel = np.abs(a - num) / np.maximum(np.maximum(np.abs(a), np.abs(num)), floor)
        worst = max(worst, float(rel.max(initial=0.0)))
    return worst
