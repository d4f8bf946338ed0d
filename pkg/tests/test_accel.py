import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ricconflict import _accel
from ricconflict.genc import simulate, synthesize_entities
from ricconflict.graph import FEATURE_WIDTH, encode_dataset
from ricconflict.learn import init_model
from ricconflict.learn import model as M
from ricconflict.rules import _annotate_arrays_loop, _annotate_arrays_numpy

PROBE = r"""
import hashlib, json
import numpy as np
from ricconflict import backend
from ricconflict.genc import simulate, synthesize_entities
from ricconflict.graph import FEATURE_WIDTH, encode_dataset
from ricconflict.learn import init_model
from ricconflict.learn.model import Predictor, loss_and_grads, prepare

model = synthesize_entities(6, seed=1)
ds = simulate(model, "high", 5000, seed=3)
pb = prepare(encode_dataset(ds, np.arange(600)))
gm = init_model("graphmp", FEATURE_WIDTH, hidden=16, seed=0)
loss, grads = loss_and_grads(gm, pb, pb.y)
h = lambda a: hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()
print(json.dumps({
    "backend": backend(),
    "data": [h(getattr(ds, f)) for f in ("rcp_xapp", "rcp_icp", "icp_values", "vk", "labels")],
    "kpi": ds.kpi_values.tolist(),
    "logits": Predictor(gm, np.float64).logits(pb).tolist(),
    "loss": loss,
    "grads": {k: v.tolist() for k, v in grads.items()},
}))
"""


def _probe(disable: bool) -> dict:
    env = dict(os.environ)
    env[_accel.ENV_FLAG] = "1" if disable else "0"
    r = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, timeout=600)
    assert r.returncode == 0, r.stderr
    return json.loads(r.stdout)


@pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")
def test_backends_agree():
    fast, slow = _probe(False), _probe(True)
    assert (fast["backend"], slow["backend"]) == ("numba", "numpy")
    # rows and labels are bit-identical; exp() may differ in the last ulp
    assert fast["data"] == slow["data"]
    assert np.allclose(fast["kpi"], slow["kpi"], rtol=1e-14, atol=0)
    assert np.allclose(fast["logits"], slow["logits"], rtol=0, atol=1e-10)
    assert fast["loss"] == pytest.approx(slow["loss"], abs=1e-12)
    for k in fast["grads"]:
        assert np.allclose(fast["grads"][k], slow["grads"][k], rtol=0, atol=1e-10), k


@pytest.mark.parametrize("value,disabled", [("", False), ("0", False), ("false", False), ("1", True), ("yes", True)])
def test_env_flag_parsing(monkeypatch, value, disabled):
    monkeypatch.setenv(_accel.ENV_FLAG, value)
    assert _accel._flag_disabled() is disabled


def test_py_func_always_available():
    assert callable(_annotate_arrays_loop.py_func)


@pytest.fixture(scope="module")
def prepared():
    ds = simulate(synthesize_entities(5, seed=0), "high", 3000, seed=0)
    return ds, M.prepare(encode_dataset(ds, np.arange(400)))


def test_rule_kernels_agree(prepared):
    ds, _ = prepared
    a = ds.model.arrays
    args = (ds.rcp_xapp, ds.rcp_icp, np.ascontiguousarray(ds.vk), a.p2x, a.k2x, a.p2k, a.unassigned, a.k2x_count)
    ref = _annotate_arrays_numpy(*args, chunk=257)
    assert np.array_equal(_annotate_arrays_loop(*args), ref)
    assert np.array_equal(_annotate_arrays_loop.py_func(*args), ref)


def test_graph_kernels_agree(prepared):
    _, pb = prepared
    adj = pb.adj
    rng = np.random.default_rng(0)
    h = rng.normal(size=(pb.x.shape[0], 8))
    assert np.allclose(M._neighbor_mean_loop(adj.indptr, adj.indices, adj.inv, h), M._neighbor_mean_sparse(adj.indptr, adj.indices, adj.inv, h))
    assert np.allclose(M._neighbor_sum_loop(adj.indptr, adj.indices, h), M._neighbor_sum_sparse(adj.indptr, adj.indices, h))
    assert np.allclose(M._segment_sum_loop(pb.ptr, h), M._segment_sum_numpy(pb.ptr, h))
    Ws, Wn, b = rng.normal(size=(8, 5)), rng.normal(size=(8, 5)), rng.normal(size=5)
    assert np.allclose(
        M._mp_layer_loop(h, adj.indptr, adj.indices, adj.inv, Ws, Wn, b),
        M._mp_layer_numpy(h, adj.indptr, adj.indices, adj.inv, Ws, Wn, b),
    )
    Wo, bo = rng.normal(size=(8, 4)), rng.normal(size=4)
    assert np.allclose(M._readout_loop(h, pb.ptr, Wo, bo), M._readout_numpy(h, pb.ptr, Wo, bo))


def test_predictor_single_precision_labels(prepared):
    _, pb = prepared
    gm = init_model("graphmp", FEATURE_WIDTH, seed=4)
    assert np.mean(M.Predictor(gm)(pb) == M.predict(gm, pb)) >= 0.99
