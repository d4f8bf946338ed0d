import numpy as np
import pytest

from ricconflict import bench
from ricconflict.cms.scenario import es_mro_model
from ricconflict.genc import simulate, synthesize_entities
from ricconflict.graph import FEATURE_WIDTH
from ricconflict.learn import init_model


def test_interleaved_reports_per_row():
    calls = []
    loads = [bench.Workload(lambda: calls.append("a"), 10), bench.Workload(lambda: calls.append("b"), 1)]
    stats = bench.interleaved(loads, trials=3)
    assert calls == ["a", "b"] * 3
    assert len(stats) == 2 and all(s[0] >= 0 for s in stats)
    with pytest.raises(ValueError):
        bench.interleaved(loads, trials=0)


def test_records_with_v_shape():
    model = synthesize_entities(10, seed=0)
    recs = bench.records_with_v(model, 4, n_rows=50, seed=1)
    assert len(recs) == 50
    for r in recs:
        assert len(r.vk) == 4 and r.rcp_xapp in model.mappings.p2x[r.rcp_icp]
    with pytest.raises(ValueError):
        bench.records_with_v(model, model.k_count + 1)


def test_stress_records_violate_everything():
    model, recs = bench.stress_records(5, n_rows=20)
    assert all(len(r.vk) == model.k_count for r in recs)
    shared = sum(len(o) == 2 for o in model.mappings.p2x.values())
    assert shared >= model.p_count // 2  # sharing is inflated


def test_alarm_rows():
    ds = simulate(es_mro_model(), "high", 3000, seed=0)
    idx = bench.alarm_rows(ds)
    assert idx.size > 0
    assert ds.vk[idx].any(axis=1).all() and (ds.rcp_icp[idx] >= 0).all()


def test_compare_and_speedup_pairing():
    ds = simulate(es_mro_model(), "high", 600, seed=0)
    model = init_model("graphmp", FEATURE_WIDTH, hidden=8, seed=0)
    rows = bench.compare_on_dataset(ds, {"graphmp": model}, trials=2, name="es")
    assert [(t.method, t.dataset, t.rows) for t in rows] == [("rule", "es", 600), ("graphmp", "es", 600)]
    extra = bench.Timing("graphmp", 2, "other", 5, 1.0, 1.0, 0.0, 1)
    summ = bench.speedup_summary(rows + [extra])
    assert summ[0]["rule_dataset"] == "es"
    assert summ[1]["rule_dataset"] == "es" and summ[1]["dataset"] == "other"  # falls back to same m
    assert summ[0]["speedup"] == pytest.approx(rows[0].per_row_us / rows[1].per_row_us)


def test_scaling_table_small():
    model = init_model("graphmp", FEATURE_WIDTH, hidden=8, seed=0)
    rows = bench.scaling_table((5, 10), {5: model}, stress_rows=100, natural_steps=512, trials=2)
    kinds = [(t.method, t.m, t.dataset) for t in rows]
    assert kinds == [("rule", 5, "stress"), ("rule", 10, "stress"), ("rule", 5, "genc-high"), ("graphmp", 5, "genc-high")]
    assert all(np.isfinite(t.per_row_us) for t in rows)


def test_doubling_times_validates():
    with pytest.raises(ValueError):
        bench.doubling_times(m=5, v=5, n_rows=10, trials=1)
    t = bench.doubling_times(m=5, v=2, n_rows=50, trials=1)
    assert len(t) == 3
