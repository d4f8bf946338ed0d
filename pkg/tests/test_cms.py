import json
import logging
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ricconflict.cms import (
    CMS_SOURCE,
    CmsState,
    ResponseModel,
    Scenario,
    ScheduledAction,
    Window,
    cdc_classify,
    cmc_mitigate,
    compromise_point,
    es_mro_scenario,
    ingest_opencellid,
    ingest_report,
    pmon_step,
    run_control_loop,
)
from ricconflict.cms.mitigation import NothingToMitigateError, min_margin_fn
from ricconflict.cms.opencellid import DUBLIN_CENTER, MissingColumnsError, project, unproject, write_positions
from ricconflict.cms.scenario import ES, MRO, THR, TXP
from ricconflict.domain import ConflictLabel, SnapshotRecord
from ricconflict.graph import FEATURE_WIDTH
from ricconflict.learn import init_model
from ricconflict.rules import AnnotationResult

# -- monitor ------------------------------------------------------------------------


def test_pmon_persistence_window():
    st = CmsState(persistence_required=3)
    sla = [0.5, 0.5]
    fired = []
    for t in range(8):
        k = [0.4 if t >= 2 else 0.9, 0.9]
        r = pmon_step(t, k, sla, st)
        if r.new:
            assert r.new == (0,) and t == 2
        if r.trigger:
            fired.append(t)
    # breach starts at 2, fires once at 2 + 3
    assert fired == [5]
    assert st.vk_store == {0: 2}


def test_pmon_recovery_rearms():
    st = CmsState(persistence_required=1)
    pmon_step(0, [0.1], [0.5], st)
    assert pmon_step(1, [0.1], [0.5], st).trigger
    r = pmon_step(2, [0.9], [0.5], st)
    assert r.recovered == (0,) and not st.vk_store and not st.reported
    pmon_step(3, [0.1], [0.5], st)
    assert pmon_step(4, [0.1], [0.5], st).persistent == (0,)


def test_pmon_shape_mismatch():
    with pytest.raises(ValueError):
        pmon_step(0, [0.1, 0.2], [0.5], CmsState())


def test_rcp_log_order():
    st = CmsState()
    st.log_change(5, 0, 1, 0.0, 1.0)
    st.log_change(6, CMS_SOURCE, 1, 1.0, 0.5)
    assert st.latest_xapp_change().t == 5
    with pytest.raises(ValueError):
        st.log_change(4, 0, 1, 0.0, 1.0)


# -- detection ------------------------------------------------------------------------


def _es_state(vk=(THR,), change=True):
    st = CmsState()
    if change:
        st.log_change(100, ES, TXP, 0.0, -60.0)
    for k in vk:
        st.vk_store[k] = 100
    return st


def test_cdc_direct_on_shared_txp():
    sc = es_mro_scenario()
    icp = np.zeros(6)
    icp[TXP] = -60.0
    kv = sc.response.kpis(icp)
    det = cdc_classify(110, _es_state(), sc.model, icp, kv, sc.response.thresholds)
    assert det.alarm and det.label is ConflictLabel.DIRECT
    assert det.conflicting_xapps == (ES, MRO)
    assert det.rcp.icp == TXP


def test_cdc_alarm_without_change():
    sc = es_mro_scenario()
    det = cdc_classify(110, _es_state(change=False), sc.model, np.zeros(6), np.ones(6), sc.response.thresholds)
    assert det.alarm and det.label is ConflictLabel.NO_CONFLICT and det.rcp is None


def test_cdc_quiet_without_violation():
    sc = es_mro_scenario()
    det = cdc_classify(110, _es_state(vk=()), sc.model, np.zeros(6), np.ones(6), sc.response.thresholds)
    assert not det.alarm


def test_cdc_with_learned_classifier():
    sc = es_mro_scenario()
    st = _es_state()
    st.classifier = init_model("graphmp", FEATURE_WIDTH, seed=0)
    det = cdc_classify(110, st, sc.model, np.zeros(6), np.ones(6), sc.response.thresholds)
    assert det.label in set(ConflictLabel)


# -- mitigation ------------------------------------------------------------------------


def test_compromise_point_refines_inside_grid():
    f = lambda p: -((np.asarray(p) - 0.123456) ** 2)  # noqa: E731
    p, v = compromise_point(f, -1.0, 1.0, n_grid=11)
    assert p == pytest.approx(0.123456, abs=1e-6) and v <= 0


def test_compromise_point_edge_and_extra():
    p, _ = compromise_point(lambda p: np.asarray(p, dtype=float), 0.0, 1.0, n_grid=5)
    assert p == 1.0
    p, _ = compromise_point(lambda p: -np.abs(np.asarray(p) - 0.3), 0.0, 1.0, n_grid=3, extra=(0.3, 7.0))
    assert p == 0.3


def test_mitigation_restores_margins():
    sc = es_mro_scenario()
    icp = np.zeros(6)
    icp[TXP] = -60.0
    st = CmsState()
    res = AnnotationResult(ConflictLabel.DIRECT)
    mit = cmc_mitigate(110, res, TXP, icp, sc.response, st)
    assert mit.margin_before < 0 <= mit.margin_after and mit.feasible
    assert icp[TXP] == mit.new
    assert (sc.response.margins(icp)[list(mit.affected)] >= 0).all()
    assert st.rcp_log[-1].source == CMS_SOURCE
    # the refined optimum beats every grid neighbour
    f = min_margin_fn(sc.response, TXP, icp, mit.affected)
    for d in (-0.5, 0.5):
        assert f(mit.new + d) <= mit.margin_after + 1e-12


def test_mitigation_refuses_no_conflict():
    sc = es_mro_scenario()
    with pytest.raises(NothingToMitigateError):
        cmc_mitigate(0, AnnotationResult(ConflictLabel.NO_CONFLICT), TXP, np.zeros(6), sc.response)


# -- closed loop -----------------------------------------------------------------------


def test_loop_event_sequence():
    r = run_control_loop(es_mro_scenario())
    kinds = [(e["t"], e["type"]) for e in r.events]
    assert kinds[:6] == [
        (100, "action"),
        (100, "violation"),
        (110, "trigger"),
        (110, "classification"),
        (110, "mitigation"),
        (111, "recovery"),
    ]
    cls = r.of_type("classification")[0]
    assert cls["label"] == "Direct" and cls["conflicting_xapps"] == ["ES", "MRO"]
    tau = r.thresholds
    thr = r.kpi_names.index("Throughput")
    assert (r.kpi[111:116, thr] >= tau[thr]).all()


def test_loop_without_mitigation_stays_broken():
    r = run_control_loop(es_mro_scenario(), mitigate=False, deadline_s=None)
    assert not r.of_type("mitigation") and not r.of_type("recovery")
    assert (r.kpi[100:, THR] < r.thresholds[THR]).all()


def test_loop_is_deterministic(tmp_path):
    a = run_control_loop(es_mro_scenario())
    b = run_control_loop(es_mro_scenario())
    strip = lambda ev: [{k: v for k, v in e.items() if k != "latency_us"} for e in ev]  # noqa: E731
    assert strip(a.events) == strip(b.events)
    assert np.array_equal(a.kpi, b.kpi)
    a.write_events(tmp_path / "e.jsonl")
    a.write_traces(tmp_path / "t.csv")
    lines = (tmp_path / "e.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["type"] == "action"
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert len(rows) == 541 and rows[0].startswith("t,EnergyEfficiency")


def test_loop_quiet_without_actions():
    r = run_control_loop(es_mro_scenario(cut_at=None), steps=200)
    assert r.events == []


def test_scenario_json_roundtrip(tmp_path):
    sc = es_mro_scenario()
    sc.save(tmp_path / "s.json")
    back = Scenario.load(tmp_path / "s.json")
    assert back.model == sc.model and back.actions == sc.actions
    assert np.array_equal(np.isnan(back.response.centers), np.isnan(sc.response.centers))


def test_scenario_check_rejects_bad_action():
    sc = es_mro_scenario()
    sc.actions.append(ScheduledAction(5, 9, TXP, 1.0))
    with pytest.raises(ValueError, match="unknown"):
        sc.check()


def test_response_model():
    r = ResponseModel(np.array([[0.0, np.nan]]), 10.0, np.array([0.5]))
    assert r.kpis([0.0, 99.0])[0] == 1.0
    assert r.kpis([10.0, 0.0])[0] == pytest.approx(math.exp(-0.5))
    assert r.kpis_driven_by(1).size == 0
    with pytest.raises(ValueError):
        ResponseModel(np.zeros((1, 1)), 0.0, np.zeros(1))


# -- OpenCellID --------------------------------------------------------------------------


def test_fixture_yields_thirteen_cells(fixture_csv):
    rep = ingest_report(fixture_csv)
    assert len(rep.cells) == 13 and rep.rows == 20
    assert (rep.malformed, rep.filtered, rep.outside_bbox, rep.outside_window) == (0, 4, 1, 2)
    w = Window()
    for c in rep.cells:
        assert abs(c.x) <= w.width / 2 and abs(c.y) <= w.height / 2
        assert c.radio == "LTE" and c.mcc == 272 and c.net == 1
    assert [c.id for c in rep.cells] == sorted(c.id for c in rep.cells)


def test_projection_roundtrip():
    x, y = project(53.345, -6.26, DUBLIN_CENTER)
    assert unproject(x, y, DUBLIN_CENTER) == pytest.approx((53.345, -6.26))
    assert y == pytest.approx(222.39, abs=0.1)


def test_filters_can_be_relaxed(fixture_csv):
    assert len(ingest_opencellid(fixture_csv, radio=None, mcc=None, net=None, bbox=None, window=None)) == 20


def test_empty_file_warns(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.warns(RuntimeWarning, match="empty"):
        assert ingest_opencellid(p) == []


def test_missing_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("radio,mcc,net,cell\nLTE,272,1,5\n")
    with pytest.raises(MissingColumnsError) as ei:
        ingest_report(p)
    assert set(ei.value.missing) == {"lon", "lat", "range"}


def test_malformed_rows_are_skipped(tmp_path, fixture_csv, caplog):
    lines = fixture_csv.read_text().splitlines()
    lines.insert(2, "LTE,272,1,x,notanumber,0,,,,,,,,")
    p = tmp_path / "m.csv"
    p.write_text("\n".join(lines) + "\n")
    with caplog.at_level(logging.WARNING):
        rep = ingest_report(p)
    assert rep.malformed == 1 and len(rep.cells) == 13
    assert "malformed" in caplog.text


def test_headerless_dump(tmp_path, fixture_csv):
    lines = fixture_csv.read_text().splitlines()[1:]
    p = tmp_path / "raw.csv"
    p.write_text("\n".join(lines) + "\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert len(ingest_opencellid(p)) == 13


def test_write_positions(tmp_path, fixture_csv):
    cells = ingest_opencellid(fixture_csv)
    write_positions(cells, tmp_path / "pos.csv")
    rows = (tmp_path / "pos.csv").read_text().splitlines()
    assert rows[0] == "id,x,y,radius" and len(rows) == 14


def test_event_log_references_point_backwards():
    r = run_control_loop(es_mro_scenario())
    by_id = {e["id"]: e for e in r.events}
    for e in r.of_type("classification"):
        assert by_id[e["trigger"]]["type"] == "trigger" and e["trigger"] < e["id"]
    for e in r.of_type("mitigation"):
        assert by_id[e["classification"]]["type"] == "classification" and e["classification"] < e["id"]


def test_rule_cdc_matches_engine_on_every_trigger():
    from ricconflict.rules import annotate

    sc = es_mro_scenario()
    r = run_control_loop(sc)
    cls = r.of_type("classification")[0]
    rec = SnapshotRecord(110, ES, TXP, np.zeros(6), np.zeros(6), np.zeros(6), (THR,))
    assert cls["label"] == annotate(rec, sc.model.mappings).label.display


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-150, 150), min_size=6, max_size=6), st.sampled_from([0, 1, 2, 3, 4, 5]))
def test_property_mitigation_never_lowers_margin(values, icp):
    sc = es_mro_scenario()
    if not sc.response.kpis_driven_by(icp).size:
        return
    v = np.asarray(values, dtype=float)
    mit = cmc_mitigate(0, AnnotationResult(ConflictLabel.DIRECT), icp, v, sc.response)
    assert mit.margin_after >= mit.margin_before
