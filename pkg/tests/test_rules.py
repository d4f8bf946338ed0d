import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from micro import CASES, DIRECT, IMPLICIT, INDIRECT, K1, K2, NO, P1, P3, P4, X1, X2, case_record

from ricconflict.domain import ConflictLabel
from ricconflict.rules import (
    AnnotationError,
    UnknownIdentifierError,
    annotate,
    annotate_arrays,
    annotate_dataset,
)


def test_micro_suite_covers_every_label():
    per = {lab: sum(c[4] is lab for c in CASES) for lab in ConflictLabel}
    assert len(CASES) == 12
    assert all(n >= 3 for n in per.values()), per


@pytest.mark.parametrize("name,xi,pc,vk,expected,why", CASES, ids=[c[0] for c in CASES])
def test_hand_traced_case(micro, name, xi, pc, vk, expected, why):
    assert annotate(case_record(xi, pc, vk), micro.mappings).label is expected, why


@pytest.mark.parametrize("name,xi,pc,vk,expected,why", CASES, ids=[c[0] for c in CASES])
def test_batch_kernel_agrees_on_case(micro, name, xi, pc, vk, expected, why):
    v = np.zeros((1, 2), dtype=bool)
    v[0, list(vk)] = True
    assert annotate_arrays(micro, [xi], [pc], v)[0] == expected


def test_per_kpi_labels(micro):
    res = annotate(case_record(X1, P3, (K1, K2)), micro.mappings)
    assert res.per_kpi == {K1: NO, K2: DIRECT}
    assert res.touched_sets == (2, 2, 2)


def test_worst_label_wins(micro):
    # same change, widening V only ever raises severity
    lone = annotate(case_record(X1, P1, (K1,)), micro.mappings).label
    both = annotate(case_record(X1, P1, (K1, K2)), micro.mappings).label
    assert lone is NO and both is INDIRECT


def test_non_owner_instruction_on_managed_group(micro):
    # x2 writes x1's parameter and breaks k1: owners of p1 manage k1
    assert annotate(case_record(X2, P1, (K1,)), micro.mappings).label is DIRECT


def test_idle_row_is_no_conflict(micro):
    rec = case_record(None, None, (K1, K2))
    assert rec.is_idle
    assert annotate(rec, micro.mappings).label is NO


def test_unassigned_on_own_kpi_is_no_conflict(micro):
    assert annotate(case_record(X2, P4, (K2,)), micro.mappings).label is NO


@pytest.mark.parametrize("xi,pc,vk,kind", [(X1, 9, (K1,), "icp"), (7, P1, (K1,), "xapp"), (X1, P1, (5,), "kpi")])
def test_unknown_identifiers(micro, xi, pc, vk, kind):
    with pytest.raises(UnknownIdentifierError) as ei:
        annotate(case_record(xi, pc, vk), micro.mappings)
    assert ei.value.kind == kind


def test_annotate_dataset_wraps_errors_with_row(micro):
    recs = [case_record(X1, P3, (K2,)), case_record(X1, 9, (K1,))]
    with pytest.raises(AnnotationError) as ei:
        annotate_dataset(recs, micro.mappings)
    assert ei.value.row == 1


def test_annotate_dataset_stats(micro):
    recs = [case_record(*c[1:4]) for c in CASES]
    labels, stats = annotate_dataset(recs, micro.mappings)
    assert labels.tolist() == [int(c[4]) for c in CASES]
    assert stats.rows == 12 and stats.conflicts == 9
    assert stats.counts["Implicit"] == 3
    assert stats.total_ns >= 0


def test_reannotation_matches_stored_labels(small_ds):
    labels, _ = annotate_dataset(small_ds, small_ds.model.mappings)
    assert np.array_equal(labels, small_ds.labels)
    assert np.array_equal(annotate_arrays(small_ds.model, small_ds.rcp_xapp, small_ds.rcp_icp, small_ds.vk), small_ds.labels)


rows = st.tuples(
    st.sampled_from([X1, X2]),
    st.sampled_from([0, 1, 2, 3]),
    st.lists(st.sampled_from([K1, K2]), unique=True, max_size=2),
)


@settings(max_examples=200, deadline=None)
@given(rows)
def test_property_row_engine_equals_batch_kernel(row):
    from micro import micro_model

    model = micro_model()
    xi, pc, vk = row
    v = np.zeros((1, 2), dtype=bool)
    v[0, list(vk)] = True
    assert annotate(case_record(xi, pc, vk), model.mappings).label == annotate_arrays(model, [xi], [pc], v)[0]


@settings(max_examples=200, deadline=None)
@given(rows)
def test_property_label_is_max_over_single_kpis(row):
    from micro import micro_model

    mp = micro_model().mappings
    xi, pc, vk = row
    whole = annotate(case_record(xi, pc, vk), mp).label
    parts = [annotate(case_record(xi, pc, (k,)), mp).label for k in vk]
    assert whole.severity == max([p.severity for p in parts], default=0)
    assert (whole is IMPLICIT) <= (pc == P4)
    assert (whole in (DIRECT, INDIRECT)) <= (pc in (P1, 1, P3))


def test_sole_manager_exit_precedes_indirect(micro):
    # p1 sits in k2's group and x1 does not manage k2, but x2 alone does,
    # so a change by x2 that breaks k2 is its own business
    assert annotate(case_record(X1, P1, (K2,)), micro.mappings).label is INDIRECT
    assert annotate(case_record(X2, P1, (K2,)), micro.mappings).label is NO
