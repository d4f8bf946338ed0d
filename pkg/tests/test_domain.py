import dataclasses

import pytest

from ricconflict.domain import (
    LABELS,
    ConflictLabel,
    MappingTables,
    SystemModel,
    genc_icp_count,
    genc_kpi_count,
    validate_model,
)
from ricconflict.genc import synthesize_entities


def test_label_codes_and_severity_order():
    assert [int(l) for l in LABELS] == [0, 1, 2, 3]
    sev = sorted(LABELS, key=lambda l: l.severity, reverse=True)
    assert sev == [ConflictLabel.DIRECT, ConflictLabel.INDIRECT, ConflictLabel.IMPLICIT, ConflictLabel.NO_CONFLICT]


@pytest.mark.parametrize("lab", list(ConflictLabel))
def test_label_parse_roundtrip(lab):
    assert ConflictLabel.parse(lab.display) is lab
    assert ConflictLabel.parse(lab.display.upper()) is lab


def test_label_parse_rejects_garbage():
    with pytest.raises(ValueError):
        ConflictLabel.parse("sideways")


@pytest.mark.parametrize("m,p,k", [(1, 2, 1), (2, 5, 2), (5, 12, 6), (10, 25, 12), (50, 125, 62)])
def test_entity_counts(m, p, k):
    assert genc_icp_count(m) == p
    assert genc_kpi_count(m) == k


def test_micro_model_is_valid(micro):
    assert validate_model(micro, check_sizes=False) == []
    assert micro.mappings.shared_icps() == (2,)
    assert micro.mappings.indirect_icps() == (0, 1)
    assert micro.mappings.kpis_affected_by(2) == (0, 1)
    assert micro.affected_kpis(3) == (1,)


def test_mapping_tables_normalize_order():
    mp = MappingTables(p2x={1: (3, 0)}, p2k={0: (2, 1)}, k2x={0: (1,)}, unassigned=[4, 4, 2])
    assert mp.p2x[1] == (0, 3)
    assert mp.p2k[0] == (1, 2)
    assert mp.unassigned == (2, 4)


def test_arrays_match_tables(micro):
    a = micro.arrays
    assert a.p2x.shape == (4, 2) and a.k2x.shape == (2, 2) and a.p2k.shape == (2, 4)
    assert a.p2x[2].all() and not a.p2x[3].any()
    assert a.unassigned.tolist() == [False, False, False, True]
    assert a.k2x_count.tolist() == [1, 1]
    assert a.hidden[3].tolist() == [False, True]


def test_json_roundtrip(micro):
    back = SystemModel.loads(micro.dumps())
    assert back == micro


@pytest.mark.parametrize("m", [1, 2, 5, 13])
def test_generated_models_are_valid(m):
    assert validate_model(synthesize_entities(m, seed=m)) == []


def _broken(model, **mp_changes):
    mp = dataclasses.replace(model.mappings, **mp_changes)
    return dataclasses.replace(model, mappings=mp)


def test_validate_flags_owned_and_unassigned(micro):
    bad = _broken(micro, unassigned=(0, 3))
    assert any(e.startswith("icp-disjoint") for e in validate_model(bad, check_sizes=False))


def test_validate_flags_missing_unassigned(micro):
    bad = _broken(micro, unassigned=())
    errs = validate_model(bad, check_sizes=False)
    assert any(e.startswith("unassigned-nonempty") for e in errs)


def test_validate_flags_unmanaged_kpi(micro):
    bad = _broken(micro, k2x={0: (0,)})
    assert any(e.startswith("kpi-managers") for e in validate_model(bad, check_sizes=False))


def test_validate_flags_bad_sizes(micro):
    assert any(e.startswith("sizes") for e in validate_model(micro))
