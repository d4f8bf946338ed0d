"""Conflict detection controller: binary alarm, then classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import ConflictLabel, MappingTables, SnapshotRecord, SystemModel
from ..graph import encode_record
from ..rules import AnnotationResult, annotate
from .monitor import CmsState, RcpEntry


@dataclass
class Detection:
    alarm: bool
    result: AnnotationResult
    record: SnapshotRecord | None
    rcp: RcpEntry | None
    conflicting_xapps: tuple[int, ...] = ()
    note: str = ""

    @property
    def label(self) -> ConflictLabel:
        return self.result.label


def _record(t: int, rcp: RcpEntry | None, vk, icp_values, kpi_values, sla) -> SnapshotRecord:
    return SnapshotRecord(
        t=int(t),
        rcp_xapp=None if rcp is None else int(rcp.source),
        rcp_icp=None if rcp is None else int(rcp.icp),
        icp_values=np.asarray(icp_values, dtype=np.float64),
        kpi_values=np.asarray(kpi_values, dtype=np.float64),
        sla=np.asarray(sla, dtype=np.float64),
        vk=tuple(sorted(int(k) for k in vk)),
    )


def classify_record(record: SnapshotRecord, model: SystemModel, classifier="rule") -> AnnotationResult:
    if isinstance(classifier, str):
        if classifier != "rule":
            raise ValueError(f"unknown classifier {classifier!r}")
        return annotate(record, model.mappings)
    from ..learn.model import predict

    g = encode_record(record, model.mappings, model.p_count)
    label = ConflictLabel(int(predict(classifier, g)[0]))
    return AnnotationResult(label, {}, (len(record.vk), 0, 0))


def conflicting_xapps(rec: SnapshotRecord, mappings: MappingTables) -> tuple[int, ...]:
    if rec.rcp_xapp is None or rec.rcp_icp is None:
        return ()
    xs = {rec.rcp_xapp} | set(mappings.p2x.get(rec.rcp_icp, ()))
    for k in rec.vk:
        xs |= set(mappings.k2x.get(k, ()))
    return tuple(sorted(xs))


def cdc_classify(t: int, state: CmsState, model: SystemModel, icp_values, kpi_values, sla) -> Detection:
    """Stage 1 raises an alarm when persistent violations coexist with a
    logged xApp change; stage 2 classifies the latest change against the
    violations currently held in ``vk_store``."""
    rcp = state.latest_xapp_change()
    vk = tuple(sorted(state.vk_store))
    rec = _record(t, rcp, vk, icp_values, kpi_values, sla)
    if not vk:
        return Detection(False, AnnotationResult(ConflictLabel.NO_CONFLICT), rec, rcp, note="no persistent violation")
    if rcp is None:
        return Detection(
            True,
            AnnotationResult(ConflictLabel.NO_CONFLICT, {}, (len(vk), 0, 0)),
            rec,
            None,
            note="alarm without a logged parameter change",
        )
    res = classify_record(rec, model, state.classifier)
    return Detection(True, res, rec, rcp, conflicting_xapps(rec, model.mappings))
