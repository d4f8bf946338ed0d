"""Rule-based conflict annotation.

``annotate`` is the row-at-a-time classifier used by the detection
controller and as the ground-truth oracle.  ``annotate_arrays`` applies the
same decision procedure to a whole columnar dataset and is what the
generator uses to label rows; the two are checked against each other in the
test-suite.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._accel import dispatch, njit
from .domain import ConflictLabel, MappingTables, SnapshotRecord, SystemModel

_NO = ConflictLabel.NO_CONFLICT
_DIRECT = ConflictLabel.DIRECT
_INDIRECT = ConflictLabel.INDIRECT
_IMPLICIT = ConflictLabel.IMPLICIT


class UnknownIdentifierError(KeyError):
    """A record references an xApp, ICP or KPI missing from the mappings."""

    def __init__(self, kind: str, index):
        self.kind = kind
        self.index = index
        super().__init__(f"unknown {kind} identifier {index!r}")


class AnnotationError(ValueError):
    def __init__(self, row: int, cause: Exception):
        self.row = row
        self.cause = cause
        super().__init__(f"row {row}: {cause}")


@dataclass(frozen=True)
class AnnotationResult:
    label: ConflictLabel
    per_kpi: dict[int, ConflictLabel] = field(default_factory=dict)
    # sizes of (V, X_k summed over V, X_p) touched while deciding
    touched_sets: tuple[int, int, int] = (0, 0, 0)

    @property
    def is_conflict(self) -> bool:
        return self.label is not _NO


def _worst(labels: Iterable[ConflictLabel]) -> ConflictLabel:
    best = _NO
    for lab in labels:
        if lab.severity > best.severity:
            best = lab
    return best


def annotate(record: SnapshotRecord, mappings: MappingTables) -> AnnotationResult:
    vk = record.vk
    xi = record.rcp_xapp
    pc = record.rcp_icp
    if not vk or xi is None or pc is None:
        return AnnotationResult(_NO, {}, (len(vk), 0, 0))

    p2x = mappings.p2x_sets
    p2k = mappings.p2k_sets
    k2x = mappings.k2x_sets
    unassigned = mappings.unassigned_set
    if pc not in p2x and pc not in unassigned:
        raise UnknownIdentifierError("icp", pc)
    if xi not in mappings.known_xapps:
        raise UnknownIdentifierError("xapp", xi)

    x_p = p2x.get(pc, frozenset())
    per_kpi: dict[int, ConflictLabel] = {}
    n_xk = 0
    for k in vk:
        try:
            p_k = p2k[k]
            x_k = k2x[k]
        except KeyError:
            raise UnknownIdentifierError("kpi", k) from None
        n_xk += len(x_k)
        if xi in x_k and len(x_k) == 1:
            per_kpi[k] = _NO
            continue
        if pc in p_k:
            per_kpi[k] = _DIRECT if x_p & x_k else _INDIRECT
        else:
            per_kpi[k] = _IMPLICIT if pc in unassigned else _NO
    return AnnotationResult(_worst(per_kpi.values()), per_kpi, (len(vk), n_xk, len(x_p)))


# -- batch kernels ----------------------------------------------------------

# severity rank -> label code, and label code -> severity rank
_RANK_TO_LABEL = np.array([0, 3, 2, 1], dtype=np.int8)


@njit
def _annotate_arrays_loop(rcp_xapp, rcp_icp, vk, p2x, k2x, p2k, unassigned, k2x_count):
    n, kc = vk.shape
    m = p2x.shape[1]
    out = np.zeros(n, dtype=np.int8)
    for r in range(n):
        xi = rcp_xapp[r]
        pc = rcp_icp[r]
        if xi < 0 or pc < 0:
            continue
        rank = 0
        for k in range(kc):
            if not vk[r, k]:
                continue
            if k2x[k, xi] and k2x_count[k] == 1:
                continue
            if p2k[k, pc]:
                inter = False
                for x in range(m):
                    if p2x[pc, x] and k2x[k, x]:
                        inter = True
                        break
                lab_rank = 3 if inter else 2
            elif unassigned[pc]:
                lab_rank = 1
            else:
                lab_rank = 0
            if lab_rank > rank:
                rank = lab_rank
        # rank 3 Direct(1), 2 Indirect(2), 1 Implicit(3)
        if rank == 3:
            out[r] = 1
        elif rank == 2:
            out[r] = 2
        elif rank == 1:
            out[r] = 3
    return out


def _annotate_arrays_numpy(rcp_xapp, rcp_icp, vk, p2x, k2x, p2k, unassigned, k2x_count, chunk=65536):
    n, kc = vk.shape
    out = np.zeros(n, dtype=np.int8)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        xi = rcp_xapp[lo:hi]
        pc = rcp_icp[lo:hi]
        v = vk[lo:hi]
        live = (xi >= 0) & (pc >= 0) & v.any(axis=1)
        if not live.any():
            continue
        idx = np.flatnonzero(live)
        xi, pc, v = xi[idx], pc[idx], v[idx]
        sole = k2x[:, xi].T & (k2x_count == 1)[None, :]
        in_group = p2k[:, pc].T
        inter = (p2x[pc][:, None, :] & k2x[None, :, :]).any(axis=2)
        rank = np.zeros(v.shape, dtype=np.int8)
        rank[in_group & inter] = 3
        rank[in_group & ~inter] = 2
        rank[~in_group & unassigned[pc][:, None]] = 1
        rank[sole | ~v] = 0
        out[lo + idx] = _RANK_TO_LABEL[rank.max(axis=1)]
    return out


_annotate_arrays = dispatch(_annotate_arrays_loop, _annotate_arrays_numpy)


def annotate_arrays(model: SystemModel, rcp_xapp, rcp_icp, vk) -> np.ndarray:
    """Label every row of a columnar dataset (``-1`` marks an empty RCP)."""
    a = model.arrays
    return _annotate_arrays(
        np.asarray(rcp_xapp, dtype=np.int64),
        np.asarray(rcp_icp, dtype=np.int64),
        np.ascontiguousarray(vk, dtype=np.bool_),
        a.p2x,
        a.k2x,
        a.p2k,
        a.unassigned,
        a.k2x_count,
    )


# -- dataset-level statistics ----------------------------------------------


@dataclass
class ConflictStats:
    counts: dict[str, int]
    rows: int
    total_ns: int

    @property
    def conflicts(self) -> int:
        return self.rows - self.counts.get(_NO.display, 0)

    @property
    def conflict_ratio(self) -> float:
        return self.conflicts / self.rows if self.rows else 0.0

    @property
    def mean_ns(self) -> float:
        return self.total_ns / self.rows if self.rows else 0.0

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "counts": dict(self.counts),
            "conflict_ratio": self.conflict_ratio,
            "total_annotation_ns": self.total_ns,
            "mean_annotation_ns": self.mean_ns,
        }

    def to_json(self, **extra) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=1)

    @classmethod
    def from_labels(cls, labels, total_ns: int = 0) -> "ConflictStats":
        labels = np.asarray(labels, dtype=np.int64)
        counts = np.bincount(labels, minlength=4) if labels.size else np.zeros(4, dtype=np.int64)
        return cls({lab.display: int(counts[lab]) for lab in ConflictLabel}, int(labels.size), total_ns)


def annotate_dataset(records: Iterable[SnapshotRecord], mappings: MappingTables):
    """Annotate records one by one, timing only the classification calls."""
    labels: list[int] = []
    total = 0
    clock = time.perf_counter_ns
    for i, rec in enumerate(records):
        t0 = clock()
        try:
            res = annotate(rec, mappings)
        except (UnknownIdentifierError, KeyError, TypeError) as exc:
            raise AnnotationError(i, exc) from exc
        total += clock() - t0
        labels.append(int(res.label))
    out = np.asarray(labels, dtype=np.int8)
    return out, ConflictStats.from_labels(out, total)
