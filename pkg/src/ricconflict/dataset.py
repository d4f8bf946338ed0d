"""Columnar container for simulated rows plus CSV / sidecar I/O."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from .domain import ConflictLabel, SnapshotRecord, SystemModel

META_SUFFIX = ".meta.json"


def meta_path_for(csv_path: str | Path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + META_SUFFIX)


def _join(idx) -> str:
    return ";".join(str(int(i)) for i in idx)


def _split(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(s) for s in text.split(";"))


@dataclass
class Dataset:
    """A run of the generator, one row per time step.

    ``rcp_xapp``/``rcp_icp`` use ``-1`` for an empty RCP.  ``sla`` may be a
    broadcast view when thresholds are fixed for the whole run.
    """

    model: SystemModel
    t: np.ndarray
    rcp_xapp: np.ndarray
    rcp_icp: np.ndarray
    icp_values: np.ndarray
    kpi_values: np.ndarray
    sla: np.ndarray
    vk: np.ndarray
    labels: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def record(self, i: int) -> SnapshotRecord:
        xi = int(self.rcp_xapp[i])
        pc = int(self.rcp_icp[i])
        return SnapshotRecord(
            t=int(self.t[i]),
            rcp_xapp=None if xi < 0 else xi,
            rcp_icp=None if pc < 0 else pc,
            icp_values=np.array(self.icp_values[i]),
            kpi_values=np.array(self.kpi_values[i]),
            sla=np.array(self.sla[i]),
            vk=tuple(int(k) for k in np.flatnonzero(self.vk[i])),
            label=ConflictLabel(int(self.labels[i])),
        )

    def __iter__(self) -> Iterator[SnapshotRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            model=self.model,
            t=self.t[idx],
            rcp_xapp=self.rcp_xapp[idx],
            rcp_icp=self.rcp_icp[idx],
            icp_values=self.icp_values[idx],
            kpi_values=self.kpi_values[idx],
            sla=np.asarray(self.sla)[idx],
            vk=self.vk[idx],
            labels=self.labels[idx],
            meta=dict(self.meta),
        )

    def class_counts(self) -> dict[str, int]:
        c = np.bincount(self.labels.astype(np.int64), minlength=4)
        return {lab.display: int(c[lab]) for lab in ConflictLabel}

    @property
    def conflict_ratio(self) -> float:
        return float(np.count_nonzero(self.labels)) / max(1, len(self))

    def conflict_mix(self) -> dict[str, float]:
        """Direct/Indirect/Implicit shares among conflict rows."""
        c = self.class_counts()
        tot = sum(v for k, v in c.items() if k != ConflictLabel.NO_CONFLICT.display)
        return {
            lab.display: (c[lab.display] / tot if tot else 0.0)
            for lab in ConflictLabel
            if lab is not ConflictLabel.NO_CONFLICT
        }

    # -- CSV ---------------------------------------------------------------

    def header(self) -> list[str]:
        return self.header_for(self.model)

    def to_csv(self, path: str | Path, **extra_meta: Any) -> Path:
        """Write the rows plus a sidecar ``<stem>.meta.json``; returns the sidecar path."""
        path = Path(path)
        mp = self.model.mappings
        fmt = repr
        sla = np.asarray(self.sla)
        prev_state: tuple[int, str] | None = None
        prev_sla: tuple[int, str] | None = None
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(self.header()) + "\n")
            for i in range(len(self)):
                # rows between updates repeat the state; reuse its rendering
                if prev_state is None or not (
                    np.array_equal(self.icp_values[i], self.icp_values[prev_state[0]])
                    and np.array_equal(self.kpi_values[i], self.kpi_values[prev_state[0]])
                ):
                    state = ",".join(fmt(float(v)) for v in self.icp_values[i]) + "," + ",".join(
                        fmt(float(v)) for v in self.kpi_values[i]
                    )
                    prev_state = (i, state)
                if prev_sla is None or not np.array_equal(sla[i], sla[prev_sla[0]]):
                    prev_sla = (i, ",".join(fmt(float(v)) for v in sla[i]))
                xi = int(self.rcp_xapp[i])
                pc = int(self.rcp_icp[i])
                vk = np.flatnonzero(self.vk[i])
                pk: set[int] = set()
                xk: set[int] = set()
                for k in vk:
                    pk.update(mp.p2k.get(int(k), ()))
                    xk.update(mp.k2x.get(int(k), ()))
                xp = mp.p2x.get(pc, ()) if pc >= 0 else ()
                fh.write(
                    f"{int(self.t[i])},{'' if xi < 0 else xi},{'' if pc < 0 else pc},"
                    f"{prev_state[1]},{prev_sla[1]},{_join(vk)},{_join(sorted(pk))},"
                    f"{_join(sorted(xk))},{_join(xp)},{ConflictLabel(int(self.labels[i])).display}\n"
                )
        meta = {**self.model.to_dict(), **self.meta, **extra_meta}
        mpath = meta_path_for(path)
        mpath.write_text(json.dumps(meta, indent=1), encoding="utf-8")
        return mpath

    @classmethod
    def from_csv(cls, path: str | Path, model: SystemModel | None = None) -> "Dataset":
        path = Path(path)
        meta: dict[str, Any] = {}
        mpath = meta_path_for(path)
        if mpath.exists():
            meta = json.loads(mpath.read_text(encoding="utf-8"))
        if model is None:
            if not meta:
                raise FileNotFoundError(f"no sidecar metadata at {mpath}")
            model = SystemModel.from_dict(meta)
        P, K = model.p_count, model.k_count
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValueError(f"{path}: empty file")
            expected = cls.header_for(model)
            if header != expected:
                missing = sorted(set(expected) - set(header))
                raise ValueError(f"{path}: header mismatch; missing columns {missing}")
            rows = list(reader)
        n = len(rows)
        t = np.empty(n, dtype=np.int64)
        xi = np.full(n, -1, dtype=np.int64)
        pc = np.full(n, -1, dtype=np.int64)
        nums = np.empty((n, P + 2 * K), dtype=np.float64)
        vk = np.zeros((n, K), dtype=np.bool_)
        labels = np.empty(n, dtype=np.int8)
        stop = 3 + P + 2 * K
        for i, r in enumerate(rows):
            t[i] = int(r[0])
            if r[1]:
                xi[i] = int(r[1])
            if r[2]:
                pc[i] = int(r[2])
            nums[i] = [float(v) for v in r[3:stop]]
            for k in _split(r[stop]):
                vk[i, k] = True
            labels[i] = int(ConflictLabel.parse(r[-1]))
        file_meta = {k: v for k, v in meta.items() if k not in model.to_dict()}
        return cls(
            model=model,
            t=t,
            rcp_xapp=xi,
            rcp_icp=pc,
            icp_values=nums[:, :P],
            kpi_values=nums[:, P : P + K],
            sla=nums[:, P + K :],
            vk=vk,
            labels=labels,
            meta=file_meta,
        )

    @staticmethod
    def header_for(model: SystemModel) -> list[str]:
        P, K = model.p_count, model.k_count
        return (
            ["t", "rcp_xapp", "rcp_icp"]
            + [f"p_{i}" for i in range(P)]
            + [f"k_{j}" for j in range(K)]
            + [f"sla_{j}" for j in range(K)]
            + ["vk", "p_k", "x_k", "x_p", "label"]
        )
