"""Closed control loop: act, observe, monitor, detect, mitigate."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..domain import ConflictLabel
from .detection import cdc_classify
from .mitigation import NothingToMitigateError, cmc_mitigate
from .monitor import CMS_SOURCE, CmsState, pmon_step
from .scenario import Scenario, ScheduledAction


@dataclass
class LoopResult:
    scenario: str
    events: list[dict[str, Any]]
    t: np.ndarray
    kpi: np.ndarray  # (steps, K)
    icp: np.ndarray  # (steps, P)
    thresholds: np.ndarray
    state: CmsState
    kpi_names: tuple[str, ...] = ()
    icp_names: tuple[str, ...] = ()
    config: dict[str, Any] = field(default_factory=dict)

    def of_type(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["type"] == kind]

    def write_events(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for e in self.events:
                fh.write(json.dumps(e) + "\n")

    def write_traces(self, path: str | Path) -> None:
        """CSV with t, KPI values, thresholds, ICP values and that step's event types."""
        per_t: dict[int, list[str]] = {}
        for e in self.events:
            per_t.setdefault(e["t"], []).append(e["type"])
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["t"]
                + list(self.kpi_names)
                + [f"tau_{n}" for n in self.kpi_names]
                + list(self.icp_names)
                + ["events"]
            )
            for i, t in enumerate(self.t):
                w.writerow(
                    [int(t)]
                    + [repr(float(v)) for v in self.kpi[i]]
                    + [repr(float(v)) for v in self.thresholds]
                    + [repr(float(v)) for v in self.icp[i]]
                    + [";".join(per_t.get(int(t), []))]
                )


def run_control_loop(
    scenario: Scenario,
    actions: list[ScheduledAction] | None = None,
    steps: int | None = None,
    classifier="rule",
    deadline_s: float | None = 1.0,
    mitigate: bool = True,
) -> LoopResult:
    """Run the scenario for ``steps`` control intervals.

    Per step: apply scheduled xApp actions, recompute KPIs through the
    surrogate, run the monitor, and on a trigger classify (within
    ``deadline_s`` seconds when set) and mitigate.  A mitigation takes effect
    from the next step's observation.
    """
    steps = scenario.duration if steps is None else int(steps)
    actions = list(scenario.actions if actions is None else actions)
    by_t: dict[int, list[ScheduledAction]] = {}
    for a in sorted(actions, key=lambda a: a.t):
        by_t.setdefault(a.t, []).append(a)

    model = scenario.model
    resp = scenario.response
    state = CmsState(scenario.persistence, scenario.control_interval, classifier)
    icp = np.asarray(scenario.initial_icp, dtype=np.float64).copy()
    K, P = model.k_count, model.p_count
    kpi_tr = np.empty((steps, K))
    icp_tr = np.empty((steps, P))
    events: list[dict[str, Any]] = []
    names_k = scenario.kpi_names
    names_p = scenario.icp_names

    def emit(t, kind, **kw):
        e = {"id": len(events), "t": int(t), "type": kind, **kw}
        events.append(e)
        return e

    pool = ThreadPoolExecutor(max_workers=1) if deadline_s is not None else None
    try:
        for i in range(steps):
            t = i * scenario.control_interval
            for a in by_t.get(t, ()):
                old = float(icp[a.icp])
                icp[a.icp] = a.value
                state.log_change(t, a.xapp, a.icp, old, a.value)
                emit(t, "action", xapp=model.xapp_label(a.xapp), icp=names_p[a.icp], old=old, new=a.value)
            kv = resp.kpis(icp)
            kpi_tr[i] = kv
            icp_tr[i] = icp
            pm = pmon_step(t, kv, resp.thresholds, state)
            for j in pm.new:
                emit(t, "violation", kpi=names_k[j], value=float(kv[j]), threshold=float(resp.thresholds[j]))
            for j in pm.recovered:
                emit(t, "recovery", kpi=names_k[j], value=float(kv[j]), threshold=float(resp.thresholds[j]))
            if not pm.trigger:
                continue
            trig = emit(
                t,
                "trigger",
                kpis=[names_k[j] for j in pm.persistent],
                since={names_k[j]: state.vk_store[j] for j in pm.persistent},
            )
            t0 = time.perf_counter()
            if pool is not None:
                fut = pool.submit(cdc_classify, t, state, model, icp.copy(), kv, resp.thresholds)
                try:
                    det = fut.result(timeout=deadline_s)
                except FutureTimeout:
                    emit(t, "timeout", trigger=trig["id"], deadline_s=deadline_s)
                    continue
            else:
                det = cdc_classify(t, state, model, icp.copy(), kv, resp.thresholds)
            cls = emit(
                t,
                "classification",
                trigger=trig["id"],
                alarm=det.alarm,
                label=det.label.display,
                xapp=None if det.rcp is None else model.xapp_label(det.rcp.source),
                icp=None if det.rcp is None else names_p[det.rcp.icp],
                violated=[names_k[j] for j in det.record.vk] if det.record else [],
                conflicting_xapps=[model.xapp_label(x) for x in det.conflicting_xapps],
                latency_us=(time.perf_counter() - t0) * 1e6,
                note=det.note,
            )
            if not mitigate or det.label is ConflictLabel.NO_CONFLICT or det.rcp is None:
                continue
            try:
                mit = cmc_mitigate(t, det.result, det.rcp.icp, icp, resp, state)
            except NothingToMitigateError as exc:
                emit(t, "mitigation-skipped", classification=cls["id"], reason=str(exc))
                continue
            emit(
                t,
                "mitigation",
                classification=cls["id"],
                icp=names_p[mit.icp],
                old=mit.old,
                new=mit.new,
                source=CMS_SOURCE,
                affected=[names_k[j] for j in mit.affected],
                margin_before=mit.margin_before,
                margin_after=mit.margin_after,
                feasible=mit.feasible,
            )
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    return LoopResult(
        scenario=scenario.name,
        events=events,
        t=np.arange(steps) * scenario.control_interval,
        kpi=kpi_tr,
        icp=icp_tr,
        thresholds=resp.thresholds.copy(),
        state=state,
        kpi_names=names_k,
        icp_names=names_p,
        config={"steps": steps, "deadline_s": deadline_s, "mitigate": mitigate, "scenario": scenario.to_dict()},
    )
