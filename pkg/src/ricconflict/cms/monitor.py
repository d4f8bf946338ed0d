"""Performance monitor: SLA checks with a persistence window."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

CMS_SOURCE = "CMS"


class RcpEntry(NamedTuple):
    t: int
    source: Any  # xApp index, or CMS_SOURCE for mitigation moves
    icp: int
    old: float
    new: float

    @property
    def by_xapp(self) -> bool:
        return self.source != CMS_SOURCE


@dataclass
class CmsState:
    """Mutable control-loop state.

    ``vk_store`` maps each KPI currently below its threshold to the time its
    breach began.  ``classifier`` is ``"rule"`` or a trained ClassifierModel.
    """

    persistence_required: int = 10
    control_interval: int = 1
    classifier: Any = "rule"
    rcp_log: list[RcpEntry] = field(default_factory=list)
    vk_store: dict[int, int] = field(default_factory=dict)
    # KPIs whose current breach already raised a trigger
    reported: set[int] = field(default_factory=set)

    def log_change(self, t: int, source, icp: int, old: float, new: float) -> RcpEntry:
        if self.rcp_log and t < self.rcp_log[-1].t:
            raise ValueError("rcp_log timestamps must be non-decreasing")
        e = RcpEntry(int(t), source, int(icp), float(old), float(new))
        self.rcp_log.append(e)
        return e

    def latest_xapp_change(self) -> RcpEntry | None:
        for e in reversed(self.rcp_log):
            if e.by_xapp:
                return e
        return None


class PmonResult(NamedTuple):
    new: tuple[int, ...]
    recovered: tuple[int, ...]
    trigger: bool
    persistent: tuple[int, ...]  # KPIs that reached the persistence window this step


def pmon_step(t: int, kpi_values, sla, state: CmsState) -> PmonResult:
    """Update ``state.vk_store`` and decide whether to wake the detector.

    A KPI triggers once its breach has lasted ``persistence_required``
    seconds, i.e. at ``t - start >= persistence_required``; a breach that
    starts at t=100 triggers at t=110.  Each breach triggers at most once.
    """
    k = np.asarray(kpi_values, dtype=np.float64)
    tau = np.asarray(sla, dtype=np.float64)
    if k.shape != tau.shape:
        raise ValueError("kpi_values and sla differ in length")
    below = k < tau
    new = []
    recovered = []
    for j in range(k.shape[0]):
        if below[j] and j not in state.vk_store:
            state.vk_store[j] = int(t)
            new.append(j)
        elif not below[j] and j in state.vk_store:
            del state.vk_store[j]
            state.reported.discard(j)
            recovered.append(j)
    persistent = [
        j
        for j, start in sorted(state.vk_store.items())
        if j not in state.reported and t - start >= state.persistence_required
    ]
    state.reported.update(persistent)
    return PmonResult(tuple(new), tuple(recovered), bool(persistent), tuple(persistent))
