"""Hand-built two-xApp system and hand-traced rule-engine cases.

Indices (0-based): xApps x1=0, x2=1; ICPs p1=0, p2=1, p3=2, p4=3; KPIs k1=0, k2=1.

* x1 owns p1 and p3 and manages k1; x2 owns p2 and p3 and manages k2.
* p3 is shared and sits in both KPI groups.
* p1 is injected into k2's group and p2 into k1's group.
* p4 has no owner (its hidden coupling is to k2).
"""

import numpy as np

from ricconflict.domain import ConflictLabel, MappingTables, SnapshotRecord, SystemModel

X1, X2 = 0, 1
P1, P2, P3, P4 = 0, 1, 2, 3
K1, K2 = 0, 1

NO = ConflictLabel.NO_CONFLICT
DIRECT = ConflictLabel.DIRECT
INDIRECT = ConflictLabel.INDIRECT
IMPLICIT = ConflictLabel.IMPLICIT


def micro_model() -> SystemModel:
    mappings = MappingTables(
        p2x={P1: (X1,), P2: (X2,), P3: (X1, X2)},
        p2k={K1: (P1, P3, P2), K2: (P2, P3, P1)},
        k2x={K1: (X1,), K2: (X2,)},
        unassigned=(P4,),
    )
    return SystemModel(
        m=2,
        p_count=4,
        k_count=2,
        mappings=mappings,
        exclusive_icp={X1: P1, X2: P2},
        exclusive_kpi={X1: K1, X2: K2},
        hidden_links={P4: (K2,)},
    )


# (name, instructing xApp, changed ICP, violated KPIs, expected label, reason)
CASES = [
    ("shared-p3-by-x1-hits-k2", X1, P3, (K2,), DIRECT, "p3 in P_k2, X_p3 & X_k2 = {x2}"),
    ("shared-p3-by-x2-hits-k1", X2, P3, (K1,), DIRECT, "p3 in P_k1, X_p3 & X_k1 = {x1}"),
    ("shared-p3-both-kpis", X1, P3, (K1, K2), DIRECT, "k1 is x1's own KPI, k2 is Direct"),
    ("injected-p1-hits-k2", X1, P1, (K2,), INDIRECT, "p1 in P_k2, X_p1 = {x1}, X_k2 = {x2}"),
    ("injected-p2-hits-k1", X2, P2, (K1,), INDIRECT, "p2 in P_k1, X_p2 = {x2}, X_k1 = {x1}"),
    ("injected-p1-both-kpis", X1, P1, (K1, K2), INDIRECT, "k1 own KPI, k2 Indirect"),
    ("unowned-p4-by-x1-hits-k2", X1, P4, (K2,), IMPLICIT, "p4 unassigned, not in P_k2"),
    ("unowned-p4-by-x2-hits-k1", X2, P4, (K1,), IMPLICIT, "p4 unassigned, not in P_k1"),
    ("unowned-p4-both-kpis", X1, P4, (K1, K2), IMPLICIT, "k1 own KPI, k2 Implicit"),
    ("own-p1-own-k1", X1, P1, (K1,), NO, "x1 is the only manager of k1"),
    ("no-violation", X1, P3, (), NO, "empty V"),
    ("own-p2-own-k2", X2, P2, (K2,), NO, "x2 is the only manager of k2"),
]


def case_record(xi, pc, vk, t: int = 1) -> SnapshotRecord:
    return SnapshotRecord(
        t=t,
        rcp_xapp=xi,
        rcp_icp=pc,
        icp_values=np.zeros(4),
        kpi_values=np.ones(2),
        sla=np.full(2, 0.7),
        vk=tuple(vk),
    )
