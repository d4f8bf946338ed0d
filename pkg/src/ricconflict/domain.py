"""Identifiers, mapping tables and the system model shared by every module.

xApps, ICPs and KPIs are plain dense integer indices.  Display names
(``x3``, ``p7``, ``k2``) are derived from the index and never take part in
any decision.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, NamedTuple

import numpy as np


def xapp_name(i: int) -> str:
    return f"x{i}"


def icp_name(i: int) -> str:
    return f"p{i}"


def kpi_name(i: int) -> str:
    return f"k{i}"


def genc_icp_count(m: int) -> int:
    return 2 * m + m // 2


def genc_kpi_count(m: int) -> int:
    return genc_icp_count(m) // 2


class ConflictLabel(enum.IntEnum):
    NO_CONFLICT = 0
    DIRECT = 1
    INDIRECT = 2
    IMPLICIT = 3

    @property
    def severity(self) -> int:
        return _SEVERITY[self]

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, text: str) -> "ConflictLabel":
        key = text.strip().replace(" ", "").replace("_", "").lower()
        for label, name in _DISPLAY.items():
            if name.lower() == key:
                return label
        raise ValueError(f"unknown conflict label {text!r}")


# Direct > Indirect > Implicit > NoConflict when several KPIs disagree.
_SEVERITY = {
    ConflictLabel.NO_CONFLICT: 0,
    ConflictLabel.IMPLICIT: 1,
    ConflictLabel.INDIRECT: 2,
    ConflictLabel.DIRECT: 3,
}
_DISPLAY = {
    ConflictLabel.NO_CONFLICT: "NoConflict",
    ConflictLabel.DIRECT: "Direct",
    ConflictLabel.INDIRECT: "Indirect",
    ConflictLabel.IMPLICIT: "Implicit",
}
LABELS = tuple(ConflictLabel)
N_CLASSES = len(LABELS)


def _sorted_map(d: Mapping[Any, Any]) -> dict[int, tuple[int, ...]]:
    return {int(k): tuple(sorted({int(v) for v in vals})) for k, vals in sorted(d.items(), key=lambda kv: int(kv[0]))}


@dataclass(frozen=True)
class MappingTables:
    """P2X, P2K, K2X and the unassigned-ICP set."""

    p2x: dict[int, tuple[int, ...]]
    p2k: dict[int, tuple[int, ...]]
    k2x: dict[int, tuple[int, ...]]
    unassigned: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "p2x", _sorted_map(self.p2x))
        object.__setattr__(self, "p2k", _sorted_map(self.p2k))
        object.__setattr__(self, "k2x", _sorted_map(self.k2x))
        object.__setattr__(self, "unassigned", tuple(sorted({int(u) for u in self.unassigned})))

    # hashed views used by the rule engine
    @cached_property
    def p2x_sets(self) -> dict[int, frozenset[int]]:
        return {k: frozenset(v) for k, v in self.p2x.items()}

    @cached_property
    def p2k_sets(self) -> dict[int, frozenset[int]]:
        return {k: frozenset(v) for k, v in self.p2k.items()}

    @cached_property
    def k2x_sets(self) -> dict[int, frozenset[int]]:
        return {k: frozenset(v) for k, v in self.k2x.items()}

    @cached_property
    def unassigned_set(self) -> frozenset[int]:
        return frozenset(self.unassigned)

    @cached_property
    def known_xapps(self) -> frozenset[int]:
        xs: set[int] = set()
        for owners in self.p2x.values():
            xs.update(owners)
        for managers in self.k2x.values():
            xs.update(managers)
        return frozenset(xs)

    def kpis_affected_by(self, icp: int) -> tuple[int, ...]:
        return tuple(k for k, group in self.p2k.items() if icp in group)

    def indirect_icps(self) -> tuple[int, ...]:
        """ICPs sitting in the group of a KPI none of their owners manages."""
        out = set()
        for k, group in self.p2k.items():
            managers = self.k2x_sets.get(k, frozenset())
            for p in group:
                owners = self.p2x_sets.get(p)
                if owners and not (owners & managers):
                    out.add(p)
        return tuple(sorted(out))

    def shared_icps(self) -> tuple[int, ...]:
        return tuple(p for p, owners in self.p2x.items() if len(owners) >= 2)


@dataclass(frozen=True)
class SnapshotRecord:
    """One simulated (or observed) control step."""

    t: int
    rcp_xapp: int | None
    rcp_icp: int | None
    icp_values: np.ndarray
    kpi_values: np.ndarray
    sla: np.ndarray
    vk: tuple[int, ...]
    label: ConflictLabel = ConflictLabel.NO_CONFLICT

    @property
    def is_idle(self) -> bool:
        return self.rcp_xapp is None or self.rcp_icp is None


class MappingArrays(NamedTuple):
    """Dense boolean views of the mapping tables for the compiled kernels."""

    p2x: np.ndarray  # (P, M)
    k2x: np.ndarray  # (K, M)
    p2k: np.ndarray  # (K, P)
    unassigned: np.ndarray  # (P,)
    hidden: np.ndarray  # (P, K) latent ICP -> KPI couplings of unassigned ICPs
    k2x_count: np.ndarray  # (K,)


@dataclass(frozen=True)
class SystemModel:
    m: int
    p_count: int
    k_count: int
    mappings: MappingTables
    exclusive_icp: dict[int, int]
    exclusive_kpi: dict[int, int]
    # Latent couplings: which KPIs an unassigned ICP degrades (implicit conflicts).
    hidden_links: dict[int, tuple[int, ...]] = field(default_factory=dict)
    xapp_names: tuple[str, ...] | None = None
    icp_names: tuple[str, ...] | None = None
    kpi_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "exclusive_icp", {int(k): int(v) for k, v in sorted(self.exclusive_icp.items())})
        object.__setattr__(self, "exclusive_kpi", {int(k): int(v) for k, v in sorted(self.exclusive_kpi.items())})
        object.__setattr__(self, "hidden_links", _sorted_map(self.hidden_links))
        for attr in ("xapp_names", "icp_names", "kpi_names"):
            val = getattr(self, attr)
            if val is not None:
                object.__setattr__(self, attr, tuple(val))

    def xapp_label(self, i: int) -> str:
        return self.xapp_names[i] if self.xapp_names else xapp_name(i)

    def icp_label(self, i: int) -> str:
        return self.icp_names[i] if self.icp_names else icp_name(i)

    def kpi_label(self, i: int) -> str:
        return self.kpi_names[i] if self.kpi_names else kpi_name(i)

    def affected_kpis(self, icp: int) -> tuple[int, ...]:
        """KPIs recomputed when ``icp`` moves: its groups plus latent links."""
        ks = set(self.mappings.kpis_affected_by(icp))
        ks.update(self.hidden_links.get(icp, ()))
        return tuple(sorted(ks))

    @cached_property
    def arrays(self) -> MappingArrays:
        mp = self.mappings
        p2x = np.zeros((self.p_count, self.m), dtype=np.bool_)
        for p, owners in mp.p2x.items():
            p2x[p, list(owners)] = True
        k2x = np.zeros((self.k_count, self.m), dtype=np.bool_)
        for k, managers in mp.k2x.items():
            k2x[k, list(managers)] = True
        p2k = np.zeros((self.k_count, self.p_count), dtype=np.bool_)
        for k, group in mp.p2k.items():
            p2k[k, list(group)] = True
        unassigned = np.zeros(self.p_count, dtype=np.bool_)
        unassigned[list(mp.unassigned)] = True
        hidden = np.zeros((self.p_count, self.k_count), dtype=np.bool_)
        for p, ks in self.hidden_links.items():
            hidden[p, list(ks)] = True
        return MappingArrays(p2x, k2x, p2k, unassigned, hidden, k2x.sum(axis=1).astype(np.int64))

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        mp = self.mappings
        d: dict[str, Any] = {
            "m": self.m,
            "p_count": self.p_count,
            "k_count": self.k_count,
            "p2x": {str(k): list(v) for k, v in mp.p2x.items()},
            "p2k": {str(k): list(v) for k, v in mp.p2k.items()},
            "k2x": {str(k): list(v) for k, v in mp.k2x.items()},
            "unassigned": list(mp.unassigned),
            "exclusive_icp": {str(k): v for k, v in self.exclusive_icp.items()},
            "exclusive_kpi": {str(k): v for k, v in self.exclusive_kpi.items()},
            "hidden_links": {str(k): list(v) for k, v in self.hidden_links.items()},
        }
        for attr in ("xapp_names", "icp_names", "kpi_names"):
            if getattr(self, attr) is not None:
                d[attr] = list(getattr(self, attr))
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SystemModel":
        mappings = MappingTables(
            p2x={int(k): v for k, v in d["p2x"].items()},
            p2k={int(k): v for k, v in d["p2k"].items()},
            k2x={int(k): v for k, v in d["k2x"].items()},
            unassigned=d["unassigned"],
        )
        return cls(
            m=int(d["m"]),
            p_count=int(d["p_count"]),
            k_count=int(d["k_count"]),
            mappings=mappings,
            exclusive_icp={int(k): int(v) for k, v in d["exclusive_icp"].items()},
            exclusive_kpi={int(k): int(v) for k, v in d["exclusive_kpi"].items()},
            hidden_links={int(k): v for k, v in d.get("hidden_links", {}).items()},
            xapp_names=d.get("xapp_names"),
            icp_names=d.get("icp_names"),
            kpi_names=d.get("kpi_names"),
        )

    def dumps(self, **extra: Any) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=1, sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "SystemModel":
        return cls.from_dict(json.loads(text))


def validate_model(model: SystemModel, check_sizes: bool = True) -> list[str]:
    """Return every broken structural invariant; an empty list means valid.

    Each violation string starts with a rule tag (``unassigned-nonempty``,
    ``icp-disjoint`` ...).  ``check_sizes`` enforces the generator's ICP/KPI
    count rule and is switched off for hand-built scenarios.
    """
    out: list[str] = []
    mp = model.mappings
    m, P, K = model.m, model.p_count, model.k_count

    if check_sizes:
        if P != genc_icp_count(m):
            out.append(f"sizes: p_count={P} but 2m+floor(m/2)={genc_icp_count(m)}")
        if K != P // 2:
            out.append(f"sizes: k_count={K} but floor(p_count/2)={P // 2}")

    def bad_x(x):
        return not 0 <= x < m

    def bad_p(p):
        return not 0 <= p < P

    def bad_k(k):
        return not 0 <= k < K

    for p, owners in mp.p2x.items():
        if bad_p(p) or any(bad_x(x) for x in owners):
            out.append(f"index-range: p2x entry {p}->{owners} out of range")
    for k, group in mp.p2k.items():
        if bad_k(k) or any(bad_p(p) for p in group):
            out.append(f"index-range: p2k entry {k}->{group} out of range")
    for k, managers in mp.k2x.items():
        if bad_k(k) or any(bad_x(x) for x in managers):
            out.append(f"index-range: k2x entry {k}->{managers} out of range")
    if any(bad_p(p) for p in mp.unassigned):
        out.append("index-range: unassigned ICP out of range")

    owned = {p for p, owners in mp.p2x.items() if owners}
    both = owned & set(mp.unassigned)
    if both:
        out.append(f"icp-disjoint: ICPs {sorted(both)} are both owned and unassigned")
    for p in range(P):
        if p in both:
            continue
        owners = mp.p2x.get(p, ())
        if p in mp.unassigned:
            continue
        if not 1 <= len(owners) <= 2:
            out.append(f"icp-ownership: ICP {p} has {len(owners)} owners (need 1-2 or unassigned)")
    if not mp.unassigned:
        out.append("unassigned-nonempty: at least one ICP must stay unassigned")

    for k in range(K):
        managers = mp.k2x.get(k, ())
        if not 1 <= len(managers) <= 2:
            out.append(f"kpi-managers: KPI {k} has {len(managers)} managers (need 1-2)")
        if not mp.p2k.get(k):
            out.append(f"kpi-group: KPI {k} has an empty parameter group")

    xs = sorted(model.exclusive_icp)
    if xs != list(range(m)) or sorted(model.exclusive_kpi) != list(range(m)):
        out.append("exclusive-injective: every xApp needs one exclusive ICP and KPI")
    if len(set(model.exclusive_icp.values())) != len(model.exclusive_icp):
        out.append("exclusive-injective: exclusive ICPs are not distinct")
    if len(set(model.exclusive_kpi.values())) != len(model.exclusive_kpi):
        out.append("exclusive-injective: exclusive KPIs are not distinct")
    for x, p in model.exclusive_icp.items():
        if mp.p2x.get(p) != (x,):
            out.append(f"exclusive-owner: exclusive ICP {p} of xApp {x} is not owned by it alone")
    for x, k in model.exclusive_kpi.items():
        if mp.k2x.get(k) != (x,):
            out.append(f"exclusive-owner: exclusive KPI {k} of xApp {x} is not managed by it alone")
    for k, managers in mp.k2x.items():
        group = set(mp.p2k.get(k, ()))
        for x in managers:
            e = model.exclusive_icp.get(x)
            if e is not None and e not in group:
                out.append(f"exclusive-in-group: exclusive ICP {e} of manager {x} missing from group of KPI {k}")

    for p, ks in model.hidden_links.items():
        if p not in mp.unassigned:
            out.append(f"hidden-links: ICP {p} has latent links but is not unassigned")
        if any(bad_k(k) for k in ks):
            out.append(f"hidden-links: ICP {p} links to an out-of-range KPI")
    return out
