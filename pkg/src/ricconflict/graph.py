"""Structural graphs and the per-row heterogeneous graph encoding.

A row becomes a small graph whose nodes are the instructing xApp, the
changed parameter, one KPI node and one KPI-parameter-group node per newly
violated KPI, and every xApp that owns the parameter or manages one of those
KPIs.  Node features are ``one-hot kind | flags | scalar``::

    kind     XApp, Parameter, KPI, SharedParameter, KPIParamGroup
    flags    is_unassigned, is_changed, is_violated, is_instructing
    scalar   ICP value / 100, KPI value, or 0

Edges are undirected: xApp-parameter (ownership), KPI-xApp (management),
KPI-group, group-parameter when the parameter belongs to the group, and
parameter-KPI for every violated KPI.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .domain import ConflictLabel, MappingTables, SnapshotRecord, SystemModel
from .rules import UnknownIdentifierError


class NodeKind(enum.IntEnum):
    XAPP = 0
    PARAMETER = 1
    KPI = 2
    SHARED_PARAMETER = 3
    KPI_PARAM_GROUP = 4


N_KINDS = len(NodeKind)
FLAG_UNASSIGNED, FLAG_CHANGED, FLAG_VIOLATED, FLAG_INSTRUCTING = range(N_KINDS, N_KINDS + 4)
SCALAR = N_KINDS + 4
FEATURE_WIDTH = SCALAR + 1
ICP_SCALE = 100.0


@dataclass(frozen=True)
class HeteroGraph:
    kinds: np.ndarray  # (n,) NodeKind codes
    x: np.ndarray  # (n, FEATURE_WIDTH)
    edges: np.ndarray  # (e, 2) undirected, i < j
    target: ConflictLabel | None = None

    @property
    def n_nodes(self) -> int:
        return int(self.kinds.shape[0])

    def permuted(self, perm) -> "HeteroGraph":
        """Same graph with node ``i`` moved to position ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        e = perm[self.edges] if self.edges.size else self.edges
        if e.size:
            e = np.sort(e, axis=1)
        return HeteroGraph(self.kinds[inv], self.x[inv], e.reshape(-1, 2), self.target)

    def to_dot(self, name: str = "row") -> str:
        lines = [f"graph {name} {{"]
        for i, k in enumerate(self.kinds):
            flags = [f for f, c in zip("UCVI", self.x[i, N_KINDS:SCALAR]) if c]
            lines.append(f'  n{i} [label="{NodeKind(int(k)).name} {"".join(flags)}"];')
        for a, b in self.edges:
            lines.append(f"  n{a} -- n{b};")
        lines.append("}")
        return "\n".join(lines)


# -- structural graphs ---------------------------------------------------------


def build_xp_graph(model: SystemModel) -> np.ndarray:
    """Boolean (m, m) adjacency: xApps that share at least one ICP."""
    own = model.arrays.p2x.astype(np.int64)
    adj = (own.T @ own) > 0
    np.fill_diagonal(adj, False)
    return adj


def build_kp_graph(model: SystemModel) -> np.ndarray:
    """Boolean (K, P) biadjacency: ``[k, p]`` iff p belongs to k's group."""
    return model.arrays.p2k.copy()


# -- per-row encoding --------------------------------------------------------------


@dataclass(frozen=True)
class _Template:
    kinds: np.ndarray
    base: np.ndarray  # features with scalar column zero
    edges: np.ndarray
    scalar_src: np.ndarray  # -1 none, p for ICP p, P + k for KPI k


_PLACEHOLDER = _Template(
    kinds=np.array([NodeKind.XAPP], dtype=np.int8),
    base=np.zeros((1, FEATURE_WIDTH)),
    edges=np.zeros((0, 2), dtype=np.int64),
    scalar_src=np.array([-1], dtype=np.int64),
)


def _template(mappings: MappingTables, p_count: int, xi: int | None, pc: int | None, vk) -> _Template:
    if xi is None or pc is None:
        return _PLACEHOLDER
    p2x = mappings.p2x_sets
    unassigned = mappings.unassigned_set
    if pc not in p2x and pc not in unassigned:
        raise UnknownIdentifierError("icp", pc)
    if xi not in mappings.known_xapps:
        raise UnknownIdentifierError("xapp", xi)
    for k in vk:
        if k not in mappings.k2x_sets:
            raise UnknownIdentifierError("kpi", k)

    kinds: list[int] = []
    flags: list[tuple[int, ...]] = []
    src: list[int] = []
    edges: list[tuple[int, int]] = []

    def add(kind, fl, s=-1):
        kinds.append(int(kind))
        flags.append(fl)
        src.append(s)
        return len(kinds) - 1

    owners = p2x.get(pc, frozenset())
    xapp_node = {xi: add(NodeKind.XAPP, (FLAG_INSTRUCTING,))}
    pkind = NodeKind.SHARED_PARAMETER if len(owners) >= 2 else NodeKind.PARAMETER
    pflags = (FLAG_CHANGED, FLAG_UNASSIGNED) if pc in unassigned else (FLAG_CHANGED,)
    p_node = add(pkind, pflags, pc)

    def xnode(x):
        if x not in xapp_node:
            xapp_node[x] = add(NodeKind.XAPP, ())
        return xapp_node[x]

    for x in sorted(owners):
        edges.append((xnode(x), p_node))
    for k in sorted(vk):
        k_node = add(NodeKind.KPI, (FLAG_VIOLATED,), p_count + k)
        g_node = add(NodeKind.KPI_PARAM_GROUP, ())
        edges.append((k_node, g_node))
        edges.append((p_node, k_node))
        if pc in mappings.p2k_sets[k]:
            edges.append((g_node, p_node))
        for x in sorted(mappings.k2x_sets[k]):
            edges.append((xnode(x), k_node))

    n = len(kinds)
    base = np.zeros((n, FEATURE_WIDTH))
    base[np.arange(n), kinds] = 1.0
    for i, fl in enumerate(flags):
        for f in fl:
            base[i, f] = 1.0
    e = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)
    return _Template(np.asarray(kinds, dtype=np.int8), base, e, np.asarray(src, dtype=np.int64))


def _fill(tpl: _Template, scalars: np.ndarray) -> np.ndarray:
    x = tpl.base.copy()
    has = tpl.scalar_src >= 0
    x[has, SCALAR] = scalars[tpl.scalar_src[has]]
    return x


def _scalars(icp_values, kpi_values) -> np.ndarray:
    return np.concatenate([np.asarray(icp_values, dtype=np.float64) / ICP_SCALE, np.asarray(kpi_values, dtype=np.float64)])


def encode_record(record: SnapshotRecord, mappings: MappingTables, p_count: int | None = None) -> HeteroGraph:
    if p_count is None:
        p_count = len(record.icp_values)
    tpl = _template(mappings, p_count, record.rcp_xapp, record.rcp_icp, tuple(record.vk))
    x = _fill(tpl, _scalars(record.icp_values, record.kpi_values))
    return HeteroGraph(tpl.kinds.copy(), x, tpl.edges.copy(), ConflictLabel(record.label))


# -- batches -----------------------------------------------------------------------


@dataclass
class GraphBatch:
    """Many graphs laid out contiguously.

    Node ``i`` belongs to graph ``node_graph[i]``; nodes of graph ``g`` occupy
    ``graph_ptr[g]:graph_ptr[g+1]`` and its edges ``edge_ptr[g]:edge_ptr[g+1]``
    of ``edges`` (global node indices).
    """

    x: np.ndarray
    edges: np.ndarray
    graph_ptr: np.ndarray
    edge_ptr: np.ndarray
    y: np.ndarray

    @property
    def n_graphs(self) -> int:
        return int(self.graph_ptr.shape[0] - 1)

    @property
    def n_nodes(self) -> int:
        return int(self.x.shape[0])

    @property
    def node_graph(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_graphs), np.diff(self.graph_ptr))

    def take(self, idx) -> "GraphBatch":
        idx = np.asarray(idx, dtype=np.int64)
        nc = self.graph_ptr[idx + 1] - self.graph_ptr[idx]
        ec = self.edge_ptr[idx + 1] - self.edge_ptr[idx]
        gp = np.zeros(idx.size + 1, dtype=np.int64)
        np.cumsum(nc, out=gp[1:])
        ep = np.zeros(idx.size + 1, dtype=np.int64)
        np.cumsum(ec, out=ep[1:])
        nodes = np.repeat(self.graph_ptr[idx] - gp[:-1], nc) + np.arange(gp[-1])
        eidx = np.repeat(self.edge_ptr[idx] - ep[:-1], ec) + np.arange(ep[-1])
        shift = np.repeat(gp[:-1] - self.graph_ptr[idx], ec)
        edges = self.edges[eidx] + shift[:, None]
        return GraphBatch(self.x[nodes], edges, gp, ep, self.y[idx])

    def graph(self, g: int) -> HeteroGraph:
        lo, hi = self.graph_ptr[g], self.graph_ptr[g + 1]
        x = self.x[lo:hi]
        e = self.edges[self.edge_ptr[g] : self.edge_ptr[g + 1]] - lo
        return HeteroGraph(np.argmax(x[:, :N_KINDS], axis=1).astype(np.int8), x.copy(), e, ConflictLabel(int(self.y[g])))

    @classmethod
    def from_graphs(cls, graphs) -> "GraphBatch":
        graphs = list(graphs)
        nc = np.array([g.n_nodes for g in graphs], dtype=np.int64)
        ec = np.array([g.edges.shape[0] for g in graphs], dtype=np.int64)
        gp = np.zeros(len(graphs) + 1, dtype=np.int64)
        np.cumsum(nc, out=gp[1:])
        ep = np.zeros(len(graphs) + 1, dtype=np.int64)
        np.cumsum(ec, out=ep[1:])
        x = np.concatenate([g.x for g in graphs]) if graphs else np.zeros((0, FEATURE_WIDTH))
        edges = (
            np.concatenate([g.edges.reshape(-1, 2) + off for g, off in zip(graphs, gp[:-1])])
            if graphs
            else np.zeros((0, 2), dtype=np.int64)
        )
        y = np.array([int(g.target or 0) for g in graphs], dtype=np.int64)
        return cls(x, edges.astype(np.int64), gp, ep, y)


def encode_columns(model: SystemModel, rcp_xapp, rcp_icp, vk, icp_values, kpi_values, labels) -> GraphBatch:
    """Batch-encode columnar rows; identical to ``encode_record`` row by row.

    Structures are built once per distinct ``(X_i, P_c, V)`` so only the
    scalar column is filled per row.
    """
    mp = model.mappings
    P = model.p_count
    n = len(rcp_xapp)
    xi = np.asarray(rcp_xapp, dtype=np.int64)
    pc = np.asarray(rcp_icp, dtype=np.int64)
    vk = np.asarray(vk, dtype=bool).reshape(n, model.k_count)
    valid = (xi >= 0) & (pc >= 0)
    tpls: list[_Template] = [_PLACEHOLDER] * n
    rows = np.flatnonzero(valid)
    if rows.size:
        # one byte string per row: (X_i, P_c) then the packed violation bits
        head = np.stack([xi[rows], pc[rows]], axis=1).astype("<i4").view(np.uint8)
        keys = np.ascontiguousarray(np.concatenate([head, np.packbits(vk[rows], axis=1)], axis=1))
        width = keys.shape[1]
        cache: dict[bytes, _Template] = {}
        buf = keys.tobytes()
        for j, r in enumerate(rows.tolist()):
            key = buf[j * width : (j + 1) * width]
            tpl = cache.get(key)
            if tpl is None:
                tpl = cache[key] = _template(mp, P, int(xi[r]), int(pc[r]), tuple(np.flatnonzero(vk[r]).tolist()))
            tpls[r] = tpl
    nc = np.fromiter((t.kinds.shape[0] for t in tpls), dtype=np.int64, count=n)
    ec = np.fromiter((t.edges.shape[0] for t in tpls), dtype=np.int64, count=n)
    gp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(nc, out=gp[1:])
    ep = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(ec, out=ep[1:])
    x = np.concatenate([t.base for t in tpls]) if n else np.zeros((0, FEATURE_WIDTH))
    src = np.concatenate([t.scalar_src for t in tpls]) if n else np.zeros(0, dtype=np.int64)
    row = np.repeat(np.arange(n), nc)
    has = src >= 0
    scal = np.concatenate([np.asarray(icp_values, dtype=np.float64) / ICP_SCALE, np.asarray(kpi_values, dtype=np.float64)], axis=1)
    x[has, SCALAR] = scal[row[has], src[has]]
    edges = (
        np.concatenate([t.edges for t in tpls]) + np.repeat(gp[:-1], ec)[:, None]
        if n
        else np.zeros((0, 2), dtype=np.int64)
    )
    return GraphBatch(x, edges.astype(np.int64), gp, ep, np.asarray(labels, dtype=np.int64))


def encode_dataset(ds, idx=None) -> GraphBatch:
    if idx is None:
        idx = np.arange(len(ds))
    idx = np.asarray(idx)
    return encode_columns(
        ds.model,
        ds.rcp_xapp[idx],
        ds.rcp_icp[idx],
        ds.vk[idx],
        ds.icp_values[idx],
        ds.kpi_values[idx],
        ds.labels[idx],
    )
