"""Flat row encodings: tabular-baseline inputs and SMOTE record vectors."""

from __future__ import annotations

import numpy as np

from ..domain import SystemModel


def tabular_width(model: SystemModel) -> int:
    m, P, K = model.m, model.p_count, model.k_count
    return 1 + 3 * m + P + K + 1 + 3


def tabular_features(model: SystemModel, rcp_xapp, rcp_icp, vk) -> np.ndarray:
    """Membership flags plus set sizes.

    Layout: idle | one-hot X_i | one-hot P_c | multi-hot V | owners of P_c |
    union of managers over V | P_c unassigned | |V|/K, |X_p|/2, |X_k|/m.
    """
    a = model.arrays
    m, P, K = model.m, model.p_count, model.k_count
    xi = np.asarray(rcp_xapp, dtype=np.int64)
    pc = np.asarray(rcp_icp, dtype=np.int64)
    v = np.asarray(vk, dtype=bool)
    n = xi.shape[0]
    live = (xi >= 0) & (pc >= 0)
    out = np.zeros((n, tabular_width(model)))
    rows = np.flatnonzero(live)
    col = 0
    out[:, col] = ~live
    col += 1
    out[rows, col + xi[rows]] = 1.0
    col += m
    out[rows, col + pc[rows]] = 1.0
    col += P
    out[:, col : col + K] = v & live[:, None]
    col += K
    owners = np.zeros((n, m), dtype=bool)
    owners[rows] = a.p2x[pc[rows]]
    out[:, col : col + m] = owners
    col += m
    managers = (v.astype(np.int64) @ a.k2x.astype(np.int64)) > 0
    managers &= live[:, None]
    out[:, col : col + m] = managers
    col += m
    unas = np.zeros(n, dtype=bool)
    unas[rows] = a.unassigned[pc[rows]]
    out[:, col] = unas
    col += 1
    out[:, col] = out[:, 1 + m + P : 1 + m + P + K].sum(axis=1) / max(K, 1)
    out[:, col + 1] = owners.sum(axis=1) / 2.0
    out[:, col + 2] = managers.sum(axis=1) / max(m, 1)
    return out


def dataset_tabular(ds, idx=None) -> np.ndarray:
    idx = np.arange(len(ds)) if idx is None else np.asarray(idx)
    return tabular_features(ds.model, ds.rcp_xapp[idx], ds.rcp_icp[idx], ds.vk[idx])


# -- record vectors for oversampling --------------------------------------------


class RecordCodec:
    """Maps rows to ``[one-hot X_i | one-hot P_c | multi-hot V | ICP/100 | KPI]``.

    The extra last slot of each one-hot block encodes "no RCP".  Decoding
    rounds the binary blocks (argmax for the one-hots), which for a point on a
    segment between two rows recovers the structure of the nearer endpoint.
    """

    def __init__(self, model: SystemModel, icp_scale: float = 100.0):
        self.model = model
        self.icp_scale = icp_scale
        m, P, K = model.m, model.p_count, model.k_count
        self.sl_x = slice(0, m + 1)
        self.sl_p = slice(m + 1, m + 1 + P + 1)
        self.sl_v = slice(self.sl_p.stop, self.sl_p.stop + K)
        self.sl_icp = slice(self.sl_v.stop, self.sl_v.stop + P)
        self.sl_kpi = slice(self.sl_icp.stop, self.sl_icp.stop + K)
        self.width = self.sl_kpi.stop

    def encode(self, rcp_xapp, rcp_icp, vk, icp_values, kpi_values) -> np.ndarray:
        m, P = self.model.m, self.model.p_count
        xi = np.asarray(rcp_xapp, dtype=np.int64)
        pc = np.asarray(rcp_icp, dtype=np.int64)
        n = xi.shape[0]
        out = np.zeros((n, self.width))
        out[np.arange(n), np.where(xi < 0, m, xi)] = 1.0
        out[np.arange(n), self.sl_p.start + np.where(pc < 0, P, pc)] = 1.0
        out[:, self.sl_v] = np.asarray(vk, dtype=bool)
        out[:, self.sl_icp] = np.asarray(icp_values) / self.icp_scale
        out[:, self.sl_kpi] = np.asarray(kpi_values)
        return out

    def decode(self, z: np.ndarray):
        """Inverse of :meth:`encode` up to rounding of the binary blocks."""
        m, P = self.model.m, self.model.p_count
        z = np.atleast_2d(z)
        xi = np.argmax(z[:, self.sl_x], axis=1)
        pc = np.argmax(z[:, self.sl_p], axis=1)
        xi = np.where(xi == m, -1, xi)
        pc = np.where(pc == P, -1, pc)
        dead = (xi < 0) | (pc < 0)
        xi[dead] = -1
        pc[dead] = -1
        vk = z[:, self.sl_v] > 0.5
        vk[dead] = False
        return xi, pc, vk, z[:, self.sl_icp] * self.icp_scale, z[:, self.sl_kpi]
