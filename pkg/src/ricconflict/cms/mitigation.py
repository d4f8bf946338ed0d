"""Conflict mitigation: move the contested ICP to a compromise point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ..domain import ConflictLabel
from ..rules import AnnotationResult
from .monitor import CMS_SOURCE, CmsState
from .scenario import ResponseModel


class NothingToMitigateError(ValueError):
    pass


@dataclass
class Mitigation:
    t: int
    icp: int
    old: float
    new: float
    affected: tuple[int, ...]
    margin_before: float
    margin_after: float
    feasible: bool


def min_margin_fn(response: ResponseModel, icp: int, icp_values, affected):
    """``p -> min_j (k_j(p) - tau_j)`` with every other ICP held fixed."""
    base = np.asarray(icp_values, dtype=np.float64).copy()
    aff = np.asarray(affected, dtype=np.int64)
    c = response.centers[aff]
    drives = ~np.isnan(c)
    tau = response.thresholds[aff]
    two_s2 = 2.0 * response.sigma**2
    # contribution of the fixed ICPs never changes
    other = drives.copy()
    other[:, icp] = False
    fixed = np.where(other, base[None, :] - np.nan_to_num(c), 0.0)
    fixed = (fixed * fixed).sum(axis=1)
    ci = np.nan_to_num(c[:, icp])
    di = drives[:, icp]

    def f(p):
        p = np.asarray(p, dtype=np.float64)
        d = np.where(di, p[..., None] - ci, 0.0)
        k = np.exp(-(fixed + d * d) / two_s2)
        return (k - tau).min(axis=-1)

    return f


def compromise_point(f, lo: float, hi: float, n_grid: int = 1001, extra=()) -> tuple[float, float]:
    """Argmax of ``f`` on [lo, hi]: grid scan, then golden-section refinement
    inside the bracket around the best grid point."""
    grid = np.linspace(lo, hi, n_grid)
    vals = f(grid)
    i = int(np.argmax(vals))
    best_p, best_v = float(grid[i]), float(vals[i])
    if 0 < i < n_grid - 1 and vals[i] > vals[i - 1] and vals[i] > vals[i + 1]:
        res = minimize_scalar(
            lambda p: -float(f(p)),
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            options={"xtol": 1e-10},
        )
        if grid[i - 1] <= res.x <= grid[i + 1] and -res.fun > best_v:
            best_p, best_v = float(res.x), float(-res.fun)
    for p in extra:
        if lo <= p <= hi:
            v = float(f(p))
            if v > best_v:
                best_p, best_v = float(p), v
    return best_p, best_v


def cmc_mitigate(
    t: int,
    conflict: AnnotationResult,
    icp: int,
    icp_values,
    response: ResponseModel,
    state: CmsState | None = None,
    n_grid: int = 1001,
    span_sigmas: float = 3.0,
) -> Mitigation:
    """Search the ICP domain ``[-3 sigma, 3 sigma]`` for the value maximizing
    the smallest SLA margin over every KPI the ICP drives, apply it to
    ``icp_values`` in place and log the move as a CMS change."""
    if conflict.label is ConflictLabel.NO_CONFLICT:
        raise NothingToMitigateError("no conflict to mitigate")
    affected = tuple(int(k) for k in response.kpis_driven_by(icp))
    if not affected:
        raise NothingToMitigateError(f"ICP {icp} drives no KPI")
    f = min_margin_fn(response, icp, icp_values, affected)
    old = float(icp_values[icp])
    before = float(f(old))
    span = span_sigmas * response.sigma
    new, after = compromise_point(f, -span, span, n_grid, extra=(old,))
    icp_values[icp] = new
    if state is not None:
        state.log_change(t, CMS_SOURCE, icp, old, new)
    return Mitigation(int(t), int(icp), old, new, affected, before, after, after >= 0.0)
