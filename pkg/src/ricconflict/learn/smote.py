"""SMOTE oversampling on dense feature rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EmptyClassError(ValueError):
    def __init__(self, classes):
        self.classes = list(classes)
        super().__init__(f"classes with no samples: {self.classes}")


@dataclass
class SmoteResult:
    x: np.ndarray  # originals followed by synthetic rows
    y: np.ndarray
    n_original: int
    # per synthetic row: base index, neighbour index (into the originals), lambda
    base: np.ndarray
    neighbor: np.ndarray
    lam: np.ndarray

    @property
    def synthetic(self) -> np.ndarray:
        return self.x[self.n_original :]


def nearest_neighbors(x: np.ndarray, k: int, block_elems: int = 1 << 23) -> np.ndarray:
    """Indices of the ``k`` nearest other rows of every row (Euclidean, brute force).

    A tree index degrades badly at the widths record vectors have, so
    distances are computed in row blocks through one matrix product each.
    """
    n = x.shape[0]
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < {n}")
    sq = np.einsum("ij,ij->i", x, x)
    out = np.empty((n, k), dtype=np.int64)
    step = max(1, block_elems // n)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        d = sq[lo:hi, None] + sq[None, :] - 2.0 * (x[lo:hi] @ x.T)
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf  # never its own neighbour
        part = np.argpartition(d, k - 1, axis=1)[:, :k]
        order = np.argsort(np.take_along_axis(d, part, axis=1), axis=1, kind="stable")
        out[lo:hi] = np.take_along_axis(part, order, axis=1)
    return out


def smote(
    x,
    y,
    k_neighbors: int = 5,
    target_count: int | dict | None = None,
    seed: int = 0,
    classes=None,
) -> SmoteResult:
    """Grow every minority class to ``target_count`` rows.

    ``target_count`` defaults to the majority count; a dict gives per-class
    targets.  Each synthetic point is ``x_a + lam * (x_b - x_a)`` with
    ``x_b`` one of the ``k_neighbors`` nearest same-class rows of ``x_a``
    (Euclidean).  Classes with at most ``k_neighbors`` rows draw partners
    with replacement from the whole class, so a singleton class yields copies.
    ``classes`` lists the labels that must be present (default: those in ``y``).
    """
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be at least 1")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    labels = np.unique(y) if classes is None else np.asarray(sorted(classes))
    counts = {int(c): int(np.count_nonzero(y == c)) for c in labels}
    empty = [c for c, n in counts.items() if n == 0]
    if empty:
        raise EmptyClassError(empty)
    major = max(counts.values()) if counts else 0

    xs, ys, bases, nbrs, lams = [x], [y], [], [], []
    for c in labels:
        c = int(c)
        want = target_count.get(c, major) if isinstance(target_count, dict) else (target_count or major)
        need = want - counts[c]
        if need <= 0:
            continue
        idx = np.flatnonzero(y == c)
        ia = rng.integers(idx.size, size=need)
        a = idx[ia]
        if idx.size <= k_neighbors:
            b = idx[rng.integers(idx.size, size=need)]
        else:
            nn = nearest_neighbors(x[idx], k_neighbors)
            b = idx[nn[ia, rng.integers(k_neighbors, size=need)]]
        lam = rng.random(need)
        xs.append(x[a] + lam[:, None] * (x[b] - x[a]))
        ys.append(np.full(need, c, dtype=np.int64))
        bases.append(a)
        nbrs.append(b)
        lams.append(lam)

    cat = lambda parts, dt: np.concatenate(parts) if parts else np.zeros(0, dtype=dt)  # noqa: E731
    return SmoteResult(
        np.concatenate(xs),
        np.concatenate(ys),
        x.shape[0],
        cat(bases, np.int64),
        cat(nbrs, np.int64),
        cat(lams, np.float64),
    )
