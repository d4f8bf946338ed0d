"""Synthetic conflict generator.

Two stages: :func:`synthesize_entities` draws the static xApp/ICP/KPI
ecosystem once; :func:`simulate` then runs the per-second stochastic loop
(pick an ICP, drift it, push the change through the Gaussian response, record
new SLA violations) and labels every row with the rule engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._accel import njit
from .dataset import Dataset
from .domain import (
    MappingTables,
    SystemModel,
    genc_icp_count,
    genc_kpi_count,
)
from .rules import annotate_arrays

DRIFT_RANGE = 70.0
NOISE_RANGE = 20.0
DEFAULT_SIGMA = 50.0
SLA_CEILING = 0.9
ICP_LIMIT = 100.0


@dataclass(frozen=True)
class IntensityProfile:
    name: str
    bucket_probs: tuple[float, float, float]  # shared, indirect, unassigned
    update_freq: float
    sla_band: float
    breach_prob: float
    expected_conflict_ratio: tuple[float, float]  # percent

    def __post_init__(self):
        if abs(sum(self.bucket_probs) - 1.0) > 1e-9:
            raise ValueError("bucket probabilities must sum to 1")
        if not 0.0 < self.sla_band < 1.0:
            raise ValueError("sla_band must lie in (0, 1)")
        for name in ("update_freq", "breach_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def threshold_range(self) -> tuple[float, float]:
        return (SLA_CEILING - self.sla_band, SLA_CEILING)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bucket_probs": list(self.bucket_probs),
            "update_freq": self.update_freq,
            "sla_band": self.sla_band,
            "breach_prob": self.breach_prob,
            "expected_conflict_ratio": list(self.expected_conflict_ratio),
        }


_BUCKETS = (0.30, 0.50, 0.20)
LOW = IntensityProfile("low", _BUCKETS, 0.05, 0.30, 0.03, (1.0, 4.0))
MEDIUM = IntensityProfile("medium", _BUCKETS, 0.10, 0.20, 0.06, (5.0, 7.0))
HIGH = IntensityProfile("high", _BUCKETS, 0.15, 0.15, 0.10, (8.0, 10.0))
PROFILES = {p.name: p for p in (LOW, MEDIUM, HIGH)}


def get_profile(name: str | IntensityProfile) -> IntensityProfile:
    if isinstance(name, IntensityProfile):
        return name
    try:
        return PROFILES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown intensity {name!r}; choose from {sorted(PROFILES)}") from None


# -- entity synthesis --------------------------------------------------------


def synthesize_entities(
    m: int,
    share_prob: float = 0.3,
    seed: int = 0,
    n_unassigned: int = 1,
    hidden_fanout: int = 2,
) -> SystemModel:
    """Draw the static ecosystem for ``m`` xApps.

    Every xApp gets one exclusive ICP and KPI.  Remaining ICPs and KPIs go to
    two distinct xApps with probability ``share_prob`` and to a single random
    xApp otherwise; ``n_unassigned`` ICPs stay unowned.  Each KPI group is the
    union of its managers' ICPs plus one ICP injected from a non-manager.
    Unassigned ICPs get ``hidden_fanout`` latent KPI couplings, which is how
    their drift later surfaces as implicit conflicts.

    When sharing is enabled and ``m >= 2`` at least one ICP is shared, so the
    shared selection bucket is never empty.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0.0 <= share_prob < 1.0:
        raise ValueError("share_prob must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    P = genc_icp_count(m)
    K = genc_kpi_count(m)
    n_unassigned = max(1, min(n_unassigned, P - m))

    icp_perm = [int(i) for i in rng.permutation(P)]
    exclusive_icp = {x: icp_perm[x] for x in range(m)}
    rest = icp_perm[m:]
    unassigned = rest[:n_unassigned]
    free_icps = rest[n_unassigned:]

    def draw_owners() -> tuple[int, ...]:
        if m >= 2 and rng.random() < share_prob:
            a, b = rng.choice(m, size=2, replace=False)
            return (int(a), int(b))
        return (int(rng.integers(m)),)

    p2x: dict[int, tuple[int, ...]] = {p: (x,) for x, p in exclusive_icp.items()}
    for p in free_icps:
        p2x[p] = draw_owners()
    if m >= 2 and share_prob > 0 and free_icps and not any(len(o) == 2 for o in p2x.values()):
        a, b = rng.choice(m, size=2, replace=False)
        p2x[free_icps[0]] = (int(a), int(b))

    kpi_perm = [int(k) for k in rng.permutation(K)]
    exclusive_kpi = {x: kpi_perm[x] for x in range(m)}
    k2x: dict[int, tuple[int, ...]] = {k: (x,) for x, k in exclusive_kpi.items()}
    for k in kpi_perm[m:]:
        k2x[k] = draw_owners()

    owned: dict[int, set[int]] = {x: set() for x in range(m)}
    for p, owners in p2x.items():
        for x in owners:
            owned[x].add(p)
    p2k: dict[int, set[int]] = {}
    for k in range(K):
        group: set[int] = set()
        for x in k2x[k]:
            group |= owned[x]
        p2k[k] = group
    owned_icps = sorted(p2x)
    for k in range(K):
        candidates = [p for p in owned_icps if p not in p2k[k]]
        if candidates:
            p2k[k].add(candidates[int(rng.integers(len(candidates)))])

    fan = min(K, hidden_fanout)
    hidden = {u: tuple(int(k) for k in rng.choice(K, size=fan, replace=False)) for u in unassigned}

    return SystemModel(
        m=m,
        p_count=P,
        k_count=K,
        mappings=MappingTables(p2x=p2x, p2k=p2k, k2x=k2x, unassigned=unassigned),
        exclusive_icp=exclusive_icp,
        exclusive_kpi=exclusive_kpi,
        hidden_links=hidden,
    )


# -- per-step primitives -------------------------------------------------------


def gaussian_response(p_value: float, xi: float, sigma: float) -> float:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d = p_value + xi
    return math.exp(-(d * d) / (2.0 * sigma * sigma))


def breach_radius(tau, sigma: float):
    """Displacement |p + xi| beyond which a KPI with threshold ``tau`` breaches."""
    return sigma * np.sqrt(-2.0 * np.log(tau))


def sample_threshold(rng, profile: IntensityProfile) -> float:
    lo, hi = profile.threshold_range
    return lo + (hi - lo) * float(rng.random())


def icp_buckets(model: SystemModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(shared, indirect-injected, unassigned) ICP buckets."""
    mp = model.mappings
    return (
        np.asarray(mp.shared_icps(), dtype=np.int64),
        np.asarray(mp.indirect_icps(), dtype=np.int64),
        np.asarray(mp.unassigned, dtype=np.int64),
    )


def _bucket_probs(profile: IntensityProfile, buckets: Sequence[np.ndarray]) -> np.ndarray:
    probs = np.array([pr if len(b) else 0.0 for pr, b in zip(profile.bucket_probs, buckets)])
    if probs.sum() <= 0:
        raise ValueError("every ICP bucket is empty")
    return probs / probs.sum()


@njit
def _pick_bucket(u_bucket, probs):
    acc = 0.0
    b = len(probs) - 1
    for i in range(len(probs)):
        acc += probs[i]
        if u_bucket < acc and probs[i] > 0:
            return i
    while probs[b] <= 0:
        b -= 1
    return b


@njit
def _pick(u_bucket, u_index, probs, flat, offsets):
    b = _pick_bucket(u_bucket, probs)
    lo = offsets[b]
    n = offsets[b + 1] - lo
    j = int(u_index * n)
    if j >= n:
        j = n - 1
    return flat[lo + j]


def _flatten_buckets(buckets):
    flat = np.concatenate([np.asarray(b, dtype=np.int64) for b in buckets])
    offsets = np.zeros(len(buckets) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(b) for b in buckets])
    return flat, offsets


def select_icp(model: SystemModel, profile: IntensityProfile, rng) -> int:
    """Choose a bucket by the profile weights (renormalized over non-empty
    buckets), then an ICP uniformly inside it."""
    buckets = icp_buckets(model)
    probs = _bucket_probs(profile, buckets)
    flat, offsets = _flatten_buckets(buckets)
    return int(_pick(float(rng.random()), float(rng.random()), probs, flat, offsets))


# -- simulation loop -----------------------------------------------------------


@njit
def _instructor(pc, u, p2x):
    """Uniform owner of ``pc``; a uniform xApp when it has none."""
    M = p2x.shape[1]
    n_own = 0
    for x in range(M):
        if p2x[pc, x]:
            n_own += 1
    if n_own == 0:
        x = int(u * M)
        return x if x < M else M - 1
    pick = int(u * n_own)
    if pick >= n_own:
        pick = n_own - 1
    seen = 0
    for x in range(M):
        if p2x[pc, x]:
            if seen == pick:
                return x
            seen += 1
    return 0


@njit
def _breach_target(pc, xi, affected, violated, k2x, k2x_count, tau):
    """Most sensitive (highest-threshold) affected KPI that is still healthy
    and not solely managed by the instructing xApp; -1 if none."""
    target = -1
    best = -1.0
    for j in range(tau.shape[0]):
        if not affected[pc, j] or violated[j]:
            continue
        if k2x[j, xi] and k2x_count[j] == 1:
            continue
        if tau[j] > best:
            best = tau[j]
            target = j
    return target


@njit
def _simulate_kernel(
    is_update,
    U,
    XI,
    probs,
    flat,
    offsets,
    p2x,
    k2x,
    k2x_count,
    affected,
    tau,
    radius,
    q_breach,
    sigma,
    drift,
    limit,
):
    T = is_update.shape[0]
    P = p2x.shape[0]
    K = tau.shape[0]
    rcp_xapp = np.full(T, -1, dtype=np.int64)
    rcp_icp = np.full(T, -1, dtype=np.int64)
    icp_out = np.empty((T, P), dtype=np.float64)
    kpi_out = np.empty((T, K), dtype=np.float64)
    vk = np.zeros((T, K), dtype=np.bool_)

    icp = np.zeros(P, dtype=np.float64)
    kpi = np.ones(K, dtype=np.float64)
    violated = np.zeros(K, dtype=np.bool_)
    two_s2 = 2.0 * sigma * sigma
    u = 0
    for t in range(T):
        if is_update[t]:
            pc = -1
            xi = -1
            target = -1
            if U[u, 3] < q_breach:
                # breach-shaped: bucket weights renormalized over buckets that
                # hold an ICP able to cause a new violation, then uniform
                # among those ICPs; benign update if none can
                ok = np.zeros(flat.shape[0], dtype=np.bool_)
                w = np.zeros(probs.shape[0])
                for b in range(probs.shape[0]):
                    for s in range(offsets[b], offsets[b + 1]):
                        c = flat[s]
                        if _breach_target(c, _instructor(c, U[u, 2], p2x), affected, violated, k2x, k2x_count, tau) >= 0:
                            ok[s] = True
                            w[b] = probs[b]
                if w.sum() > 0:
                    b = _pick_bucket(U[u, 0], w / w.sum())
                    n_ok = 0
                    for s in range(offsets[b], offsets[b + 1]):
                        if ok[s]:
                            n_ok += 1
                    want = int(U[u, 1] * n_ok)
                    if want >= n_ok:
                        want = n_ok - 1
                    for s in range(offsets[b], offsets[b + 1]):
                        if ok[s]:
                            if want == 0:
                                pc = flat[s]
                                xi = _instructor(pc, U[u, 2], p2x)
                                target = _breach_target(pc, xi, affected, violated, k2x, k2x_count, tau)
                                break
                            want -= 1
            if pc < 0:
                pc = _pick(U[u, 0], U[u, 1], probs, flat, offsets)
                xi = _instructor(pc, U[u, 2], p2x)

            p_old = icp[pc]
            # drift window, clipped so the ICP stays inside its domain
            d_lo = max(-drift, -limit - p_old)
            d_hi = min(drift, limit - p_old)
            dp = 0.0
            if target >= 0:
                c0 = -(p_old + XI[u, target])
                lo_safe = c0 - radius[target]
                hi_safe = c0 + radius[target]
                left = min(d_hi, lo_safe) - d_lo
                if left < 0.0:
                    left = 0.0
                right = d_hi - max(d_lo, hi_safe)
                if right < 0.0:
                    right = 0.0
                total = left + right
                if total > 1e-9:
                    s = U[u, 4] * total
                    if s < left:
                        dp = d_lo + s
                    else:
                        dp = max(d_lo, hi_safe) + (s - left)
                else:
                    target = -1
            if target < 0:
                lo = d_lo
                hi = d_hi
                n_aff = 0
                for j in range(K):
                    if affected[pc, j]:
                        n_aff += 1
                        a = -radius[j] - XI[u, j] - p_old
                        bb = radius[j] - XI[u, j] - p_old
                        if a > lo:
                            lo = a
                        if bb < hi:
                            hi = bb
                if n_aff == 0:
                    dp = d_lo + (d_hi - d_lo) * U[u, 4]
                elif hi > lo:
                    dp = lo + U[u, 4] * (hi - lo)
                else:
                    # cannot fully recover in one step: head back toward nominal
                    dp = min(d_hi, max(d_lo, -p_old))
            p_new = p_old + dp
            icp[pc] = p_new
            for j in range(K):
                if affected[pc, j]:
                    d = p_new + XI[u, j]
                    kv = np.exp(-(d * d) / two_s2)
                    kpi[j] = kv
                    now = kv < tau[j]
                    if now and not violated[j]:
                        vk[t, j] = True
                    violated[j] = now
            rcp_xapp[t] = xi
            rcp_icp[t] = pc
            u += 1
        icp_out[t, :] = icp
        kpi_out[t, :] = kpi
    return rcp_xapp, rcp_icp, icp_out, kpi_out, vk


def per_update_breach_prob(profile: IntensityProfile, breach_mode: str = "per-step") -> float:
    """Probability that an update is breach-shaped.

    ``per-step`` (default) treats ``breach_prob`` as the expected number of
    breach-shaped updates per time step, i.e. ``breach_prob / update_freq`` per
    update.  ``per-update`` uses ``breach_prob`` unchanged.
    """
    if breach_mode == "per-update":
        return profile.breach_prob
    if breach_mode != "per-step":
        raise ValueError(f"unknown breach_mode {breach_mode!r}")
    if profile.update_freq <= 0:
        return 0.0
    return min(1.0, profile.breach_prob / profile.update_freq)


def simulate(
    model: SystemModel,
    profile: IntensityProfile | str,
    t_max: int,
    sigma: float = DEFAULT_SIGMA,
    seed: int = 0,
    breach_mode: str = "per-step",
    icp_limit: float = ICP_LIMIT,
) -> Dataset:
    """Run the time-series loop for ``t_max`` one-second steps.

    Per step an update happens with probability ``update_freq``; otherwise an
    idle row (no RCP, no violations) is emitted.  An update picks an ICP,
    attributes it to one of its owners (a uniformly random xApp for an
    unassigned ICP) and draws the drift from the breach region of the most
    sensitive eligible KPI or from the region where every affected KPI stays
    within its SLA.  Breach-shaped updates only pick ICPs that can still cause
    a new violation; when none can, the update is benign.  ICP values stay in
    ``[-icp_limit, icp_limit]``.  Thresholds are drawn once per run.  Rows come
    back labelled by the rule engine.
    """
    profile = get_profile(profile)
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if icp_limit < DRIFT_RANGE:
        raise ValueError("icp_limit must be at least the drift range")
    rng = np.random.default_rng(seed)
    K = model.k_count
    lo, hi = profile.threshold_range
    tau = lo + (hi - lo) * rng.random(K)
    radius = breach_radius(tau, sigma)

    is_update = rng.random(t_max) < profile.update_freq
    n_upd = int(is_update.sum())
    U = rng.random((n_upd, 5))
    XI = rng.uniform(-NOISE_RANGE, NOISE_RANGE, size=(n_upd, K))

    buckets = icp_buckets(model)
    probs = _bucket_probs(profile, buckets)
    flat, offsets = _flatten_buckets(buckets)
    a = model.arrays
    affected = np.ascontiguousarray(a.p2k.T | a.hidden)

    rcp_xapp, rcp_icp, icp_vals, kpi_vals, vk = _simulate_kernel(
        is_update,
        U,
        XI,
        probs,
        flat,
        offsets,
        a.p2x,
        a.k2x,
        a.k2x_count,
        affected,
        tau,
        radius,
        per_update_breach_prob(profile, breach_mode),
        float(sigma),
        DRIFT_RANGE,
        float(icp_limit),
    )
    labels = annotate_arrays(model, rcp_xapp, rcp_icp, vk)
    return Dataset(
        model=model,
        t=np.arange(1, t_max + 1, dtype=np.int64),
        rcp_xapp=rcp_xapp,
        rcp_icp=rcp_icp,
        icp_values=icp_vals,
        kpi_values=kpi_vals,
        sla=np.broadcast_to(tau, (t_max, K)),
        vk=vk,
        labels=labels,
        meta={
            "seed": seed,
            "sigma": float(sigma),
            "profile": profile.name,
            "profile_params": profile.to_dict(),
            "t_max": int(t_max),
            "breach_mode": breach_mode,
            "icp_limit": float(icp_limit),
        },
    )
