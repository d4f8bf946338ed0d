"""Scenario description and the Gaussian KPI surrogate driving the loop."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..domain import MappingTables, SystemModel, validate_model


@dataclass(frozen=True)
class ScheduledAction:
    t: int
    xapp: int
    icp: int
    value: float


@dataclass
class ResponseModel:
    """``k_j(p) = exp(-sum_i (p_i - c_ji)^2 / (2 sigma^2))`` over the ICPs that drive KPI j.

    ``centers`` is a (K, P) matrix; NaN marks an ICP that does not drive the KPI.
    """

    centers: np.ndarray
    sigma: float
    thresholds: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def drives(self) -> np.ndarray:
        return ~np.isnan(self.centers)

    def kpis(self, icp_values) -> np.ndarray:
        d = np.where(self.drives, np.asarray(icp_values, dtype=np.float64)[None, :] - self.centers, 0.0)
        return np.exp(-(d * d).sum(axis=1) / (2.0 * self.sigma**2))

    def kpis_driven_by(self, icp: int) -> np.ndarray:
        return np.flatnonzero(self.drives[:, icp])

    def margins(self, icp_values) -> np.ndarray:
        return self.kpis(icp_values) - self.thresholds


@dataclass
class Scenario:
    name: str
    model: SystemModel
    response: ResponseModel
    initial_icp: np.ndarray
    duration: int = 540
    actions: list[ScheduledAction] = field(default_factory=list)
    persistence: int = 10
    control_interval: int = 1
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def kpi_names(self) -> tuple[str, ...]:
        return tuple(self.model.kpi_label(j) for j in range(self.model.k_count))

    @property
    def icp_names(self) -> tuple[str, ...]:
        return tuple(self.model.icp_label(i) for i in range(self.model.p_count))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model.to_dict(),
            "sigma": self.response.sigma,
            "centers": [[None if np.isnan(c) else float(c) for c in row] for row in self.response.centers],
            "thresholds": self.response.thresholds.tolist(),
            "initial_icp": np.asarray(self.initial_icp).tolist(),
            "duration": self.duration,
            "actions": [a.__dict__ for a in self.actions],
            "persistence": self.persistence,
            "control_interval": self.control_interval,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        model = SystemModel.from_dict(d["model"])
        centers = np.array([[np.nan if c is None else c for c in row] for row in d["centers"]], dtype=np.float64)
        sc = cls(
            name=d["name"],
            model=model,
            response=ResponseModel(centers, float(d["sigma"]), np.asarray(d["thresholds"], dtype=np.float64)),
            initial_icp=np.asarray(d["initial_icp"], dtype=np.float64),
            duration=int(d.get("duration", 540)),
            actions=[ScheduledAction(int(a["t"]), int(a["xapp"]), int(a["icp"]), float(a["value"])) for a in d.get("actions", [])],
            persistence=int(d.get("persistence", 10)),
            control_interval=int(d.get("control_interval", 1)),
            metadata=dict(d.get("metadata", {})),
        )
        sc.check()
        return sc

    def check(self) -> None:
        """Raise ``ValueError`` on a structurally inconsistent scenario."""
        errs = validate_model(self.model, check_sizes=False)
        K, P = self.model.k_count, self.model.p_count
        if self.response.centers.shape != (K, P):
            errs.append(f"centers shape {self.response.centers.shape} != {(K, P)}")
        if self.response.thresholds.shape != (K,):
            errs.append("one threshold per KPI required")
        if np.asarray(self.initial_icp).shape != (P,):
            errs.append("one initial value per ICP required")
        for a in self.actions:
            if not (0 <= a.xapp < self.model.m and 0 <= a.icp < P):
                errs.append(f"action {a} references unknown entities")
        if self.persistence < 1 or self.control_interval < 1:
            errs.append("persistence and control_interval must be positive")
        if errs:
            raise ValueError("; ".join(errs))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


XAPPS = ("ES", "MRO")
ICPS = ("TXP", "TTT", "CIO", "NL", "HYS", "RET")
KPIS = ("EnergyEfficiency", "PowerConsumption", "Throughput", "HandoverRate", "CallDropRate", "HandoverFailureRate")
ES, MRO = 0, 1
TXP, TTT, CIO, NL, HYS, RET = range(6)
EE, PC, THR, HOR, CDR, HOF = range(6)


def es_mro_model() -> SystemModel:
    """Two xApps sharing transmit power.

    ES owns TXP and NL and manages energy efficiency and power consumption;
    MRO owns TXP, TTT, CIO and HYS and manages the mobility KPIs.  RET has no
    owner; its latent coupling is to the call drop rate.
    """
    es_icps = (TXP, NL)
    mro_icps = (TXP, TTT, CIO, HYS)
    mappings = MappingTables(
        p2x={TXP: (ES, MRO), NL: (ES,), TTT: (MRO,), CIO: (MRO,), HYS: (MRO,)},
        p2k={EE: es_icps, PC: es_icps, THR: mro_icps, HOR: mro_icps, CDR: mro_icps, HOF: mro_icps},
        k2x={EE: (ES,), PC: (ES,), THR: (MRO,), HOR: (MRO,), CDR: (MRO,), HOF: (MRO,)},
        unassigned=(RET,),
    )
    return SystemModel(
        m=2,
        p_count=6,
        k_count=6,
        mappings=mappings,
        exclusive_icp={ES: NL, MRO: TTT},
        exclusive_kpi={ES: EE, MRO: HOR},
        hidden_links={RET: (CDR,)},
        xapp_names=XAPPS,
        icp_names=ICPS,
        kpi_names=KPIS,
    )


def es_mro_scenario(sigma: float = 50.0, cut_at: int | None = 100, cut_to: float = -60.0) -> Scenario:
    """ES/MRO preset: ES cuts transmit power at ``cut_at``, hurting throughput.

    Response centres are offsets from the nominal operating point (all ICPs
    at 0): lower power favours energy efficiency and consumption, higher
    power favours throughput.  Mobility KPIs peak at the nominal TTT/CIO/HYS.
    """
    nan = np.nan
    c = np.full((6, 6), nan)
    c[EE, TXP], c[EE, NL] = -25.0, 0.0
    c[PC, TXP], c[PC, NL] = -45.0, 0.0
    c[THR, TXP] = 20.0
    c[HOR, TTT], c[HOR, HYS] = 0.0, 0.0
    c[CDR, CIO], c[CDR, RET] = 0.0, 0.0
    c[HOF, TTT], c[HOF, CIO] = 0.0, 0.0
    tau = np.array([0.7, 0.6, 0.7, 0.7, 0.7, 0.7])
    actions = [] if cut_at is None else [ScheduledAction(cut_at, ES, TXP, cut_to)]
    sc = Scenario(
        name="es-mro",
        model=es_mro_model(),
        response=ResponseModel(c, sigma, tau),
        initial_icp=np.zeros(6),
        duration=540,
        actions=actions,
        persistence=10,
        control_interval=1,
        metadata={"cells": 13, "ues": 117, "ues_per_cell": 9},
    )
    sc.check()
    return sc


PRESETS = {"es-mro": es_mro_scenario}
