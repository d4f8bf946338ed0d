"""Closed-loop conflict management: monitor, detector, mitigator, scenario."""

from .detection import Detection, cdc_classify
from .loop import LoopResult, run_control_loop
from .mitigation import Mitigation, cmc_mitigate, compromise_point
from .monitor import CMS_SOURCE, CmsState, pmon_step
from .opencellid import Cell, Window, ingest_opencellid, ingest_report
from .scenario import PRESETS, ResponseModel, Scenario, ScheduledAction, es_mro_scenario

__all__ = [
    "CMS_SOURCE",
    "Cell",
    "CmsState",
    "Detection",
    "LoopResult",
    "Mitigation",
    "PRESETS",
    "ResponseModel",
    "Scenario",
    "ScheduledAction",
    "Window",
    "cdc_classify",
    "cmc_mitigate",
    "compromise_point",
    "es_mro_scenario",
    "ingest_opencellid",
    "ingest_report",
    "pmon_step",
    "run_control_loop",
]
