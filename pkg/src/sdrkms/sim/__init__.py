"""Discrete-event simulation of a scenario, its configuration format and audit log."""

from .audit import AuditLog, EventRecord, SimClock, parse_log, query_records, read_log
from .engine import RunResult, Simulation, run_scenario
from .scenario import (ChannelModel, NetSpec, NodeSpec, ScenarioConfig, TimelineEvent, format_config,
                       load_scenario, validate_config)

__all__ = [
    "AuditLog", "ChannelModel", "EventRecord", "NetSpec", "NodeSpec", "RunResult", "ScenarioConfig",
    "SimClock", "Simulation", "TimelineEvent", "format_config", "load_scenario", "parse_log",
    "query_records", "read_log", "run_scenario", "validate_config",
]
