"""Heterogeneous-network simulator for energy-harvesting users.

Downlink association by joint rate/harvest utility with power-splitting
optimisation, and drift-plus-penalty uplink scheduling over battery queues.
"""
__version__ = "0.1.0"

from .model import (Association, BatteryState, ChannelState, ConfigError, InvariantViolation,
                    Placement, RateWindow, ScenarioConfig, SimLog, Topology)
from .engine import run_simulation

__all__ = [
    "Association", "BatteryState", "ChannelState", "ConfigError", "InvariantViolation",
    "Placement", "RateWindow", "ScenarioConfig", "SimLog", "Topology", "run_simulation",
]
