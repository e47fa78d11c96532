"""Real-time multi-UAV mission planning with Dubins distance costs."""
from .allocation import METHODS, StrategyConfig, decision_epoch
from .geometry import DubinsPath, Pose, Turn, Unreachable, cs_shortest, csc_shortest, connect
from .mission import Scenario, Task, Uav, random_scenario
from .sa import SaParams, TourSet, sa_solve, smooth_with_dubins
from .simulator import EventTimeline, SimConfig, SimResult, run

__all__ = [
    "METHODS",
    "StrategyConfig",
    "decision_epoch",
    "DubinsPath",
    "Pose",
    "Turn",
    "Unreachable",
    "cs_shortest",
    "csc_shortest",
    "connect",
    "Scenario",
    "Task",
    "Uav",
    "random_scenario",
    "SaParams",
    "TourSet",
    "sa_solve",
    "smooth_with_dubins",
    "EventTimeline",
    "SimConfig",
    "SimResult",
    "run",
]
