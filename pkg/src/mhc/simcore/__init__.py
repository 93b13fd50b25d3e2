from .config import SimConfig
from .engine import BatchSim, SimState, StepInfo, detect_fall, pd_torque, reset, step

__all__ = [
    "SimConfig",
    "BatchSim",
    "SimState",
    "StepInfo",
    "detect_fall",
    "pd_torque",
    "reset",
    "step",
]
