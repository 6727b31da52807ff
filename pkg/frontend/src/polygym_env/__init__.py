"""RL environment adapter for the polygym schedule-space engine."""

from .env import (
    ActionSpace,
    CombinedObservation,
    EnvError,
    ObservationSpace,
    ScheduleEnv,
    combined_trace_ids,
    env_spaces,
)

__all__ = [
    "ActionSpace",
    "CombinedObservation",
    "EnvError",
    "ObservationSpace",
    "ScheduleEnv",
    "combined_trace_ids",
    "env_spaces",
]

__version__ = "0.1.0"
