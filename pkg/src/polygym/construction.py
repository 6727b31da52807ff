"""Construction process: assign every dependence to a carrying dimension.

States are (i_dim, i_dep, d_1..d_n) where d_j = 0 while dependence j is
unassigned and d_j = the 1-based schedule dimension that carries it strongly
once assigned.  Episodes start at (1, 1, 0..0) and are terminal exactly when
every d_j > 0.  The process is deterministic; all the choice lives in the
action sequence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = [
    "InvalidActionError",
    "ConstructionAction",
    "ConstructionConfig",
    "ConstructionState",
    "cons_reset",
    "cons_is_terminal",
    "cons_valid_actions",
    "cons_step",
    "default_max_dims",
]


class InvalidActionError(RuntimeError):
    """An action was applied where the mask forbids it."""


class ConstructionAction(enum.Enum):
    NEXT_DIM = "next_dim"
    NEXT_DEP = "next_dep"
    SELECT_DEP = "select_dep"


def default_max_dims(num_deps: int) -> int:
    return 2 * num_deps + 2


@dataclass(frozen=True)
class ConstructionConfig:
    num_deps: int
    max_dims: int

    def __post_init__(self) -> None:
        if self.num_deps < 1:
            raise ValueError("construction needs at least one dependence")
        if self.max_dims < 1:
            raise ValueError("max_dims must be positive")


@dataclass(frozen=True)
class ConstructionState:
    i_dim: int
    i_dep: int
    assigned: tuple[int, ...]  # d_1..d_n, 0 = unassigned

    def as_tuple(self) -> tuple[int, ...]:
        return (self.i_dim, self.i_dep) + self.assigned

    def assignment(self) -> dict[int, int]:
        """Dependence id (1-based) -> carrying dimension, for terminal states."""
        if not cons_is_terminal(self):
            raise ValueError("assignment is only defined for terminal states")
        return {j + 1: d for j, d in enumerate(self.assigned)}


def cons_reset(cfg: ConstructionConfig) -> ConstructionState:
    return ConstructionState(1, 1, (0,) * cfg.num_deps)


def cons_is_terminal(state: ConstructionState) -> bool:
    return all(d > 0 for d in state.assigned)


def cons_valid_actions(
    state: ConstructionState, cfg: ConstructionConfig
) -> tuple[ConstructionAction, ...]:
    if cons_is_terminal(state):
        raise InvalidActionError("terminal construction state has no actions")
    actions = []
    if state.i_dim < cfg.max_dims:
        actions.append(ConstructionAction.NEXT_DIM)
    if any(d == 0 for d in state.assigned):  # always true while non-terminal
        actions.append(ConstructionAction.NEXT_DEP)
    if state.assigned[state.i_dep - 1] == 0:
        actions.append(ConstructionAction.SELECT_DEP)
    return tuple(actions)


def cons_step(
    state: ConstructionState, action: ConstructionAction, cfg: ConstructionConfig
) -> ConstructionState:
    if action not in cons_valid_actions(state, cfg):
        raise InvalidActionError(f"{action.value} is masked in state {state.as_tuple()}")
    if action is ConstructionAction.NEXT_DIM:
        return ConstructionState(state.i_dim + 1, state.i_dep, state.assigned)
    if action is ConstructionAction.NEXT_DEP:
        unassigned = [j + 1 for j, d in enumerate(state.assigned) if d == 0]
        later = [j for j in unassigned if j > state.i_dep]
        nxt = later[0] if later else unassigned[0]  # wrap to the front
        return ConstructionState(state.i_dim, nxt, state.assigned)
    # SELECT_DEP: the focused dependence is carried by the focused dimension.
    assigned = list(state.assigned)
    assigned[state.i_dep - 1] = state.i_dim
    return ConstructionState(state.i_dim, state.i_dep, tuple(assigned))
