"""Conventional RL environment over the schedule-space engine.

The engine runs two decision processes back to back: place each dependence
at a schedule dimension, then pick one small integer per generator slot.
This adapter merges them behind a single reset/step interface with one
unified action alphabet, so an off-the-shelf agent can drive a whole
episode without knowing which phase it is in.

Unified action ids:

    0           next_dim
    1           next_dep
    2           select_dep
    3 + x       select_coeff x, for x in 0 .. coeff_max

Observations carry a phase flag (0 while placing dependences, 1 while
picking coefficients), the engine's state vector as plain integers
(unfilled coefficient slots encode as -1), and a boolean mask over the
action alphabet.  Stepping a masked action raises; it is never converted
into a silent penalty.  Intermediate rewards are 0; the terminal reward is
a float approximation of the engine's exact rational, which is passed
through unchanged as a string in ``info["reward_exact"]``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import polygym
from polygym import (
    ConstructionAction,
    OutcomeKind,
    RewardConfig,
    Scop,
    ScheduleSession,
    export_schedule,
    make_slot_layout,
    parse_scop,
)
from polygym.explorer import PHASE_CONSTRUCT, PHASE_DONE, PHASE_EXPLORE

ENGINE_API = "1"
if polygym.__api_version__ != ENGINE_API:
    raise ImportError(
        f"polygym_env speaks engine API {ENGINE_API!r}, "
        f"installed engine reports {polygym.__api_version__!r}"
    )

PHASE_FLAG = {PHASE_CONSTRUCT: 0, PHASE_EXPLORE: 1}

STRUCTURE_IDS = {
    ConstructionAction.NEXT_DIM: 0,
    ConstructionAction.NEXT_DEP: 1,
    ConstructionAction.SELECT_DEP: 2,
}
COEFF_BASE = 3


class EnvError(Exception):
    """A misused environment: bad file, masked action, finished episode."""


@dataclass(frozen=True)
class ActionSpace:
    """Discrete unified alphabet: 3 structure actions plus the coefficients."""

    coeff_max: int

    @property
    def size(self) -> int:
        return COEFF_BASE + self.coeff_max + 1

    @property
    def names(self) -> tuple[str, ...]:
        return (
            "next_dim",
            "next_dep",
            "select_dep",
            *(f"select_coeff{x}" for x in range(self.coeff_max + 1)),
        )

    def contains(self, action: int) -> bool:
        return isinstance(action, int) and not isinstance(action, bool) and 0 <= action < self.size


@dataclass(frozen=True)
class ObservationSpace:
    """Bounded integer vectors: a phase flag followed by the engine state.

    The state length follows the engine (dependence-placement tuples while
    constructing, one entry per generator slot while exploring), so it
    varies within an episode; every entry lies in [low, high].
    """

    low: int
    high: int
    phase_values: tuple[int, int] = (0, 1)


@dataclass(frozen=True)
class CombinedObservation:
    phase: int  # 0 construction, 1 exploration
    state: tuple[int, ...]
    mask: tuple[bool, ...]

    def as_vector(self) -> tuple[int, ...]:
        return (self.phase,) + self.state


def env_spaces(
    coeff_max: int, *, max_dims: int = 0, n_deps: int = 0
) -> tuple[ObservationSpace, ActionSpace]:
    """Static space descriptors for a configuration.

    ``max_dims`` and ``n_deps`` tighten the observation bound when known;
    the action alphabet depends only on ``coeff_max``.
    """
    if not isinstance(coeff_max, int) or isinstance(coeff_max, bool) or coeff_max < 1:
        raise EnvError("coeff_max must be an integer >= 1")
    high = max(coeff_max, max_dims, n_deps)
    return ObservationSpace(low=-1, high=high), ActionSpace(coeff_max)


class ScheduleEnv:
    """One engine episode at a time behind reset/step/spaces.

    Instances are independent; nothing is shared, so any number of them can
    run side by side.  The optional seed only drives ``sample_action``; the
    transition function itself is deterministic.
    """

    def __init__(
        self,
        scop: Scop | str | Path,
        binding: Mapping[str, int],
        *,
        coeff_max: int = 3,
        max_dims: int | None = None,
        reward: RewardConfig | None = None,
        legality_box: int | None = None,
        seed: int | str | None = None,
    ) -> None:
        if not isinstance(scop, Scop):
            path = Path(scop)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as e:
                raise EnvError(f"cannot load SCoP file: {e}") from None
            try:
                scop = parse_scop(text)
            except Exception as e:
                raise EnvError(f"cannot parse SCoP file: {e}") from None
        try:
            self.session = ScheduleSession(
                scop,
                binding,
                coeff_max=coeff_max,
                max_dims=max_dims,
                reward=reward,
                legality_box=legality_box,
            )
        except Exception as e:
            raise EnvError(f"engine rejected the configuration: {e}") from None
        self.scop = scop
        self.observation_space, self.action_space = env_spaces(
            coeff_max,
            max_dims=self.session.cons_cfg.max_dims if self.session.cons_cfg else 1,
            n_deps=len(self.session.deps),
        )
        self._rng = random.Random(seed)
        self._seed = seed
        self.done = True  # no episode until the first reset

    # -- core API ----------------------------------------------------------

    def reset(self, *, seed: int | str | None = None) -> CombinedObservation:
        """Start a fresh episode and return its first observation."""
        if seed is not None:
            self._rng = random.Random(seed)
            self._seed = seed
        self.session.reset()
        self.done = self.session.phase == PHASE_DONE
        return self._observe()

    def step(self, action: int) -> tuple[CombinedObservation, float, bool, dict]:
        """Apply one unified action; returns (observation, reward, done, info)."""
        if self.done:
            raise EnvError("episode is finished; call reset()")
        if not self.action_space.contains(action):
            raise EnvError(
                f"action {action!r} outside the alphabet of size {self.action_space.size}"
            )
        mask = self._mask()
        if not mask[action]:
            raise EnvError(
                f"action {self.action_space.names[action]} is masked in this state"
            )
        if self.session.phase == PHASE_CONSTRUCT:
            self.session.apply(self._structure_action(action))
        else:
            self.session.apply(action - COEFF_BASE)
        self.done = self.session.phase == PHASE_DONE
        if not self.done:
            return self._observe(), 0.0, False, {}
        outcome = self.session.outcome()
        info = {
            "outcome": outcome.kind.value,
            "reward_exact": str(outcome.reward),
            "legal": outcome.legal,
            "trace": list(self.session.trace),
        }
        if outcome.schedule is not None:
            info["schedule_text"] = export_schedule(outcome.schedule, self.scop)
        return self._observe(), float(outcome.reward), True, info

    def sample_action(self) -> int:
        """A uniformly random unmasked action, from the env's seeded stream."""
        valid = [i for i, ok in enumerate(self._mask()) if ok]
        if not valid:
            raise EnvError("no valid actions: episode is finished")
        return valid[self._rng.randrange(len(valid))]

    # -- helpers -----------------------------------------------------------

    def _structure_action(self, action: int) -> ConstructionAction:
        for act, ident in STRUCTURE_IDS.items():
            if ident == action:
                return act
        raise EnvError(f"action {action} is not a structure action")

    def _mask(self) -> tuple[bool, ...]:
        mask = [False] * self.action_space.size
        if self.done:
            return tuple(mask)
        if self.session.phase == PHASE_CONSTRUCT:
            for act in self.session.valid_actions():
                mask[STRUCTURE_IDS[act]] = True
        else:
            for coeff in self.session.valid_actions():
                mask[COEFF_BASE + coeff] = True
        return tuple(mask)

    def _state_vector(self) -> tuple[int, ...]:
        if self.session.phase == PHASE_CONSTRUCT:
            return self.session.cons_state.as_tuple()
        if self.session.expl_state is not None:
            return self.session.expl_state.as_tuple()
        return self.session.cons_state.as_tuple() if self.session.cons_state else ()

    def _observe(self) -> CombinedObservation:
        phase = PHASE_FLAG.get(self.session.phase)
        if phase is None:  # terminal: report the phase the episode ended in
            phase = 1 if self.session.expl_state is not None else 0
        return CombinedObservation(phase, self._state_vector(), self._mask())

    # -- introspection ------------------------------------------------------

    @property
    def trace(self) -> list[str | int]:
        return list(self.session.trace)

    @property
    def slot_count(self) -> int | None:
        """Generator slots of the current episode's space, once constructed."""
        if self.session.space is None:
            return None
        return make_slot_layout(self.session.space).total_slots

    def outcome_reward_exact(self) -> Fraction:
        return self.session.outcome().reward


def combined_trace_ids(
    structure: Sequence[str], coefficients: Sequence[int]
) -> list[int]:
    """Translate engine trace tokens into unified action ids."""
    names = {a.value: i for a, i in STRUCTURE_IDS.items()}
    return [names[tok] for tok in structure] + [COEFF_BASE + c for c in coefficients]
