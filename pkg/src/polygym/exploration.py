"""Exploration process: pick one integer schedule point out of a space.

The realized schedule space gives every dimension a generator set.  For each
dimension, one coefficient slot is opened per vertex (skipped entirely when
the dimension has a single vertex, whose weight is then implied) and one per
ray, in canonical generator order.  Slots are filled strictly left to right
with integers from {0..coeff_max}; the episode is terminal when every slot is
filled.

Materialization follows the vertex/ray split: the vertex part is the
λ-weighted average of the vertices (sum λ_i v_i / sum λ_i), the ray part is
the plain α-weighted sum of the rays, and the resulting rational point is
scaled by its least common denominator to the integer lattice.  A dimension
whose vertex weights are all zero does not define a point: the episode is
invalid.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .construction import InvalidActionError
from .farkas import ScheduleSpace
from .geometry import lcd_scale

__all__ = [
    "ExplorationConfig",
    "DimensionSlots",
    "SlotLayout",
    "ExplorationState",
    "SchedulePoint",
    "make_slot_layout",
    "expl_reset",
    "expl_is_terminal",
    "expl_step",
    "materialize_point",
]


@dataclass(frozen=True)
class ExplorationConfig:
    coeff_max: int = 3

    def __post_init__(self) -> None:
        if self.coeff_max < 1:
            raise ValueError("coeff_max must be at least 1")


@dataclass(frozen=True)
class DimensionSlots:
    dim_index: int
    n_vertex_slots: int  # 0 when the dimension has a single vertex
    n_ray_slots: int

    @property
    def total(self) -> int:
        return self.n_vertex_slots + self.n_ray_slots


@dataclass(frozen=True)
class SlotLayout:
    dims: tuple[DimensionSlots, ...]

    @property
    def total_slots(self) -> int:
        return sum(d.total for d in self.dims)


@dataclass(frozen=True)
class ExplorationState:
    values: tuple[int | None, ...]  # None = not yet chosen
    cursor: int

    def as_tuple(self) -> tuple[int, ...]:
        """Integer view with -1 in unfilled slots."""
        return tuple(-1 if v is None else v for v in self.values)


SchedulePoint = tuple[tuple[int, ...], ...]


def make_slot_layout(space: ScheduleSpace) -> SlotLayout:
    if not space.is_valid:
        raise ValueError(
            f"schedule space has empty dimensions {space.invalid_dimensions}"
        )
    dims = []
    for d in space.dimensions:
        n_vertices = len(d.generators.vertices)
        vertex_slots = n_vertices if n_vertices >= 2 else 0
        dims.append(DimensionSlots(d.index, vertex_slots, len(d.generators.rays)))
    return SlotLayout(tuple(dims))


def expl_reset(space: ScheduleSpace) -> ExplorationState:
    layout = make_slot_layout(space)  # raises on invalid spaces
    return ExplorationState((None,) * layout.total_slots, 0)


def expl_is_terminal(state: ExplorationState) -> bool:
    return state.cursor >= len(state.values)


def expl_step(
    state: ExplorationState, coeff: int, cfg: ExplorationConfig
) -> ExplorationState:
    if expl_is_terminal(state):
        raise InvalidActionError("terminal exploration state has no actions")
    if not isinstance(coeff, int) or isinstance(coeff, bool):
        raise InvalidActionError("coefficient choices must be integers")
    if not 0 <= coeff <= cfg.coeff_max:
        raise InvalidActionError(
            f"coefficient {coeff} outside 0..{cfg.coeff_max}"
        )
    values = list(state.values)
    values[state.cursor] = coeff
    return ExplorationState(tuple(values), state.cursor + 1)


def materialize_point(
    state: ExplorationState, space: ScheduleSpace
) -> SchedulePoint | None:
    """Turn a terminal slot assignment into one integer point per dimension.

    Returns None when some multi-vertex dimension received all-zero vertex
    weights (no convex combination exists).
    """
    if not expl_is_terminal(state):
        raise ValueError("materialization needs a terminal exploration state")
    layout = make_slot_layout(space)
    point_rows: list[tuple[int, ...]] = []
    pos = 0
    for d, slots in zip(space.dimensions, layout.dims):
        vertices = d.generators.vertex_coords()
        rays = d.generators.ray_coords()
        n = space.layout.size
        if slots.n_vertex_slots:
            weights = state.values[pos : pos + slots.n_vertex_slots]
            pos += slots.n_vertex_slots
            total = sum(weights)
            if total == 0:
                return None
            vertex_part = [
                Fraction(sum(w * v[i] for w, v in zip(weights, vertices)), total)
                for i in range(n)
            ]
        else:
            vertex_part = [Fraction(x) for x in vertices[0]]
        ray_weights = state.values[pos : pos + slots.n_ray_slots]
        pos += slots.n_ray_slots
        coords = [
            vertex_part[i] + sum(w * r[i] for w, r in zip(ray_weights, rays))
            for i in range(n)
        ]
        point_rows.append(lcd_scale(coords))
    return tuple(point_rows)
