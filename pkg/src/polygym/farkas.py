"""Legal schedule-coefficient polytopes via the affine form of Farkas' lemma.

For a dependence with polyhedron P and a carrying strength delta (1 = strong,
0 = weak), the set of schedule coefficient vectors c with

    Theta_target(t) - Theta_source(s) - delta >= 0   for all (s, t) in P

equals the projection onto c of the linear system

    Theta_target - Theta_source - delta
        = lambda_0 + sum_k lambda_k * (row_k . z + const_k),   lambda >= 0,

with one multiplier per inequality row of P (equalities are split into two
opposite inequalities so every multiplier carries an explicit sign
constraint).  The multipliers are eliminated by converting the combined system
to generators and projecting the generators, never by Fourier-Motzkin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .geometry import (
    ConstraintKind,
    GeneratorSet,
    HPolyhedron,
    LinearConstraint,
    chernikova,
    project_generators,
)
from .scop import Dependence, Scop

__all__ = [
    "CoefficientLayout",
    "StatementBlock",
    "FarkasSystem",
    "DimensionSpace",
    "ScheduleSpace",
    "make_layout",
    "legality_system",
    "dimension_generators",
    "build_schedule_space",
    "SpaceBuilder",
]


@dataclass(frozen=True)
class StatementBlock:
    """One statement's slice of the coefficient vector: iters, params, const."""

    name: str
    offset: int
    n_iters: int
    n_params: int

    @property
    def size(self) -> int:
        return self.n_iters + self.n_params + 1

    @property
    def const_index(self) -> int:
        return self.offset + self.n_iters + self.n_params

    def iter_index(self, i: int) -> int:
        return self.offset + i

    def param_index(self, p: int) -> int:
        return self.offset + self.n_iters + p


@dataclass(frozen=True)
class CoefficientLayout:
    """Fixed ordering of all schedule coefficients for one SCoP.

    Per statement, in SCoP order: iterator coefficients, parameter
    coefficients, then the constant.
    """

    blocks: tuple[StatementBlock, ...]
    variable_names: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.variable_names)

    def block(self, name: str) -> StatementBlock:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


def make_layout(scop: Scop) -> CoefficientLayout:
    blocks = []
    names: list[str] = []
    offset = 0
    for s in scop.statements:
        blocks.append(StatementBlock(s.name, offset, s.depth, len(scop.params)))
        names.extend(f"{s.name}.{v}" for v in s.iter_vars)
        names.extend(f"{s.name}.{p}" for p in scop.params)
        names.append(f"{s.name}.1")
        offset += blocks[-1].size
    return CoefficientLayout(tuple(blocks), tuple(names))


@dataclass(frozen=True)
class FarkasSystem:
    """One dependence's legality constraints over coefficients ++ multipliers."""

    base: HPolyhedron
    coeff_indices: tuple[int, ...]
    multiplier_count: int


def _inequality_rows(poly: HPolyhedron) -> list[tuple[tuple[int, ...], int]]:
    """All-inequality view of a polyhedron (equalities become two rows)."""
    rows = []
    for c in poly.constraints:
        rows.append((c.coeffs, c.const))
        if c.kind is ConstraintKind.EQ:
            rows.append((tuple(-x for x in c.coeffs), -c.const))
    return rows


def _farkas_rows(
    dep: Dependence,
    delta: int,
    layout: CoefficientLayout,
    mult_offset: int,
    total: int,
) -> list[LinearConstraint]:
    """Equality rows tying coefficients to this dependence's multipliers,
    plus the multiplier sign rows, in a `total`-wide ambient space whose
    multiplier block starts at `mult_offset` (lambda_0 first)."""
    src = layout.block(dep.source)
    tgt = layout.block(dep.target)
    n_params = src.n_params
    rows = _inequality_rows(dep.polyhedron)
    n_z = src.n_iters + tgt.n_iters + n_params
    if dep.polyhedron.ambient_dim != n_z:
        raise ValueError(
            f"dependence {dep.id} polyhedron arity {dep.polyhedron.ambient_dim} "
            f"does not match endpoints ({n_z})"
        )

    out: list[LinearConstraint] = []
    # One equality per dependence-space variable: coefficient of z_v in
    # Theta_tgt - Theta_src equals the multiplier combination of row
    # coefficients.
    for v in range(n_z):
        row = [0] * total
        if v < src.n_iters:
            row[src.iter_index(v)] += -1
        elif v < src.n_iters + tgt.n_iters:
            row[tgt.iter_index(v - src.n_iters)] += 1
        else:
            p = v - src.n_iters - tgt.n_iters
            row[tgt.param_index(p)] += 1
            row[src.param_index(p)] += -1
        for k, (coeffs, _) in enumerate(rows):
            row[mult_offset + 1 + k] -= coeffs[v]
        out.append(LinearConstraint(tuple(row), 0, ConstraintKind.EQ))

    # Constant part: const(Theta_tgt - Theta_src) - delta
    #              = lambda_0 + sum lambda_k const_k.
    row = [0] * total
    row[tgt.const_index] += 1
    row[src.const_index] += -1
    row[mult_offset] -= 1
    for k, (_, const) in enumerate(rows):
        row[mult_offset + 1 + k] -= const
    out.append(LinearConstraint(tuple(row), -delta, ConstraintKind.EQ))

    for k in range(1 + len(rows)):
        row = [0] * total
        row[mult_offset + k] = 1
        out.append(LinearConstraint(tuple(row), 0, ConstraintKind.INEQ))
    return out


def _multiplier_names(dep: Dependence, delta: int) -> list[str]:
    n_rows = len(_inequality_rows(dep.polyhedron))
    tag = "s" if delta == 1 else "w"
    return [f"m{dep.id}{tag}.{k}" for k in range(1 + n_rows)]


def legality_system(dep: Dependence, delta: int, layout: CoefficientLayout) -> FarkasSystem:
    """The carrying condition for one dependence as an explicit linear system.

    delta = 1 demands strict advancement of the target over the source
    (strong carrying), delta = 0 only forbids regression (weak carrying).
    """
    if delta not in (0, 1):
        raise ValueError("delta must be 0 (weak) or 1 (strong)")
    if not dep.polyhedron.constraints:
        # A constraint-free dependence space is legal only in the weak sense
        # of a constant offset; it still builds fine.
        pass
    n = layout.size
    mult_count = 1 + len(_inequality_rows(dep.polyhedron))
    total = n + mult_count
    names = layout.variable_names + tuple(_multiplier_names(dep, delta))
    constraints = _farkas_rows(dep, delta, layout, n, total)
    base = HPolyhedron(names, tuple(constraints))
    return FarkasSystem(base, tuple(range(n)), mult_count)


def dimension_generators(
    strong: Sequence[Dependence],
    weak: Sequence[Dependence],
    layout: CoefficientLayout,
) -> GeneratorSet:
    """Generators of the coefficient vectors carrying `strong` strongly and
    `weak` at least weakly, with multipliers projected away.

    With no dependences at all this is the full coefficient space.
    """
    n = layout.size
    pairs = [(dep, 1) for dep in strong] + [(dep, 0) for dep in weak]
    total = n + sum(1 + len(_inequality_rows(dep.polyhedron)) for dep, _ in pairs)
    names = list(layout.variable_names)
    constraints: list[LinearConstraint] = []
    offset = n
    for dep, delta in pairs:
        constraints.extend(_farkas_rows(dep, delta, layout, offset, total))
        names.extend(_multiplier_names(dep, delta))
        offset += 1 + len(_inequality_rows(dep.polyhedron))
    combined = HPolyhedron(tuple(names), tuple(constraints))
    gens = chernikova(combined)
    return project_generators(gens, range(n))


@dataclass(frozen=True)
class DimensionSpace:
    index: int  # 1-based schedule dimension
    strong_ids: tuple[int, ...]
    weak_ids: tuple[int, ...]
    generators: GeneratorSet


@dataclass(frozen=True)
class ScheduleSpace:
    layout: CoefficientLayout
    dimensions: tuple[DimensionSpace, ...]
    assignment: tuple[tuple[int, int], ...]  # (dependence id, carrying dim)

    @property
    def k(self) -> int:
        return len(self.dimensions)

    @property
    def is_valid(self) -> bool:
        return all(not d.generators.is_empty for d in self.dimensions)

    @property
    def invalid_dimensions(self) -> tuple[int, ...]:
        return tuple(d.index for d in self.dimensions if d.generators.is_empty)


class SpaceBuilder:
    """Builds per-dimension generator sets with a (strong, weak) result cache.

    The cache is keyed by the sorted dependence-id sets, so repeated episodes
    over the same SCoP reuse every conversion.
    """

    def __init__(self, deps: Sequence[Dependence], layout: CoefficientLayout):
        self._deps = {d.id: d for d in deps}
        self._layout = layout
        self._cache: dict[tuple[tuple[int, ...], tuple[int, ...]], GeneratorSet] = {}

    @property
    def layout(self) -> CoefficientLayout:
        return self._layout

    def generators(
        self, strong_ids: Iterable[int], weak_ids: Iterable[int]
    ) -> GeneratorSet:
        key = (tuple(sorted(strong_ids)), tuple(sorted(weak_ids)))
        if set(key[0]) & set(key[1]):
            raise ValueError("a dependence cannot be both strong and weak")
        if key not in self._cache:
            self._cache[key] = dimension_generators(
                [self._deps[i] for i in key[0]],
                [self._deps[i] for i in key[1]],
                self._layout,
            )
        return self._cache[key]

    def build(self, assignment: Mapping[int, int], k: int) -> ScheduleSpace:
        return build_schedule_space(assignment, list(self._deps.values()), self._layout, k, self)


def build_schedule_space(
    assignment: Mapping[int, int],
    deps: Sequence[Dependence],
    layout: CoefficientLayout,
    k: int,
    _builder: SpaceBuilder | None = None,
) -> ScheduleSpace:
    """Realize a dependence-to-dimension assignment as per-dimension generators.

    Dimension d carries strongly every dependence assigned to d and weakly
    every dependence assigned deeper; dependences carried before d are
    dropped.  The result is flagged invalid if any dimension comes back
    empty.
    """
    ids = {d.id for d in deps}
    for dep_id, dim in assignment.items():
        if dep_id not in ids:
            raise ValueError(f"assignment references unknown dependence {dep_id}")
        if not 1 <= dim <= k:
            raise ValueError(f"dependence {dep_id} assigned outside 1..{k}")
    if set(assignment) != ids:
        raise ValueError("every dependence needs a carrying dimension")
    builder = _builder or SpaceBuilder(deps, layout)
    dims = []
    for d in range(1, k + 1):
        strong = tuple(sorted(i for i, dim in assignment.items() if dim == d))
        weak = tuple(sorted(i for i, dim in assignment.items() if dim > d))
        dims.append(
            DimensionSpace(d, strong, weak, builder.generators(strong, weak))
        )
    ordered = tuple(sorted(assignment.items()))
    return ScheduleSpace(layout, tuple(dims), ordered)
