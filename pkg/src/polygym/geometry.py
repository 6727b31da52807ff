"""Exact rational linear geometry for lattice polyhedra.

Polyhedra are kept in constraint form (`HPolyhedron`) and converted to a
vertex/ray generator form (`GeneratorSet`) by a double-description pass
(`chernikova`).  Lines are never reported as a separate generator kind: the
lineality space is split into pairs of opposite rays, so a non-pointed
polyhedron comes back as one representative vertex plus ray pairs.

All arithmetic is exact (int / fractions.Fraction); there is no floating
point anywhere in this module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence, Union

Scalar = Union[int, Fraction]

__all__ = [
    "ConstraintKind",
    "LinearConstraint",
    "HPolyhedron",
    "GeneratorKind",
    "Generator",
    "GeneratorSet",
    "ResourceError",
    "ineq",
    "eq",
    "chernikova",
    "project_generators",
    "contains",
    "is_empty",
    "enumerate_lattice_points",
    "lcd_scale",
]

DEFAULT_LATTICE_CAP = 10**7


class ResourceError(RuntimeError):
    """An enumeration request exceeded its configured size cap."""


class ConstraintKind(enum.Enum):
    INEQ = "ge"  # coeffs . x + const >= 0
    EQ = "eq"    # coeffs . x + const == 0


def _vec_gcd(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, v)
    return g


def _primitive(vec: Sequence[int]) -> tuple[int, ...]:
    """Divide an integer vector by the gcd of its entries (direction kept)."""
    g = _vec_gcd(vec)
    if g <= 1:
        return tuple(vec)
    return tuple(v // g for v in vec)


def _as_int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"expected an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class LinearConstraint:
    """Affine constraint ``coeffs . x + const >= 0`` (or ``== 0``) with integer data.

    Stored normalized: coefficients and constant divided by their gcd, and
    equalities sign-canonicalized (first nonzero entry positive) so that
    structurally equal constraints compare equal.
    """

    coeffs: tuple[int, ...]
    const: int
    kind: ConstraintKind = ConstraintKind.INEQ

    def __post_init__(self) -> None:
        coeffs = tuple(_as_int(c) for c in self.coeffs)
        const = _as_int(self.const)
        g = _vec_gcd(coeffs + (const,))
        if g > 1:
            coeffs = tuple(c // g for c in coeffs)
            const //= g
        if self.kind is ConstraintKind.EQ:
            lead = next((c for c in coeffs + (const,) if c != 0), 0)
            if lead < 0:
                coeffs = tuple(-c for c in coeffs)
                const = -const
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "const", const)

    def evaluate(self, point: Sequence[Scalar]) -> Scalar:
        if len(point) != len(self.coeffs):
            raise ValueError(
                f"point has {len(point)} coordinates, constraint has {len(self.coeffs)}"
            )
        return sum(c * x for c, x in zip(self.coeffs, point)) + self.const

    def holds(self, point: Sequence[Scalar]) -> bool:
        value = self.evaluate(point)
        if self.kind is ConstraintKind.EQ:
            return value == 0
        return value >= 0

    def negated(self) -> "LinearConstraint":
        """For an equality, the same row; inequalities have no negation here."""
        if self.kind is not ConstraintKind.EQ:
            raise ValueError("only equality constraints can be flipped in place")
        return self


def ineq(coeffs: Sequence[int], const: int = 0) -> LinearConstraint:
    return LinearConstraint(tuple(coeffs), const, ConstraintKind.INEQ)


def eq(coeffs: Sequence[int], const: int = 0) -> LinearConstraint:
    return LinearConstraint(tuple(coeffs), const, ConstraintKind.EQ)


@dataclass(frozen=True)
class HPolyhedron:
    """Conjunction of integer affine constraints over named variables."""

    variable_names: tuple[str, ...]
    constraints: tuple[LinearConstraint, ...]

    def __post_init__(self) -> None:
        names = tuple(self.variable_names)
        cons = tuple(self.constraints)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names: {names}")
        for c in cons:
            if len(c.coeffs) != len(names):
                raise ValueError(
                    f"constraint arity {len(c.coeffs)} != ambient dimension {len(names)}"
                )
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "constraints", cons)

    @property
    def ambient_dim(self) -> int:
        return len(self.variable_names)

    def contains(self, point: Sequence[Scalar]) -> bool:
        if len(point) != self.ambient_dim:
            raise ValueError(
                f"point has {len(point)} coordinates, polyhedron is {self.ambient_dim}-dimensional"
            )
        return all(c.holds(point) for c in self.constraints)

    def conjoin(self, extra: Iterable[LinearConstraint]) -> "HPolyhedron":
        return HPolyhedron(self.variable_names, self.constraints + tuple(extra))

    def specialize(self, fixed: Mapping[int, int]) -> "HPolyhedron":
        """Substitute integer values for the given variable indices."""
        for idx in fixed:
            if not 0 <= idx < self.ambient_dim:
                raise IndexError(f"variable index {idx} out of range")
        keep = [i for i in range(self.ambient_dim) if i not in fixed]
        new_cons = []
        for c in self.constraints:
            const = c.const + sum(c.coeffs[i] * fixed[i] for i in fixed)
            coeffs = tuple(c.coeffs[i] for i in keep)
            new_cons.append(LinearConstraint(coeffs, const, c.kind))
        names = tuple(self.variable_names[i] for i in keep)
        return HPolyhedron(names, tuple(new_cons))

    def canonical(self) -> "HPolyhedron":
        """Deduplicated, sorted constraint list (same point set)."""
        seen = sorted(
            set(self.constraints),
            key=lambda c: (c.kind.value, c.coeffs, c.const),
        )
        return HPolyhedron(self.variable_names, tuple(seen))


class GeneratorKind(enum.Enum):
    VERTEX = "vertex"
    RAY = "ray"


@dataclass(frozen=True)
class Generator:
    """A vertex (rational coordinates) or a ray (primitive integer direction)."""

    kind: GeneratorKind
    coords: tuple

    def __post_init__(self) -> None:
        if self.kind is GeneratorKind.VERTEX:
            coords = tuple(Fraction(c) for c in self.coords)
        else:
            coords = tuple(_as_int(c) for c in self.coords)
            if all(c == 0 for c in coords):
                raise ValueError("a ray must have a nonzero direction")
            coords = _primitive(coords)
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class GeneratorSet:
    """Vertex/ray description of a polyhedron.

    Canonical ordering: vertices before rays, each sorted lexicographically by
    coordinates.  An empty polyhedron has both lists empty.
    """

    ambient_dim: int
    vertices: tuple[Generator, ...]
    rays: tuple[Generator, ...]

    def __post_init__(self) -> None:
        for g in self.vertices:
            if g.kind is not GeneratorKind.VERTEX or len(g.coords) != self.ambient_dim:
                raise ValueError("malformed vertex list")
        for g in self.rays:
            if g.kind is not GeneratorKind.RAY or len(g.coords) != self.ambient_dim:
                raise ValueError("malformed ray list")
        if self.rays and not self.vertices:
            raise ValueError("a nonempty generator set needs at least one vertex")
        verts = tuple(sorted(self.vertices, key=lambda g: g.coords))
        rays = tuple(sorted(self.rays, key=lambda g: g.coords))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "rays", rays)

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def vertex_coords(self) -> list[tuple[Fraction, ...]]:
        return [g.coords for g in self.vertices]

    def ray_coords(self) -> list[tuple[int, ...]]:
        return [g.coords for g in self.rays]


def _make_generator_set(
    dim: int,
    vertices: Iterable[Sequence[Scalar]],
    rays: Iterable[Sequence[int]],
) -> GeneratorSet:
    vset = {tuple(Fraction(c) for c in v) for v in vertices}
    rset = {_primitive(tuple(r)) for r in rays}
    rset.discard((0,) * dim)
    if not vset:
        return GeneratorSet(dim, (), ())
    return GeneratorSet(
        dim,
        tuple(Generator(GeneratorKind.VERTEX, v) for v in vset),
        tuple(Generator(GeneratorKind.RAY, r) for r in rset),
    )


# ---------------------------------------------------------------------------
# Double description


def _dot(f: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(f, v))


class _Ray:
    """Mutable worker record: integer direction + zero set of processed rows."""

    __slots__ = ("vec", "zeros")

    def __init__(self, vec: tuple[int, ...], zeros: int):
        self.vec = vec
        self.zeros = zeros


def _recompute_zeros(vec: Sequence[int], processed: list[tuple[int, ...]]) -> int:
    mask = 0
    for i, f in enumerate(processed):
        if _dot(f, vec) == 0:
            mask |= 1 << i
    return mask


def _double_description(
    eq_rows: list[tuple[int, ...]],
    ineq_rows: list[tuple[int, ...]],
    dim: int,
) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Extreme rays of ``{v : eq_rows . v = 0, ineq_rows . v >= 0}``.

    Returns (lineality basis, extreme rays modulo the lineality space).  The
    incremental step keeps the invariant that `lineality` spans the exact
    lineality space of the cone described by the processed rows and `rays`
    are the extreme rays of its pointed quotient, which is what makes the
    combinatorial adjacency test below exact.
    """
    lineality: list[tuple[int, ...]] = [
        tuple(1 if j == i else 0 for j in range(dim)) for i in range(dim)
    ]
    rays: list[_Ray] = []
    processed: list[tuple[int, ...]] = []

    for f, is_eq in [(r, True) for r in eq_rows] + [(r, False) for r in ineq_rows]:
        pivot = None
        for idx, line in enumerate(lineality):
            if _dot(f, line) != 0:
                pivot = idx
                break
        if pivot is not None:
            l0 = lineality.pop(pivot)
            v0 = _dot(f, l0)
            if v0 < 0:
                l0 = tuple(-x for x in l0)
                v0 = -v0
            lineality = [
                _primitive(tuple(v0 * w[i] - _dot(f, w) * l0[i] for i in range(dim)))
                for w in lineality
            ]
            for r in rays:
                fr = _dot(f, r.vec)
                if fr != 0:
                    r.vec = _primitive(
                        tuple(v0 * r.vec[i] - fr * l0[i] for i in range(dim))
                    )
                r.zeros |= 1 << len(processed)
            if not is_eq:
                # The pivot direction survives on its positive side; it was in
                # the lineality space, so every earlier row vanishes on it.
                newcomer = _Ray(l0, (1 << len(processed)) - 1)
                rays.append(newcomer)
            processed.append(f)
            continue

        # f vanishes on the lineality space: ordinary double-description step.
        bit = 1 << len(processed)
        plus: list[tuple[_Ray, int]] = []
        minus: list[tuple[_Ray, int]] = []
        zero: list[_Ray] = []
        for r in rays:
            val = _dot(f, r.vec)
            if val > 0:
                plus.append((r, val))
            elif val < 0:
                minus.append((r, val))
            else:
                r.zeros |= bit
                zero.append(r)
        keep: list[_Ray] = zero if is_eq else zero + [r for r, _ in plus]
        current = {r.vec for r in rays}
        new_rays: dict[tuple[int, ...], _Ray] = {}
        for rp, vp in plus:
            for rm, vm in minus:
                meet = rp.zeros & rm.zeros
                adjacent = True
                for other in rays:
                    if other is rp or other is rm:
                        continue
                    if meet & other.zeros == meet:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                combo = _primitive(
                    tuple(vp * rm.vec[i] - vm * rp.vec[i] for i in range(dim))
                )
                if all(x == 0 for x in combo) or combo in current:
                    continue
                if combo not in new_rays:
                    new_rays[combo] = _Ray(combo, 0)
        processed.append(f)
        for r in new_rays.values():
            r.zeros = _recompute_zeros(r.vec, processed)
        rays = keep + list(new_rays.values())

    return lineality, [r.vec for r in rays]


def chernikova(h: HPolyhedron) -> GeneratorSet:
    """Convert constraint form to generator form, exactly.

    The polyhedron is homogenized to a cone over (x, t) with t >= 0; rays of
    the cone with t > 0 become vertices x/t, rays with t = 0 stay rays, and
    lineality directions are emitted as two opposite rays each.  The result is
    canonical: primitive sorted rays, sorted rational vertices.
    """
    n = h.ambient_dim
    eq_rows: set[tuple[int, ...]] = set()
    ineq_rows: set[tuple[int, ...]] = {(0,) * n + (1,)}  # homogenization: t >= 0
    for c in h.constraints:
        row = c.coeffs + (c.const,)
        if c.kind is ConstraintKind.EQ:
            eq_rows.add(row)
        else:
            ineq_rows.add(row)

    lineality, rays = _double_description(sorted(eq_rows), sorted(ineq_rows), n + 1)

    vertices: list[tuple[Fraction, ...]] = []
    ray_dirs: list[tuple[int, ...]] = []
    for vec in rays:
        t = vec[-1]
        if t > 0:
            vertices.append(tuple(Fraction(x, t) for x in vec[:-1]))
        else:
            # t < 0 cannot happen: t >= 0 is one of the processed rows.
            ray_dirs.append(vec[:-1])
    if not vertices:
        return GeneratorSet(n, (), ())
    for line in lineality:
        # Lineality directions satisfy every row with equality, hence t = 0.
        base = line[:-1]
        ray_dirs.append(base)
        ray_dirs.append(tuple(-x for x in base))
    return _make_generator_set(n, vertices, ray_dirs)


def project_generators(g: GeneratorSet, keep_indices: Sequence[int]) -> GeneratorSet:
    """Restrict every generator to the given coordinate positions.

    Duplicates are merged and rays that project to zero are dropped.  No
    redundancy elimination is attempted: a vertex interior to the projected
    hull is kept (it is still a valid combination seed).
    """
    for idx in keep_indices:
        if not 0 <= idx < g.ambient_dim:
            raise IndexError(f"coordinate index {idx} out of range")
    dim = len(keep_indices)
    if g.is_empty:
        return GeneratorSet(dim, (), ())
    vertices = [tuple(v.coords[i] for i in keep_indices) for v in g.vertices]
    rays = []
    for r in g.rays:
        vec = tuple(r.coords[i] for i in keep_indices)
        if any(x != 0 for x in vec):
            rays.append(vec)
    return _make_generator_set(dim, vertices, rays)


def contains(h: HPolyhedron, point: Sequence[Scalar]) -> bool:
    return h.contains(point)


def is_empty(h: HPolyhedron) -> bool:
    """Rational emptiness, decided by the generator conversion."""
    return chernikova(h).is_empty


def enumerate_lattice_points(
    h: HPolyhedron,
    box: Sequence[tuple[int, int]],
    cap: int = DEFAULT_LATTICE_CAP,
) -> list[tuple[int, ...]]:
    """All integer points of ``h`` inside the closed box, in lexicographic order."""
    if len(box) != h.ambient_dim:
        raise ValueError(
            f"box has {len(box)} ranges, polyhedron is {h.ambient_dim}-dimensional"
        )
    volume = 1
    for lo, hi in box:
        volume *= max(0, hi - lo + 1)
    if volume > cap:
        raise ResourceError(f"lattice box volume {volume} exceeds cap {cap}")
    if volume == 0:
        return []
    ranges = [range(lo, hi + 1) for lo, hi in box]
    cons = h.constraints
    return [p for p in product(*ranges) if all(c.holds(p) for c in cons)]


def lcd_scale(vector: Sequence[Scalar]) -> tuple[int, ...]:
    """Scale a rational vector by the least common denominator of its entries.

    Integer vectors are returned unchanged (the LCD is 1).
    """
    fracs = [Fraction(v) for v in vector]
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // math.gcd(denom, f.denominator)
    scaled = [f * denom for f in fracs]
    assert all(f.denominator == 1 for f in scaled)
    return tuple(int(f) for f in scaled)
