"""Schedule objects, legality certification, proxy cost, and rewards.

Legality is checked in two tiers.  The symbolic tier builds, per dependence
and depth, the region of the dependence polyhedron where the schedule orders
the target at or before the source, and certifies legality when each region
is rationally empty.  The brute-force tier enumerates the dependence
polyhedron's lattice points under a concrete parameter binding and compares
schedule vectors lexicographically; its verdict is the report's verdict, and
it doubles as an oracle for the symbolic tier.

The proxy cost replays the scheduled access trace through an LRU stack of
64-byte cache lines (8-byte elements, row-major arrays) and charges
(1 + reuse distance).bit_length() per access, an integer-valued log2 of the
distinct-line reuse distance, so costs and speedup-like rewards stay exact
rationals end to end.  Cold misses are charged as a reuse distance of 2**16
lines.  The model is versioned in report metadata.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .farkas import CoefficientLayout, ScheduleSpace
from .exploration import SchedulePoint
from .geometry import (
    ConstraintKind,
    HPolyhedron,
    LinearConstraint,
    enumerate_lattice_points,
    is_empty,
)
from .scop import AffineForm, Dependence, Scop, Statement, ValidationError, validate_binding

__all__ = [
    "PROXY_MODEL_VERSION",
    "COLD_MISS_DISTANCE",
    "Schedule",
    "identity_schedule",
    "schedule_from_points",
    "DependenceVerdict",
    "LegalityReport",
    "check_legality",
    "proxy_cost",
    "OutcomeKind",
    "EpisodeOutcome",
    "RewardMode",
    "RewardConfig",
    "MeasurementError",
    "import_measurement",
    "compute_reward",
    "export_schedule",
    "schedule_to_json",
    "schedule_from_json",
]

PROXY_MODEL_VERSION = "1"
CACHE_LINE_BYTES = 64
ELEMENT_BYTES = 8
ELEMENTS_PER_LINE = CACHE_LINE_BYTES // ELEMENT_BYTES
COLD_MISS_DISTANCE = 2**16
DEFAULT_INSTANCE_CAP = 200_000


@dataclass(frozen=True)
class Schedule:
    """A k-dimensional affine schedule: per statement, k rows over
    (iterators ++ parameters ++ 1)."""

    k: int
    rows: tuple[tuple[str, tuple[AffineForm, ...]], ...]

    def __post_init__(self) -> None:
        for name, forms in self.rows:
            if len(forms) != self.k:
                raise ValueError(f"statement {name!r} has {len(forms)} rows, expected {self.k}")

    def statement_rows(self, name: str) -> tuple[AffineForm, ...]:
        for sname, forms in self.rows:
            if sname == name:
                return forms
        raise KeyError(name)

    def vector(self, name: str, iter_values: Sequence[int], param_values: Sequence[int]):
        values = tuple(iter_values) + tuple(param_values)
        return tuple(f.evaluate(values) for f in self.statement_rows(name))


def identity_schedule(scop: Scop) -> Schedule:
    """The 2d+1 interleaved schedule reproducing the original program order.

    Even slots carry the statement's syntactic position constants, odd slots
    the loop iterators; shallower statements are padded with zero rows to the
    common length.
    """
    k = max(2 * s.depth + 1 for s in scop.statements)
    n_params = len(scop.params)
    rows = []
    for s in scop.statements:
        arity = s.depth + n_params
        forms = []
        for m in range(2 * s.depth + 1):
            if m % 2 == 0:
                forms.append(AffineForm((0,) * arity, s.position[m]))
            else:
                coeffs = [0] * arity
                coeffs[(m - 1) // 2] = 1
                forms.append(AffineForm(tuple(coeffs), 0))
        while len(forms) < k:
            forms.append(AffineForm((0,) * arity, 0))
        rows.append((s.name, tuple(forms)))
    return Schedule(k, tuple(rows))


def schedule_from_points(point: SchedulePoint, layout: CoefficientLayout) -> Schedule:
    """Slice per-dimension coefficient points into per-statement affine rows."""
    k = len(point)
    if k == 0:
        raise ValueError("a schedule needs at least one dimension")
    for row in point:
        if len(row) != layout.size:
            raise ValueError(
                f"coefficient point has {len(row)} entries, layout has {layout.size}"
            )
    rows = []
    for block in layout.blocks:
        forms = []
        for d in range(k):
            seg = point[d][block.offset : block.offset + block.size]
            forms.append(AffineForm(tuple(seg[:-1]), seg[-1]))
        rows.append((block.name, tuple(forms)))
    return Schedule(k, tuple(rows))


# ---------------------------------------------------------------------------
# Legality


@dataclass(frozen=True)
class DependenceVerdict:
    dependence_id: int
    legal: bool
    carried_at: int | None  # first dimension by which all pairs are decided
    dim_status: tuple[str, ...]  # per dimension: "strong" | "weak" | "none"
    witness: tuple[tuple[int, ...], int] | None  # (lattice point, depth) if illegal
    certified_empty_depths: tuple[int, ...]  # symbolically refuted violation depths


@dataclass(frozen=True)
class LegalityReport:
    legal: bool
    verdicts: tuple[DependenceVerdict, ...]

    def verdict(self, dep_id: int) -> DependenceVerdict:
        for v in self.verdicts:
            if v.dependence_id == dep_id:
                return v
        raise KeyError(dep_id)


def _difference_forms(
    sched: Schedule, dep: Dependence, src: Statement, tgt: Statement, n_params: int
) -> list[tuple[tuple[int, ...], int]]:
    """Theta_tgt - Theta_src per dimension, over (src iters ++ tgt iters ++ params)."""
    total = src.depth + tgt.depth + n_params
    out = []
    src_rows = sched.statement_rows(src.name)
    tgt_rows = sched.statement_rows(tgt.name)
    for d in range(sched.k):
        row = [0] * total
        fs, ft = src_rows[d], tgt_rows[d]
        for i in range(src.depth):
            row[i] -= fs.coeffs[i]
        for i in range(tgt.depth):
            row[src.depth + i] += ft.coeffs[i]
        for p in range(n_params):
            row[src.depth + tgt.depth + p] += ft.coeffs[tgt.depth + p] - fs.coeffs[src.depth + p]
        out.append((tuple(row), ft.const - fs.const))
    return out


def _bind_dependence(
    dep: Dependence, src: Statement, tgt: Statement, binding: Mapping[str, int], params: Sequence[str]
) -> HPolyhedron:
    n_iters = src.depth + tgt.depth
    fixed = {n_iters + i: binding[p] for i, p in enumerate(params)}
    return dep.polyhedron.specialize(fixed)


@lru_cache(maxsize=4096)
def _cached_lattice_points(poly: HPolyhedron, lo: int, hi: int, n_vars: int) -> tuple[tuple[int, ...], ...]:
    # Enumeration depends only on the bound polyhedron and the box, never on
    # the schedule under test, so repeated episodes share one scan.
    return tuple(enumerate_lattice_points(poly, [(lo, hi)] * n_vars))


def check_legality(
    sched: Schedule,
    scop: Scop,
    deps: Sequence[Dependence],
    binding: Mapping[str, int],
    box: int | None = None,
    symbolic: bool = True,
) -> LegalityReport:
    """Certify that `sched` respects every dependence.

    A dependence is respected when, for every instance pair in its
    polyhedron, the first schedule dimension whose values differ orders the
    source strictly first; pairs with identical full schedule vectors are
    violations.  The brute-force tier enumerates lattice instance pairs under
    `binding` inside a ±box window and is the verdict; the symbolic tier
    (on by default) additionally refutes violation regions over *all*
    parameter values where it can, and is cross-checked against the oracle.
    """
    bound = validate_binding(scop, binding)
    param_values = [bound[p] for p in scop.params]
    if box is None:
        box = max(param_values, default=1) + 1
    verdicts = []
    all_legal = True
    for dep in deps:
        src = scop.statement(dep.source)
        tgt = scop.statement(dep.target)
        diffs = _difference_forms(sched, dep, src, tgt, len(scop.params))
        n_iters = src.depth + tgt.depth

        bound_poly = _bind_dependence(dep, src, tgt, bound, scop.params)
        points = _cached_lattice_points(bound_poly, -box, box, n_iters)

        def diff_value(d: int, pt: Sequence[int]) -> int:
            coeffs, const = diffs[d]
            return (
                sum(coeffs[i] * pt[i] for i in range(n_iters))
                + sum(
                    coeffs[n_iters + p] * param_values[p]
                    for p in range(len(param_values))
                )
                + const
            )

        legal = True
        witness = None
        deepest = 0
        mins = [None] * sched.k
        for pt in points:
            decided = None
            for d in range(sched.k):
                v = diff_value(d, pt)
                if mins[d] is None or v < mins[d]:
                    mins[d] = v
                if decided is None and v != 0:
                    decided = d
                    if v < 0:
                        legal = False
                        witness = (pt, d)
            if decided is None:
                legal = False
                witness = (pt, sched.k)
            else:
                deepest = max(deepest, decided)
            if not legal:
                break

        dim_status = tuple(
            "none" if m is None or m < 0 else ("strong" if m >= 1 else "weak")
            for m in mins
        )
        # None when illegal, and also for dependences with no instances
        # under this binding (vacuously legal).
        carried_at = (deepest + 1) if (legal and points) else None

        certified: list[int] = []
        if symbolic:
            certified = _refute_violation_regions(dep, diffs, sched.k, n_iters, len(scop.params))
            if witness is not None and witness[1] in certified:
                raise AssertionError(
                    f"symbolic tier certified depth {witness[1]} empty but the "
                    f"oracle found violation {witness} for dependence {dep.id}"
                )

        verdicts.append(
            DependenceVerdict(
                dependence_id=dep.id,
                legal=legal,
                carried_at=carried_at if legal else None,
                dim_status=dim_status,
                witness=witness,
                certified_empty_depths=tuple(certified),
            )
        )
        all_legal &= legal
    return LegalityReport(all_legal, tuple(verdicts))


def _refute_violation_regions(
    dep: Dependence,
    diffs: Sequence[tuple[tuple[int, ...], int]],
    k: int,
    n_iters: int,
    n_params: int,
) -> list[int]:
    """Depths whose violation region is rationally empty (params left free).

    Depth d < k: source and target tie on every earlier dimension and the
    target comes strictly first on dimension d.  Depth k: the full schedule
    vectors tie.  An empty region at every depth is a legality certificate
    valid for all parameter values.
    """
    certified = []
    names = dep.polyhedron.variable_names
    prefix: list[LinearConstraint] = []
    for d in range(k + 1):
        region = list(dep.polyhedron.constraints) + list(prefix)
        if d < k:
            coeffs, const = diffs[d]
            # target at or before source: -(diff) - 1 >= 0
            region.append(
                LinearConstraint(tuple(-c for c in coeffs), -const - 1, ConstraintKind.INEQ)
            )
            if is_empty(HPolyhedron(names, tuple(region))):
                certified.append(d)
            prefix.append(LinearConstraint(*diffs[d], ConstraintKind.EQ))
        else:
            if is_empty(HPolyhedron(names, tuple(region))):
                certified.append(d)
    return certified


# ---------------------------------------------------------------------------
# Proxy cost


def _statement_instances(
    scop: Scop, binding: Mapping[str, int], cap: int
) -> list[tuple[int, Statement, tuple[int, ...]]]:
    bound = validate_binding(scop, binding)
    param_values = [bound[p] for p in scop.params]
    box_hi = max(param_values, default=1) + 1
    out = []
    total = 0
    for si, s in enumerate(scop.statements):
        fixed = {s.depth + i: param_values[i] for i in range(len(scop.params))}
        dom = s.domain.specialize(fixed)
        pts = _cached_lattice_points(dom, -box_hi, box_hi, s.depth)
        total += len(pts)
        if total > cap:
            raise ValidationError(
                f"instance count exceeds proxy-cost cap {cap}; tighten the binding"
            )
        out.extend((si, s, p) for p in pts)
    return out


def proxy_cost(
    sched: Schedule,
    scop: Scop,
    binding: Mapping[str, int],
    cap: int = DEFAULT_INSTANCE_CAP,
) -> Fraction:
    """Locality proxy: replay the access trace in schedule order.

    Instances are ordered by schedule vector (ties broken by statement order,
    then iteration vector); each instance touches its accesses in declaration
    order.  Lower is better.  Deterministic and exact.
    """
    bound = validate_binding(scop, binding)
    param_values = [bound[p] for p in scop.params]
    instances = _statement_instances(scop, bound, cap)

    keyed = []
    for si, s, pt in instances:
        theta = sched.vector(s.name, pt, param_values)
        keyed.append((tuple(theta), si, pt, s))
    keyed.sort(key=lambda t: (t[0], t[1], t[2]))

    # First pass: index vectors per access, then per-array extents for
    # row-major flattening (negative indices shifted by the observed minimum).
    trace: list[tuple[str, tuple[int, ...]]] = []
    for _, _, pt, s in keyed:
        values = tuple(pt) + tuple(param_values)
        for acc in s.accesses:
            idx = tuple(f.evaluate(values) for f in acc.index_map)
            trace.append((acc.array, idx))

    extents: dict[str, list[tuple[int, int]]] = {}
    for array, idx in trace:
        if array not in extents:
            extents[array] = [(v, v) for v in idx]
        else:
            extents[array] = [
                (min(lo, v), max(hi, v)) for (lo, hi), v in zip(extents[array], idx)
            ]

    def flatten(array: str, idx: tuple[int, ...]) -> int:
        flat = 0
        for (lo, hi), v in zip(extents[array], idx):
            flat = flat * (hi - lo + 1) + (v - lo)
        return flat

    stack: list[tuple[str, int]] = []  # most recent last
    position: dict[tuple[str, int], int] = {}
    cost = 0
    for array, idx in trace:
        line = (array, flatten(array, idx) // ELEMENTS_PER_LINE)
        if line in position:
            depth = len(stack) - 1 - position[line]
            stack.pop(position[line])
            for entry in stack[position[line]:]:
                position[entry] -= 1
        else:
            depth = COLD_MISS_DISTANCE
        stack.append(line)
        position[line] = len(stack) - 1
        cost += (1 + depth).bit_length()
    return Fraction(cost)


# ---------------------------------------------------------------------------
# Outcomes and rewards


class OutcomeKind(enum.Enum):
    COMPLETE = "complete"
    INCOMPLETE = "incomplete"
    INVALID = "invalid"


@dataclass(frozen=True)
class EpisodeOutcome:
    kind: OutcomeKind
    reward: Fraction
    schedule: Schedule | None = None
    legal: bool | None = None
    report: LegalityReport | None = None

    def __post_init__(self) -> None:
        if self.kind is OutcomeKind.INCOMPLETE and self.reward != 0:
            raise ValueError("incomplete episodes reward 0")
        if self.kind is OutcomeKind.INVALID and self.reward >= 0:
            raise ValueError("invalid episodes reward a negative penalty")
        if self.kind is OutcomeKind.COMPLETE and self.schedule is None:
            raise ValueError("complete episodes carry a schedule")


class RewardMode(enum.Enum):
    PROXY_COST = "proxy"
    EXTERNAL_FILE = "external"


class MeasurementError(ValueError):
    """A measurement file failed validation."""


@dataclass(frozen=True)
class RewardConfig:
    mode: RewardMode = RewardMode.PROXY_COST
    invalid_penalty: Fraction = Fraction(-1)
    measurements: Mapping[str, Fraction] | None = None

    def __post_init__(self) -> None:
        if self.invalid_penalty >= 0:
            raise ValueError("invalid_penalty must be negative")
        if self.mode is RewardMode.EXTERNAL_FILE and self.measurements is None:
            raise ValueError("external reward mode needs a measurement table")


def import_measurement(path: str | Path) -> dict[str, Fraction]:
    """Parse an external measurement file.

    Whitespace-separated `episode-id speedup` lines; `#` starts a comment;
    blank lines ignored.  Speedups must be positive numbers, except for the
    literal token `timeout`, which records a timed-out measurement as 0.
    """
    out: dict[str, Fraction] = {}
    text = Path(path).read_text(encoding="utf-8")
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MeasurementError(f"line {ln}: expected 'episode-id speedup'")
        episode, value = parts
        if episode in out:
            raise MeasurementError(f"line {ln}: duplicate episode id {episode!r}")
        if value == "timeout":
            out[episode] = Fraction(0)
            continue
        try:
            speedup = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise MeasurementError(f"line {ln}: bad speedup {value!r}") from exc
        if speedup <= 0:
            raise MeasurementError(f"line {ln}: speedup must be positive, got {value}")
        out[episode] = speedup
    return out


def compute_reward(
    kind: OutcomeKind,
    cfg: RewardConfig,
    *,
    legal: bool | None = None,
    candidate_cost: Fraction | None = None,
    baseline_cost: Fraction | None = None,
    episode_id: str | None = None,
) -> Fraction:
    """Terminal reward: speedup-like for complete legal schedules, 0 for
    incomplete episodes, the negative penalty for invalid or illegal ones."""
    if kind is OutcomeKind.INCOMPLETE:
        return Fraction(0)
    if kind is OutcomeKind.INVALID:
        return cfg.invalid_penalty
    if legal is not True:
        return cfg.invalid_penalty
    if cfg.mode is RewardMode.PROXY_COST:
        if candidate_cost is None or baseline_cost is None:
            raise ValueError("proxy reward needs baseline and candidate costs")
        if candidate_cost == 0 and baseline_cost == 0:
            return Fraction(1)  # degenerate SCoP with no accesses
        if candidate_cost == 0:
            raise ValueError("candidate proxy cost is zero with a nonzero baseline")
        return baseline_cost / candidate_cost
    if episode_id is None:
        raise ValueError("external reward needs an episode id")
    assert cfg.measurements is not None
    if episode_id not in cfg.measurements:
        raise MeasurementError(f"no measurement recorded for episode {episode_id!r}")
    return cfg.measurements[episode_id]


# ---------------------------------------------------------------------------
# Schedule export / import


def _render_affine(form: AffineForm, names: Sequence[str]) -> str:
    parts = []
    for c, name in zip(form.coeffs, names):
        if c == 0:
            continue
        if c == 1:
            parts.append(("+", name))
        elif c == -1:
            parts.append(("-", name))
        else:
            parts.append(("+" if c > 0 else "-", f"{abs(c)}{name}"))
    if form.const != 0 or not parts:
        parts.append(("+" if form.const >= 0 else "-", str(abs(form.const))))
    text = ""
    for sign, term in parts:
        if not text:
            text = term if sign == "+" else f"-{term}"
        else:
            text += sign + term
    return text


def export_schedule(sched: Schedule, scop: Scop) -> str:
    """Deterministic text form, one line per statement:
    ``S[i] -> [0, i, 0]``."""
    lines = []
    for s in scop.statements:
        forms = sched.statement_rows(s.name)
        names = tuple(s.iter_vars) + tuple(scop.params)
        rendered = ", ".join(_render_affine(f, names) for f in forms)
        lines.append(f"{s.name}[{','.join(s.iter_vars)}] -> [{rendered}]")
    return "\n".join(lines) + "\n"


def schedule_to_json(sched: Schedule, scop: Scop) -> dict:
    """Machine-readable twin of the text export; round-trips exactly."""
    return {
        "k": sched.k,
        "statements": [
            {
                "name": s.name,
                "iters": list(s.iter_vars),
                "rows": [
                    list(f.coeffs) + [f.const]
                    for f in sched.statement_rows(s.name)
                ],
            }
            for s in scop.statements
        ],
    }


def schedule_from_json(data: Mapping, scop: Scop) -> Schedule:
    if not isinstance(data, Mapping) or "k" not in data or "statements" not in data:
        raise ValidationError("schedule JSON needs 'k' and 'statements'")
    k = data["k"]
    if not isinstance(k, int) or k < 1:
        raise ValidationError("schedule dimension k must be a positive integer")
    by_name = {}
    for raw in data["statements"]:
        name = raw.get("name")
        rows = raw.get("rows")
        if not isinstance(name, str) or not isinstance(rows, list) or len(rows) != k:
            raise ValidationError(f"statement entry {raw!r} is malformed")
        stmt = scop.statement(name)
        arity = stmt.depth + len(scop.params)
        forms = []
        for row in rows:
            if not isinstance(row, list) or len(row) != arity + 1:
                raise ValidationError(f"schedule row {row!r} has wrong arity")
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in row):
                raise ValidationError(f"schedule row {row!r} must hold integers")
            forms.append(AffineForm(tuple(row[:-1]), row[-1]))
        by_name[name] = tuple(forms)
    missing = [s.name for s in scop.statements if s.name not in by_name]
    if missing:
        raise ValidationError(f"schedule is missing statements {missing}")
    return Schedule(k, tuple((s.name, by_name[s.name]) for s in scop.statements))
