"""Static-control program parts: statements, affine accesses, dependences.

A SCoP is read from a JSON description.  Every statement has an iteration
domain over its own iterator variables plus the global parameters, a list of
affine array accesses, and a syntactic position vector of length
2*d+1 (constants at even slots, loop levels at odd slots) that encodes the
original interleaved execution order.

`compute_memory_dependences` produces the classic memory-based (access
conflict) dependence polyhedra, one convex polyhedron per conflicting access
pair and carrying depth, deduplicated and deterministically ordered.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .geometry import (
    ConstraintKind,
    HPolyhedron,
    LinearConstraint,
    is_empty,
)

__all__ = [
    "ValidationError",
    "AccessKind",
    "AffineForm",
    "Access",
    "Statement",
    "Dependence",
    "Scop",
    "parse_scop",
    "serialize_scop",
    "validate_binding",
    "compute_memory_dependences",
]


class ValidationError(ValueError):
    """A SCoP description failed structural validation."""


class AccessKind(enum.Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class AffineForm:
    """``coeffs . vars + const`` over a statement's iterators followed by params."""

    coeffs: tuple[int, ...]
    const: int

    def evaluate(self, values: Sequence[int]):
        if len(values) != len(self.coeffs):
            raise ValueError("affine form arity mismatch")
        return sum(c * v for c, v in zip(self.coeffs, values)) + self.const


@dataclass(frozen=True)
class Access:
    array: str
    kind: AccessKind
    index_map: tuple[AffineForm, ...]


@dataclass(frozen=True)
class Statement:
    name: str
    iter_vars: tuple[str, ...]
    domain: HPolyhedron  # over iter_vars ++ params
    accesses: tuple[Access, ...]
    position: tuple[int, ...]  # length 2*len(iter_vars)+1, iterator slots zero

    @property
    def depth(self) -> int:
        return len(self.iter_vars)


@dataclass(frozen=True)
class Dependence:
    """A convex memory-based dependence from source to target instances.

    The polyhedron ranges over source iterators, then target iterators, then
    parameters.  `depth` is the interleaved-position index whose disjunct
    produced it (even: textual order decides; odd: carried by that loop
    level).  It is rationally nonempty by construction.
    """

    id: int  # 1-based
    source: str
    target: str
    polyhedron: HPolyhedron
    depth: int = 0
    source_access: int = -1
    target_access: int = -1


@dataclass(frozen=True)
class Scop:
    name: str
    params: tuple[str, ...]
    statements: tuple[Statement, ...]
    dependences: tuple[Dependence, ...] = ()

    def statement(self, name: str) -> Statement:
        for s in self.statements:
            if s.name == name:
                return s
        raise KeyError(name)

    def statement_index(self, name: str) -> int:
        for i, s in enumerate(self.statements):
            if s.name == name:
                return i
        raise KeyError(name)


def validate_binding(scop: Scop, binding: Mapping[str, int]) -> dict[str, int]:
    """Check that every parameter is bound to a nonnegative integer."""
    out = {}
    for p in scop.params:
        if p not in binding:
            raise ValidationError(f"parameter {p!r} is not bound")
        v = binding[p]
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ValidationError(f"parameter {p!r} must be a nonnegative integer")
        out[p] = v
    return out


# ---------------------------------------------------------------------------
# JSON parsing / serialization


_KIND_TO_JSON = {ConstraintKind.INEQ: "ge", ConstraintKind.EQ: "eq"}
_KIND_FROM_JSON = {"ge": ConstraintKind.INEQ, "eq": ConstraintKind.EQ}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _int_list(values, what: str) -> tuple[int, ...]:
    _require(isinstance(values, list), f"{what} must be a list")
    out = []
    for v in values:
        _require(isinstance(v, int) and not isinstance(v, bool), f"{what} must hold integers")
        out.append(v)
    return tuple(out)


def _parse_constraint(obj, arity: int, what: str) -> LinearConstraint:
    _require(isinstance(obj, dict), f"{what} must be an object")
    coeffs = _int_list(obj.get("coeffs"), f"{what}.coeffs")
    _require(len(coeffs) == arity, f"{what}.coeffs must have {arity} entries")
    const = obj.get("const", 0)
    _require(isinstance(const, int) and not isinstance(const, bool), f"{what}.const must be an integer")
    kind = obj.get("kind", "ge")
    _require(kind in _KIND_FROM_JSON, f"{what}.kind must be 'ge' or 'eq'")
    return LinearConstraint(coeffs, const, _KIND_FROM_JSON[kind])


def parse_scop(text: str) -> Scop:
    """Parse the JSON SCoP description; rejects malformed input loudly."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON: {exc}") from exc
    _require(isinstance(data, dict), "top level must be an object")
    name = data.get("name", "scop")
    _require(isinstance(name, str) and name, "name must be a nonempty string")
    params = tuple(data.get("params", []))
    _require(all(isinstance(p, str) and p for p in params), "params must be strings")
    _require(len(set(params)) == len(params), "duplicate parameter names")

    raw_stmts = data.get("statements")
    _require(isinstance(raw_stmts, list) and raw_stmts, "at least one statement is required")
    statements = []
    for si, raw in enumerate(raw_stmts):
        what = f"statements[{si}]"
        _require(isinstance(raw, dict), f"{what} must be an object")
        sname = raw.get("name")
        _require(isinstance(sname, str) and sname, f"{what}.name must be a nonempty string")
        iters = tuple(raw.get("iters", []))
        _require(all(isinstance(v, str) and v for v in iters), f"{what}.iters must be strings")
        _require(len(set(iters)) == len(iters), f"{what} has duplicate iterators")
        _require(not set(iters) & set(params), f"{what} iterators shadow parameters")
        arity = len(iters) + len(params)

        position = _int_list(raw.get("position"), f"{what}.position")
        _require(
            len(position) == 2 * len(iters) + 1,
            f"{what}.position must have length {2 * len(iters) + 1}",
        )
        _require(
            all(position[i] == 0 for i in range(1, len(position), 2)),
            f"{what}.position iterator slots (odd indices) must be zero",
        )

        dom = raw.get("domain", {})
        _require(isinstance(dom, dict), f"{what}.domain must be an object")
        cons = dom.get("constraints", [])
        _require(isinstance(cons, list), f"{what}.domain.constraints must be a list")
        constraints = tuple(
            _parse_constraint(c, arity, f"{what}.domain.constraints[{ci}]")
            for ci, c in enumerate(cons)
        )
        domain = HPolyhedron(iters + params, constraints)

        accesses = []
        for ai, racc in enumerate(raw.get("accesses", [])):
            awhat = f"{what}.accesses[{ai}]"
            _require(isinstance(racc, dict), f"{awhat} must be an object")
            arr = racc.get("array")
            _require(isinstance(arr, str) and arr, f"{awhat}.array must be a nonempty string")
            akind = racc.get("kind")
            _require(akind in ("read", "write"), f"{awhat}.kind must be 'read' or 'write'")
            amap = racc.get("map")
            _require(isinstance(amap, list) and amap, f"{awhat}.map must be a nonempty list")
            forms = []
            for di, dim in enumerate(amap):
                _require(isinstance(dim, dict), f"{awhat}.map[{di}] must be an object")
                coeffs = _int_list(dim.get("coeffs"), f"{awhat}.map[{di}].coeffs")
                _require(len(coeffs) == arity, f"{awhat}.map[{di}].coeffs must have {arity} entries")
                const = dim.get("const", 0)
                _require(
                    isinstance(const, int) and not isinstance(const, bool),
                    f"{awhat}.map[{di}].const must be an integer",
                )
                forms.append(AffineForm(coeffs, const))
            accesses.append(Access(arr, AccessKind(akind), tuple(forms)))

        statements.append(Statement(sname, iters, domain, tuple(accesses), position))

    names = [s.name for s in statements]
    _require(len(set(names)) == len(names), "duplicate statement names")
    scop = Scop(name, params, tuple(statements))

    deps = []
    for di, raw in enumerate(data.get("dependences", [])):
        what = f"dependences[{di}]"
        _require(isinstance(raw, dict), f"{what} must be an object")
        src = raw.get("source")
        tgt = raw.get("target")
        _require(src in names, f"{what}.source must name a statement")
        _require(tgt in names, f"{what}.target must name a statement")
        s_stmt = scop.statement(src)
        t_stmt = scop.statement(tgt)
        arity = s_stmt.depth + t_stmt.depth + len(params)
        cons = raw.get("constraints", [])
        _require(isinstance(cons, list), f"{what}.constraints must be a list")
        poly = HPolyhedron(
            _dependence_variable_names(s_stmt, t_stmt, params),
            tuple(
                _parse_constraint(c, arity, f"{what}.constraints[{ci}]")
                for ci, c in enumerate(cons)
            ),
        ).canonical()
        _require(not is_empty(poly), f"{what} has a rationally empty polyhedron")
        deps.append(
            Dependence(id=di + 1, source=src, target=tgt, polyhedron=poly)
        )
    return Scop(name, params, tuple(statements), tuple(deps))


def _dependence_variable_names(
    src: Statement, tgt: Statement, params: Sequence[str]
) -> tuple[str, ...]:
    s_names = tuple(f"s.{v}" for v in src.iter_vars)
    t_names = tuple(f"t.{v}" for v in tgt.iter_vars)
    return s_names + t_names + tuple(params)


def serialize_scop(scop: Scop) -> str:
    """Canonical JSON rendering; `parse_scop` of the result is the identity."""

    def constraint_json(c: LinearConstraint) -> dict:
        return {"coeffs": list(c.coeffs), "const": c.const, "kind": _KIND_TO_JSON[c.kind]}

    data: dict = {
        "name": scop.name,
        "params": list(scop.params),
        "statements": [
            {
                "name": s.name,
                "iters": list(s.iter_vars),
                "position": list(s.position),
                "domain": {"constraints": [constraint_json(c) for c in s.domain.constraints]},
                "accesses": [
                    {
                        "array": a.array,
                        "kind": a.kind.value,
                        "map": [
                            {"coeffs": list(f.coeffs), "const": f.const}
                            for f in a.index_map
                        ],
                    }
                    for a in s.accesses
                ],
            }
            for s in scop.statements
        ],
    }
    if scop.dependences:
        data["dependences"] = [
            {
                "source": d.source,
                "target": d.target,
                "constraints": [constraint_json(c) for c in d.polyhedron.constraints],
            }
            for d in scop.dependences
        ]
    return json.dumps(data, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Memory-based dependence analysis


def _embed_row(
    form_coeffs: Sequence[int],
    n_iters: int,
    n_params: int,
    iter_offset: int,
    total: int,
) -> tuple[int, ...]:
    """Lift a (iters ++ params) coefficient row into (src ++ tgt ++ params)."""
    row = [0] * total
    for i in range(n_iters):
        row[iter_offset + i] = form_coeffs[i]
    for p in range(n_params):
        row[total - n_params + p] += form_coeffs[n_iters + p]
    return tuple(row)


def _embed(
    form_coeffs: Sequence[int],
    const: int,
    kind: ConstraintKind,
    n_iters: int,
    n_params: int,
    iter_offset: int,
    total: int,
) -> LinearConstraint:
    return LinearConstraint(
        _embed_row(form_coeffs, n_iters, n_params, iter_offset, total), const, kind
    )


def _precedence_disjuncts(
    src: Statement, tgt: Statement, total: int, n_params: int
) -> list[tuple[int, list[LinearConstraint]]]:
    """Per-depth strict-precedence regions in interleaved position order.

    Walks the two interleaved position vectors.  At even slots the syntactic
    constants decide (emit or prune); at odd slots the loop iterators at that
    level decide (emit `src < tgt`, then pin them equal and continue).
    Returns (depth, constraints) pairs; the regions are pairwise disjoint.
    """
    u, v = src.position, tgt.position
    ds, dt = src.depth, tgt.depth
    out: list[tuple[int, list[LinearConstraint]]] = []
    prefix: list[LinearConstraint] = []
    for m in range(min(len(u), len(v))):
        if m % 2 == 0:
            if u[m] < v[m]:
                out.append((m, list(prefix)))
                break
            if u[m] > v[m]:
                break
        else:
            level = (m - 1) // 2
            row = [0] * total
            row[level] = -1
            row[ds + level] = 1
            # src_level + 1 <= tgt_level
            out.append((m, prefix + [LinearConstraint(tuple(row), -1, ConstraintKind.INEQ)]))
            prefix.append(LinearConstraint(tuple(row), 0, ConstraintKind.EQ))
    return out


def compute_memory_dependences(scop: Scop) -> tuple[Dependence, ...]:
    """All memory-based dependence polyhedra of the SCoP.

    One candidate per (conflicting access pair, carrying depth); rationally
    empty candidates are dropped, identical polyhedra between the same
    endpoints are deduplicated, and the result is ordered by (source name,
    target name, depth, access order) with 1-based ids.
    """
    n_params = len(scop.params)
    candidates = []
    for src in scop.statements:
        for tgt in scop.statements:
            total = src.depth + tgt.depth + n_params
            names = _dependence_variable_names(src, tgt, scop.params)
            base: list[LinearConstraint] = []
            for c in src.domain.constraints:
                base.append(_embed(c.coeffs, c.const, c.kind, src.depth, n_params, 0, total))
            for c in tgt.domain.constraints:
                base.append(_embed(c.coeffs, c.const, c.kind, tgt.depth, n_params, src.depth, total))
            for p in range(n_params):
                row = [0] * total
                row[total - n_params + p] = 1
                base.append(LinearConstraint(tuple(row), 0, ConstraintKind.INEQ))
            disjuncts = _precedence_disjuncts(src, tgt, total, n_params)
            if not disjuncts:
                continue
            for ai, acc_a in enumerate(src.accesses):
                for bi, acc_b in enumerate(tgt.accesses):
                    if acc_a.array != acc_b.array:
                        continue
                    if acc_a.kind is AccessKind.READ and acc_b.kind is AccessKind.READ:
                        continue
                    if len(acc_a.index_map) != len(acc_b.index_map):
                        raise ValidationError(
                            f"array {acc_a.array!r} used with differing dimensionality"
                        )
                    conflict = []
                    for fa, fb in zip(acc_a.index_map, acc_b.index_map):
                        # Subtract raw embedded rows; constraint-level
                        # normalization must only ever see the difference.
                        a_row = _embed_row(fa.coeffs, src.depth, n_params, 0, total)
                        b_row = _embed_row(fb.coeffs, tgt.depth, n_params, src.depth, total)
                        diff = tuple(x - y for x, y in zip(a_row, b_row))
                        conflict.append(
                            LinearConstraint(diff, fa.const - fb.const, ConstraintKind.EQ)
                        )
                    for depth, prec in disjuncts:
                        poly = HPolyhedron(
                            names, tuple(base + conflict + prec)
                        ).canonical()
                        candidates.append((src.name, tgt.name, depth, ai, bi, poly))

    candidates.sort(key=lambda c: (c[0], c[1], c[2], c[3], c[4]))
    deps: list[Dependence] = []
    seen: set[tuple[str, str, HPolyhedron]] = set()
    for sname, tname, depth, ai, bi, poly in candidates:
        key = (sname, tname, poly)
        if key in seen:
            continue
        if is_empty(poly):
            seen.add(key)
            continue
        seen.add(key)
        deps.append(
            Dependence(
                id=len(deps) + 1,
                source=sname,
                target=tname,
                polyhedron=poly,
                depth=depth,
                source_access=ai,
                target_access=bi,
            )
        )
    return tuple(deps)
