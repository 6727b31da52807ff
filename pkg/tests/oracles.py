"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written by a different route than the
package code: vertices by pairwise constraint intersection, rank by plain
Gaussian elimination, dependences by instance-pair enumeration.  Slow is
fine; these only run on small inputs.
"""

from __future__ import annotations

import itertools
import json
import random
from fractions import Fraction

from polygym import (
    AccessKind,
    ConstraintKind,
    HPolyhedron,
    LinearConstraint,
    Scop,
    ineq,
    parse_scop,
)

# ---------------------------------------------------------------------------
# Exact linear algebra


def rational_rank(rows) -> int:
    """Rank of a rational matrix by Gaussian elimination."""
    m = [[Fraction(x) for x in row] for row in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    row = 0
    for col in range(cols):
        pivot = next((r for r in range(row, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        inv = 1 / m[row][col]
        m[row] = [x * inv for x in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        row += 1
        rank += 1
        if row == len(m):
            break
    return rank


# ---------------------------------------------------------------------------
# 2D vertex oracle


def brute_force_vertices_2d(poly: HPolyhedron) -> set[tuple[Fraction, Fraction]]:
    """All vertices of a 2-variable polyhedron by pairwise line intersection.

    A vertex of a 2D polyhedron is the intersection of two constraint
    boundaries that satisfies every constraint.
    """
    assert len(poly.variable_names) == 2
    lines = []
    for c in poly.constraints:
        lines.append((c.coeffs[0], c.coeffs[1], c.const))
        if c.kind is ConstraintKind.EQ:
            lines.append((-c.coeffs[0], -c.coeffs[1], -c.const))
    out = set()
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(lines, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        x = Fraction(b1 * c2 - b2 * c1, det)
        y = Fraction(a2 * c1 - a1 * c2, det)
        if poly.contains((x, y)):
            out.add((x, y))
    return out


# ---------------------------------------------------------------------------
# Random polyhedra


def random_hpoly(rng: random.Random, n_vars: int, n_cons: int) -> HPolyhedron:
    names = tuple(f"x{i}" for i in range(n_vars))
    cons = []
    for _ in range(n_cons):
        coeffs = [rng.randint(-3, 3) for _ in range(n_vars)]
        if all(c == 0 for c in coeffs):
            coeffs[rng.randrange(n_vars)] = 1
        const = rng.randint(-4, 4)
        if rng.random() < 0.15:
            cons.append(LinearConstraint(tuple(coeffs), const, ConstraintKind.EQ))
        else:
            cons.append(ineq(coeffs, const))
    return HPolyhedron(names, tuple(cons))


def random_anchored_hpoly(
    rng: random.Random, n_vars: int, n_cons: int, feasible: bool
) -> HPolyhedron:
    """A random polyhedron that provably is (or is not) empty.

    Feasible ones are built around a known integer anchor point; infeasible
    ones get a contradictory constraint pair stacked on top.
    """
    names = tuple(f"x{i}" for i in range(n_vars))
    anchor = [rng.randint(-3, 3) for _ in range(n_vars)]
    cons = []
    for _ in range(n_cons):
        coeffs = [rng.randint(-3, 3) for _ in range(n_vars)]
        if all(c == 0 for c in coeffs):
            coeffs[rng.randrange(n_vars)] = 1
        value = sum(c * a for c, a in zip(coeffs, anchor))
        cons.append(ineq(coeffs, -value + rng.randint(0, 3)))
    if not feasible:
        coeffs = [rng.randint(-3, 3) for _ in range(n_vars)]
        if all(c == 0 for c in coeffs):
            coeffs[0] = 1
        cons.append(ineq(coeffs, 0))
        cons.append(ineq([-c for c in coeffs], -1))
    return HPolyhedron(names, tuple(cons))


# ---------------------------------------------------------------------------
# Dependence oracle: enumerate instance pairs


def interleaved_vector(stmt, point) -> tuple[int, ...]:
    """Full syntactic order vector of one statement instance."""
    out = list(stmt.position)
    for level, value in enumerate(point):
        out[2 * level + 1] = value
    return tuple(out)


def textual_precedes(src, u, tgt, v) -> bool:
    """True when instance (src, u) runs before (tgt, v) in the original nest."""
    a, b = interleaved_vector(src, u), interleaved_vector(tgt, v)
    n = min(len(a), len(b))
    if a[:n] == b[:n]:
        # Prefix ties would mean two constructs in one syntactic slot.
        assert len(a) == len(b), "malformed statement positions"
        return False
    return a[:n] < b[:n]


def domain_points(stmt, binding, box: int):
    n = stmt.depth
    values = [binding[p] for p in stmt.domain.variable_names[n:]]
    pts = []
    for cand in itertools.product(range(-box, box + 1), repeat=n):
        if stmt.domain.contains(list(cand) + values):
            pts.append(cand)
    return pts


def brute_force_dependence_pairs(
    scop: Scop, binding: dict[str, int], box: int
) -> set[tuple[str, str, tuple[int, ...], tuple[int, ...]]]:
    """Every (source, target, u, v) with a memory conflict and u before v.

    Conflicting means the two accesses touch the same array cell and at
    least one of them writes.  This is the instance-level ground truth the
    polyhedral dependences must reproduce exactly.
    """
    pts = {s.name: domain_points(s, binding, box) for s in scop.statements}
    pairs = set()
    for src in scop.statements:
        for tgt in scop.statements:
            for acc_s in src.accesses:
                for acc_t in tgt.accesses:
                    if acc_s.array != acc_t.array:
                        continue
                    if acc_s.kind is AccessKind.READ and acc_t.kind is AccessKind.READ:
                        continue
                    if len(acc_s.index_map) != len(acc_t.index_map):
                        continue
                    for u in pts[src.name]:
                        zu = list(u) + [binding[p] for p in scop.params]
                        cell_u = tuple(f.evaluate(zu) for f in acc_s.index_map)
                        for v in pts[tgt.name]:
                            zv = list(v) + [binding[p] for p in scop.params]
                            cell_v = tuple(f.evaluate(zv) for f in acc_t.index_map)
                            if cell_u != cell_v:
                                continue
                            if textual_precedes(src, u, tgt, v):
                                pairs.add((src.name, tgt.name, u, v))
    return pairs


def library_dependence_pairs(scop, deps, binding: dict[str, int], box: int):
    """The same instance-pair set, read off the computed dependence polyhedra."""
    pairs = set()
    values = [binding[p] for p in scop.params]
    for dep in deps:
        src = scop.statement(dep.source)
        tgt = scop.statement(dep.target)
        for uv in itertools.product(
            range(-box, box + 1), repeat=src.depth + tgt.depth
        ):
            if dep.polyhedron.contains(list(uv) + values):
                pairs.add((dep.source, dep.target, uv[: src.depth], uv[src.depth :]))
    return pairs


# ---------------------------------------------------------------------------
# Random SCoP generator


def _box_domain(n_iters: int, n_params: int, hi_from_param: bool, size: int):
    """0 <= i_k <= bound for each iterator, bound either N-1 or a literal."""
    cons = []
    arity = n_iters + n_params
    for k in range(n_iters):
        lo = [0] * arity
        lo[k] = 1
        cons.append({"coeffs": lo, "const": 0})
        hi = [0] * arity
        hi[k] = -1
        if hi_from_param:
            hi[n_iters] = 1
            cons.append({"coeffs": hi, "const": -1})
        else:
            cons.append({"coeffs": hi, "const": size})
    return {"constraints": cons}


def _random_access(rng: random.Random, arrays, n_iters: int, n_params: int, kind: str):
    arity = n_iters + n_params
    coeffs = [0] * arity
    idx = rng.randrange(n_iters)
    coeffs[idx] = rng.choice([1, 1, 1, -1])
    const = rng.randint(-1, 1)
    return {
        "array": rng.choice(arrays),
        "kind": kind,
        "map": [{"coeffs": coeffs, "const": const}],
    }


# ---------------------------------------------------------------------------
# Cone membership and rational legality of schedule coefficient vectors


def cone_member(point, gens) -> bool:
    """Is `point` a convex-vertex plus conic-ray combination of `gens`?

    Decided exactly by testing feasibility of the weight polyhedron
    (lambda >= 0, alpha >= 0, sum lambda = 1, combination = point).
    """
    from polygym import eq as eq_row
    from polygym import is_empty as poly_empty

    if gens.is_empty:
        return False
    n_l = len(gens.vertices)
    n_a = len(gens.rays)
    names = tuple(f"l{i}" for i in range(n_l)) + tuple(f"a{j}" for j in range(n_a))
    cons = [ineq([1 if k == m else 0 for k in range(n_l + n_a)], 0) for m in range(n_l + n_a)]
    cons.append(eq_row([1] * n_l + [0] * n_a, -1))
    dim = len(point)
    for d in range(dim):
        row = [v.coords[d] for v in gens.vertices] + [r.coords[d] for r in gens.rays]
        rhs = -Fraction(point[d])
        # scale to integers for the constraint row
        dens = [Fraction(x).denominator for x in row] + [rhs.denominator]
        scale = 1
        for q in dens:
            scale = scale * q // _gcd(scale, q)
        cons.append(
            eq_row([int(Fraction(x) * scale) for x in row], int(rhs * scale))
        )
    return not poly_empty(HPolyhedron(names, tuple(cons)))


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def schedule_row_is_legal(coeffs, dep, scop, layout, delta: int) -> bool:
    """Rational check: theta_tgt - theta_src - delta >= 0 over the dependence.

    Empty violation region over the rationals is exactly what the multiplier
    encoding promises, so this is the reference for generated spaces.
    """
    from polygym import ConstraintKind as CK
    from polygym import LinearConstraint as LC
    from polygym import is_empty as poly_empty

    src = scop.statement(dep.source)
    tgt = scop.statement(dep.target)
    sb = layout.block(dep.source)
    tb = layout.block(dep.target)
    n_params = len(scop.params)
    total = src.depth + tgt.depth + n_params
    row = [Fraction(0)] * total
    const = Fraction(0)
    for i in range(src.depth):
        row[i] -= coeffs[sb.iter_index(i)]
    for p in range(n_params):
        row[src.depth + tgt.depth + p] -= coeffs[sb.param_index(p)]
    const -= coeffs[sb.const_index]
    for i in range(tgt.depth):
        row[src.depth + i] += coeffs[tb.iter_index(i)]
    for p in range(n_params):
        row[src.depth + tgt.depth + p] += coeffs[tb.param_index(p)]
    const += coeffs[tb.const_index]
    # violation: row . z + const <= delta - 1
    viol = LC(
        tuple(int(-x) for x in row), int(delta - 1 - const), CK.INEQ
    )
    poly = HPolyhedron(
        dep.polyhedron.variable_names, dep.polyhedron.constraints + (viol,)
    )
    return poly_empty(poly)


# ---------------------------------------------------------------------------
# Proxy cost oracle: naive move-to-front simulation

CACHE_LINE_ELEMENTS = 8
COLD_DISTANCE = 2**16


def proxy_cost_oracle(sched, scop: Scop, binding: dict[str, int], box: int = 64) -> int:
    """Reference cost: same contract as the library, different machinery.

    Recency is a plain most-recent-first list; the distance of a reused line
    is its index in that list.  Address flattening is row-major over the
    observed index ranges of each array.
    """
    values = [binding[p] for p in scop.params]
    rows = {name: forms for name, forms in sched.rows}

    instances = []
    for si, stmt in enumerate(scop.statements):
        for pt in domain_points(stmt, binding, box):
            z = list(pt) + values
            theta = tuple(
                sum(c * x for c, x in zip(f.coeffs, z)) + f.const
                for f in rows[stmt.name]
            )
            instances.append((theta, si, pt, stmt))
    instances.sort(key=lambda t: (t[0], t[1], t[2]))

    touches = []
    for _, _, pt, stmt in instances:
        z = list(pt) + values
        for acc in stmt.accesses:
            idx = tuple(
                sum(c * x for c, x in zip(f.coeffs, z)) + f.const
                for f in acc.index_map
            )
            touches.append((acc.array, idx))

    lows: dict[str, list[int]] = {}
    highs: dict[str, list[int]] = {}
    for array, idx in touches:
        if array not in lows:
            lows[array] = list(idx)
            highs[array] = list(idx)
        else:
            lows[array] = [min(a, b) for a, b in zip(lows[array], idx)]
            highs[array] = [max(a, b) for a, b in zip(highs[array], idx)]

    recency: list[tuple[str, int]] = []  # most recent first
    cost = 0
    for array, idx in touches:
        flat = 0
        for lo, hi, v in zip(lows[array], highs[array], idx):
            flat = flat * (hi - lo + 1) + (v - lo)
        line = (array, flat // CACHE_LINE_ELEMENTS)
        if line in recency:
            dist = recency.index(line)
            recency.remove(line)
        else:
            dist = COLD_DISTANCE
        recency.insert(0, line)
        cost += (1 + dist).bit_length()
    return cost


def random_scop(rng: random.Random) -> Scop:
    """A small random loop nest: 1-2 statements, depth 1-2, optional shared loop.

    Domains always contain the origin so there is something to iterate over,
    and every statement writes, so dependences actually arise.
    """
    n_params = rng.choice([0, 1])
    params = ["N"] if n_params else []
    n_stmts = rng.choice([1, 2, 2])
    arrays = ["a", "b"][: rng.choice([1, 2])]
    stmts = []
    share = n_stmts == 2 and rng.random() < 0.5
    depth_first = rng.choice([1, 2])
    shared_domain = None
    for si in range(n_stmts):
        depth = depth_first if (share or si == 0) else rng.choice([1, 2])
        iters = ["i", "j"][:depth]
        if share and shared_domain is not None:
            domain = shared_domain  # same loop bounds for both bodies
        else:
            hi_from_param = bool(n_params) and rng.random() < 0.7
            domain = _box_domain(depth, n_params, hi_from_param, size=rng.randint(1, 3))
            if share:
                shared_domain = domain
        if share:
            # Same loop, consecutive body slots.
            position = [0] + [0, 0] * (depth - 1) + [0, si]
        else:
            position = [si] + [0, 0] * (depth - 1) + [0, 0]
        accesses = [_random_access(rng, arrays, depth, n_params, "write")]
        for _ in range(rng.randint(0, 2)):
            accesses.append(_random_access(rng, arrays, depth, n_params, "read"))
        stmts.append(
            {
                "name": f"S{si}",
                "iters": iters,
                "position": position,
                "domain": domain,
                "accesses": accesses,
            }
        )
    return parse_scop(json.dumps({"name": "rand", "params": params, "statements": stmts}))
