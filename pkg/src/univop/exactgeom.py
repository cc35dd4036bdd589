"""Exact convex geometry for symmetric polytopes.

A symmetric polytope is given either by functionals ``phi`` with the
constraints ``|phi . x| <= 1`` (``HRep``) or by its vertices, closed under
negation (``VRep``).  Linear programs are solved by a dictionary simplex
with Bland's rule over ``Fraction``; vertex/facet conversion uses the
double description method on integer-scaled data.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from . import linalg as la
from .config import dim_cap
from .errors import DegenerateError, DimensionError, UnboundedError


def canonical_sign(v: Sequence[Fraction]) -> tuple:
    """Representative of ``{v, -v}`` whose first nonzero entry is positive."""
    for x in v:
        if x != 0:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


@dataclass(frozen=True)
class HRep:
    dim: int
    functionals: tuple

    @classmethod
    def of(cls, dim: int, functionals) -> "HRep":
        seen = {}
        for phi in functionals:
            phi = la.vec(phi)
            if len(phi) != dim:
                raise DimensionError(f"functional of length {len(phi)} in dimension {dim}")
            if all(x == 0 for x in phi):
                continue
            seen.setdefault(canonical_sign(phi), None)
        return cls(dim, tuple(seen))

    def is_bounded(self) -> bool:
        return la.rank(list(self.functionals), self.dim) == self.dim

    def contains(self, x) -> bool:
        return all(abs(la.dot(phi, x)) <= 1 for phi in self.functionals)

    def gauge(self, x) -> Fraction:
        return max((abs(la.dot(phi, x)) for phi in self.functionals), default=Fraction(0))


@dataclass(frozen=True)
class VRep:
    dim: int
    vertices: tuple

    @classmethod
    def of(cls, dim: int, points) -> "VRep":
        """Symmetrize and deduplicate; does not prune non-extreme points."""
        seen = {}
        for p in points:
            p = la.vec(p)
            if len(p) != dim:
                raise DimensionError(f"point of length {len(p)} in dimension {dim}")
            if all(x == 0 for x in p):
                continue
            seen.setdefault(p, None)
            seen.setdefault(tuple(-x for x in p), None)
        return cls(dim, tuple(sorted(seen)))

    def spans(self) -> bool:
        return la.rank(list(self.vertices), self.dim) == self.dim


# ---------------------------------------------------------------- simplex


@dataclass
class SimplexOutcome:
    status: str  # "optimal" | "unbounded" | "infeasible"
    value: Fraction | None = None
    x: tuple | None = None
    duals: tuple | None = None


def _pivot(D, basic, nonbasic, r, c):
    """Pivot the dictionary rows ``D`` (x_B + sum a x_N = b; last row objective)."""
    row = D[r]
    piv = row[c]
    new_row = [a / piv for a in row]
    new_row[c] = 1 / piv
    for i, other in enumerate(D):
        if i == r:
            continue
        f = other[c]
        if f == 0:
            continue
        D[i] = [a - f * b for a, b in zip(other, new_row)]
        D[i][c] = -f / piv
    D[r] = new_row
    basic[r], nonbasic[c] = nonbasic[c], basic[r]


def _bland(D, basic, nonbasic, m):
    """Run primal simplex on the dictionary; objective row is D[m]."""
    while True:
        obj = D[m]
        entering = [(nonbasic[j], j) for j in range(len(nonbasic)) if obj[j] < 0]
        if not entering:
            return "optimal"
        _, c = min(entering)
        best = None
        for i in range(m):
            a = D[i][c]
            if a > 0:
                key = (D[i][-1] / a, basic[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        _pivot(D, basic, nonbasic, best[1], c)


def simplex_max(c: Sequence, A: Sequence[Sequence], b: Sequence) -> SimplexOutcome:
    """Maximize ``c.x`` subject to ``A x <= b``, ``x >= 0``, exactly.

    Variables ``0..n-1`` are structural, ``n..n+m-1`` the slacks.  The
    objective row stores reduced costs with the sign convention
    ``z + sum d_j x_j = z0`` so that a negative ``d_j`` improves ``z``.
    Returns the optimal vertex and the dual multipliers ``y >= 0`` with
    ``A^T y >= c`` and ``b.y = value``.
    """
    c = la.vec(c)
    A = [la.vec(r) for r in A]
    b = la.vec(b)
    m, n = len(A), len(c)
    nonbasic = list(range(n))
    basic = list(range(n, n + m))
    D = [list(A[i]) + [b[i]] for i in range(m)]
    if any(bi < 0 for bi in b):
        # Phase one with auxiliary variable index n+m.
        aux = n + m
        nonbasic.append(aux)
        for i in range(m):
            D[i].insert(n, Fraction(-1))
        D.append([Fraction(0)] * n + [Fraction(1), Fraction(0)])  # minimize x0
        r = min(range(m), key=lambda i: (D[i][-1], basic[i]))
        _pivot(D, basic, nonbasic, r, n)
        _bland(D, basic, nonbasic, m)
        if D[m][-1] != 0:
            return SimplexOutcome("infeasible")
        if aux in basic:
            r = basic.index(aux)
            c_idx = next(j for j in range(len(nonbasic)) if D[r][j] != 0)
            _pivot(D, basic, nonbasic, r, c_idx)
        col = nonbasic.index(aux)
        for row in D:
            del row[col]
        nonbasic.pop(col)
        D.pop()
    # objective row in terms of current nonbasics
    obj = [Fraction(0)] * (len(nonbasic) + 1)
    for j, var in enumerate(nonbasic):
        if var < n:
            obj[j] -= c[var]
    for i, var in enumerate(basic):
        if var < n and c[var] != 0:
            cv = c[var]
            for j in range(len(nonbasic)):
                obj[j] += cv * D[i][j]
            obj[-1] += cv * D[i][-1]
    D.append(obj)
    if _bland(D, basic, nonbasic, m) == "unbounded":
        return SimplexOutcome("unbounded")
    x = [Fraction(0)] * n
    for i, var in enumerate(basic):
        if var < n:
            x[var] = D[i][-1]
    y = [Fraction(0)] * m
    for j, var in enumerate(nonbasic):
        if var >= n:
            y[var - n] = D[m][j]
    return SimplexOutcome("optimal", D[m][-1], tuple(x), tuple(y))


def solve_lp(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), free=None, maximize=True) -> SimplexOutcome:
    """General exact LP; ``free[k]`` marks unrestricted variables."""
    c = la.vec(c)
    n = len(c)
    free = [True] * n if free is None else list(free)
    rows = [la.vec(r) for r in A_ub] + [la.vec(r) for r in A_eq] + [tuple(-x for x in la.vec(r)) for r in A_eq]
    rhs = list(la.vec(b_ub)) + list(la.vec(b_eq)) + [-x for x in la.vec(b_eq)]
    # split free variables as u - w
    idx = []
    for k in range(n):
        idx.append(k)
    extra = [k for k in range(n) if free[k]]

    def expand(v):
        return list(v) + [-v[k] for k in extra]

    sign = 1 if maximize else -1
    out = simplex_max(expand([sign * x for x in c]), [expand(r) for r in rows], rhs)
    if out.status != "optimal":
        return out
    x = list(out.x[:n])
    for pos, k in enumerate(extra):
        x[k] -= out.x[n + pos]
    return SimplexOutcome("optimal", sign * out.value, tuple(x), out.duals)


@dataclass(frozen=True)
class LPResult:
    value: Fraction
    witness: tuple
    multipliers: tuple  # signed weights on hrep.functionals summing to the objective

    def verify(self, objective, hrep: HRep) -> bool:
        """Re-check primal feasibility, attainment and the dual bound."""
        objective = la.vec(objective)
        if not hrep.contains(self.witness):
            return False
        if la.dot(objective, self.witness) != self.value:
            return False
        combo = [sum((lam * phi[k] for lam, phi in zip(self.multipliers, hrep.functionals)), Fraction(0))
                 for k in range(hrep.dim)]
        return tuple(combo) == objective and sum(abs(x) for x in self.multipliers) <= self.value


def lp_max(objective, hrep: HRep) -> LPResult:
    """Maximize a linear objective over ``{x : |phi.x| <= 1}`` exactly."""
    objective = la.vec(objective)
    if len(objective) != hrep.dim:
        raise DimensionError(f"objective of length {len(objective)} in dimension {hrep.dim}")
    if hrep.dim == 0:
        return LPResult(Fraction(0), (), ())
    if not hrep.is_bounded():
        raise UnboundedError("functionals do not span the dual; region is unbounded")
    F = hrep.functionals
    rows = [list(phi) for phi in F] + [[-x for x in phi] for phi in F]
    out = solve_lp(objective, rows, [1] * len(rows))
    if out.status != "optimal":  # pragma: no cover - excluded by the rank check
        raise UnboundedError("simplex reported an unbounded objective")
    k = len(F)
    lam = tuple(out.duals[i] - out.duals[k + i] for i in range(k))
    return LPResult(out.value, out.x, lam)


# ---------------------------------------------------------- double description


def _int_row(v: Sequence[Fraction]) -> tuple:
    d = la.lcm_denominator(v)
    row = [int(x * d) for x in v]
    g = 0
    for x in row:
        g = gcd(g, x)
    return tuple(x // g for x in row) if g > 1 else tuple(row)


def _normalize(v: list) -> tuple:
    g = 0
    for x in v:
        g = gcd(g, x)
    return tuple(x // g for x in v) if g > 1 else tuple(v)


def _extreme_rays(rows: list[tuple], d: int) -> list[tuple]:
    """Extreme rays of the pointed cone ``{y : r.y >= 0 for r in rows}``.

    ``rows`` are integer vectors of length ``d`` with full rank.
    """
    init = la.independent_subset(rows, d)
    if len(init) < d:
        raise DegenerateError("constraint rows do not have full rank")
    Binv = la.inverse(tuple(la.vec(rows[i]) for i in init))
    full = (1 << len(rows)) - 1
    rays: list[tuple] = []
    zsets: list[int] = []
    init_mask = 0
    for i in init:
        init_mask |= 1 << i
    for k in range(d):
        col = [Binv[r][k] for r in range(d)]
        rays.append(_normalize(list(_int_row(col))))
        zsets.append(init_mask & ~(1 << init[k]))
    need = d - 2
    for idx, row in enumerate(rows):
        if init_mask >> idx & 1:
            continue
        vals = [sum(a * b for a, b in zip(row, r)) for r in rays]
        plus = [k for k, s in enumerate(vals) if s > 0]
        minus = [k for k, s in enumerate(vals) if s < 0]
        zero = [k for k, s in enumerate(vals) if s == 0]
        bit = 1 << idx
        new_rays = [rays[k] for k in plus] + [rays[k] for k in zero]
        new_z = [zsets[k] for k in plus] + [zsets[k] | bit for k in zero]
        if minus:
            for p in plus:
                zp = zsets[p]
                for q in minus:
                    Z = zp & zsets[q]
                    if Z.bit_count() < need:
                        continue
                    adjacent = True
                    for k, zk in enumerate(zsets):
                        if k != p and k != q and (Z & zk) == Z:
                            adjacent = False
                            break
                    if not adjacent:
                        continue
                    sp, sq = vals[p], -vals[q]
                    r = [sp * a + sq * b for a, b in zip(rays[q], rays[p])]
                    new_rays.append(_normalize(r))
                    new_z.append(Z | bit)
        rays, zsets = new_rays, new_z
        init_mask |= bit
    assert init_mask == full
    return rays


def _symmetric_vertices(functionals: Sequence[Sequence[Fraction]], dim: int) -> list[tuple]:
    """Vertices of ``{x : |phi.x| <= 1}`` via the homogenized cone."""
    cap = dim_cap()
    if dim > cap:
        raise DimensionError(f"dimension {dim} exceeds the configured cap {cap}")
    rows = []
    for phi in functionals:
        for s in (1, -1):
            # t - s*phi.x >= 0, variables (x, t)
            rows.append(_int_row([-s * x for x in phi] + [Fraction(1)]))
    if la.rank([la.vec(r[:-1]) for r in rows], dim) < dim:
        raise UnboundedError("functionals do not span the dual; region is unbounded")
    rays = _extreme_rays(rows, dim + 1)
    out = []
    for r in rays:
        t = r[-1]
        if t <= 0:  # pragma: no cover - impossible for bounded symmetric input
            raise UnboundedError("recession direction found")
        out.append(tuple(Fraction(x, t) for x in r[:-1]))
    return out


def hrep_to_vrep(hrep: HRep) -> VRep:
    """Extreme points of a bounded symmetric polytope."""
    if hrep.dim == 0:
        return VRep(0, ())
    return VRep.of(hrep.dim, _symmetric_vertices(hrep.functionals, hrep.dim))


def vrep_to_hrep(vrep: VRep) -> HRep:
    """Facet functionals of the convex hull of ``vrep.vertices``.

    The facets of ``conv V`` are the vertices of the polar body
    ``{phi : |phi.v| <= 1 for v in V}``.
    """
    if vrep.dim == 0:
        return HRep(0, ())
    if not vrep.spans():
        raise DegenerateError("vertices span a proper subspace")
    reps = {canonical_sign(v): None for v in vrep.vertices}
    try:
        facets = _symmetric_vertices(list(reps), vrep.dim)
    except UnboundedError as exc:  # pragma: no cover - excluded by spans()
        raise DegenerateError(str(exc)) from exc
    return HRep.of(vrep.dim, facets)


def extreme_points(points: Sequence[Sequence[Fraction]], hrep: HRep) -> VRep:
    """Keep the points of the hull that are vertices (tight on a full-rank facet set)."""
    keep = []
    for p in points:
        tight = [phi for phi in hrep.functionals if abs(la.dot(phi, p)) == 1]
        if tight and la.rank(tight, hrep.dim) == hrep.dim:
            keep.append(p)
    return VRep.of(hrep.dim, keep)


def brute_force_vertices(hrep: HRep) -> VRep:
    """Oracle: intersect every ``dim``-subset of constraint hyperplanes."""
    from itertools import combinations, product

    F = list(hrep.functionals)
    n = hrep.dim
    pts = set()
    for subset in combinations(range(len(F)), n):
        rows = tuple(F[i] for i in subset)
        if la.rank(rows, n) < n:
            continue
        inv = la.inverse(rows)
        for signs in product((1, -1), repeat=n):
            x = la.matvec(inv, [Fraction(s) for s in signs])
            if hrep.contains(x):
                pts.add(x)
    return VRep.of(n, pts)
