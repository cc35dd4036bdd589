"""Finite-dimensional spaces with polyhedral norms over the rationals."""
from __future__ import annotations

import hashlib
import json
import random
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg as la
from .errors import DegenerateError, DimensionError, PreconditionError, UnboundedError
from .exactgeom import HRep, VRep, extreme_points, hrep_to_vrep, vrep_to_hrep

_vertex_lock = threading.Lock()


def fmt(x: Fraction) -> str:
    x = la.frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def content_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True, eq=False)
class Space:
    """A norm on Q^dim whose unit ball is ``{x : |phi.x| <= 1}``."""

    dim: int
    hrep: HRep
    id: str = ""
    labels: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def facets(self) -> tuple:
        return self.hrep.functionals

    @property
    def vrep(self) -> VRep:
        v = self._cache.get("vrep")
        if v is None:
            with _vertex_lock:
                v = self._cache.get("vrep")
                if v is None:
                    v = hrep_to_vrep(self.hrep)
                    self._cache["vrep"] = v
        return v

    @property
    def vertices(self) -> tuple:
        return self.vrep.vertices

    def norm(self, x) -> Fraction:
        x = la.vec(x)
        if len(x) != self.dim:
            raise DimensionError(f"vector of length {len(x)} in a space of dimension {self.dim}")
        return self.hrep.gauge(x)

    def same_ball(self, other: "Space") -> bool:
        return self.dim == other.dim and set(self.facets) == set(other.facets)

    def fingerprint(self) -> str:
        return content_hash({"dim": self.dim, "facets": sorted([fmt(x) for x in f] for f in self.facets)})

    def __repr__(self):
        return f"Space(id={self.id!r}, dim={self.dim}, facets={len(self.facets)})"


def make_space(functionals, dim: int | None = None, labels=None, id: str | None = None,
               vertices=None) -> Space:
    """Validate a symmetric H-representation and wrap it as a normed space."""
    functionals = [la.vec(f) for f in functionals]
    if dim is None:
        if not functionals:
            raise PreconditionError("no functionals given; pass dim=0 for the zero space")
        dim = len(functionals[0])
    h = HRep.of(dim, functionals)
    if dim > 0 and not h.functionals:
        raise PreconditionError("empty functional list for a nonzero space")
    if not h.is_bounded():
        raise UnboundedError("functionals do not span the dual: this is a seminorm")
    if labels is not None:
        labels = tuple(labels)
        if len(labels) != dim:
            raise DimensionError("one label per basis vector expected")
    sp = Space(dim, h, "", labels)
    object.__setattr__(sp, "id", id or "sp-" + sp.fingerprint()[:16])
    if vertices is not None:
        sp._cache["vrep"] = VRep.of(dim, vertices)
    return sp


def space_from_points(points, dim: int, id: str | None = None) -> Space:
    """Space whose unit ball is the symmetric hull of ``points``."""
    if dim == 0:
        return zero_space()
    v = VRep.of(dim, points)
    h = vrep_to_hrep(v)
    sp = make_space(h.functionals, dim=dim, id=id)
    sp._cache["vrep"] = extreme_points(v.vertices, h)
    return sp


def zero_space() -> Space:
    sp = Space(0, HRep(0, ()), "sp-zero")
    sp._cache["vrep"] = VRep(0, ())
    return sp


def sup_space(n: int, scale=1) -> Space:
    s = la.frac(scale)
    return make_space([tuple(Fraction(int(i == j)) / s for j in range(n)) for i in range(n)])


def l1_space(n: int) -> Space:
    from itertools import product

    return make_space([(Fraction(1),) + tuple(Fraction(s) for s in signs)
                       for signs in product((1, -1), repeat=n - 1)], dim=n)


def reals(scale=1) -> Space:
    """The line with unit ball [-scale, scale]."""
    return make_space([(1 / la.frac(scale),)])


def norm(space: Space, x) -> Fraction:
    return space.norm(x)


# ------------------------------------------------------------------ sums


@dataclass(frozen=True)
class DirectSum:
    space: Space
    inl: "object"
    inr: "object"
    pl: "object"
    pr: "object"


def _sum_maps(X: Space, Y: Space, Z: Space) -> DirectSum:
    from .operator import LinMap

    n, m = X.dim, Y.dim
    I = la.identity(n + m)
    inl = LinMap(X, Z, tuple(r[:n] for r in I))
    inr = LinMap(Y, Z, tuple(r[n:] for r in I))
    pl = LinMap(Z, X, I[:n])
    pr = LinMap(Z, Y, I[n:])
    return DirectSum(Z, inl, inr, pl, pr)


def direct_sum_max(X: Space, Y: Space) -> DirectSum:
    """``||(x, y)|| = max(||x||, ||y||)`` with canonical maps."""
    if Y.dim == 0:
        return _sum_maps(X, Y, X)
    if X.dim == 0:
        return _sum_maps(X, Y, Y)
    zx, zy = (Fraction(0),) * X.dim, (Fraction(0),) * Y.dim
    F = [tuple(phi) + zy for phi in X.facets] + [zx + tuple(psi) for psi in Y.facets]
    Z = make_space(F, dim=X.dim + Y.dim)
    if "vrep" in X._cache and "vrep" in Y._cache:
        Z._cache["vrep"] = VRep.of(Z.dim, [tuple(u) + tuple(w) for u in X.vertices for w in Y.vertices])
    return _sum_maps(X, Y, Z)


def direct_sum_l1(X: Space, Y: Space) -> DirectSum:
    """``||(x, y)|| = ||x|| + ||y||`` with canonical maps."""
    if Y.dim == 0:
        return _sum_maps(X, Y, X)
    if X.dim == 0:
        return _sum_maps(X, Y, Y)
    F = [tuple(phi) + tuple(s * p for p in psi) for phi in X.facets for psi in Y.facets for s in (1, -1)]
    Z = make_space(F, dim=X.dim + Y.dim)
    zx, zy = (Fraction(0),) * X.dim, (Fraction(0),) * Y.dim
    Z._cache["vrep"] = VRep.of(Z.dim, [tuple(u) + zy for u in X.vertices] + [zx + tuple(w) for w in Y.vertices])
    return _sum_maps(X, Y, Z)


# ------------------------------------------------------------- quotients


@dataclass(frozen=True)
class Quotient:
    space: Space
    q: "object"  # LinMap Z -> Z/N
    section: tuple  # matrix (dim Z x dim Q) with q . section = id
    kernel: tuple
    degenerate: bool = False


def quotient_space(Z: Space, kernel_basis: Sequence[Sequence]) -> Quotient:
    """Quotient norm ``||z + N|| = inf ||z + n||`` via projected vertices."""
    from .operator import LinMap

    N = [la.vec(v) for v in kernel_basis]
    d, k = Z.dim, len(N)
    if any(len(v) != d for v in N):
        raise DimensionError("kernel vectors have the wrong length")
    if la.rank(N, d) < k:
        raise PreconditionError("kernel basis is linearly dependent")
    basis = la.complete_basis(N, d)
    Binv = la.inverse(la.from_columns(basis, d))
    qmat = Binv[k:]  # coordinates along the complement
    section = la.from_columns(basis[k:], d)
    if k == d:
        Q = zero_space()
        return Quotient(Q, LinMap(Z, Q, ()), section, tuple(N), degenerate=True)
    pts = [la.matvec(qmat, v) for v in Z.vertices]
    Q = space_from_points(pts, d - k)
    return Quotient(Q, LinMap(Z, Q, qmat), section, tuple(N))


def subspace(Z: Space, basis: Sequence[Sequence]) -> tuple[Space, "object"]:
    """Restriction of the norm of ``Z`` to ``span(basis)`` and its inclusion."""
    from .operator import LinMap

    B = [la.vec(b) for b in basis]
    k = len(B)
    if la.rank(B, Z.dim) < k:
        raise PreconditionError("subspace basis is linearly dependent")
    if k == 0:
        S = zero_space()
        return S, LinMap(S, Z, tuple(() for _ in range(Z.dim)))
    Bm = la.from_columns(B, Z.dim)
    pulled = la.matmul(Z.facets, Bm)
    S0 = make_space(pulled, dim=k)
    S = space_from_points(S0.vertices, k)
    return S, LinMap(S, Z, Bm)


# -------------------------------------------------------- basis constants


@dataclass(frozen=True)
class BasisConstant:
    space: Space
    basis: tuple
    M: Fraction


def _basis_inverse(space: Space, A) -> tuple:
    A = [la.vec(a) for a in A]
    if len(A) != space.dim or any(len(a) != space.dim for a in A) or la.rank(A, space.dim) < space.dim:
        raise PreconditionError("A is not a basis of the space")
    return la.inverse(la.from_columns(A, space.dim))


def basis_constant(space: Space, A) -> BasisConstant:
    """Largest coordinate magnitude in basis ``A`` over the unit ball."""
    inv = _basis_inverse(space, A)
    M = max((abs(c) for v in space.vertices for c in la.matvec(inv, v)), default=Fraction(0))
    return BasisConstant(space, tuple(la.vec(a) for a in A), M)


def delta_for_eps(space: Space, A, eps) -> Fraction:
    """``eps / (M |A|)``: coordinatewise smallness that forces ``||f|| <= eps``."""
    eps = la.frac(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    M = basis_constant(space, A).M
    return eps / (M * len(A))


def correction_delta(space: Space, A, eps) -> Fraction:
    """Tolerance for correcting a delta-embedding to an exact eps-embedding.

    Moving each basis vector by at most ``delta ||a||`` perturbs the map by
    at most ``delta * max||a|| * M |A|`` in operator norm, on top of the
    original ``delta`` defect.
    """
    eps = la.frac(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    bc = basis_constant(space, A)
    big = max(space.norm(a) for a in bc.basis)
    return eps / (1 + big * bc.M * len(A))


# ---------------------------------------------------------------- random


def random_rational(rng: random.Random, num: int = 3, den: int = 3) -> Fraction:
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def random_space(dim: int, facet_count: int, seed: int) -> Space:
    """Deterministic random bounded symmetric H-representation."""
    if facet_count < dim:
        raise PreconditionError("need at least dim facets")
    if dim == 0:
        return zero_space()
    rng = random.Random(seed)
    while True:
        F = [tuple(random_rational(rng) for _ in range(dim)) for _ in range(facet_count)]
        h = HRep.of(dim, F)
        if h.is_bounded():
            return make_space(h.functionals, dim=dim)


def is_nonzero(space: Space) -> bool:
    return space.dim > 0


__all__ = [
    "Space", "make_space", "zero_space", "sup_space", "l1_space", "reals", "norm",
    "direct_sum_max", "direct_sum_l1", "quotient_space", "subspace", "basis_constant",
    "delta_for_eps", "correction_delta", "random_space", "space_from_points",
    "DegenerateError",
]
