"""Linear maps between polyhedral spaces: norms, embeddings, distances."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg as la
from .errors import DimensionError, PreconditionError
from .exactgeom import HRep, hrep_to_vrep, lp_max
from .space import Space


@dataclass(frozen=True, eq=False)
class LinMap:
    domain: Space
    codomain: Space
    matrix: tuple  # codomain.dim rows, domain.dim columns
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        M = la.mat(self.matrix)
        if len(M) != self.codomain.dim or any(len(r) != self.domain.dim for r in M):
            raise DimensionError(
                f"matrix shape does not match {self.domain.dim} -> {self.codomain.dim}")
        object.__setattr__(self, "matrix", M)

    def __call__(self, x) -> tuple:
        x = la.vec(x)
        if len(x) != self.domain.dim:
            raise DimensionError("vector does not belong to the domain")
        return la.matvec(self.matrix, x)

    def __sub__(self, other: "LinMap") -> "LinMap":
        _same_shape(self, other)
        return LinMap(self.domain, self.codomain, la.sub(self.matrix, other.matrix))

    def __add__(self, other: "LinMap") -> "LinMap":
        _same_shape(self, other)
        return LinMap(self.domain, self.codomain, la.add(self.matrix, other.matrix))

    def scaled(self, c) -> "LinMap":
        return LinMap(self.domain, self.codomain, la.scale(c, self.matrix))

    def columns(self) -> list:
        return la.columns(self.matrix, self.domain.dim)

    def equals(self, other: "LinMap") -> bool:
        """Exact matrix identity between maps of the same shape."""
        return (self.domain.dim == other.domain.dim and self.codomain.dim == other.codomain.dim
                and self.matrix == other.matrix)

    def rank(self) -> int:
        return la.rank(self.matrix, self.domain.dim)

    @property
    def norm(self) -> Fraction:
        v = self._cache.get("norm")
        if v is None:
            v = self._cache["norm"] = op_norm(self)
        return v

    def __repr__(self):
        return f"LinMap({self.domain.id} -> {self.codomain.id}, {self.codomain.dim}x{self.domain.dim})"


def _same_shape(f: LinMap, g: LinMap):
    if f.domain.dim != g.domain.dim or f.codomain.dim != g.codomain.dim:
        raise DimensionError("maps have different shapes")


def identity(X: Space) -> LinMap:
    return LinMap(X, X, la.identity(X.dim))


def zero_map(X: Space, Y: Space) -> LinMap:
    return LinMap(X, Y, la.zeros(Y.dim, X.dim))


def compose(g: LinMap, f: LinMap) -> LinMap:
    """``g o f``."""
    if f.codomain.dim != g.domain.dim:
        raise DimensionError("maps do not chain")
    return LinMap(f.domain, g.codomain, la.matmul(g.matrix, f.matrix, f.domain.dim))


def chain(*maps: LinMap) -> LinMap:
    """``chain(h, g, f) == h o g o f``."""
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = compose(m, out)
    return out


def restrict(f: LinMap, sub: LinMap) -> LinMap:
    """Restriction of ``f`` to the subspace embedded by ``sub``."""
    return compose(f, sub)


def block(domain: Space, codomain: Space, parts: list[LinMap]) -> LinMap:
    """Map on a direct sum given by one component per summand, added."""
    cols = []
    for p in parts:
        cols.extend(p.columns())
    return LinMap(domain, codomain, la.from_columns(cols, codomain.dim))


# ----------------------------------------------------------------- norms


def op_norm(T: LinMap, method: str = "vertex") -> Fraction:
    """Exact operator norm ``sup{||Tx|| : ||x|| <= 1}``.

    ``vertex`` maximizes the codomain norm over the domain's extreme points;
    ``lp`` runs one LP per codomain facet over the domain ball.  Both are
    exact; the second is the independent route used in cross-checks.
    """
    if T.domain.dim == 0 or T.codomain.dim == 0:
        return Fraction(0)
    if method == "vertex":
        return max(T.codomain.norm(T(v)) for v in T.domain.vertices)
    if method == "lp":
        best = Fraction(0)
        for phi in T.codomain.facets:
            obj = la.matvec(la.transpose(T.matrix), phi)
            best = max(best, lp_max(obj, T.domain.hrep).value)
        return best
    raise ValueError(f"unknown method {method!r}")


def norm_witness(T: LinMap) -> tuple:
    """A domain vertex at which the operator norm is attained."""
    return max(T.domain.vertices, key=lambda v: T.codomain.norm(T(v)))


def distance(f: LinMap, g: LinMap) -> Fraction:
    _same_shape(f, g)
    return op_norm(f - g)


# ------------------------------------------------------------ embeddings


@dataclass(frozen=True)
class EmbeddingCert:
    map: LinMap
    eps: Fraction
    upper: Fraction  # ||f||
    lower: Fraction  # min ||f x|| / ||x|| over the domain
    lower_vertex: tuple  # vertex of {x : ||f x|| <= 1} of largest domain norm
    flagged: bool = False  # eps >= 1 with non-injective f

    def verify(self) -> bool:
        """Recompute both bounds from the stored map."""
        again = certify_embedding(self.map, self.eps)
        return isinstance(again, EmbeddingCert) and again.upper == self.upper and again.lower == self.lower


@dataclass(frozen=True)
class Refutation:
    map: LinMap
    eps: Fraction
    witness: tuple
    side: str  # "upper" | "lower"

    def verify(self) -> bool:
        x = self.witness
        nx = self.map.domain.norm(x)
        nfx = self.map.codomain.norm(self.map(x))
        if self.side == "upper":
            return nfx > (1 + self.eps) * nx
        return nfx < (1 - self.eps) * nx

    def __bool__(self):
        return False


def pulled_back_ball(f: LinMap) -> HRep:
    """``{x : ||f x|| <= 1}`` as functionals on the domain."""
    return HRep.of(f.domain.dim, la.matmul(f.codomain.facets, f.matrix, f.domain.dim))


def lower_ratio(f: LinMap, method: str = "vertex") -> tuple[Fraction, tuple]:
    """``inf ||f x|| / ||x||`` and the point realizing it (f injective).

    The set ``Q = {x : ||f x|| <= 1}`` is a symmetric polytope; the ratio is
    ``1 / max_{q in Q} ||q||``, attained at a vertex of ``Q``.  With
    ``method="lp"`` the maximum is computed by one LP per domain facet.
    """
    Q = pulled_back_ball(f)
    if method == "vertex":
        verts = hrep_to_vrep(Q).vertices
        best = max(verts, key=f.domain.norm)
        return 1 / f.domain.norm(best), best
    best_val, best_x = Fraction(0), None
    for psi in f.domain.facets:
        res = lp_max(psi, Q)
        if res.value > best_val:
            best_val, best_x = res.value, res.witness
    return 1 / best_val, best_x


def certify_embedding(f: LinMap, eps, method: str = "vertex"):
    """Certificate that ``(1-eps)||x|| <= ||f x|| <= (1+eps)||x||``, or a refutation."""
    eps = la.frac(eps)
    if eps < 0:
        raise PreconditionError("eps must be non-negative")
    X = f.domain
    if X.dim == 0:
        return EmbeddingCert(f, eps, Fraction(0), Fraction(1), ())
    if method == "vertex":
        upper = op_norm(f)
        top = norm_witness(f)
    else:
        upper = op_norm(f, "lp")
        top = None
    if upper > 1 + eps:
        if top is None:
            top = norm_witness(f)
        return Refutation(f, eps, top, "upper")
    kernel = la.nullspace(f.matrix, X.dim)
    if kernel:
        if eps >= 1:
            return EmbeddingCert(f, eps, upper, Fraction(0), kernel[0], flagged=True)
        return Refutation(f, eps, kernel[0], "lower")
    lower, x = lower_ratio(f, method)
    if lower < 1 - eps:
        return Refutation(f, eps, x, "lower")
    return EmbeddingCert(f, eps, upper, lower, x)


def is_isometry(f: LinMap) -> bool:
    return isinstance(certify_embedding(f, 0), EmbeddingCert)


def embedding_defect(f: LinMap) -> Fraction:
    """Smallest eps for which ``f`` is an eps-embedding."""
    if f.domain.dim == 0:
        return Fraction(0)
    upper = op_norm(f)
    if la.nullspace(f.matrix, f.domain.dim):
        return max(upper - 1, Fraction(1))
    lower, _ = lower_ratio(f)
    return max(upper - 1, 1 - lower)


__all__ = [
    "LinMap", "identity", "zero_map", "compose", "chain", "restrict", "block", "op_norm",
    "distance", "certify_embedding", "EmbeddingCert", "Refutation", "is_isometry",
    "embedding_defect", "lower_ratio",
]
