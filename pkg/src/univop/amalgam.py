"""Gluing constructions: the eps-pushout norm, the exact pushout, and
the correction of approximate left-extension witnesses to exact ones."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg as la
from .errors import PreconditionError
from .operator import (EmbeddingCert, LinMap, Refutation, certify_embedding, chain, compose,
                       distance, identity, op_norm)
from .space import (Space, correction_delta, direct_sum_l1, direct_sum_max, quotient_space,
                    space_from_points)

# Recorded in manifests: the norm is inf ||x-w|| + ||y+f(w)|| + eps||w||, i.e. the
# printed inf-convolution composed with (x, y) -> (x, -y).
CONVENTION = "y+f(w)"


@dataclass(frozen=True)
class AmalgamResult:
    Z: Space
    i: LinMap  # X -> Z
    j: LinMap  # Y -> Z
    eps: Fraction
    t: LinMap | None = None
    f: LinMap | None = None  # the glued map (eps > 0) ...
    g: LinMap | None = None  # ... or the pair g: E -> X, h: E -> Y (eps = 0)
    h: LinMap | None = None
    section: tuple | None = None  # lifts Z back to X (+) Y coordinates
    convention: str = CONVENTION

    def glue(self, a: LinMap, b: LinMap) -> LinMap:
        """The map ``Z -> S`` induced by ``a: X -> S`` and ``b: Y -> S``.

        For the exact pushout this is the universal property and needs
        ``a o g == b o h``; for the eps-pushout it is ``(x, y) -> a x + b y``.
        """
        if a.domain.dim != self.i.domain.dim or b.domain.dim != self.j.domain.dim:
            raise PreconditionError("maps do not start at the glued spaces")
        if a.codomain.dim != b.codomain.dim:
            raise PreconditionError("maps have different targets")
        S = a.codomain
        n = a.domain.dim + b.domain.dim
        cols = a.columns() + b.columns()
        summed = la.from_columns(cols, S.dim) if cols else la.zeros(S.dim, 0)
        if self.section is None:
            return LinMap(self.Z, S, summed)
        if not compose(a, self.g).equals(compose(b, self.h)):
            diff = compose(a, self.g) - compose(b, self.h)
            x = next(c for c in la.identity(self.g.domain.dim) if any(diff(c)))
            raise PreconditionError("maps disagree on the common subspace", witness=x)
        return LinMap(self.Z, S, la.matmul(summed, self.section, self.Z.dim) if n else la.zeros(S.dim, self.Z.dim))


def pushout_eps(f: LinMap, eps) -> AmalgamResult:
    """Glue ``X`` to ``Y`` along the eps-embedding ``f``.

    The unit ball of ``Z = X (+) Y`` is the hull of ``B_X x 0``, ``0 x B_Y``
    and ``(1/eps) (v, -f v)`` for vertices ``v`` of ``B_X``.
    """
    eps = la.frac(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive; use pushout_exact for eps = 0")
    cert = certify_embedding(f, eps)
    if not isinstance(cert, EmbeddingCert) or cert.flagged:
        raise PreconditionError("f is not an eps-embedding", witness=getattr(cert, "witness", None))
    X, Y = f.domain, f.codomain
    n, m = X.dim, Y.dim
    zx, zy = (Fraction(0),) * n, (Fraction(0),) * m
    pts = [tuple(v) + zy for v in X.vertices] + [zx + tuple(w) for w in Y.vertices]
    pts += [tuple(x / eps for x in v) + tuple(-y / eps for y in f(v)) for v in X.vertices]
    Z = space_from_points(pts, n + m)
    I = la.identity(n + m)
    i = LinMap(X, Z, tuple(r[:n] for r in I))
    j = LinMap(Y, Z, tuple(r[n:] for r in I))
    return AmalgamResult(Z, i, j, eps, f=f)


def pushout_norm_formula(f: LinMap, eps, x, y) -> Fraction:
    """Evaluate ``inf_w ||x-w|| + ||y+f(w)|| + eps||w||`` by a direct LP in ``w``.

    Independent of the hull construction: variables ``(w, a, b, c)`` with
    ``|phi(x-w)| <= a``, ``|psi(y+f w)| <= b``, ``|phi(w)| <= c``.
    """
    from .exactgeom import solve_lp

    eps = la.frac(eps)
    X, Y = f.domain, f.codomain
    n = X.dim
    x, y = la.vec(x), la.vec(y)
    rows, rhs = [], []

    def row(wpart, a=0, b=0, c=0):
        return list(wpart) + [Fraction(a), Fraction(b), Fraction(c)]

    for phi in X.facets:
        px = la.dot(phi, x)
        for s in (1, -1):
            # s*phi(x - w) <= a
            rows.append(row([-s * p for p in phi], a=-1))
            rhs.append(-s * px)
            # s*phi(w) <= c
            rows.append(row([s * p for p in phi], c=-1))
            rhs.append(Fraction(0))
    for psi in Y.facets:
        pf = la.matvec(la.transpose(f.matrix), psi) if n else ()
        py = la.dot(psi, y)
        for s in (1, -1):
            # s*psi(y + f w) <= b
            rows.append(row([s * p for p in pf], b=-1))
            rhs.append(-s * py)
    c = [Fraction(0)] * n + [Fraction(1), Fraction(1), eps]
    out = solve_lp(c, rows, rhs, free=[True] * n + [False] * 3, maximize=False)
    if out.status != "optimal":  # pragma: no cover
        raise RuntimeError(f"formula LP ended with status {out.status}")
    return out.value


def extend_operators(result: AmalgamResult, pi: LinMap, rho: LinMap) -> LinMap:
    """``t(x, y) = pi(x) + rho(y)``, certified non-expansive on ``Z``."""
    if result.f is None:
        raise PreconditionError("extend_operators applies to eps-pushouts")
    if op_norm(pi) > 1:
        raise PreconditionError("pi is not non-expansive")
    if op_norm(rho) > 1:
        raise PreconditionError("rho is not non-expansive")
    gap = compose(rho, result.f) - pi
    if op_norm(gap) > result.eps:
        from .operator import norm_witness

        raise PreconditionError("||rho o f - pi|| exceeds eps", witness=norm_witness(gap))
    t = result.glue(pi, rho)
    if op_norm(t) > 1:  # pragma: no cover - guaranteed by the construction
        raise RuntimeError("glued operator is expansive")
    return t


def with_operator(result: AmalgamResult, t: LinMap) -> AmalgamResult:
    from dataclasses import replace

    return replace(result, t=t)


def pushout_exact(g: LinMap, h: LinMap) -> AmalgamResult:
    """Pushout of ``g: E -> X`` (isometric) and ``h: E -> Y`` (non-expansive).

    ``Z = (X (+)_1 Y) / {(g e, -h e)}``; ``i: X -> Z``, ``j: Y -> Z``.
    """
    if g.domain.dim != h.domain.dim:
        raise PreconditionError("g and h must share their domain")
    cert = certify_embedding(g, 0)
    if not isinstance(cert, EmbeddingCert):
        raise PreconditionError("g is not isometric", witness=cert.witness)
    if op_norm(h) > 1:
        from .operator import norm_witness

        raise PreconditionError("h is not non-expansive", witness=norm_witness(h))
    X, Y = g.codomain, h.codomain
    S = direct_sum_l1(X, Y)
    kernel = [tuple(g(e)) + tuple(-c for c in h(e)) for e in la.identity(g.domain.dim)]
    Q = quotient_space(S.space, kernel)
    i = compose(Q.q, S.inl)
    j = compose(Q.q, S.inr)
    return AmalgamResult(Q.space, i, j, Fraction(0), g=g, h=h, section=Q.section)


# ------------------------------------------------------------- correction


def adapted_basis(incl: LinMap) -> list[tuple]:
    """Images of the unit vectors of ``X0`` completed to a basis of ``X``."""
    return la.complete_basis(incl.columns(), incl.codomain.dim)


def correct_to_exact(P: LinMap, r: LinMap, e: LinMap, T: LinMap, f: LinMap, incl: LinMap,
                     eps, A=None, delta=None) -> LinMap:
    """Turn an approximate left-extension witness into an exact one.

    ``P: V -> S`` with right inverse ``r``; ``incl: X0 -> X``; ``e: X0 -> V``
    isometric with ``P e = T incl``; ``f: X -> V`` a delta-embedding close to
    ``e`` on ``X0`` and with ``P f`` close to ``T``.  The first ``dim X0``
    vectors of the basis ``A`` must span ``incl(X0)``.  Returns ``f'`` with
    ``f' incl = e`` and ``P f' = T`` exactly, certified as an eps-embedding.
    """
    eps = la.frac(eps)
    X, X0, V = incl.codomain, incl.domain, f.codomain
    k, n = X0.dim, X.dim
    A = adapted_basis(incl) if A is None else [la.vec(a) for a in A]
    if len(A) != n or la.rank(A, n) < n:
        raise PreconditionError("A is not a basis of X")
    # A0 must lie in incl(X0): solve incl u = a
    pre = []
    for a in A[:k]:
        u = la.solve(incl.matrix, a, k)
        if u is None:
            raise PreconditionError("the first vectors of A are not in X0", witness=a)
        pre.append(u)
    chosen = delta is None
    if chosen:
        delta = correction_delta(X, A, eps)
    delta = la.frac(delta)
    if not compose(P, r).equals(identity(P.codomain)):
        raise PreconditionError("r is not a right inverse of P")
    if op_norm(r) > 1:
        raise PreconditionError("r is not non-expansive")
    if not compose(P, e).equals(compose(T, incl)):
        raise PreconditionError("P o e differs from T on X0")
    cert = certify_embedding(f, delta)
    if isinstance(cert, Refutation):
        raise PreconditionError("f is not a delta-embedding", witness=cert.witness)
    if k and distance(compose(f, incl), e) > delta:
        raise PreconditionError("f is not delta-close to e on X0")
    if distance(compose(P, f), T) > delta:
        raise PreconditionError("P o f is not delta-close to T")
    images = []
    for idx, a in enumerate(A):
        if idx < k:
            images.append(e(pre[idx]))
        else:
            w = tuple(p - t for p, t in zip(P(f(a)), T(a)))
            images.append(tuple(x - y for x, y in zip(f(a), r(w))))
    # f' is determined on the basis A: f' = images . A^{-1}
    Ainv = la.inverse(la.from_columns(A, n))
    fp = LinMap(X, V, la.matmul(la.from_columns(images, V.dim), Ainv, n))
    if not compose(fp, incl).equals(e) or not compose(P, fp).equals(T):  # pragma: no cover
        raise RuntimeError("correction failed to be exact")
    cert = certify_embedding(fp, eps)
    if isinstance(cert, Refutation):
        if chosen:  # pragma: no cover - excluded by the choice of delta
            raise RuntimeError("corrected map is not an eps-embedding")
        raise PreconditionError("supplied delta is too large: the corrected map is not an eps-embedding",
                                witness=cert.witness)
    return fp


# ------------------------------------------------- left-universal example


@dataclass(frozen=True)
class ProjectionFactor:
    sum_space: Space
    pi: LinMap  # V (+)_max W -> W
    j: LinMap  # X -> V (+)_max W


def projection_factor(e: LinMap, T: LinMap) -> ProjectionFactor:
    """``j(x) = (e x, T x)`` into the max-sum; ``pi o j = T``."""
    if e.domain.dim != T.domain.dim:
        raise PreconditionError("e and T must share their domain")
    if not isinstance(certify_embedding(e, 0), EmbeddingCert):
        raise PreconditionError("e is not isometric")
    if op_norm(T) > 1:
        raise PreconditionError("T is not non-expansive")
    S = direct_sum_max(e.codomain, T.codomain)
    j = compose(S.inl, e) + compose(S.inr, T)
    return ProjectionFactor(S.space, S.pr, j)


__all__ = [
    "AmalgamResult", "pushout_eps", "pushout_exact", "extend_operators", "correct_to_exact",
    "pushout_norm_formula", "projection_factor", "adapted_basis", "CONVENTION", "chain",
]
