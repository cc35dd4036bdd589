"""Shared builders and brute-force oracles for the tests."""
from fractions import Fraction as F

from hypothesis import strategies as st

from univop import linalg as la
from univop.operator import LinMap, op_norm
from univop.space import random_space


def q(s):
    return la.frac(s)


def small_rational(num=4, den=4):
    return st.builds(F, st.integers(-num, num), st.integers(1, den))


@st.composite
def spaces(draw, max_dim=3):
    dim = draw(st.integers(1, max_dim))
    seed = draw(st.integers(0, 10**6))
    extra = draw(st.integers(0, 2))
    return random_space(dim, dim + extra, seed)


@st.composite
def vectors(draw, dim):
    return tuple(draw(st.lists(small_rational(), min_size=dim, max_size=dim)))


@st.composite
def maps(draw, X, Y):
    M = tuple(tuple(draw(small_rational()) for _ in range(X.dim)) for _ in range(Y.dim))
    return LinMap(X, Y, M)


def vertex_op_norm(T):
    """Oracle: max codomain norm over domain-ball vertices, vertices taken by brute force."""
    from univop.exactgeom import brute_force_vertices

    if T.domain.dim == 0 or T.codomain.dim == 0:
        return F(0)
    verts = brute_force_vertices(T.domain.hrep).vertices
    return max(T.codomain.norm(T(v)) for v in verts)


def grid_inf(fun, lo, hi, steps=400):
    """Minimum of a convex piecewise-linear function of one variable over a rational grid."""
    lo, hi = q(lo), q(hi)
    pts = [lo + (hi - lo) * F(k, steps) for k in range(steps + 1)]
    return min(fun(t) for t in pts)


def nonexpansive(T):
    n = op_norm(T)
    return T.scaled(1 / n) if n > 1 else T
