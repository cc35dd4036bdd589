from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from univop.amalgam import (adapted_basis, correct_to_exact, extend_operators, projection_factor,
                            pushout_eps, pushout_exact, pushout_norm_formula)
from univop.errors import PreconditionError
from univop.operator import (LinMap, compose, distance, identity, is_isometry,
                             op_norm, zero_map)
from univop.space import direct_sum_l1, reals, sup_space, zero_space
from helpers import grid_inf, maps, nonexpansive, spaces, vectors

R = reals()
HALF = F(1, 2)


def reals_pushout():
    return pushout_eps(identity(R), HALF)


def test_reals_pushout_norms():
    res = reals_pushout()
    Z = res.Z
    assert Z.norm((1, -1)) == HALF
    assert Z.norm((1, 0)) == Z.norm((0, 1)) == 1
    assert Z.norm((1, 1)) == 2
    assert distance(compose(res.j, identity(R)), res.i) == HALF
    assert set(Z.vertices) == {(1, 0), (-1, 0), (0, 1), (0, -1), (2, -2), (-2, 2)}


def test_reals_pushout_against_inf_oracle():
    Z = reals_pushout().Z
    for x, y in [(1, -1), (1, 0), (1, 1), (3, -1), (F(1, 3), 2)]:
        oracle = grid_inf(lambda w: abs(x - w) + abs(y + w) + abs(w) / 2, -6, 6, 1800)
        assert Z.norm((x, y)) == oracle


def test_pushout_zero_dimensional_domain():
    X = zero_space()
    res = pushout_eps(zero_map(X, sup_space(2)), HALF)
    assert res.Z.same_ball(sup_space(2)) and is_isometry(res.j)


def test_pushout_rejects_non_embedding():
    with pytest.raises(PreconditionError):
        pushout_eps(zero_map(R, zero_space()), HALF)
    with pytest.raises(PreconditionError):
        pushout_eps(identity(R), 0)


def test_extend_operators_examples():
    res = reals_pushout()
    t0 = extend_operators(res, zero_map(R, R), zero_map(R, R))
    assert t0.equals(zero_map(res.Z, R))
    t = extend_operators(res, identity(R), identity(R))
    assert t.matrix == ((1, 1),)
    assert all(abs(v[0] + v[1]) <= 1 for v in res.Z.vertices) and op_norm(t) <= 1
    assert compose(t, res.i).equals(identity(R)) and compose(t, res.j).equals(identity(R))
    with pytest.raises(PreconditionError) as exc:
        extend_operators(res, identity(R), zero_map(R, R))
    assert exc.value.witness is not None


def test_pushout_exact_examples():
    X, Y = sup_space(2), R
    E = zero_space()
    res = pushout_exact(zero_map(E, X), zero_map(E, Y))
    assert res.Z.same_ball(direct_sum_l1(X, Y).space)

    h = LinMap(X, Y, ((F(1, 2), F(1, 3)),))
    res = pushout_exact(identity(X), h)
    for v in [(1, 0), (1, 1), (3, -2)]:
        assert res.Z.norm(res.i(v)) == Y.norm(h(v))

    g = LinMap(R, X, ((1,), (0,)))
    res = pushout_exact(g, identity(R))
    assert is_isometry(res.j)
    oracle = grid_inf(lambda t: max(abs(t), 0) + abs(1 - t), -2, 2)
    assert res.Z.norm(res.j((1,))) == oracle == 1
    assert compose(res.i, g).equals(compose(res.j, identity(R)))


def test_pushout_exact_rejects_non_isometric_leg():
    with pytest.raises(PreconditionError):
        pushout_exact(LinMap(R, R, ((2,),)), identity(R))


def test_glue_requires_agreement():
    g = LinMap(R, sup_space(2), ((1,), (0,)))
    res = pushout_exact(g, identity(R))
    with pytest.raises(PreconditionError):
        res.glue(LinMap(sup_space(2), R, ((0, 1),)), identity(R))
    t = res.glue(LinMap(sup_space(2), R, ((1, 0),)), identity(R))
    assert compose(t, res.i).matrix == ((1, 0),)


def _correction_setup(delta):
    V, S, X0 = sup_space(2), R, zero_space()
    P = LinMap(V, S, ((0, 1),))
    r = LinMap(S, V, ((0,), (1,)))
    incl = zero_map(X0, R)
    e = zero_map(X0, V)
    T = identity(R)
    f = LinMap(R, V, ((1,), (1 - delta,)))
    return P, r, e, T, f, incl


def test_correction_example():
    P, r, e, T, f, incl = _correction_setup(F(1, 8))
    fp = correct_to_exact(P, r, e, T, f, incl, HALF)
    assert fp.matrix == ((1,), (1,))
    assert compose(P, fp).equals(T) and is_isometry(fp)


def test_correction_of_exact_map_is_identity():
    P, r, e, T, f, incl = _correction_setup(F(0))
    assert correct_to_exact(P, r, e, T, f, incl, HALF).equals(f)


def test_correction_rejections():
    P, r, e, T, f, incl = _correction_setup(F(1, 2))
    with pytest.raises(PreconditionError):
        correct_to_exact(P, r, e, T, f, incl, HALF)
    P, r, e, T, f, incl = _correction_setup(F(1, 8))
    with pytest.raises(PreconditionError):
        correct_to_exact(P, LinMap(R, sup_space(2), ((0,), (2,))), e, T, f, incl, HALF)


def test_correction_with_oversized_delta_gives_witness():
    # f is a 1/2-embedding with P f = T, but its first coordinate is too long for eps = 1/8
    P, r, e, T, f, incl = _correction_setup(F(0))
    f = LinMap(R, sup_space(2), ((F(3, 2),), (1,)))
    with pytest.raises(PreconditionError) as exc:
        correct_to_exact(P, r, e, T, f, incl, F(1, 8), delta=F(1, 2))
    assert exc.value.witness is not None


def test_adapted_basis_starts_with_subspace():
    incl = LinMap(R, sup_space(3), ((1,), (1,), (0,)))
    A = adapted_basis(incl)
    assert A[0] == (1, 1, 0) and len(A) == 3


def test_projection_factor_example():
    V, W = sup_space(2), R
    e = identity(V)
    T = LinMap(V, W, ((F(1, 2), F(1, 2)),))
    pf = projection_factor(e, T)
    assert is_isometry(pf.j) and compose(pf.pi, pf.j).equals(T)
    with pytest.raises(PreconditionError):
        projection_factor(e, T.scaled(3))


@given(spaces(2), spaces(2), st.data())
def test_pushout_eps_properties(X, Y, data):
    eps = data.draw(st.sampled_from([F(1, 8), F(1, 4), F(1, 2)]))
    from univop.space import direct_sum_max

    # f: X -> X (+) Y, isometric, then nudged by a small map
    D = direct_sum_max(X, Y)
    f = D.inl
    nudge = nonexpansive(data.draw(maps(X, D.space))).scaled(eps / 4)
    f = f + nudge
    res = pushout_eps(f, eps)
    assert is_isometry(res.i) and is_isometry(res.j)
    assert distance(compose(res.j, f), res.i) <= eps
    x = data.draw(vectors(X.dim))
    y = data.draw(vectors(D.space.dim))
    assert res.Z.norm(tuple(x) + tuple(y)) == pushout_norm_formula(f, eps, x, y)


@given(spaces(2), spaces(2), st.data())
def test_pushout_exact_two_sided(X, Y, data):
    from univop.space import direct_sum_max

    E = data.draw(spaces(2))
    g = direct_sum_max(E, X).inl
    h = direct_sum_max(E, Y).inl
    res = pushout_exact(g, h)
    assert is_isometry(res.i) and is_isometry(res.j)
    assert compose(res.i, g).equals(compose(res.j, h))
