from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from univop.errors import DimensionError, PreconditionError
from univop.operator import (EmbeddingCert, LinMap, Refutation, certify_embedding, compose, distance,
                             embedding_defect, identity, is_isometry, op_norm, restrict, zero_map)
from univop.space import l1_space, reals, sup_space
from helpers import maps, spaces, vertex_op_norm

R = reals()


def test_op_norm_examples():
    assert op_norm(LinMap(l1_space(2), sup_space(2), ((1, 0), (0, 1)))) == 1
    assert op_norm(LinMap(sup_space(2), R, ((1, 1),))) == 2
    assert op_norm(zero_map(sup_space(2), R)) == 0


def test_certify_scaling():
    eps = F(1, 4)
    assert isinstance(certify_embedding(LinMap(R, R, ((1 + eps,),)), eps), EmbeddingCert)
    ref = certify_embedding(LinMap(R, R, ((1 + eps + F(1, 100),),)), eps)
    assert isinstance(ref, Refutation) and not ref
    assert ref.side == "upper" and abs(ref.witness[0]) == 1 and ref.verify()


def test_certify_first_coordinate_inclusion():
    cert = certify_embedding(LinMap(R, sup_space(2), ((1,), (0,))), 0)
    assert cert and cert.verify()


def test_certify_non_injective():
    f = LinMap(sup_space(2), R, ((1, 0),))
    ref = certify_embedding(f, F(1, 2))
    assert not ref and ref.side == "lower" and ref.verify()
    assert certify_embedding(f, 1).flagged
    with pytest.raises(PreconditionError):
        certify_embedding(f, -1)


def test_distance_examples():
    f = identity(R)
    assert distance(f, f) == 0
    assert distance(f, zero_map(R, R)) == 1
    with pytest.raises(DimensionError):
        distance(f, zero_map(R, sup_space(2)))


def test_compose_and_restrict_identities():
    f = LinMap(sup_space(2), R, ((1, 2),))
    assert compose(identity(R), f).equals(f)
    assert restrict(f, identity(sup_space(2))).equals(f)
    with pytest.raises(DimensionError):
        compose(f, f)


@given(spaces(3), spaces(3), st.data())
def test_distance_matches_vertex_oracle(X, Y, data):
    f, g = data.draw(maps(X, Y)), data.draw(maps(X, Y))
    assert distance(f, g) == vertex_op_norm(f - g)
    assert op_norm(f, "lp") == op_norm(f)


@given(spaces(2), spaces(2), spaces(2), st.data())
def test_submultiplicative_and_associative(X, Y, W, data):
    f, g, h = data.draw(maps(X, Y)), data.draw(maps(Y, W)), data.draw(maps(W, X))
    assert op_norm(compose(g, f)) <= op_norm(g) * op_norm(f)
    assert compose(h, compose(g, f)).equals(compose(compose(h, g), f))


@given(spaces(3), spaces(3), st.data())
def test_refutations_reverify(X, Y, data):
    f = data.draw(maps(X, Y))
    eps = data.draw(st.sampled_from([F(0), F(1, 4), F(1, 2)]))
    out = certify_embedding(f, eps)
    if isinstance(out, Refutation):
        assert out.verify()
    else:
        assert out.verify()
        assert (1 - eps) <= out.lower and out.upper <= 1 + eps
    assert (embedding_defect(f) <= eps) == bool(out)


@given(spaces(3))
def test_isometries_have_norm_one(X):
    assert is_isometry(identity(X)) and op_norm(identity(X)) == 1


@given(spaces(2), spaces(2), st.data())
def test_scaling_universality_identity(X, Y, data):
    # U o i = j o (T / lam) exactly implies (lam U) o i = j o T
    lam = data.draw(st.sampled_from([F(2), F(3, 2), F(5)]))
    T = data.draw(maps(X, Y))
    i, U = identity(X), T.scaled(1 / lam)
    j = identity(Y)
    assert compose(U, i).equals(compose(j, T.scaled(1 / lam)))
    assert compose(U.scaled(lam), i).equals(compose(j, T))
