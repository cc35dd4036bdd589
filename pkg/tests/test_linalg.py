from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from univop import linalg as la
from helpers import small_rational


def test_frac_accepts_strings_and_ints():
    assert la.frac("3/6") == F(1, 2)
    assert la.frac(-4) == F(-4)
    assert la.frac(" 7 ") == F(7)


@pytest.mark.parametrize("bad", [0.5, True, "1/0", "x", None])
def test_frac_rejects_floats_bools_and_junk(bad):
    with pytest.raises((ValueError, TypeError, ZeroDivisionError)):
        la.frac(bad)


def test_matmul_keeps_width_for_empty_factor():
    assert la.matmul(((F(1),), (F(2),)), ((),), 0) == ((), ())
    assert la.matmul(((), ()), (), 3) == la.zeros(2, 3)


def test_nullspace_and_rank():
    A = la.mat([[1, 2, 3], [2, 4, 6]])
    assert la.rank(A, 3) == 1
    ns = la.nullspace(A, 3)
    assert len(ns) == 2
    assert all(not any(la.matvec(A, v)) for v in ns)


def test_complete_basis_extends():
    B = la.complete_basis([(F(1), F(1), F(0))], 3)
    assert B[0] == (1, 1, 0) and la.rank(B, 3) == 3


@given(st.lists(st.lists(small_rational(), min_size=3, max_size=3), min_size=3, max_size=3))
def test_inverse_roundtrip(rows):
    A = la.mat(rows)
    if la.rank(A, 3) < 3:
        with pytest.raises(ValueError):
            la.inverse(A)
        return
    assert la.matmul(A, la.inverse(A)) == la.identity(3)


@given(st.lists(st.lists(small_rational(), min_size=2, max_size=2), min_size=2, max_size=2),
       st.lists(small_rational(), min_size=2, max_size=2))
def test_solve_agrees_with_product(rows, b):
    A = la.mat(rows)
    x = la.solve(A, b, 2)
    if x is not None:
        assert la.matvec(A, x) == tuple(b)
    else:
        assert la.rank(A, 2) < 2
