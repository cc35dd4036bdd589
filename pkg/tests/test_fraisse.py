from fractions import Fraction as F

import pytest

from univop import linalg as la
from univop.errors import PreconditionError
from univop.fraisse import (Chain, ExtensionProblem, OperatorChain, Request, build_almost_isometry,
                            almost_homogeneity, build_gurarii_chain, build_left_gurarii_chain,
                            build_universal_chain, check_gurarii, choose_delta, claim_step,
                            left_catalog_for, solve_extension_left, solve_extension_space,
                            solve_extension_two_sided, verify_chain)
from univop.operator import (LinMap, certify_embedding, compose, embedding_defect,
                             identity, is_isometry, op_norm, zero_map)
from univop.space import direct_sum_l1, l1_space, reals, sup_space, zero_space

R = reals()
Z0 = zero_space()
SUP2 = sup_space(2)


def zmap(Y):
    return LinMap(Z0, Y, la.zeros(Y.dim, 0))


FIRST = LinMap(R, SUP2, ((1,), (0,)))


def sup_catalog():
    return [Request("space", "line", zmap(R)),
            Request("space", "sup-plane", zmap(SUP2)),
            Request("space", "R-in-sq", FIRST, anchor=0, anchor_map=identity(R))]


# ------------------------------------------------------------ space chains


def test_space_extension_without_growth():
    chain = Chain.start(R)
    chain2, f = solve_extension_space(chain, ExtensionProblem("space", identity(R), identity(R)))
    assert chain2.top.dim == 1 and f.equals(identity(R))


def test_space_extension_line_into_square():
    chain = Chain.start(R)
    chain2, f = solve_extension_space(chain, ExtensionProblem("space", FIRST, identity(R)))
    assert chain2.top.dim == 2 and is_isometry(f)
    assert compose(f, FIRST).equals(chain2.links[0])
    assert verify_chain(chain2) == []


def test_space_extension_empty_gluing():
    chain = Chain.start(R)
    chain2, f = solve_extension_space(chain, ExtensionProblem("space", zmap(SUP2), zmap(R)))
    assert chain2.top.same_ball(direct_sum_l1(SUP2, R).space) or chain2.top.same_ball(direct_sum_l1(R, SUP2).space)
    assert is_isometry(f)


def test_space_extension_rejects_bad_partial_map():
    with pytest.raises(PreconditionError):
        solve_extension_space(Chain.start(R), ExtensionProblem("space", FIRST, LinMap(R, R, ((2,),))))


def test_gurarii_chain_examples():
    assert build_gurarii_chain(sup_catalog(), 0).top.dim == 0
    one = build_gurarii_chain([Request("space", "R-in-sq", FIRST)], 1)
    assert one.top.dim == 2
    a = build_gurarii_chain(sup_catalog(), 10, seed=3, random_every=4)
    b = build_gurarii_chain(sup_catalog(), 10, seed=3, random_every=4)
    assert a.stage_hashes() == b.stage_hashes()
    assert verify_chain(a) == []


def test_gurarii_battery_passes_and_failures_are_localized():
    cat = sup_catalog()
    chain = build_gurarii_chain(cat, 6)
    assert all(v.passed for v in check_gurarii(chain, cat, 0))
    # a chain that never saw the sup-plane request
    other = build_gurarii_chain(cat[:1], 4)
    verdicts = check_gurarii(other, cat, 0)
    assert verdicts[0].passed and not verdicts[1].passed
    assert verdicts[1].stage == len(other.stages) - 1 and "no witness" in verdicts[1].detail


# ------------------------------------------------------------ left chains


def test_left_extension_kills_new_summand():
    oc = OperatorChain.start("left", R, R, identity(R))
    oc2, f = solve_extension_left(oc, ExtensionProblem("left", zmap(SUP2), zmap(R), zero_map(SUP2, R)))
    assert oc2.top.dim == 3 and is_isometry(f)
    assert compose(oc2.op, f).equals(zero_map(SUP2, R))
    assert verify_chain(oc2) == []


def test_left_extension_without_growth():
    oc = OperatorChain.start("left", R, R, identity(R))
    oc2, f = solve_extension_left(oc, ExtensionProblem("left", identity(R), identity(R), identity(R)))
    assert oc2.top.dim == 1 and f.equals(identity(R))


def test_left_extension_diagonal_example():
    diag = LinMap(R, SUP2, ((1,), (1,)))
    T = LinMap(SUP2, R, ((1, 0),))
    oc = OperatorChain.start("left", R, R, identity(R))
    oc2, f = solve_extension_left(oc, ExtensionProblem("left", diag, identity(R), T))
    assert oc2.top.dim == 2
    assert is_isometry(f)
    assert compose(f, diag).equals(oc2.dlinks[0])
    assert compose(oc2.op, f).equals(T)
    assert compose(oc2.op, oc2.dlinks[0]).equals(oc.op)
    assert op_norm(oc2.op) <= 1


def test_left_extension_compatibility_failure_has_witness():
    diag = LinMap(R, SUP2, ((1,), (1,)))
    oc = OperatorChain.start("left", R, R, identity(R))
    with pytest.raises(PreconditionError) as exc:
        solve_extension_left(oc, ExtensionProblem("left", diag, identity(R), zero_map(SUP2, R)))
    assert exc.value.witness == (1,)


def test_left_chain_replay_and_battery():
    cat = left_catalog_for(R)
    a = build_left_gurarii_chain(R, cat, 6, seed=1, random_every=3)
    b = build_left_gurarii_chain(R, cat, 6, seed=1, random_every=3)
    assert a.stage_hashes() == b.stage_hashes()
    assert verify_chain(a) == []
    assert all(v.passed for v in check_gurarii(a, cat, 0))


def test_left_chain_over_a_chain():
    S = build_gurarii_chain(sup_catalog(), 3)
    oc = build_left_gurarii_chain(S, left_catalog_for(S.stages[1]), 4)
    assert verify_chain(oc) == []
    assert oc.ctop.same_ball(S.top)


# ------------------------------------------------------ two-sided chains


def test_two_sided_consistency_noop():
    oc = OperatorChain.start("two-sided", R, R, identity(R))
    prob = ExtensionProblem("two-sided", identity(R), identity(R), identity(R), identity(R),
                            identity(R), identity(R))
    oc2, (i, j) = solve_extension_two_sided(oc, prob)
    assert oc2.top.dim == 1 and oc2.log[-1].status == "revisit"


def test_two_sided_from_scratch_and_eve_style():
    oc = OperatorChain.start("two-sided", Z0, Z0)
    T = LinMap(l1_space(2), R, ((F(1, 2), F(1, 2)),))
    prob = ExtensionProblem("two-sided", zmap(l1_space(2)), zmap(Z0), T, zmap(R), LinMap(Z0, Z0, ()), zmap(Z0))
    oc2, (i, j) = solve_extension_two_sided(oc, prob)
    assert is_isometry(i) and is_isometry(j)
    assert compose(oc2.op, i).equals(compose(j, T))
    assert op_norm(oc2.op) <= 1 and verify_chain(oc2) == []


def test_universal_chain_is_deterministic():
    a = build_universal_chain([], 5, seed=2, random_every=1)
    b = build_universal_chain([], 5, seed=2, random_every=1)
    assert a.stage_hashes() == b.stage_hashes() and verify_chain(a) == []


# ------------------------------------------------------------ back-and-forth


def twins(steps=4):
    cat = left_catalog_for(R)
    A = build_left_gurarii_chain(R, cat, steps)
    B = build_left_gurarii_chain(R, list(reversed(cat)), steps)
    return A, B


def _witness(chain, name):
    e = next(e for e in chain.log if e.name == name and e.status == "solved")
    return chain.push(e.witness, e.stage)


def test_choose_delta():
    d = choose_delta(F(1, 8), F(1))
    assert 7 * d < F(1, 8) and (1 + d) * d < F(1, 8) and 7 * 2 * d >= F(1, 8)


def test_claim_step_identity_case():
    A, _ = twins(3)
    v = (1,) + (0,) * (A.top.dim - 1)
    res = claim_step(A, A, A.top, identity(A.top), identity(A.top), v, v, F(1, 4), F(1, 8))
    assert res.bounds["ok"] and res.bounds["restriction"] == 0


def test_claim_step_twin_chains_non_isometric_seed():
    A, B = twins(3)
    emb0 = _witness(A, "copy-of-S")
    i0 = _witness(B, "copy-of-S") + _witness(B, "kernel-line").scaled(F(1, 8))
    eps, eta = F(1, 4), F(1, 8)
    assert not is_isometry(i0) and certify_embedding(i0, eps)
    v = (1,) + (0,) * (A.top.dim - 1)
    vp = (0,) * (B.top.dim - 1) + (1,)
    res = claim_step(A, B, R, emb0, i0, v, vp, eps, eta)
    b = res.bounds
    assert b["ok"] and b["intertwines"]
    assert b["first_gluing"] <= eps and b["middle"] <= eps + 3 * res.delta
    assert b["restriction"] <= eps + 7 * res.delta < eps + eta
    assert b["density"] < eta and embedding_defect(res.i1) <= eta
    assert verify_chain(res.A) == [] and verify_chain(res.B) == []


def test_claim_step_eps_gluing_one_step():
    A, B = twins(2)
    emb0 = _witness(A, "copy-of-S")
    i0 = _witness(B, "copy-of-S")
    v = (1,) + (0,) * (A.top.dim - 1)
    res = claim_step(A, B, R, emb0, i0, v, v[:B.top.dim], F(1, 4), F(1, 4), glue="eps")
    assert res.bounds["ok"] and res.bounds["second_gluing"] <= res.delta


def test_claim_step_rejects_coarse_delta():
    A, B = twins(2)
    with pytest.raises(PreconditionError):
        claim_step(A, B, Z0, zmap(A.top), zmap(B.top), (0,) * A.top.dim, (0,) * B.top.dim,
                   F(1, 4), F(1, 64), delta=F(1, 8))


def test_almost_isometry_identity():
    A, _ = twins(3)
    out = build_almost_isometry(A, A, 2, seed=(A.top, identity(A.top), identity(A.top)))
    assert all(e["ledger_ok"] and e["seed_distance"] == 0 for e in out["ledger"])


def test_almost_isometry_twins_four_steps():
    A, B = twins(4)
    out = build_almost_isometry(A, B, 4)
    assert len(out["ledger"]) == 4
    for e in out["ledger"]:
        assert e["ledger_ok"] and e["defect"] <= e["tolerance"]


def test_almost_homogeneity_with_sign_flip():
    A, _ = twins(4)
    f = _witness(A, "kernel-line")
    h = f.scaled(-1)  # nontrivial isometry of the kernel line, P h = P f = 0
    out = almost_homogeneity(A, R, f, h, 3)
    last = out["ledger"][-1]
    assert last["ledger_ok"] and last["seed_distance"] <= last["tolerance"]
