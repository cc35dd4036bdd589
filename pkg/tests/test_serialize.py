import json
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from univop.errors import PreconditionError
from univop.fraisse import (build_gurarii_chain, build_left_gurarii_chain,
                            build_universal_chain, left_catalog_for, verify_chain)
from univop.operator import LinMap
from univop.serialize import (chain_from_json, chain_to_json, inline_map_from_json, inline_map_to_json,
                              load_json, matrix_from_json, parse_rational, request_from_json,
                              request_to_json, schedule_from_json, space_from_json, space_to_json,
                              vector_to_json, write_documents)
from univop.space import reals, sup_space
from helpers import small_rational, spaces


def test_rationals_are_strings():
    assert vector_to_json([F(1, 2), F(3), F(-2, 6)]) == ["1/2", "3", "-1/3"]
    assert parse_rational("6/4") == F(3, 2)
    assert parse_rational(2) == 2


@pytest.mark.parametrize("bad", [0.5, True, "1/0", "abc", None])
def test_parse_rational_rejects(bad):
    with pytest.raises(PreconditionError):
        parse_rational(bad, "$.x")


def test_error_messages_carry_json_paths():
    with pytest.raises(PreconditionError, match=r"\$\.m\[1\]\[0\]"):
        matrix_from_json([["1"], [0.5]], "$.m")
    with pytest.raises(PreconditionError, match=r"\$\.facets"):
        space_from_json({"dim": 2, "facets": [["1"]]})


@given(spaces(3))
def test_space_roundtrip(S):
    doc = json.loads(json.dumps(space_to_json(S, vertices=True)))
    back = space_from_json(doc)
    assert back.same_ball(S) and back.id == S.id
    assert set(back.vertices) == set(S.vertices)


def test_untrusted_vertices_are_recomputed():
    doc = space_to_json(sup_space(2))
    doc["vertices"] = [["7", "7"]]
    assert (7, 7) not in space_from_json(doc).vertices


@given(spaces(2), spaces(2), st.data())
def test_inline_map_roundtrip(X, Y, data):
    M = tuple(tuple(data.draw(small_rational()) for _ in range(X.dim)) for _ in range(Y.dim))
    f = LinMap(X, Y, M)
    g = inline_map_from_json(json.loads(json.dumps(inline_map_to_json(f))))
    assert g.equals(f) and g.domain.same_ball(X)


def test_request_and_schedule_roundtrip():
    req = left_catalog_for(reals())[1]
    back = request_from_json(json.loads(json.dumps(request_to_json(req))))
    assert back.fingerprint() == req.fingerprint()
    sch = schedule_from_json([request_to_json(req)])
    assert sch["random_every"] == 0 and sch["catalog"][0].fingerprint() == req.fingerprint()
    with pytest.raises(PreconditionError, match=r"\$\.catalog\[0\]\.T"):
        schedule_from_json({"catalog": [{"kind": "left", "incl": request_to_json(req)["incl"]}]})


@pytest.mark.parametrize("build", [
    lambda: build_gurarii_chain([], 4, seed=1, random_every=1),
    lambda: build_left_gurarii_chain(reals(), left_catalog_for(reals()), 4, seed=2, random_every=2),
    lambda: build_universal_chain([], 3, seed=3, random_every=1),
])
def test_chain_roundtrip_and_reverify(build, tmp_path):
    chain = build()
    doc = chain_to_json(chain)
    back = chain_from_json(json.loads(json.dumps(doc)))
    assert back.stage_hashes() == chain.stage_hashes()
    assert verify_chain(back) == []
    assert chain_to_json(back)["manifest"]["hash"] == doc["manifest"]["hash"]
    write_documents(str(tmp_path), doc["manifest"], doc["documents"])
    again = chain_from_json(load_json(str(tmp_path)))
    assert again.stage_hashes() == chain.stage_hashes()


def test_tampered_chain_fails_verification():
    doc = chain_to_json(build_gurarii_chain([], 3, seed=1, random_every=1))
    mid = doc["manifest"]["links"][-1]
    M = doc["documents"]["maps"][mid]["matrix"]
    M[0][0] = "5"
    assert verify_chain(chain_from_json(doc))
