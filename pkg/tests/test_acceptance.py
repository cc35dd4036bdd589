"""The eight acceptance criteria, one test each, each printing a PASS/FAIL line."""
import json
import random
from fractions import Fraction as F

import pytest

from univop import linalg as la
from univop.amalgam import correct_to_exact, extend_operators, projection_factor, pushout_eps, pushout_norm_formula
from univop.exactgeom import HRep, brute_force_vertices, hrep_to_vrep, lp_max, vrep_to_hrep
from univop.fraisse import Request, build_almost_isometry, build_left_gurarii_chain, left_catalog_for
from univop.game import AdamConfig, eve_policy_random, play, transcript_docs, verify_transcript
from univop.operator import LinMap, certify_embedding, compose, distance, is_isometry, op_norm, zero_map
from univop.space import (correction_delta, delta_for_eps, direct_sum_max, random_rational, random_space,
                          reals, sup_space, zero_space)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def rand_map(rng, X, Y, scale=1):
    M = tuple(tuple(random_rational(rng) for _ in range(X.dim)) for _ in range(Y.dim))
    T = LinMap(X, Y, M)
    n = op_norm(T)
    return T.scaled(F(scale) / n) if n else T


def rand_vec(rng, n):
    return tuple(random_rational(rng, 4, 3) for _ in range(n))


# 1 ---------------------------------------------------------------------------


def test_1_amalgamation_lemma(report):
    rng = random.Random(101)
    bad, n_inst = [], 0
    for k in range(100):
        eps = [F(1, 8), F(1, 4), F(1, 2)][k % 3]
        dx = rng.randint(1, 2)
        X = random_space(dx, dx + rng.randint(0, 1), rng.randrange(10**6))
        Yx = random_space(1, 1, rng.randrange(10**6)) if dx + 1 <= 3 and rng.random() < 0.6 else zero_space()
        D = direct_sum_max(X, Yx)
        if k % 4 == 0:
            f = D.inl.scaled(1 + eps)  # extreme scaling
        else:
            f = D.inl + rand_map(rng, X, D.space, eps / 2)
        Y = D.space
        res = pushout_eps(f, eps)
        rho = rand_map(rng, Y, reals())
        pi = compose(rho, f).scaled(1 / (1 + eps))
        t = extend_operators(res, pi, rho)
        ok = (is_isometry(res.i) and is_isometry(res.j)
              and distance(compose(res.j, f), res.i) <= eps
              and op_norm(t) <= 1 and compose(t, res.i).equals(pi) and compose(t, res.j).equals(rho))
        for _ in range(20):
            x, y = rand_vec(rng, X.dim), rand_vec(rng, Y.dim)
            ok = ok and res.Z.norm(x + y) == pushout_norm_formula(f, eps, x, y)
        n_inst += 1
        if not ok:
            bad.append(k)
    report(1, not bad, f"{n_inst} pushout instances, 20 formula-LP points each, failures {bad}")


# 2 ---------------------------------------------------------------------------


def test_2_perturbation_lemma(report):
    rng = random.Random(202)
    worst, bad, count = F(0), [], 0
    for k in range(100):
        d = rng.randint(1, 4)
        X = sup_space(d) if k % 10 == 0 else random_space(d, d + rng.randint(0, 2), rng.randrange(10**6))
        Y = random_space(2, 3, rng.randrange(10**6))
        A = [tuple(F(int(i == j)) for j in range(d)) for i in range(d)]
        if k % 5 == 1:
            A = la.complete_basis([rand_vec(rng, d)], d) if any(rand_vec(rng, d)) else A
        eps = [F(1, 4), F(1, 2), F(1)][k % 3]
        delta = delta_for_eps(X, A, eps)
        if k % 10 == 0:
            # adversarial: every basis vector goes to the same vector of norm delta
            u = rand_vec(rng, 2)
            u = u if any(u) else (F(1), F(0))
            cols = [tuple(delta * c / Y.norm(u) for c in u)] * d
        else:
            cols = []
            for _ in A:
                u = rand_vec(rng, 2)
                u = u if any(u) else (F(1), F(0))
                cols.append(tuple(delta * c / Y.norm(u) for c in u))
        # f is given on the basis A: matrix = cols . A^-1
        Ainv = la.inverse(la.from_columns(A, d))
        f = LinMap(X, Y, la.matmul(la.from_columns(cols, 2), Ainv, d))
        n = op_norm(f)
        assert max(Y.norm(f(a)) for a in A) <= delta
        count += 1
        if n > eps:
            bad.append(k)
        worst = max(worst, n / eps)
    report(2, not bad and worst >= F(1, 2),
           f"{count} instances, max op_norm/eps = {worst} (non-vacuity needs >= 1/2), failures {bad}")


# 3 ---------------------------------------------------------------------------


def _witness(chain, name):
    e = next(e for e in chain.log if e.name == name and e.status == "solved")
    return chain.push(e.witness, e.stage), e


def test_3_exact_correction(report):
    rng = random.Random(303)
    cases, bad = 0, []
    targets = [reals(), sup_space(2), random_space(2, 3, 9)]
    for si, S in enumerate(targets):
        chain = build_left_gurarii_chain(S, left_catalog_for(S), 7, seed=si, random_every=3)
        r, _ = _witness(chain, "copy-of-S")
        P = chain.op
        assert compose(P, r).equals(LinMap(S, S, la.identity(S.dim))) and op_norm(r) <= 1
        for entry in chain.log:
            if entry.status not in ("solved", "free") or entry.name == "copy-of-S":
                continue
            prob = entry.problem
            f = chain.push(entry.witness, entry.stage)
            incl = prob.incl
            T = chain.cpush(prob.T, entry.stage - 1) if prob.T.codomain.dim == S.dim else prob.T
            T = LinMap(T.domain, S, T.matrix)
            e = compose(f, incl)
            for eps in (F(1, 4), F(1, 2)):
                from univop.amalgam import adapted_basis

                A = adapted_basis(incl)
                delta = correction_delta(incl.codomain, A, eps)
                Delta = rand_map(rng, incl.codomain, chain.top, delta / 2)
                fd = f + Delta
                fp = correct_to_exact(P, r, e, T, fd, incl, eps, A=A, delta=delta)
                ok = (compose(P, fp).equals(T) and compose(fp, incl).equals(e)
                      and bool(certify_embedding(fp, eps)))
                cases += 1
                if not ok:
                    bad.append((si, entry.step, eps))
    report(3, cases >= 10 and not bad, f"{cases} perturbed witnesses corrected, failures {bad}")


# 4 ---------------------------------------------------------------------------


def _disjoint_catalogs(S):
    Z = zero_space()
    cat = left_catalog_for(S)
    sq = sup_space(2)
    kernel_sq = Request("left", "kernel-square", LinMap(Z, sq, la.zeros(2, 0)), zero_map(sq, S))
    return cat[:2], [cat[2], kernel_sq]


def test_4_uniqueness_shadow(report):
    lines = []
    ok = True
    for S in (reals(), sup_space(2)):
        ca, cb = _disjoint_catalogs(S)
        assert not {r.fingerprint() for r in ca} & {r.fingerprint() for r in cb}
        A = build_left_gurarii_chain(S, ca, 8, seed=1)
        B = build_left_gurarii_chain(S, cb, 8, seed=2, random_every=4)
        out = build_almost_isometry(A, B, 4)
        for k, (i, e) in enumerate(zip(out["maps"][1:], out["ledger"]), 1):
            step_ok = (e["intertwines"] and e["defect"] <= F(1, 2 ** k)
                       and e["restriction"] <= e["eps"] + 7 * e["delta"] and e["ledger_ok"])
            ok = ok and step_ok
        lines.append(f"dim S {S.dim}: {len(A.domains)}/{len(B.domains)} stages, final dims {out['ledger'][-1]['dims']}")
    report(4, ok, "; ".join(lines))


# 5 ---------------------------------------------------------------------------


def _bump(x):
    return str(F(x) + F(1, 3))


def test_5_game(report):
    problems = []
    for seed in range(5):
        for mode in ("exact", "perturb"):
            t = play(8, eve_policy_random(seed), AdamConfig(mode=mode, seed=seed))
            rep = verify_transcript(transcript_docs(t))
            if not rep.ok:
                problems.append((seed, mode, "verify"))
            for b in t.bookkeeping:
                k = b["n"] // 2
                if mode == "exact" and b["bound"] != 0:
                    problems.append((seed, mode, b["n"]))
                if mode == "perturb" and b["bound"] > F(1, 2 ** k):
                    problems.append((seed, mode, b["n"]))
    # tamper with every single matrix entry of one stored transcript
    docs = transcript_docs(play(8, eve_policy_random(0), AdamConfig(mode="perturb")))
    text = json.dumps(docs)
    tampered = missed = math_only = 0
    for di, d in enumerate(docs):
        for key in ("T", "incE", "incF", "i", "j"):
            for r, row in enumerate(d.get(key) or []):
                for c in range(len(row)):
                    copy = json.loads(text)
                    copy[di][key][r][c] = _bump(copy[di][key][r][c])
                    tampered += 1
                    rep = verify_transcript(copy)
                    if rep.ok or d["n"] not in {v["stage"] for v in rep.violations}:
                        missed += 1
                    for doc in copy:
                        doc.pop("hash", None)
                    if not verify_transcript(copy).ok:
                        math_only += 1
    report(5, not problems and missed == 0 and tampered > 0,
           f"10 plays, failures {problems}; {tampered} single-entry tamperings, {missed} undetected "
           f"({math_only} also caught with hashes stripped)")


# 6 ---------------------------------------------------------------------------


def test_6_projection_factor(report):
    rng = random.Random(606)
    bad = []
    for k in range(20):
        dx = rng.randint(1, 3)
        X = random_space(dx, dx + rng.randint(0, 1), rng.randrange(10**6))
        W = random_space(rng.randint(1, 3), 3, rng.randrange(10**6))
        extra = random_space(1, 1, rng.randrange(10**6)) if dx < 3 else zero_space()
        e = direct_sum_max(X, extra).inl  # isometric X -> V
        T = rand_map(rng, X, W, F(rng.randint(1, 4), 4))
        pf = projection_factor(e, T)
        if not (is_isometry(pf.j) and compose(pf.pi, pf.j).equals(T)
                and pf.sum_space.same_ball(direct_sum_max(e.codomain, W).space)):
            bad.append(k)
    report(6, not bad, f"20 random T, failures {bad}")


# 7 ---------------------------------------------------------------------------


def test_7_geometry_kernel(report):
    rng = random.Random(707)
    bad, n = [], 0
    while n < 200:
        d = rng.randint(1, 4)
        rows = [rand_vec(rng, d) for _ in range(d + rng.randint(0, 2))]
        h = HRep.of(d, rows)
        if not h.is_bounded():
            continue
        n += 1
        v = hrep_to_vrep(h)
        ok = set(v.vertices) == set(brute_force_vertices(h).vertices)
        h2 = vrep_to_hrep(v)
        ok = ok and set(h2.functionals) <= set(h.functionals) and set(hrep_to_vrep(h2).vertices) == set(v.vertices)
        c = rand_vec(rng, d)
        res = lp_max(c, h)
        ok = ok and res.verify(c, h) and res.value == max(la.dot(c, p) for p in brute_force_vertices(h).vertices)
        if not ok:
            bad.append(n)
    report(7, not bad, f"{n} random polytopes, failures {bad}")


# 8 ---------------------------------------------------------------------------


def _tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_8_determinism(report, tmp_path):
    from univop.cli import main
    from univop.serialize import request_to_json, space_to_json

    S = tmp_path / "S.json"
    S.write_text(json.dumps(space_to_json(reals())))
    sched = tmp_path / "sched.json"
    sched.write_text(json.dumps({"catalog": [request_to_json(r) for r in left_catalog_for(reals())],
                                 "random_every": 2}))
    rnd = tmp_path / "rnd.json"
    rnd.write_text(json.dumps({"catalog": [], "random_every": 1}))
    commands = {
        "gurarii": ["chain", "build-gurarii", "--schedule", str(rnd), "--steps", "5", "--seed", "3"],
        "left": ["chain", "build-left", "--S", str(S), "--schedule", str(sched), "--steps", "6", "--seed", "3"],
        "universal": ["chain", "build-universal", "--schedule", str(rnd), "--steps", "5", "--seed", "3"],
        "play-exact": ["game", "play", "--rounds", "8", "--seed", "3"],
        "play-perturb": ["game", "play", "--rounds", "8", "--seed", "3", "--mode", "perturb"],
    }
    differing = []
    for name, argv in commands.items():
        trees = []
        for run in ("a", "b"):
            out = tmp_path / run / name
            assert main(argv + ["--out", str(out)]) == 0
            trees.append(_tree(out))
        if trees[0] != trees[1] or not trees[0]:
            differing.append(name)
    report(8, not differing, f"{len(commands)} commands run twice, differing outputs {differing}")
