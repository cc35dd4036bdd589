"""The operator-building game between Eve and Adam.

Moves alternate: Eve at even ``n``, Adam at odd ``n``.  Every move is a
non-expansive ``T_n: E_n -> F_n`` extending the previous one along
isometric inclusions.  Adam answers by absorbing Eve's move into a lazily
grown two-sided target chain, then serving one density request.  His
bookkeeping records ``i_n: E_n -> E_{n+1}``, ``j_n: F_n -> F_{n+1}`` and the
closeness of ``T_{n+1} i_n`` to ``j_n T_n``.
"""
from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import linalg as la
from .errors import PreconditionError, UnivopError
from .fraisse import ExtensionProblem, OperatorChain, Request, solve_extension_two_sided, universal_step
from .operator import (LinMap, Refutation, certify_embedding, compose, distance,
                       embedding_defect, identity, norm_witness, op_norm)
from .serialize import (dumps, matrix_from_json, matrix_to_json, parse_rational, space_from_json,
                        space_to_json)
from .space import (Space, content_hash, direct_sum_l1, direct_sum_max, fmt, random_rational, reals,
                    zero_space)


@dataclass(frozen=True)
class Move:
    n: int
    player: str  # "eve" | "adam"
    T: LinMap  # E_n -> F_n
    incE: LinMap | None = None  # E_{n-1} -> E_n
    incF: LinMap | None = None  # F_{n-1} -> F_n

    @property
    def E(self) -> Space:
        return self.T.domain

    @property
    def F(self) -> Space:
        return self.T.codomain


@dataclass
class Rejection:
    violations: list  # (invariant, witness)

    def __bool__(self):
        return False

    def describe(self) -> str:
        return "; ".join(f"{inv} (witness {[fmt(x) for x in w] if w is not None else '-'})"
                         for inv, w in self.violations)


@dataclass
class Accepted:
    def __bool__(self):
        return True


def _first_violation(diff: LinMap):
    for c in la.identity(diff.domain.dim):
        if any(diff(c)):
            return c
    return None


def validate_move(prev: Move | None, move: Move):
    """``Accepted()`` iff the move is a legal non-expansive extension of ``prev``."""
    bad = []
    if op_norm(move.T) > 1:
        bad.append(("operator is expansive", norm_witness(move.T)))
    if prev is None:
        if move.n != 0 or move.incE is not None or move.incF is not None:
            bad.append(("the opening move carries no inclusions", None))
        return Rejection(bad) if bad else Accepted()
    if move.n != prev.n + 1:
        bad.append((f"move index {move.n} does not follow {prev.n}", None))
    if move.incE is None or move.incF is None:
        bad.append(("inclusions missing", None))
        return Rejection(bad)
    if move.incE.domain.dim != prev.E.dim or move.incE.codomain.dim != move.E.dim:
        bad.append(("E inclusion has the wrong shape", None))
    if move.incF.domain.dim != prev.F.dim or move.incF.codomain.dim != move.F.dim:
        bad.append(("F inclusion has the wrong shape", None))
    if bad:
        return Rejection(bad)
    for label, inc in (("E", move.incE), ("F", move.incF)):
        cert = certify_embedding(inc, 0)
        if isinstance(cert, Refutation):
            bad.append((f"{label} inclusion is not isometric", cert.witness))
    lhs, rhs = compose(move.T, move.incE), compose(move.incF, prev.T)
    if not lhs.equals(rhs):
        bad.append(("operator does not extend the previous one", _first_violation(lhs - rhs)))
    return Rejection(bad) if bad else Accepted()


# ------------------------------------------------------------ move specs


def _space(doc, path):
    return space_from_json(doc, path) if doc is not None else zero_space()


def move_from_spec(prev: Move | None, spec: dict, n: int) -> Move:
    """Build Eve's move from a spec.

    Opening: ``{"E", "F", "T"}``.  Later either a full ``{"E", "F", "T",
    "incE", "incF"}`` or a delta ``{"addE", "addF", "sum", "C", "D"}``: the
    new spaces are ``E (+) addE`` and ``F (+) addF`` and the operator is
    ``[[T, C], [0, D]]``.
    """
    if not isinstance(spec, dict):
        raise PreconditionError("$: a move spec must be an object")
    if prev is None or "incE" in spec:
        for key in ("E", "F", "T"):
            if key not in spec:
                raise PreconditionError(f"$.{key}: missing")
        E, F = space_from_json(spec["E"], "$.E"), space_from_json(spec["F"], "$.F")
        T = LinMap(E, F, _shaped(spec["T"], F.dim, E.dim, "$.T"))
        if prev is None:
            return Move(n, "eve", T)
        incE = LinMap(prev.E, E, _shaped(spec["incE"], E.dim, prev.E.dim, "$.incE"))
        incF = LinMap(prev.F, F, _shaped(spec.get("incF"), F.dim, prev.F.dim, "$.incF"))
        return Move(n, "eve", T, incE, incF)
    kind = spec.get("sum", "l1")
    if kind not in ("l1", "max"):
        raise PreconditionError("$.sum: expected 'l1' or 'max'")
    addE, addF = _space(spec.get("addE"), "$.addE"), _space(spec.get("addF"), "$.addF")
    return extend_move(prev, n, addE, addF, kind,
                       _shaped(spec.get("C", _zeros_json(prev.F.dim, addE.dim)), prev.F.dim, addE.dim, "$.C"),
                       _shaped(spec.get("D", _zeros_json(addF.dim, addE.dim)), addF.dim, addE.dim, "$.D"))


def _zeros_json(r, c):
    return [["0"] * c for _ in range(r)]


def _shaped(M, rows, cols, path):
    if M is None:
        raise PreconditionError(f"{path}: missing")
    M = matrix_from_json(M, path)
    if len(M) != rows or any(len(r) != cols for r in M):
        raise PreconditionError(f"{path}: expected a {rows} x {cols} matrix")
    return M


def extend_move(prev: Move, n: int, addE: Space, addF: Space, kind: str, C, D) -> Move:
    summ = direct_sum_l1 if kind == "l1" else direct_sum_max
    SE, SF = summ(prev.E, addE), summ(prev.F, addF)
    top = la.hstack(prev.T.matrix, C, prev.F.dim)
    bottom = la.hstack(la.zeros(addF.dim, prev.E.dim), D, addF.dim)
    T = LinMap(SE.space, SF.space, la.vstack(top, bottom))
    return Move(n, "eve", T, SE.inl, SF.inl)


def move_to_spec(move: Move) -> dict:
    doc = {"n": move.n, "player": move.player, "E": space_to_json(move.E), "F": space_to_json(move.F),
           "T": matrix_to_json(move.T.matrix)}
    if move.incE is not None:
        doc["incE"] = matrix_to_json(move.incE.matrix)
        doc["incF"] = matrix_to_json(move.incF.matrix)
    return doc


# ------------------------------------------------------------------ Eve


def _random_line(rng):
    return reals(Fraction(rng.randint(1, 3), rng.randint(1, 2)))


def _random_block(rng, rows, cols):
    return tuple(tuple(random_rational(rng) for _ in range(cols)) for _ in range(rows))


def eve_policy_random(seed: int, dim_cap: int = 4) -> Callable[[Move | None, int], Move]:
    """Seeded random Eve: small opening, then at most one new dimension per side.

    New dimensions are only added while the current space is below
    ``dim_cap``.  Off-diagonal blocks are halved until the operator is
    non-expansive, and dropped to zero after three tries.
    """
    rng = random.Random(seed)

    def policy(prev: Move | None, n: int) -> Move:
        if prev is None:
            E, F = _random_line(rng), _random_line(rng)
            T = LinMap(E, F, _random_block(rng, 1, 1))
            if op_norm(T) > 1:
                T = T.scaled(1 / op_norm(T))
            return Move(n, "eve", T)
        addE = _random_line(rng) if prev.E.dim < dim_cap else zero_space()
        addF = _random_line(rng) if prev.F.dim < dim_cap and rng.random() < 0.5 else zero_space()
        kind = rng.choice(["l1", "max"])
        C = _random_block(rng, prev.F.dim, addE.dim)
        D = _random_block(rng, addF.dim, addE.dim)
        for _ in range(3):
            move = extend_move(prev, n, addE, addF, kind, C, D)
            if op_norm(move.T) <= 1:
                return move
            C, D = la.scale(Fraction(1, 2), C), la.scale(Fraction(1, 2), D)
        return extend_move(prev, n, addE, addF, kind, la.zeros(prev.F.dim, addE.dim),
                           la.zeros(addF.dim, addE.dim))

    policy.name = f"random:{seed}"
    return policy


def read_script(path_or_lines) -> list[dict]:
    """Move specs from a JSON-lines file (blank lines and ``#`` comments skipped)."""
    if isinstance(path_or_lines, str):
        with open(path_or_lines) as fh:
            lines = fh.read().splitlines()
    else:
        lines = list(path_or_lines)
    specs = []
    for k, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            specs.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"script line {k}: {exc.msg}") from None
    return specs


def eve_policy_script(specs: list[dict]) -> Callable[[Move | None, int], Move]:
    it = iter(specs)

    def policy(prev, n):
        try:
            spec = next(it)
        except StopIteration:
            raise PreconditionError(f"script exhausted before move {n}") from None
        move = move_from_spec(prev, spec, n)
        verdict = validate_move(prev, move)
        if not verdict:
            raise PreconditionError(f"script move {n} rejected: {verdict.describe()}")
        return move

    policy.name = "script"
    return policy


def eve_policy_repl(read: Callable[[str], str] = input, write: Callable[[str], None] = print,
                    max_attempts: int = 20) -> Callable[[Move | None, int], Move]:
    """Ask for a move file path until a valid move is given."""

    def policy(prev, n):
        for _ in range(max_attempts):
            path = read(f"move {n} file> ").strip()
            try:
                with open(path) as fh:
                    spec = json.load(fh)
                move = move_from_spec(prev, spec, n)
            except (OSError, json.JSONDecodeError, UnivopError, ValueError) as exc:
                write(f"rejected: {exc}")
                continue
            verdict = validate_move(prev, move)
            if verdict:
                return move
            write(f"rejected: {verdict.describe()}")
        raise PreconditionError("too many rejected moves")

    policy.name = "repl"
    return policy


# ----------------------------------------------------------------- Adam


@dataclass
class AdamConfig:
    mode: str = "exact"  # "exact" | "perturb"
    seed: int = 0
    dim_cap: int = 6  # density requests pause once a side reaches this size


@dataclass
class GameState:
    moves: list = field(default_factory=list)
    bookkeeping: list = field(default_factory=list)
    target: OperatorChain | None = None
    config: AdamConfig = field(default_factory=AdamConfig)

    @property
    def last(self) -> Move | None:
        return self.moves[-1] if self.moves else None


def _density_request(k: int, side: str) -> Request:
    Z, R = zero_space(), reals()
    if side == "X":
        return Request("two-sided", f"density-X-{k}", LinMap(Z, R, la.zeros(1, 0)), LinMap(R, Z, ()),
                       LinMap(Z, Z, ()), LinMap(Z, Z, ()))
    return Request("two-sided", f"density-Y-{k}", LinMap(Z, Z, ()), LinMap(Z, R, la.zeros(1, 0)),
                   LinMap(Z, R, la.zeros(1, 0)), LinMap(Z, Z, ()))


def adam_move(state: GameState) -> Move:
    """Absorb Eve's last move into the target chain, then serve one density request."""
    eve = state.last
    if eve is None or eve.player != "eve":
        raise PreconditionError("Adam moves only after Eve")
    n, k = eve.n, eve.n // 2
    cfg = state.config
    Z = zero_space()
    if state.target is None:
        state.target = OperatorChain.start("two-sided", Z, Z, seed=cfg.seed)
    tgt = state.target
    if eve.incE is None:
        prob = ExtensionProblem("two-sided", LinMap(Z, eve.E, la.zeros(eve.E.dim, 0)),
                                LinMap(Z, tgt.top, la.zeros(tgt.top.dim, 0)), eve.T,
                                LinMap(Z, eve.F, la.zeros(eve.F.dim, 0)), LinMap(Z, Z, ()),
                                LinMap(Z, tgt.ctop, la.zeros(tgt.ctop.dim, 0)))
    else:
        prev = state.moves[-2]  # Adam's previous move is the target top
        prob = ExtensionProblem("two-sided", eve.incE, identity(tgt.top), eve.T, eve.incF, prev.T,
                                identity(tgt.ctop))
    tgt, (ihat, jhat) = solve_extension_two_sided(tgt, prob, n, f"absorb-{n}")
    start = len(tgt.domains) - 1
    side = "X" if k % 2 == 0 else "Y"
    grow = tgt.top.dim if side == "X" else tgt.ctop.dim
    if grow < cfg.dim_cap:
        tgt = universal_step(tgt, _density_request(k, side), random.Random(cfg.seed + n), n)
    state.target = tgt
    i, j = tgt.push(ihat, start), tgt.cpush(jhat, start)
    move = Move(n + 1, "adam", tgt.op, i, j)
    noise = Fraction(1, 2 ** (k + 1)) if cfg.mode == "perturb" else Fraction(0)
    ib = i.scaled(1 + noise)
    entry = {"n": n, "k": k, "tolerance": Fraction(1, 2 ** k), "noise": noise, "i": ib, "j": j,
             "target_stage": len(tgt.domains) - 1,
             "bound": distance(compose(move.T, ib), compose(j, eve.T)),
             "defect": embedding_defect(ib)}
    entry["restriction"] = _restriction(state.moves, state.bookkeeping, entry, move)
    state.bookkeeping.append(entry)
    return move


def _restriction(moves: list, book: list, entry: dict, adam: Move) -> Fraction:
    """``||i_n|E_{n-2} - i_{n-2}||`` with both sides carried into ``E_{n+1}``."""
    n = entry["n"]
    if n < 2:
        return Fraction(0)
    prev = next(b for b in book if b["n"] == n - 2)
    eve, before = moves[n], moves[n - 1]
    lhs = compose(entry["i"], compose(eve.incE, before.incE))
    rhs = compose(adam.incE, compose(eve.incE, prev["i"]))
    return distance(lhs, rhs)


# ------------------------------------------------------------------ play


@dataclass
class Transcript:
    moves: list
    bookkeeping: list
    seed: int
    policy: str
    mode: str
    rounds: int

    def header(self) -> dict:
        return {"type": "header", "seed": self.seed, "policy": self.policy, "mode": self.mode,
                "rounds": self.rounds, "schema": 1}


def play(rounds: int, eve_policy, config: AdamConfig | None = None) -> Transcript:
    if rounds < 1:
        raise PreconditionError("rounds must be at least 1")
    state = GameState(config=config or AdamConfig())
    for n in range(rounds):
        if n % 2 == 0:
            move = eve_policy(state.last, n)
            verdict = validate_move(state.last, move)
            if not verdict:
                raise PreconditionError(f"Eve's move {n} rejected: {verdict.describe()}")
        else:
            move = adam_move(state)
        state.moves.append(move)
    return Transcript(state.moves, state.bookkeeping, state.config.seed,
                      getattr(eve_policy, "name", "custom"), state.config.mode, rounds)


# ----------------------------------------------------------- transcripts


def _move_doc(move: Move) -> dict:
    doc = move_to_spec(move)
    doc["type"] = "move"
    doc["hash"] = content_hash({k: v for k, v in doc.items() if k != "hash"})
    return doc


def _book_doc(entry: dict) -> dict:
    doc = {"type": "adam", "n": entry["n"], "k": entry["k"], "tolerance": fmt(entry["tolerance"]),
           "noise": fmt(entry["noise"]), "target_stage": entry["target_stage"],
           "i": matrix_to_json(entry["i"].matrix), "j": matrix_to_json(entry["j"].matrix),
           "bound": fmt(entry["bound"]), "defect": fmt(entry["defect"]),
           "restriction": fmt(entry["restriction"])}
    doc["hash"] = content_hash({k: v for k, v in doc.items() if k != "hash"})
    return doc


def transcript_docs(t: Transcript) -> list[dict]:
    return [t.header()] + [_move_doc(m) for m in t.moves] + [_book_doc(b) for b in t.bookkeeping]


def transcript_to_jsonl(t: Transcript) -> str:
    return "".join(json.dumps(d, sort_keys=True, separators=(",", ":")) + "\n" for d in transcript_docs(t))


def write_transcript_dir(t: Transcript, outdir: str) -> str:
    return write_docs_dir(transcript_docs(t), outdir)


def write_docs_dir(docs: list[dict], outdir: str) -> str:
    """One file per move and per bookkeeping entry, plus a manifest."""
    os.makedirs(outdir, exist_ok=True)
    files = []
    for d in docs[1:]:
        name = f"{d['type']}-{d['n']:03d}.json"
        with open(os.path.join(outdir, name), "w") as fh:
            fh.write(dumps(d))
        files.append({"file": name, "hash": d.get("hash")})
    manifest = dict(docs[0], type="manifest", files=files)
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        fh.write(dumps(manifest))
    return path


def read_transcript_docs(path: str) -> list[dict]:
    """Documents from a JSON-lines file or a transcript directory."""
    if os.path.isdir(path):
        with open(os.path.join(path, "manifest.json")) as fh:
            man = json.load(fh)
        docs = [dict(man, type="header")]
        docs[0].pop("files", None)
        for f in man.get("files", []):
            with open(os.path.join(path, f["file"])) as fh:
                docs.append(json.load(fh))
        return docs
    with open(path) as fh:
        return parse_jsonl(fh.read())


def parse_jsonl(text: str) -> list[dict]:
    docs = []
    for k, line in enumerate(text.splitlines(), 1):
        if line.strip():
            try:
                docs.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise PreconditionError(f"line {k}: {exc.msg}") from None
    return docs


def docs_to_jsonl(docs: list[dict]) -> str:
    return "".join(json.dumps(d, sort_keys=True, separators=(",", ":")) + "\n" for d in docs)


# ----------------------------------------------------------- verification


@dataclass
class Report:
    ok: bool
    violations: list  # dicts: stage, check, detail, witness
    bounds: list  # per even stage

    def as_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations,
                "bounds": [{k: fmt(v) if isinstance(v, Fraction) else v for k, v in b.items()}
                           for b in self.bounds]}


def _wit(w):
    return None if w is None else [fmt(x) for x in w]


def verify_transcript(docs: list[dict]) -> Report:
    """Re-verify a stored transcript using nothing but its documents."""
    bad = []

    def fail(stage, check, detail="", witness=None):
        bad.append({"stage": stage, "check": check, "detail": detail, "witness": _wit(witness)})

    header = next((d for d in docs if d.get("type") == "header"), {})
    move_docs = sorted((d for d in docs if d.get("type") == "move"), key=lambda d: d.get("n", -1))
    book_docs = {d.get("n"): d for d in docs if d.get("type") == "adam"}
    for d in list(move_docs) + list(book_docs.values()):
        if "hash" in d and content_hash({k: v for k, v in d.items() if k != "hash"}) != d["hash"]:
            fail(d.get("n"), "content hash", f"{d['type']} document was modified")
    moves: list[Move] = []
    for idx, d in enumerate(move_docs):
        n = d.get("n")
        if n != idx:
            fail(n, "alternation", f"expected move {idx}")
            break
        want = "eve" if n % 2 == 0 else "adam"
        if d.get("player") != want:
            fail(n, "alternation", f"move {n} belongs to {want}")
        try:
            E, F = space_from_json(d["E"], f"$[{n}].E"), space_from_json(d["F"], f"$[{n}].F")
            T = LinMap(E, F, matrix_from_json(d["T"], f"$[{n}].T"))
            incE = incF = None
            if moves:
                incE = LinMap(moves[-1].E, E, matrix_from_json(d["incE"], f"$[{n}].incE"))
                incF = LinMap(moves[-1].F, F, matrix_from_json(d["incF"], f"$[{n}].incF"))
        except (KeyError, UnivopError, ValueError) as exc:
            fail(n, "parse", str(exc))
            break
        move = Move(n, d.get("player", want), T, incE, incF)
        verdict = validate_move(moves[-1] if moves else None, move)
        if not verdict:
            for inv, w in verdict.violations:
                fail(n, "move validity", inv, w)
        moves.append(move)
    mode = header.get("mode", "exact")
    bounds = []
    iprev = {}
    for n in range(0, len(moves) - 1, 2):
        d = book_docs.get(n)
        if d is None:
            fail(n, "bookkeeping", "missing Adam bookkeeping")
            continue
        eve, adam = moves[n], moves[n + 1]
        k = n // 2
        tol = Fraction(1, 2 ** k)
        try:
            noise = parse_rational(d["noise"])
            i = LinMap(eve.E, adam.E, matrix_from_json(d["i"], f"$.adam[{n}].i"))
            j = LinMap(eve.F, adam.F, matrix_from_json(d["j"], f"$.adam[{n}].j"))
        except (KeyError, UnivopError, ValueError) as exc:
            fail(n, "parse", str(exc))
            continue
        if d.get("k") != k or parse_rational(d.get("tolerance", "0")) != tol:
            fail(n, "bookkeeping", "wrong stage tolerance")
        if mode == "exact" and noise != 0:
            fail(n, "bookkeeping", "noise recorded in exact mode")
        if not (0 <= noise <= Fraction(1, 2 ** (k + 1))):
            fail(n, "bookkeeping", "noise exceeds 2^-(k+1)")
        if not i.equals(adam.incE.scaled(1 + noise)):
            fail(n, "bookkeeping", "i differs from Adam's inclusion", _first_violation(i - adam.incE.scaled(1 + noise)))
        if not j.equals(adam.incF):
            fail(n, "bookkeeping", "j differs from Adam's inclusion", _first_violation(j - adam.incF))
        bound = distance(compose(adam.T, i), compose(j, eve.T))
        defect = embedding_defect(i)
        if bound > tol:
            fail(n, "Adam bound", f"||U i - j T|| = {fmt(bound)} exceeds {fmt(tol)}")
        if mode == "exact" and bound != 0:
            fail(n, "Adam bound", "exact mode requires U i = j T")
        if defect > tol:
            fail(n, "embedding defect", f"{fmt(defect)} exceeds {fmt(tol)}")
        if "bound" in d and parse_rational(d["bound"]) != bound:
            fail(n, "bookkeeping", "recorded bound does not match")
        restr = Fraction(0)
        if n >= 2 and (n - 2) in iprev:
            lhs = compose(i, compose(eve.incE, moves[n - 1].incE))
            rhs = compose(adam.incE, compose(eve.incE, iprev[n - 2]))
            restr = distance(lhs, rhs)
            if restr > tol:
                fail(n, "Cauchy ledger", f"i restriction moved by {fmt(restr)} > {fmt(tol)}")
            jl = compose(j, compose(eve.incF, moves[n - 1].incF))
            jr = compose(adam.incF, compose(eve.incF, moves[n - 1].incF))
            if distance(jl, jr) > tol:
                fail(n, "Cauchy ledger", "j restriction moved too far")
        iprev[n] = i
        bounds.append({"n": n, "k": k, "tolerance": tol, "bound": bound, "defect": defect, "restriction": restr})
    return Report(not bad, bad, bounds)


__all__ = [
    "Move", "validate_move", "move_from_spec", "extend_move", "eve_policy_random", "eve_policy_script",
    "eve_policy_repl", "read_script", "AdamConfig", "GameState", "adam_move", "play", "Transcript",
    "transcript_to_jsonl", "write_transcript_dir", "write_docs_dir", "read_transcript_docs", "parse_jsonl",
    "verify_transcript", "Report", "docs_to_jsonl", "transcript_docs",
]
