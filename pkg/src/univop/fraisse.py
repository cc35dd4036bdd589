"""Finite chains approximating Fraisse limits, and back-and-forth.

A ``Chain`` is a growing sequence of spaces with isometric links.  An
``OperatorChain`` additionally carries non-expansive operators
``P_n: V_n -> S_n`` (left mode, codomain a fixed space or a chain) or
``Omega_n: V_n -> W_n`` (two-sided mode) that commute with the links.
Extension problems are solved exactly by exact pushouts; the limit is
never built, only finite stages plus bound ledgers.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from . import linalg as la
from .amalgam import extend_operators, pushout_eps, pushout_exact
from .errors import PreconditionError
from .operator import (EmbeddingCert, LinMap, Refutation, certify_embedding, compose, distance,
                       embedding_defect, identity, op_norm, zero_map)
from .space import (Space, content_hash, direct_sum_l1, direct_sum_max, fmt, make_space,
                    random_rational, random_space, reals, zero_space)


def map_fingerprint(f: LinMap) -> dict:
    return {"domain": f.domain.fingerprint(), "codomain": f.codomain.fingerprint(),
            "matrix": [[fmt(x) for x in r] for r in f.matrix]}


# ------------------------------------------------------------- requests


@dataclass(frozen=True)
class Request:
    """A schedule entry: an extension problem not yet attached to a stage.

    ``anchor`` names an earlier log entry whose witness, composed with
    ``anchor_map`` (and ``anchor_map_y`` in two-sided mode), supplies the
    partial embedding of ``X0``.  ``random`` requests are drawn at
    resolution time from the chain's RNG.
    """

    kind: str  # "space" | "left" | "two-sided"
    name: str
    incl: LinMap | None = None  # X0 -> X
    T: LinMap | None = None  # X -> S (left) or X -> Y (two-sided)
    incl_y: LinMap | None = None  # Y0 -> Y
    T0: LinMap | None = None  # X0 -> Y0
    anchor: int | None = None
    anchor_map: LinMap | None = None
    anchor_map_y: LinMap | None = None
    random: bool = False
    random_dim: int = 2

    def fingerprint(self) -> str:
        doc = {"kind": self.kind, "name": self.name, "random": self.random, "anchor": self.anchor}
        for key in ("incl", "T", "incl_y", "T0", "anchor_map", "anchor_map_y"):
            m = getattr(self, key)
            doc[key] = None if m is None else map_fingerprint(m)
        return content_hash(doc)[:16]


@dataclass(frozen=True)
class ExtensionProblem:
    """An extension problem attached to the top stage of a chain."""

    kind: str
    incl: LinMap  # X0 -> X
    f0: LinMap | None = None  # space: X0 -> G_top; left: e; two-sided: i
    T: LinMap | None = None
    incl_y: LinMap | None = None
    T0: LinMap | None = None
    j0: LinMap | None = None  # two-sided: Y0 -> W_top
    tolerance: Fraction = Fraction(0)
    request: str = ""

    def fingerprint(self) -> str:
        doc = {"kind": self.kind}
        for key in ("incl", "f0", "T", "incl_y", "T0", "j0"):
            m = getattr(self, key)
            doc[key] = None if m is None else map_fingerprint(m)
        return content_hash(doc)[:16]


@dataclass(frozen=True)
class LogEntry:
    step: int
    request: str  # Request fingerprint
    name: str
    status: str  # "solved" | "revisit" | "free"
    problem: ExtensionProblem
    stage: int  # stage the witness maps into
    witness: LinMap
    witness_y: LinMap | None = None
    origin: int | None = None  # revisits: index of the entry first solving the request


def _first_violation(diff: LinMap):
    for c in la.identity(diff.domain.dim):
        if any(diff(c)):
            return c
    return None


# ------------------------------------------------------------ space chains


@dataclass(frozen=True)
class Chain:
    stages: tuple
    links: tuple = ()
    log: tuple = ()
    seed: int = 0

    @classmethod
    def start(cls, G0: Space | None = None, seed: int = 0) -> "Chain":
        return cls((G0 or zero_space(),), (), (), seed)

    @property
    def top(self) -> Space:
        return self.stages[-1]

    def push(self, f: LinMap, stage: int, to: int | None = None) -> LinMap:
        to = len(self.stages) - 1 if to is None else to
        for n in range(stage, to):
            f = compose(self.links[n], f)
        return f

    def stage_hashes(self) -> list[str]:
        return [s.fingerprint() for s in self.stages]


def solve_extension_space(chain: Chain, prob: ExtensionProblem, step: int = -1, name: str = "",
                          request: str = "") -> tuple[Chain, LinMap]:
    """Exact solution of the Gurarii extension property at the top stage."""
    incl, f0 = prob.incl, prob.f0
    if not isinstance(certify_embedding(incl, 0), EmbeddingCert):
        raise PreconditionError("X0 -> X is not isometric")
    cert = certify_embedding(f0, 0)
    if isinstance(cert, Refutation):
        raise PreconditionError("f0 is not isometric", witness=cert.witness)
    if f0.codomain is not chain.top and not f0.codomain.same_ball(chain.top):
        raise PreconditionError("f0 does not map into the top stage")
    if incl.domain.dim == incl.codomain.dim:
        # X0 = X: no growth, f = f0 o incl^-1
        f = compose(f0, LinMap(incl.codomain, incl.domain, la.inverse(incl.matrix)))
        link = identity(chain.top)
        new_top = chain.top
        status = "revisit"
    else:
        res = pushout_exact(incl, replace_codomain(f0, chain.top))
        f, link, new_top = res.i, res.j, res.Z
        status = "solved"
    entry = LogEntry(step, request, name, status, prob, len(chain.stages), f)
    return Chain(chain.stages + (new_top,), chain.links + (link,), chain.log + (entry,), chain.seed), f


def replace_codomain(f: LinMap, Y: Space) -> LinMap:
    return f if f.codomain is Y else LinMap(f.domain, Y, f.matrix)


# --------------------------------------------------------- operator chains


@dataclass(frozen=True)
class OperatorChain:
    mode: str  # "left" | "two-sided"
    domains: tuple
    codomains: tuple
    ops: tuple
    dlinks: tuple = ()
    clinks: tuple = ()
    log: tuple = ()
    seed: int = 0

    @classmethod
    def start(cls, mode: str, V0: Space, W0: Space, op0: LinMap | None = None, seed: int = 0):
        op0 = op0 or zero_map(V0, W0)
        if op_norm(op0) > 1:
            raise PreconditionError("initial operator is expansive")
        return cls(mode, (V0,), (W0,), (op0,), (), (), (), seed)

    @property
    def top(self) -> Space:
        return self.domains[-1]

    @property
    def ctop(self) -> Space:
        return self.codomains[-1]

    @property
    def op(self) -> LinMap:
        return self.ops[-1]

    def push(self, f: LinMap, stage: int, to: int | None = None) -> LinMap:
        to = len(self.domains) - 1 if to is None else to
        for n in range(stage, to):
            f = compose(self.dlinks[n], f)
        return f

    def cpush(self, f: LinMap, stage: int, to: int | None = None) -> LinMap:
        to = len(self.codomains) - 1 if to is None else to
        for n in range(stage, to):
            f = compose(self.clinks[n], f)
        return f

    def append(self, V: Space, W: Space, op: LinMap, dlink: LinMap, clink: LinMap,
               entry: LogEntry | None) -> "OperatorChain":
        log = self.log + ((entry,) if entry is not None else ())
        return replace(self, domains=self.domains + (V,), codomains=self.codomains + (W,),
                       ops=self.ops + (op,), dlinks=self.dlinks + (dlink,),
                       clinks=self.clinks + (clink,), log=log)

    def stage_hashes(self) -> list[str]:
        return [content_hash([d.fingerprint(), c.fingerprint(), map_fingerprint(o)])
                for d, c, o in zip(self.domains, self.codomains, self.ops)]


def solve_extension_left(ochain: OperatorChain, prob: ExtensionProblem, step: int = -1,
                         name: str = "", request: str = "", new_codomain: Space | None = None,
                         clink: LinMap | None = None) -> tuple[OperatorChain, LinMap]:
    """Exact left extension: ``f|X0 = e`` (up to link) and ``P' f = T``.

    ``V' = (X (+)_1 V) / {(incl x, -e x)}`` and ``P'[x, v] = T x + P v``.
    When the codomain advances (``new_codomain``, ``clink``), ``T`` maps
    into the new codomain and ``P`` is pushed along ``clink``.
    """
    incl, e, T = prob.incl, prob.f0, prob.T
    V, S = ochain.top, ochain.ctop
    S_new = new_codomain or S
    clink = clink or identity(S)
    P = compose(clink, ochain.op)
    if not isinstance(certify_embedding(incl, 0), EmbeddingCert):
        raise PreconditionError("X0 -> X is not isometric")
    cert = certify_embedding(e, 0)
    if isinstance(cert, Refutation):
        raise PreconditionError("e is not isometric", witness=cert.witness)
    if op_norm(T) > 1:
        raise PreconditionError("T is not non-expansive")
    if T.codomain.dim != S_new.dim or e.codomain.dim != V.dim:
        raise PreconditionError("problem does not match the top stage")
    e = replace_codomain(e, V)
    T = replace_codomain(T, S_new)
    lhs, rhs = compose(P, e), compose(T, incl)
    if not lhs.equals(rhs):
        raise PreconditionError("P o e differs from T on X0", witness=_first_violation(lhs - rhs))
    if incl.domain.dim == incl.codomain.dim:
        f = compose(e, LinMap(incl.codomain, incl.domain, la.inverse(incl.matrix)))
        V_new, link, P_new, status = V, identity(V), P, "revisit"
    else:
        res = pushout_exact(incl, e)
        f, link, V_new = res.i, res.j, res.Z
        P_new = res.glue(T, P)
        status = "solved"
    entry = LogEntry(step, request, name, status, prob, len(ochain.domains), f)
    return ochain.append(V_new, S_new, P_new, link, clink, entry), f


def solve_extension_two_sided(ochain: OperatorChain, prob: ExtensionProblem, step: int = -1,
                              name: str = "", request: str = ""):
    """Exact two-sided extension: ``Omega' i' = j' T`` with ``i'``, ``j'`` extending ``i``, ``j``."""
    inclX, inclY, T, T0, i, j = prob.incl, prob.incl_y, prob.T, prob.T0, prob.f0, prob.j0
    V, W, Om = ochain.top, ochain.ctop, ochain.op
    for m, label in ((inclX, "X0 -> X"), (inclY, "Y0 -> Y"), (i, "i"), (j, "j")):
        cert = certify_embedding(m, 0)
        if isinstance(cert, Refutation):
            raise PreconditionError(f"{label} is not isometric", witness=cert.witness)
    if op_norm(T) > 1:
        raise PreconditionError("T is not non-expansive")
    i, j = replace_codomain(i, V), replace_codomain(j, W)
    if not compose(inclY, T0).equals(compose(T, inclX)):
        raise PreconditionError("T0 is not the restriction of T")
    lhs, rhs = compose(Om, i), compose(j, T0)
    if not lhs.equals(rhs):
        raise PreconditionError("Omega o i differs from j o T on X0", witness=_first_violation(lhs - rhs))
    cres = pushout_exact(inclY, j)
    jhat, lW, W_new = cres.i, cres.j, cres.Z
    dres = pushout_exact(inclX, i)
    ihat, lV, V_new = dres.i, dres.j, dres.Z
    Om_new = dres.glue(compose(jhat, T), compose(lW, Om))
    status = "solved" if (V_new.dim, W_new.dim) != (V.dim, W.dim) else "revisit"
    entry = LogEntry(step, request, name, status, prob, len(ochain.domains), ihat, jhat)
    return ochain.append(V_new, W_new, Om_new, lV, lW, entry), (ihat, jhat)


# ------------------------------------------------------------- schedules


def _nonexpansive(T: LinMap) -> LinMap:
    n = op_norm(T)
    return T.scaled(1 / n) if n > 1 else T


def _random_map(rng: random.Random, X: Space, Y: Space) -> LinMap:
    M = tuple(tuple(random_rational(rng) for _ in range(X.dim)) for _ in range(Y.dim))
    return _nonexpansive(LinMap(X, Y, M))


def _random_line(rng: random.Random) -> Space:
    return reals(Fraction(rng.randint(1, 3), rng.randint(1, 2)))


def _random_vector(rng: random.Random, n: int) -> tuple:
    while True:
        v = tuple(random_rational(rng) for _ in range(n))
        if any(v):
            return v


def _line_into(u: tuple, Y: Space) -> tuple[Space, LinMap]:
    """``reals`` embedded isometrically along direction ``u`` of ``Y``."""
    R = reals()
    nu = Y.norm(u)
    return R, LinMap(R, Y, tuple((x / nu,) for x in u))


def _sum(kind: str, A: Space, B: Space):
    return direct_sum_l1(A, B) if kind == "l1" else direct_sum_max(A, B)


def _resolve_anchor(log: tuple, req: Request, push) -> LinMap | None:
    if req.anchor is None or req.anchor >= len(log):
        return None
    entry = log[req.anchor]
    return compose(push(entry.witness, entry.stage), req.anchor_map)


def resolve_space(chain: Chain, req: Request, rng: random.Random) -> tuple[ExtensionProblem, str]:
    """Attach a space request to the top stage; returns the problem and how f0 was found."""
    G = chain.top
    if req.random:
        kind = rng.choice(["l1", "max"])
        extra = max(1, req.random_dim - 1)
        X = _sum(kind, reals(), random_space(extra, extra + rng.randint(0, 1), rng.randrange(10**6)))
        incl = X.inl
        if G.dim == 0:
            Z = zero_space()
            return ExtensionProblem("space", LinMap(Z, X.space, la.zeros(X.space.dim, 0)),
                                    LinMap(Z, G, la.zeros(G.dim, 0)), request=req.name), "free"
        _, f0 = _line_into(_random_vector(rng, G.dim), G)
        return ExtensionProblem("space", incl, f0, request=req.name), "random"
    incl = req.incl
    X0 = incl.domain
    if X0.dim == 0:
        return ExtensionProblem("space", incl, LinMap(X0, G, la.zeros(G.dim, 0)), request=req.name), "solved"
    f0 = _resolve_anchor(chain.log, req, chain.push)
    if f0 is not None:
        return ExtensionProblem("space", incl, f0, request=req.name), "solved"
    if X0.dim == 1 and G.dim > 0:
        u = _random_vector(rng, G.dim)
        b = X0.norm((1,))
        f0 = LinMap(X0, G, tuple((x / (G.norm(u) * b),) for x in u))
        return ExtensionProblem("space", incl, f0, request=req.name), "random"
    # nothing to anchor to: glue X freely
    Z = zero_space()
    return ExtensionProblem("space", LinMap(Z, incl.codomain, la.zeros(incl.codomain.dim, 0)),
                            LinMap(Z, G, la.zeros(G.dim, 0)), request=req.name), "free"


def _already_solved(log: tuple, req: Request, rng_used: bool) -> LogEntry | None:
    if rng_used:
        return None
    fp = req.fingerprint()
    for entry in log:
        if entry.request == fp and entry.status in ("solved", "free"):
            return entry
    return None


def _nonrandom(req: Request) -> bool:
    return not req.random and (req.incl.domain.dim == 0 or req.anchor is not None)


def schedule_order(catalog: Sequence[Request], steps: int, random_every: int = 0,
                   random_req: Request | None = None) -> list[Request]:
    """Round-robin over the catalog, a random request every ``random_every`` steps."""
    out, k = [], 0
    for n in range(steps):
        if random_every and random_req is not None and (n + 1) % random_every == 0:
            out.append(random_req)
        elif catalog:
            out.append(catalog[k % len(catalog)])
            k += 1
        elif random_req is not None:
            out.append(random_req)
    return out


def build_gurarii_chain(catalog: Sequence[Request], steps: int, seed: int = 0,
                        random_every: int = 0, random_dim: int = 2) -> Chain:
    """Chain of spaces in which every scheduled extension problem is solved exactly."""
    rng = random.Random(seed)
    chain = Chain.start(seed=seed)
    rnd = Request("space", "random", random=True, random_dim=random_dim)
    for n, req in enumerate(schedule_order(list(catalog), steps, random_every, rnd)):
        fp = req.fingerprint()
        done = _already_solved(chain.log, req, not _nonrandom(req))
        if done is not None:
            f = chain.push(done.witness, done.stage)
            entry = LogEntry(n, fp, req.name, "revisit", done.problem, len(chain.stages), f,
                             origin=chain.log.index(done))
            chain = Chain(chain.stages + (chain.top,), chain.links + (identity(chain.top),),
                          chain.log + (entry,), seed)
            continue
        prob, how = resolve_space(chain, req, rng)
        chain, _ = solve_extension_space(chain, prob, n, req.name, fp)
        if how == "free":
            last = chain.log[-1]
            chain = replace(chain, log=chain.log[:-1] + (replace(last, status="free"),))
    return chain


def resolve_left(ochain: OperatorChain, req: Request, rng: random.Random, S_top: Space):
    V = ochain.top
    if req.random:
        X_new = _random_line(rng)
        solved = [k for k, e in enumerate(ochain.log) if e.status in ("solved", "free") and e.witness.domain.dim]
        if solved and rng.random() < 0.5:
            entry = ochain.log[rng.choice(solved)]
            fk = ochain.push(entry.witness, entry.stage)
            Tk = ochain.cpush(entry.problem.T, entry.stage - 1)
            y = _random_vector(rng, fk.domain.dim)
            X0, line = _line_into(y, fk.domain)
            kind = rng.choice(["l1", "max"])
            S = _sum(kind, X0, X_new)
            a = compose(Tk, line)
            c = LinMap(X_new, S_top, tuple((random_rational(rng),) for _ in range(S_top.dim)))
            T = LinMap(S.space, S_top, la.hstack(a.matrix, c.matrix, S_top.dim))
            if op_norm(T) > 1:
                T = LinMap(S.space, S_top, la.hstack(a.matrix, la.zeros(S_top.dim, 1), S_top.dim))
            e = compose(fk, line)
            return ExtensionProblem("left", S.inl, e, T, request=req.name), "random"
        Z = zero_space()
        T = _random_map(rng, X_new, S_top)
        return ExtensionProblem("left", LinMap(Z, X_new, la.zeros(1, 0)), LinMap(Z, V, la.zeros(V.dim, 0)),
                                T, request=req.name), "random"
    incl = req.incl
    T = replace_codomain(req.T, S_top) if req.T.codomain.dim == S_top.dim else req.T
    if incl.domain.dim == 0:
        return ExtensionProblem("left", incl, LinMap(incl.domain, V, la.zeros(V.dim, 0)), T,
                                request=req.name), "solved"
    f0 = _resolve_anchor(ochain.log, req, ochain.push)
    if f0 is not None:
        return ExtensionProblem("left", incl, f0, T, request=req.name), "solved"
    raise PreconditionError(f"request {req.name!r} has a nonzero X0 but no usable anchor")


def build_left_gurarii_chain(S, catalog: Sequence[Request], steps: int, seed: int = 0,
                             random_every: int = 0) -> OperatorChain:
    """Operator chain ``P_n: V_n -> S`` solving the scheduled left problems exactly.

    ``S`` is a space or a ``Chain``; in the latter case stage ``n`` maps into
    ``S.stages[min(n, last)]``.
    """
    rng = random.Random(seed)
    S0 = S.stages[0] if isinstance(S, Chain) else S
    ochain = OperatorChain.start("left", zero_space(), S0, seed=seed)
    rnd = Request("left", "random", random=True)
    for n, req in enumerate(schedule_order(list(catalog), steps, random_every, rnd)):
        if isinstance(S, Chain) and n + 1 < len(S.stages):
            S_new, clink = S.stages[n + 1], S.links[n]
        else:
            S_new, clink = ochain.ctop, identity(ochain.ctop)
        fp = req.fingerprint()
        done = _already_solved(ochain.log, req, req.random)
        if done is not None:
            f = ochain.push(done.witness, done.stage)
            entry = LogEntry(n, fp, req.name, "revisit", done.problem, len(ochain.domains), f,
                             origin=ochain.log.index(done))
            ochain = ochain.append(ochain.top, S_new, compose(clink, ochain.op), identity(ochain.top),
                                   clink, entry)
            continue
        if isinstance(S, Chain) and req.T is not None and not req.random:
            # T was written against some stage of S; push it to the new codomain
            m = next((k for k, st in enumerate(S.stages) if st.same_ball(req.T.codomain)), None)
            if m is not None:
                req = replace(req, T=S.push(req.T, m, n + 1 if n + 1 < len(S.stages) else len(S.stages) - 1))
        prob, how = resolve_left(ochain, req, rng, S_new)
        ochain, _ = solve_extension_left(ochain, prob, n, req.name, fp, S_new, clink)
    return ochain


def resolve_two_sided(ochain: OperatorChain, req: Request, rng: random.Random):
    V, W = ochain.top, ochain.ctop
    Z = zero_space()
    if req.random:
        X = _random_line(rng)
        Y = _random_line(rng) if rng.random() < 0.7 else Z
        T = _random_map(rng, X, Y)
        return ExtensionProblem("two-sided", LinMap(Z, X, la.zeros(1, 0)), LinMap(Z, V, la.zeros(V.dim, 0)), T,
                                LinMap(Z, Y, la.zeros(Y.dim, 0)), LinMap(Z, Z, ()),
                                LinMap(Z, W, la.zeros(W.dim, 0)), request=req.name)
    incl, incl_y = req.incl, req.incl_y
    X0, Y0 = incl.domain, incl_y.domain
    T0 = req.T0 or LinMap(X0, Y0, la.zeros(Y0.dim, X0.dim))
    if req.anchor is not None and req.anchor < len(ochain.log):
        entry = ochain.log[req.anchor]
        i = compose(ochain.push(entry.witness, entry.stage), req.anchor_map)
        j = compose(ochain.cpush(entry.witness_y, entry.stage), req.anchor_map_y)
    elif X0.dim == 0 and Y0.dim == 0:
        i, j = LinMap(X0, V, la.zeros(V.dim, 0)), LinMap(Y0, W, la.zeros(W.dim, 0))
    else:
        raise PreconditionError(f"request {req.name!r} has nonzero X0/Y0 but no usable anchor")
    return ExtensionProblem("two-sided", incl, i, req.T, incl_y, T0, j, request=req.name)


def build_universal_chain(catalog: Sequence[Request], steps: int, seed: int = 0,
                          random_every: int = 0, ochain: OperatorChain | None = None) -> OperatorChain:
    """Two-sided operator chain ``Omega_n: V_n -> W_n`` approximating the universal operator."""
    rng = random.Random(seed)
    Z = zero_space()
    ochain = ochain or OperatorChain.start("two-sided", Z, Z, seed=seed)
    rnd = Request("two-sided", "random", random=True)
    for n, req in enumerate(schedule_order(list(catalog), steps, random_every, rnd)):
        ochain = universal_step(ochain, req, rng, n)
    return ochain


def universal_step(ochain: OperatorChain, req: Request, rng: random.Random, n: int) -> OperatorChain:
    fp = req.fingerprint()
    done = _already_solved(ochain.log, req, req.random)
    if done is not None:
        f = ochain.push(done.witness, done.stage)
        fy = ochain.cpush(done.witness_y, done.stage)
        entry = LogEntry(n, fp, req.name, "revisit", done.problem, len(ochain.domains), f, fy,
                         origin=ochain.log.index(done))
        return ochain.append(ochain.top, ochain.ctop, ochain.op, identity(ochain.top),
                             identity(ochain.ctop), entry)
    prob = resolve_two_sided(ochain, req, rng)
    ochain, _ = solve_extension_two_sided(ochain, prob, n, req.name, fp)
    return ochain


# ------------------------------------------------------------ verification


@dataclass
class Verdict:
    request: str
    name: str
    passed: bool
    entry: int | None = None
    stage: int | None = None
    detail: str = ""


def _witness_ok(chain, entry: LogEntry, eps: Fraction) -> tuple[bool, str]:
    """Re-verify a logged witness against its problem, pushed to the top stage.

    The problem's partial maps live at stage ``entry.stage - 1`` and the
    witness at ``entry.stage``.  A revisit must equal its origin pushed forward.
    """
    if entry.origin is not None:
        first = chain.log[entry.origin]
        if not chain.push(first.witness, first.stage, entry.stage).equals(entry.witness):
            return False, "revisit witness differs from its origin"
        return _witness_ok(chain, first, eps)
    prob, s = entry.problem, entry.stage
    f = chain.push(entry.witness, s)
    if isinstance(certify_embedding(f, eps), Refutation):
        return False, "witness is not an eps-embedding"
    if prob.incl.domain.dim:
        f0 = chain.push(prob.f0, s - 1)
        if distance(compose(f, prob.incl), f0) > eps:
            return False, "witness does not extend the partial embedding"
    if isinstance(chain, Chain):
        return True, ""
    if chain.mode == "left":
        T = chain.cpush(prob.T, s)
        if distance(compose(chain.op, f), T) > eps:
            return False, "P o f is not close to T"
        return True, ""
    fy = chain.cpush(entry.witness_y, s)
    if isinstance(certify_embedding(fy, eps), Refutation):
        return False, "codomain witness is not an eps-embedding"
    if prob.incl_y.domain.dim and distance(compose(fy, prob.incl_y), chain.cpush(prob.j0, s - 1)) > eps:
        return False, "codomain witness does not extend j"
    if distance(compose(chain.op, f), compose(fy, prob.T)) > eps:
        return False, "Omega o i is not close to j o T"
    return True, ""


def check_gurarii(chain, battery: Sequence[Request], eps=0) -> list[Verdict]:
    """Per-request verdicts: a re-verified witness from the log, or the stage lacking one."""
    eps = la.frac(eps)
    out = []
    for req in battery:
        fp = req.fingerprint()
        verdict = None
        for k, entry in enumerate(chain.log):
            if entry.request != fp:
                continue
            ok, why = _witness_ok(chain, entry, eps)
            if ok:
                verdict = Verdict(fp, req.name, True, k, entry.stage)
                break
            verdict = Verdict(fp, req.name, False, k, entry.stage, why)
        if verdict is None:
            top = len(chain.stages if isinstance(chain, Chain) else chain.domains) - 1
            verdict = Verdict(fp, req.name, False, None, top, "no witness in the log up to this stage")
        out.append(verdict)
    return out


def verify_chain(chain) -> list[str]:
    """Re-check every link and logged witness; returns a list of failures."""
    errors = []
    if isinstance(chain, Chain):
        for n, link in enumerate(chain.links):
            if not isinstance(certify_embedding(link, 0), EmbeddingCert):
                errors.append(f"link {n} is not isometric")
    else:
        for n, (dl, cl) in enumerate(zip(chain.dlinks, chain.clinks)):
            if not isinstance(certify_embedding(dl, 0), EmbeddingCert):
                errors.append(f"domain link {n} is not isometric")
            if not isinstance(certify_embedding(cl, 0), EmbeddingCert):
                errors.append(f"codomain link {n} is not isometric")
            if not compose(chain.ops[n + 1], dl).equals(compose(cl, chain.ops[n])):
                errors.append(f"stage {n + 1} operator does not extend stage {n}")
        for n, op in enumerate(chain.ops):
            if op_norm(op) > 1:
                errors.append(f"stage {n} operator is expansive")
    for k, entry in enumerate(chain.log):
        ok, why = _witness_ok(chain, entry, Fraction(0))
        if not ok:
            errors.append(f"log entry {k}: {why}")
    return errors


# ------------------------------------------------------------ back-and-forth


@dataclass
class ClaimResult:
    A: OperatorChain
    B: OperatorChain
    i1: LinMap  # A.top -> B.top
    delta: Fraction
    bounds: dict
    trace: dict = field(default_factory=dict)


def choose_delta(eta: Fraction, v_norm: Fraction) -> Fraction:
    """Largest power of 1/2 with ``7 delta < eta`` and ``(1+delta) delta ||v'|| < eta``."""
    d = Fraction(1, 2)
    while not (7 * d < eta and (1 + d) * d * v_norm < eta):
        d /= 2
    return d


def _same_target(A: OperatorChain, B: OperatorChain):
    if A.mode != "left" or B.mode != "left":
        raise PreconditionError("back-and-forth needs left operator chains")
    if not A.ctop.same_ball(B.ctop):
        raise PreconditionError("chains map into different spaces")


def claim_step(A: OperatorChain, B: OperatorChain, E0: Space, emb0: LinMap, i0: LinMap, v, vp,
               eps, eta, delta=None, glue: str = "auto", step: int = -1) -> ClaimResult:
    """One back-and-forth step between two left-Gurarii chains.

    ``emb0: E0 -> A.top`` is isometric and ``i0: E0 -> B.top`` an
    eps-embedding with ``P_B i0 = P_A emb0``.  Grows both chains and returns
    ``i1: A'.top -> B'.top`` with the bounds of the step recorded.
    """
    eps, eta = la.frac(eps), la.frac(eta)
    _same_target(A, B)
    if not 0 <= eps < 1:
        raise PreconditionError("need 0 <= eps < 1")
    if eta <= 0:
        raise PreconditionError("eta must be positive")
    v, vp = la.vec(v), la.vec(vp)
    piA, piB = A.op, B.op
    Eb = B.top
    vp_norm = Eb.norm(vp)
    if delta is None:
        delta = choose_delta(eta, vp_norm)
    delta = la.frac(delta)
    if not 0 < delta < 1:
        raise PreconditionError("delta must lie in (0, 1)")
    if 7 * delta >= eta:
        raise PreconditionError(f"7*delta = {7 * delta} is not below eta = {eta}")
    if (1 + delta) * delta * vp_norm >= eta:
        raise PreconditionError("(1+delta)*delta*||v'|| is not below eta")
    if not isinstance(certify_embedding(emb0, 0), EmbeddingCert):
        raise PreconditionError("E0 -> A.top is not isometric")
    c0 = certify_embedding(i0, eps)
    if isinstance(c0, Refutation) or c0.flagged:
        raise PreconditionError("i0 is not an eps-embedding", witness=getattr(c0, "witness", None))
    if not compose(piB, i0).equals(compose(piA, emb0)):
        raise PreconditionError("pi' o i0 differs from pi on E0")

    exact_first = glue == "auto" and isinstance(certify_embedding(i0, 0), EmbeddingCert)
    # first amalgamation: E0 and E0' = B.top along i0
    if exact_first:
        W0, e1, f1, t0 = Eb, i0, identity(Eb), piB
    else:
        r0 = pushout_eps(i0, eps) if eps > 0 else pushout_eps(i0, delta)
        W0, e1, f1 = r0.Z, r0.i, r0.j
        t0 = extend_operators(r0, compose(piA, emb0), piB)
    A1, g1 = solve_extension_left(A, ExtensionProblem("left", e1, emb0, t0), step, "claim:first")
    linkA = A1.dlinks[-1]
    E1 = A1.top
    gf = compose(g1, f1)  # B.top -> E1, isometric
    # second amalgamation: E0' and E1 along g1 o f1
    if glue == "auto":
        W1, f2, e2, t1 = E1, gf, identity(E1), A1.op
    else:
        r1 = pushout_eps(gf, delta)
        W1, f2, e2 = r1.Z, r1.i, r1.j
        t1 = extend_operators(r1, piB, A1.op)
    B1, g2 = solve_extension_left(B, ExtensionProblem("left", f2, identity(Eb), t1), step, "claim:second")
    linkB = B1.dlinks[-1]
    i1 = compose(g2, e2)

    u = gf(vp)
    bounds = {
        "eps": eps, "eta": eta, "delta": delta,
        "first_gluing": distance(e1, compose(f1, i0)),
        "second_gluing": distance(compose(e2, gf), f2),
        "middle": distance(compose(e2, compose(g1, e1)), compose(f2, i0)),
        "restriction": distance(compose(i1, compose(linkA, emb0)), compose(linkB, i0)),
        "density": B1.top.norm(tuple(a - b for a, b in zip(i1(u), linkB(vp)))),
        "defect": embedding_defect(i1),
        "intertwines": compose(B1.op, i1).equals(A1.op),
        "v_in_E1": len(linkA(v)) == E1.dim,
    }
    bounds["ok"] = (bounds["first_gluing"] <= eps and bounds["second_gluing"] <= delta
                    and bounds["middle"] <= eps + 3 * delta
                    and bounds["restriction"] <= eps + 7 * delta and bounds["restriction"] < eps + eta
                    and bounds["density"] <= (1 + delta) * delta * vp_norm and bounds["density"] < eta
                    and bounds["defect"] <= eta and bounds["intertwines"])
    trace = {"W0": W0, "W1": W1, "e1": e1, "e2": e2, "f1": f1, "f2": f2, "g1": g1, "g2": g2,
             "t0": t0, "t1": t1, "preimage": u, "exact_first": exact_first}
    return ClaimResult(A1, B1, i1, delta, bounds, trace)


def _generator(space: Space, k: int) -> tuple:
    if space.dim == 0:
        return ()
    return tuple(Fraction(int(i == k % space.dim)) for i in range(space.dim))


def build_almost_isometry(A: OperatorChain, B: OperatorChain, steps: int, seed=None,
                          glue: str = "auto") -> dict:
    """Back-and-forth between two left-Gurarii chains over the same target.

    ``seed = (E0, emb0, i0)`` starts from a partial isometry (``A`` is ``B``
    for almost left-homogeneity); otherwise from the zero subspace.  Step
    ``k`` runs ``claim_step`` with ``eps = 2^-(k+1)``, ``eta = 2^-(k+2)``.
    """
    _same_target(A, B)
    if seed is None:
        E0 = zero_space()
        emb = LinMap(E0, A.top, la.zeros(A.top.dim, 0))
        i = LinMap(E0, B.top, la.zeros(B.top.dim, 0))
    else:
        E0, emb, i = seed
    seed_emb, seed_map = emb, i
    maps, ledger = [i], []
    E = E0
    for k in range(steps):
        eps, eta = Fraction(1, 2 ** (k + 1)), Fraction(1, 2 ** (k + 2))
        v, vp = _generator(A.top, k), _generator(B.top, k)
        res = claim_step(A, B, E, emb, i, v, vp, eps, eta, glue=glue, step=k)
        seed_emb = compose(res.A.dlinks[-1], seed_emb)
        seed_map = compose(res.B.dlinks[-1], seed_map)
        A, B, i = res.A, res.B, res.i1
        E, emb = A.top, identity(A.top)
        maps.append(i)
        entry = dict(res.bounds)
        entry.update({"k": k + 1, "dims": (A.top.dim, B.top.dim), "v": v, "vp": vp,
                      "tolerance": Fraction(1, 2 ** (k + 1)),
                      "seed_distance": distance(compose(i, seed_emb), seed_map) if E0.dim else Fraction(0),
                      "cauchy_bound": Fraction(1, 2 ** (k + 1)) + Fraction(1, 2 ** (k + 2))})
        entry["ledger_ok"] = (entry["ok"] and entry["defect"] <= entry["tolerance"]
                              and entry["restriction"] <= entry["cauchy_bound"])
        ledger.append(entry)
    return {"A": A, "B": B, "maps": maps, "ledger": ledger}


def almost_homogeneity(A: OperatorChain, X0: Space, emb0: LinMap, h: LinMap, steps: int,
                       glue: str = "auto") -> dict:
    """Back-and-forth of ``A`` with itself seeded by a partial isometry ``h``.

    ``emb0, h: X0 -> A.top`` are isometric with ``P h = P emb0``.
    """
    if not compose(A.op, h).equals(compose(A.op, emb0)):
        raise PreconditionError("h does not preserve the operator")
    if not isinstance(certify_embedding(h, 0), EmbeddingCert):
        raise PreconditionError("h is not isometric")
    return build_almost_isometry(A, A, steps, seed=(X0, emb0, h), glue=glue)


def left_catalog_for(S: Space) -> list[Request]:
    """A small default left catalog: a kernel line, a copy of S, a half-scaled line."""
    Z = zero_space()
    out = []
    R = reals()
    out.append(Request("left", "kernel-line", LinMap(Z, R, la.zeros(1, 0)), zero_map(R, S)))
    out.append(Request("left", "copy-of-S", LinMap(Z, S, la.zeros(S.dim, 0)), identity(S)))
    if S.dim:
        half = LinMap(R, S, tuple((Fraction(int(k == 0), 2) / max(S.norm(_generator(S, 0)), 1),)
                                  for k in range(S.dim)))
        out.append(Request("left", "half-line", LinMap(Z, R, la.zeros(1, 0)), _nonexpansive(half)))
    return out


__all__ = [
    "Request", "ExtensionProblem", "LogEntry", "Chain", "OperatorChain",
    "solve_extension_space", "solve_extension_left", "solve_extension_two_sided",
    "build_gurarii_chain", "build_left_gurarii_chain", "build_universal_chain", "universal_step",
    "check_gurarii", "verify_chain", "claim_step", "build_almost_isometry", "almost_homogeneity",
    "choose_delta", "schedule_order", "left_catalog_for", "make_space", "random_space",
]
