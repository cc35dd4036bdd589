"""HTTP service exposing the workbench operations.

Each endpoint is a thin shell over one core operation.  Schema problems come
back as 422 with JSON-path locations, failed preconditions as 400 with a
witness when one exists, and failed verifications as 200 with ``ok: false``.
"""
from __future__ import annotations

from contextlib import nullcontext
from fractions import Fraction

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import models as m
from .amalgam import CONVENTION, correct_to_exact, extend_operators, pushout_eps, pushout_exact
from .config import dimension_cap
from .errors import UnivopError
from .fraisse import (Chain, OperatorChain, almost_homogeneity, build_almost_isometry,
                      build_gurarii_chain, build_left_gurarii_chain, build_universal_chain,
                      check_gurarii, replace_codomain, verify_chain)
from .game import (AdamConfig, eve_policy_random, eve_policy_script, parse_jsonl, play,
                   transcript_to_jsonl, verify_transcript)
from .operator import EmbeddingCert, certify_embedding, distance, norm_witness, op_norm
from .serialize import (chain_from_json, chain_to_json, inline_map_from_json, inline_map_to_json,
                        matrix_from_json, parse_rational, schedule_from_json, space_from_json,
                        space_to_json, vector_from_json)
from .space import (content_hash, direct_sum_l1, direct_sum_max, fmt, random_space,
                    space_from_points)

app = FastAPI(title="univop", version="0.1.0")


def json_path(loc) -> str:
    out = "$"
    for part in loc:
        if part == "body":
            continue
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


@app.exception_handler(RequestValidationError)
def _on_schema_error(request: Request, exc: RequestValidationError):
    locs = [json_path(e.get("loc", ())) for e in exc.errors()]
    msg = "; ".join(f"{json_path(e.get('loc', ()))}: {e.get('msg')}" for e in exc.errors())
    body = m.ErrorResponse(error="validation", message=msg, locations=locs)
    return JSONResponse(status_code=422, content=body.model_dump())


@app.exception_handler(UnivopError)
def _on_precondition(request: Request, exc: UnivopError):
    w = getattr(exc, "witness", None)
    wit = [fmt(x) for x in w] if isinstance(w, tuple) else None
    body = m.ErrorResponse(error=type(exc).__name__, message=str(exc), witness=wit)
    return JSONResponse(status_code=400, content=body.model_dump())


@app.exception_handler(ValueError)
def _on_value_error(request: Request, exc: ValueError):
    body = m.ErrorResponse(error="ValueError", message=str(exc))
    return JSONResponse(status_code=400, content=body.model_dump())


def _cap(job: m.Job):
    return dimension_cap(job.dim_cap) if job.dim_cap else nullcontext()


def _space(doc: m.SpaceDoc, path: str):
    return space_from_json(doc.model_dump(exclude_none=True), path)


def _map(doc: m.MapDoc, path: str):
    return inline_map_from_json(doc.model_dump(exclude_none=True), path)


def plain(obj):
    """Fractions to strings, tuples to lists, maps to inline documents."""
    from .operator import LinMap

    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, LinMap):
        return inline_map_to_json(obj)
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    return obj


@app.get("/health")
def health():
    return {"ok": True}


# ---------------------------------------------------------------- spaces


@app.post("/space/eval", response_model=m.NormsResponse)
def space_eval(req: m.SpaceEvalRequest):
    with _cap(req):
        S = _space(req.space, "$.space")
        vs = [vector_from_json(v, f"$.vectors[{k}]") for k, v in enumerate(req.vectors)]
        return m.NormsResponse(norms=[fmt(S.norm(v)) for v in vs])


@app.post("/space/sum", response_model=m.SpaceResponse)
def space_sum(req: m.SpaceSumRequest):
    with _cap(req):
        X, Y = _space(req.left, "$.left"), _space(req.right, "$.right")
        s = (direct_sum_l1 if req.kind == "l1" else direct_sum_max)(X, Y)
        return m.SpaceResponse(space=space_to_json(s.space, vertices=True))


@app.post("/space/random", response_model=m.SpaceResponse)
def space_random(req: m.SpaceRandomRequest):
    with _cap(req):
        return m.SpaceResponse(space=space_to_json(random_space(req.dim, req.facets, req.seed), vertices=True))


@app.post("/convert/vrep", response_model=m.SpaceResponse)
def convert_vrep(req: m.ConvertVrepRequest):
    with _cap(req):
        pts = matrix_from_json(req.vertices, "$.vertices")
        S = space_from_points(pts, req.dim)
        return m.SpaceResponse(space=space_to_json(S, vertices=True))


@app.post("/convert/hrep", response_model=m.VerticesResponse)
def convert_hrep(req: m.ConvertHrepRequest):
    with _cap(req):
        S = _space(req.space, "$.space")
        return m.VerticesResponse(dim=S.dim, vertices=[[fmt(x) for x in v] for v in S.vertices])


# ------------------------------------------------------------- operators


@app.post("/op/norm", response_model=m.NormResponse)
def op_norm_ep(req: m.OpNormRequest):
    with _cap(req):
        f = _map(req.map, "$.map")
        w = norm_witness(f) if f.domain.dim and f.codomain.dim else None
        return m.NormResponse(norm=fmt(op_norm(f, req.method)), witness=None if w is None else [fmt(x) for x in w])


def cert_doc(c) -> dict:
    if isinstance(c, EmbeddingCert):
        return {"kind": "embedding", "eps": fmt(c.eps), "upper": fmt(c.upper), "lower": fmt(c.lower),
                "lower_vertex": [fmt(x) for x in c.lower_vertex], "flagged": c.flagged,
                "map": inline_map_to_json(c.map)}
    return {"kind": "refutation", "eps": fmt(c.eps), "side": c.side, "witness": [fmt(x) for x in c.witness],
            "map": inline_map_to_json(c.map)}


@app.post("/op/certify", response_model=m.CertifyResponse)
def op_certify(req: m.OpCertifyRequest):
    with _cap(req):
        f = _map(req.map, "$.map")
        c = certify_embedding(f, parse_rational(req.eps, "$.eps"), req.method)
        return m.CertifyResponse(ok=isinstance(c, EmbeddingCert), certificate=cert_doc(c))


@app.post("/op/distance", response_model=m.DistanceResponse)
def op_distance(req: m.OpDistanceRequest):
    with _cap(req):
        return m.DistanceResponse(distance=fmt(distance(_map(req.f, "$.f"), _map(req.g, "$.g"))))


# -------------------------------------------------------------- amalgams


@app.post("/amalgam/eps", response_model=m.AmalgamResponse)
def amalgam_eps(req: m.AmalgamEpsRequest):
    with _cap(req):
        f = _map(req.map, "$.map")
        res = pushout_eps(f, parse_rational(req.eps, "$.eps"))
        t = None
        if req.pi is not None or req.rho is not None:
            if req.pi is None or req.rho is None:
                raise UnivopError("$.pi/$.rho: give both operators or neither")
            t = inline_map_to_json(extend_operators(res, _map(req.pi, "$.pi"), _map(req.rho, "$.rho")))
        return m.AmalgamResponse(Z=space_to_json(res.Z, vertices=True), i=inline_map_to_json(res.i),
                                 j=inline_map_to_json(res.j), t=t, eps=fmt(res.eps), convention=CONVENTION)


@app.post("/amalgam/exact", response_model=m.AmalgamResponse)
def amalgam_exact(req: m.AmalgamExactRequest):
    with _cap(req):
        res = pushout_exact(_map(req.g, "$.g"), _map(req.h, "$.h"))
        return m.AmalgamResponse(Z=space_to_json(res.Z, vertices=True), i=inline_map_to_json(res.i),
                                 j=inline_map_to_json(res.j), eps="0", convention="quotient")


@app.post("/amalgam/correct", response_model=m.MapResponse)
def amalgam_correct(req: m.AmalgamCorrectRequest):
    with _cap(req):
        args = {k: _map(getattr(req, k), f"$.{k}") for k in ("P", "r", "e", "T", "f", "incl")}
        A = matrix_from_json(req.A, "$.A") if req.A is not None else None
        delta = parse_rational(req.delta, "$.delta") if req.delta is not None else None
        eps = parse_rational(req.eps, "$.eps")
        fp = correct_to_exact(args["P"], args["r"], args["e"], args["T"], args["f"], args["incl"], eps,
                              A=A, delta=delta)
        return m.MapResponse(map=inline_map_to_json(fp), certificate=cert_doc(certify_embedding(fp, eps)))


# ---------------------------------------------------------------- chains


def _schedule(doc: m.ScheduleDoc | None, path: str) -> dict:
    return schedule_from_json((doc or m.ScheduleDoc()).model_dump(), path)


def _extra(req: m.ChainBuildRequest, command: str) -> dict:
    return {"command": command, "steps": req.steps, "seed": req.seed,
            "schedule_hash": content_hash(req.schedule.model_dump())}


@app.post("/chain/build-gurarii", response_model=m.ChainResponse)
def chain_build_gurarii(req: m.ChainBuildRequest):
    with _cap(req):
        sch = _schedule(req.schedule, "$.schedule")
        ch = build_gurarii_chain(sch["catalog"], req.steps, req.seed, sch["random_every"], sch["random_dim"])
        return m.ChainResponse(**chain_to_json(ch, _extra(req, "build-gurarii")))


def _load_S(doc: dict):
    if "manifest" in doc:
        ch = chain_from_json(doc)
        if not isinstance(ch, Chain):
            raise UnivopError("$.S: expected a space chain")
        return ch
    return space_from_json(doc, "$.S")


@app.post("/chain/build-left", response_model=m.ChainResponse)
def chain_build_left(req: m.ChainBuildLeftRequest):
    with _cap(req):
        sch = _schedule(req.schedule, "$.schedule")
        S = _load_S(req.S)
        ch = build_left_gurarii_chain(S, sch["catalog"], req.steps, req.seed, sch["random_every"])
        return m.ChainResponse(**chain_to_json(ch, _extra(req, "build-left")))


@app.post("/chain/build-universal", response_model=m.ChainResponse)
def chain_build_universal(req: m.ChainBuildRequest):
    with _cap(req):
        sch = _schedule(req.schedule, "$.schedule")
        ch = build_universal_chain(sch["catalog"], req.steps, req.seed, sch["random_every"])
        return m.ChainResponse(**chain_to_json(ch, _extra(req, "build-universal")))


@app.post("/chain/check", response_model=m.CheckResponse)
def chain_check(req: m.ChainCheckRequest):
    with _cap(req):
        ch = chain_from_json(req.chain)
        errors = verify_chain(ch)
        verdicts = []
        if req.battery is not None:
            sch = _schedule(req.battery, "$.battery")
            verdicts = [{"request": v.request, "name": v.name, "passed": v.passed, "entry": v.entry,
                         "stage": v.stage, "detail": v.detail}
                        for v in check_gurarii(ch, sch["catalog"], parse_rational(req.eps, "$.eps"))]
        ok = not errors and all(v["passed"] for v in verdicts)
        return m.CheckResponse(ok=ok, errors=errors, verdicts=verdicts)


# --------------------------------------------------------- back-and-forth


def _left_chain(doc: dict, path: str) -> OperatorChain:
    ch = chain_from_json(doc)
    if not isinstance(ch, OperatorChain) or ch.mode != "left":
        raise UnivopError(f"{path}: expected a left operator chain")
    return ch


@app.post("/backforth/run", response_model=m.BackforthResponse)
def backforth_run(req: m.BackforthRequest):
    with _cap(req):
        A = _left_chain(req.A, "$.A")
        if req.seed_map is not None:
            if req.seed_embedding is None:
                raise UnivopError("$.seed_embedding: required with seed_map")
            emb, h = _map(req.seed_embedding, "$.seed_embedding"), _map(req.seed_map, "$.seed_map")
            out = almost_homogeneity(A, emb.domain, replace_codomain(emb, A.top),
                                     replace_codomain(h, A.top), req.steps, req.glue)
        else:
            if req.B is None:
                raise UnivopError("$.B: required unless seed_map is given")
            out = build_almost_isometry(A, _left_chain(req.B, "$.B"), req.steps, glue=req.glue)
        ledger = [plain(e) for e in out["ledger"]]
        maps = [inline_map_to_json(f) for f in out["maps"]]
        ok = all(e["ledger_ok"] for e in out["ledger"])
        return m.BackforthResponse(ok=ok, ledger=ledger, maps=maps, hash=content_hash([ledger, maps]))


# ------------------------------------------------------------------ game


@app.post("/game/play", response_model=m.GamePlayResponse)
def game_play(req: m.GamePlayRequest):
    with _cap(req):
        if req.eve == "script":
            if req.script is None:
                raise UnivopError("$.script: required for a scripted Eve")
            eve = eve_policy_script(req.script)
        else:
            eve = eve_policy_random(req.seed, req.eve_dim_cap)
        t = play(req.rounds, eve, AdamConfig(req.mode, req.seed, req.adam_dim_cap))
        text = transcript_to_jsonl(t)
        rep = verify_transcript(parse_jsonl(text))
        return m.GamePlayResponse(ok=rep.ok, transcript=text, report=rep.as_dict())


@app.post("/game/verify", response_model=m.ReportResponse)
def game_verify(req: m.GameVerifyRequest):
    with _cap(req):
        rep = verify_transcript(req.documents).as_dict()
        return m.ReportResponse(**rep)
