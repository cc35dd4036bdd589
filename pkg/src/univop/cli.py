"""Command-line client.

Every command posts one request to the service, in-process by default or to
``--server URL``.  Exit codes: 0 success, 2 usage, 3 invalid input or failed
precondition, 4 failed verification, 1 anything else.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import PreconditionError
from .serialize import dumps, load_json, parse_rational, write_documents

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2, 3, 4


class Client:
    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._c = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._c = TestClient(app, raise_server_exceptions=False)

    def post(self, path: str, body: dict) -> tuple[int, dict]:
        r = self._c.post(path, json=body)
        try:
            return r.status_code, r.json()
        except ValueError:
            return r.status_code, {"ok": False, "error": "server", "message": r.text}


class InputError(Exception):
    pass


def rational_arg(s: str) -> str:
    try:
        parse_rational(s)
    except PreconditionError:
        raise argparse.ArgumentTypeError(f"not a rational p/q: {s!r}") from None
    return s


def read(path: str):
    try:
        return load_json(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def vector_arg(s: str) -> list[str]:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    for p in parts:
        rational_arg(p)
    return parts


# ---------------------------------------------------------------- commands
# Each returns (endpoint, request body, output writer name).


def _common(args) -> dict:
    return {"dim_cap": args.dim_cap} if args.dim_cap else {}


def cmd_space_eval(a):
    vecs = list(a.vector or [])
    if a.vectors:
        vecs += read(a.vectors)
    return "/space/eval", {"space": read(a.space), "vectors": vecs}


def cmd_space_sum(a):
    return "/space/sum", {"left": read(a.left), "right": read(a.right), "kind": a.kind}


def cmd_space_random(a):
    return "/space/random", {"dim": a.dim, "facets": a.facets, "seed": a.seed}


def cmd_op_norm(a):
    return "/op/norm", {"map": read(a.map), "method": a.method}


def cmd_op_certify(a):
    return "/op/certify", {"map": read(a.map), "eps": a.eps, "method": a.method}


def cmd_op_distance(a):
    return "/op/distance", {"f": read(a.f), "g": read(a.g)}


def cmd_amalgam_eps(a):
    body = {"map": read(a.map), "eps": a.eps}
    if a.pi:
        body["pi"] = read(a.pi)
    if a.rho:
        body["rho"] = read(a.rho)
    return "/amalgam/eps", body


def cmd_amalgam_exact(a):
    return "/amalgam/exact", {"g": read(a.g), "h": read(a.h)}


def cmd_amalgam_correct(a):
    body = read(a.bundle)
    if not isinstance(body, dict):
        raise InputError(f"{a.bundle}: expected an object with P, r, e, T, f, incl")
    body = dict(body)
    body["eps"] = a.eps
    return "/amalgam/correct", body


def _schedule(a):
    return read(a.schedule) if a.schedule else {}


def _sched_doc(doc):
    return {"catalog": doc} if isinstance(doc, list) else doc


def cmd_chain_build_gurarii(a):
    return "/chain/build-gurarii", {"schedule": _sched_doc(_schedule(a)), "steps": a.steps, "seed": a.seed}


def cmd_chain_build_left(a):
    return "/chain/build-left", {"S": read(a.S), "schedule": _sched_doc(_schedule(a)), "steps": a.steps,
                                 "seed": a.seed}


def cmd_chain_build_universal(a):
    return "/chain/build-universal", {"schedule": _sched_doc(_schedule(a)), "steps": a.steps, "seed": a.seed}


def cmd_chain_check(a):
    body = {"chain": read(a.chain), "eps": a.eps}
    if a.schedule:
        body["battery"] = _sched_doc(read(a.schedule))
    return "/chain/check", body


def cmd_backforth_run(a):
    body = {"A": read(a.A), "steps": a.steps, "glue": a.glue}
    if a.B:
        body["B"] = read(a.B)
    if a.homogeneity:
        seed = read(a.homogeneity)
        body["seed_embedding"] = seed.get("seed_embedding")
        body["seed_map"] = seed.get("seed_map")
    return "/backforth/run", body


def cmd_game_play(a):
    body = {"rounds": a.rounds, "eve": a.eve, "seed": a.seed, "mode": a.mode, "eve_dim_cap": a.eve_dim_cap}
    if a.eve == "script":
        if not a.script:
            raise InputError("--script is required with --eve script")
        from .game import read_script

        body["script"] = read_script(a.script)
    return "/game/play", body


def cmd_game_verify(a):
    from .game import read_transcript_docs

    try:
        docs = read_transcript_docs(a.transcript)
    except FileNotFoundError:
        raise InputError(f"{a.transcript}: no such file") from None
    except (json.JSONDecodeError, PreconditionError) as exc:
        raise InputError(f"{a.transcript}: {exc}") from None
    return "/game/verify", {"documents": docs}


def cmd_convert_vrep(a):
    doc = read(a.file)
    return "/convert/vrep", {"dim": doc.get("dim") if isinstance(doc, dict) else None,
                             "vertices": doc.get("vertices") if isinstance(doc, dict) else None}


def cmd_convert_hrep(a):
    return "/convert/hrep", {"space": read(a.file)}


# ------------------------------------------------------------------ output


def _write(out: str | None, name: str, text: str):
    if out is None:
        sys.stdout.write(text)
        return
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), "w") as fh:
        fh.write(text)


def emit(a, result: dict):
    out = a.out
    key = a.command_key
    if key.startswith("chain build") and out is not None:
        write_documents(out, result["manifest"], result["documents"])
        return
    if key == "game play":
        if out is None:
            sys.stdout.write(result["transcript"])
            return
        _write(out, "transcript.jsonl", result["transcript"])
        _write(out, "report.json", dumps(result["report"]))
        _write_transcript_dir(os.path.join(out, "transcript"), result["transcript"])
        return
    if key == "op certify":
        _write(out, "certificate.json", dumps(result))
        return
    _write(out, key.replace(" ", "-") + ".json", dumps(result))


def _write_transcript_dir(outdir: str, jsonl: str):
    from .game import parse_jsonl, write_docs_dir

    write_docs_dir(parse_jsonl(jsonl), outdir)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim-cap", type=int, default=None, help="vertex-enumeration dimension cap")
    common.add_argument("--out", default=None, help="output directory (default: stdout)")
    common.add_argument("--server", default=None, help="service URL (default: in-process)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="univop", description="Exact workbench for polyhedral spaces and operators.")
    groups = p.add_subparsers(dest="group", required=True)

    def leaf(group, name, fn, help_=None):
        sp = group.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    g = groups.add_parser("space").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "eval", cmd_space_eval, "norms of vectors")
    s.add_argument("space")
    s.add_argument("--vector", type=vector_arg, action="append", help="comma-separated rationals")
    s.add_argument("--vectors", help="JSON file with a list of vectors")
    s = leaf(g, "sum", cmd_space_sum, "l1 or max direct sum")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--kind", choices=["l1", "max"], default="l1")
    s = leaf(g, "random", cmd_space_random, "seeded random space")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--facets", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)

    g = groups.add_parser("op").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "norm", cmd_op_norm, "exact operator norm")
    s.add_argument("map")
    s.add_argument("--method", choices=["vertex", "lp"], default="vertex")
    s = leaf(g, "certify", cmd_op_certify, "eps-embedding certificate or refutation")
    s.add_argument("map")
    s.add_argument("--eps", type=rational_arg, default="0")
    s.add_argument("--method", choices=["vertex", "lp"], default="vertex")
    s = leaf(g, "distance", cmd_op_distance, "operator-norm distance")
    s.add_argument("f")
    s.add_argument("g")

    g = groups.add_parser("amalgam").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "eps", cmd_amalgam_eps, "glue along an eps-embedding")
    s.add_argument("map")
    s.add_argument("--eps", type=rational_arg, required=True)
    s.add_argument("--pi")
    s.add_argument("--rho")
    s = leaf(g, "exact", cmd_amalgam_exact, "exact pushout of g and h")
    s.add_argument("g")
    s.add_argument("h")
    s = leaf(g, "correct", cmd_amalgam_correct, "correct an approximate witness")
    s.add_argument("bundle")
    s.add_argument("--eps", type=rational_arg, required=True)

    g = groups.add_parser("chain").add_subparsers(dest="cmd", required=True)
    for name, fn in (("build-gurarii", cmd_chain_build_gurarii), ("build-universal", cmd_chain_build_universal),
                     ("build-left", cmd_chain_build_left)):
        s = leaf(g, name, fn)
        s.add_argument("--schedule")
        s.add_argument("--steps", type=int, required=True)
        s.add_argument("--seed", type=int, default=0)
        if name == "build-left":
            s.add_argument("--S", required=True, help="target space or space chain")
    s = leaf(g, "check", cmd_chain_check, "re-verify a chain, optionally against a battery")
    s.add_argument("chain")
    s.add_argument("--schedule", help="battery of requests")
    s.add_argument("--eps", type=rational_arg, default="0")

    g = groups.add_parser("backforth").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "run", cmd_backforth_run, "almost-isometry between two left chains")
    s.add_argument("A")
    s.add_argument("B", nargs="?")
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--glue", choices=["auto", "eps"], default="auto")
    s.add_argument("--homogeneity", help="JSON with seed_embedding and seed_map")

    g = groups.add_parser("game").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "play", cmd_game_play)
    s.add_argument("--rounds", type=int, required=True)
    s.add_argument("--eve", choices=["random", "script", "repl"], default="random")
    s.add_argument("--script")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=["exact", "perturb"], default="exact")
    s.add_argument("--eve-dim-cap", type=int, default=4)
    s = leaf(g, "verify", cmd_game_verify)
    s.add_argument("transcript")

    g = groups.add_parser("convert").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "vrep", cmd_convert_vrep, "vertices to facets")
    s.add_argument("file")
    s = leaf(g, "hrep", cmd_convert_hrep, "facets to vertices")
    s.add_argument("file")
    return p


def play_repl(a) -> int:
    """Interactive Eve runs locally: the REPL needs the terminal."""
    from contextlib import nullcontext

    from .config import dimension_cap
    from .game import AdamConfig, eve_policy_repl, play, transcript_to_jsonl

    with dimension_cap(a.dim_cap) if a.dim_cap else nullcontext():
        t = play(a.rounds, eve_policy_repl(), AdamConfig(a.mode, a.seed))
    emit(a, {"transcript": transcript_to_jsonl(t), "report": {}})
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    a.command_key = f"{a.group} {a.cmd}"
    try:
        if a.command_key == "game play" and a.eve == "repl":
            return play_repl(a)
        path, body = a.fn(a)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    body.update(_common(a))
    status, result = Client(a.server).post(path, body)
    if status in (400, 422):
        print(f"error: {result.get('message', result)}", file=sys.stderr)
        for loc in result.get("locations", []):
            print(f"  at {loc}", file=sys.stderr)
        if result.get("witness"):
            print(f"  witness {result['witness']}", file=sys.stderr)
        return EXIT_INVALID
    if status != 200:
        print(f"error: service returned {status}: {result.get('message', result)}", file=sys.stderr)
        return EXIT_ERROR
    emit(a, result)
    if not result.get("ok", True):
        print("verification failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def run():  # console-script entry
    sys.exit(main())


if __name__ == "__main__":
    run()
