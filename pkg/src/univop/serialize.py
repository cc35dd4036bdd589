"""JSON documents for spaces, maps, chains and bundles.

Rationals are always strings ``"p"`` or ``"p/q"``.  Every object gets a
content-derived id, so manifests of identical builds are byte-identical.
"""
from __future__ import annotations

import json
import os
from fractions import Fraction

from . import linalg as la
from .errors import PreconditionError
from .fraisse import Chain, ExtensionProblem, LogEntry, OperatorChain
from .operator import LinMap
from .space import Space, content_hash, fmt, make_space, zero_space

SCHEMA_VERSION = 1


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def parse_rational(x, path: str = "$") -> Fraction:
    if isinstance(x, bool) or isinstance(x, float):
        raise PreconditionError(f"{path}: rationals must be strings like \"p/q\", got {x!r}")
    try:
        return la.frac(x)
    except (ValueError, TypeError, ZeroDivisionError):
        raise PreconditionError(f"{path}: not a rational: {x!r}") from None


def vector_to_json(v) -> list:
    return [fmt(x) for x in v]


def vector_from_json(v, path: str = "$") -> tuple:
    if not isinstance(v, list):
        raise PreconditionError(f"{path}: expected a list")
    return tuple(parse_rational(x, f"{path}[{k}]") for k, x in enumerate(v))


def matrix_to_json(M) -> list:
    return [vector_to_json(r) for r in M]


def matrix_from_json(M, path: str = "$") -> tuple:
    if not isinstance(M, list):
        raise PreconditionError(f"{path}: expected a list of rows")
    return tuple(vector_from_json(r, f"{path}[{k}]") for k, r in enumerate(M))


# ---------------------------------------------------------------- spaces


def space_to_json(S: Space, vertices: bool = False) -> dict:
    doc = {"id": S.id, "dim": S.dim, "facets": matrix_to_json(S.facets)}
    if S.labels is not None:
        doc["labels"] = list(S.labels)
    if vertices:
        doc["vertices"] = matrix_to_json(S.vertices)
    return doc


def space_from_json(doc: dict, path: str = "$", trust_vertices: bool = False) -> Space:
    """Rebuild a space; stored vertices are ignored unless ``trust_vertices``."""
    if not isinstance(doc, dict):
        raise PreconditionError(f"{path}: expected an object")
    if "dim" not in doc or "facets" not in doc:
        raise PreconditionError(f"{path}: a space needs 'dim' and 'facets'")
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 0:
        raise PreconditionError(f"{path}.dim: expected a non-negative integer")
    facets = matrix_from_json(doc["facets"], f"{path}.facets")
    if any(len(f) != dim for f in facets):
        raise PreconditionError(f"{path}.facets: every functional needs {dim} entries")
    if dim == 0:
        return zero_space()
    verts = None
    if trust_vertices and "vertices" in doc:
        verts = matrix_from_json(doc["vertices"], f"{path}.vertices")
    return make_space(facets, dim=dim, labels=doc.get("labels"), id=doc.get("id"), vertices=verts)


def map_id(f: LinMap) -> str:
    return "map-" + content_hash([f.domain.id, f.codomain.id, matrix_to_json(f.matrix)])[:16]


def map_to_json(f: LinMap) -> dict:
    return {"id": map_id(f), "domain": f.domain.id, "codomain": f.codomain.id,
            "matrix": matrix_to_json(f.matrix)}


def map_from_json(doc: dict, spaces: dict, path: str = "$") -> LinMap:
    if not isinstance(doc, dict):
        raise PreconditionError(f"{path}: expected an object")
    for key in ("domain", "codomain", "matrix"):
        if key not in doc:
            raise PreconditionError(f"{path}: missing '{key}'")
    try:
        X, Y = spaces[doc["domain"]], spaces[doc["codomain"]]
    except KeyError as exc:
        raise PreconditionError(f"{path}: unknown space id {exc.args[0]!r}") from None
    M = matrix_from_json(doc["matrix"], f"{path}.matrix")
    if len(M) != Y.dim or any(len(r) != X.dim for r in M):
        raise PreconditionError(f"{path}.matrix: shape must be {Y.dim} x {X.dim}")
    return LinMap(X, Y, M)


# ---------------------------------------------------------------- bundles


class Store:
    """Collects space and map documents by id."""

    def __init__(self):
        self.spaces: dict[str, dict] = {}
        self.maps: dict[str, dict] = {}

    def space(self, S: Space) -> str:
        if S.id not in self.spaces:
            self.spaces[S.id] = space_to_json(S)
        return S.id

    def map(self, f: LinMap | None) -> str | None:
        if f is None:
            return None
        self.space(f.domain)
        self.space(f.codomain)
        doc = map_to_json(f)
        self.maps.setdefault(doc["id"], doc)
        return doc["id"]

    def documents(self) -> dict:
        return {"spaces": dict(sorted(self.spaces.items())), "maps": dict(sorted(self.maps.items()))}


class Loader:
    def __init__(self, documents: dict):
        self.docs = documents
        self._spaces: dict[str, Space] = {}
        self._maps: dict[str, LinMap] = {}

    def space(self, sid: str) -> Space:
        if sid not in self._spaces:
            doc = self.docs.get("spaces", {}).get(sid)
            if doc is None:
                raise PreconditionError(f"$.documents.spaces: missing space {sid!r}")
            self._spaces[sid] = space_from_json(doc, f"$.documents.spaces.{sid}")
        return self._spaces[sid]

    def map(self, mid: str | None) -> LinMap | None:
        if mid is None:
            return None
        if mid not in self._maps:
            doc = self.docs.get("maps", {}).get(mid)
            if doc is None:
                raise PreconditionError(f"$.documents.maps: missing map {mid!r}")
            spaces = {doc.get("domain"): self.space(doc.get("domain", "")),
                      doc.get("codomain"): self.space(doc.get("codomain", ""))}
            self._maps[mid] = map_from_json(doc, spaces, f"$.documents.maps.{mid}")
        return self._maps[mid]


# ---------------------------------------------------------------- chains

_PROBLEM_MAPS = ("incl", "f0", "T", "incl_y", "T0", "j0")


def _problem_to_json(p: ExtensionProblem, store: Store) -> dict:
    doc = {"kind": p.kind, "tolerance": fmt(p.tolerance), "request": p.request}
    for key in _PROBLEM_MAPS:
        doc[key] = store.map(getattr(p, key))
    return doc


def _problem_from_json(doc: dict, load: Loader) -> ExtensionProblem:
    kw = {key: load.map(doc.get(key)) for key in _PROBLEM_MAPS}
    return ExtensionProblem(doc["kind"], tolerance=parse_rational(doc.get("tolerance", "0")),
                            request=doc.get("request", ""), **kw)


def _log_to_json(entry: LogEntry, store: Store) -> dict:
    return {"step": entry.step, "request": entry.request, "name": entry.name, "status": entry.status,
            "stage": entry.stage, "origin": entry.origin, "problem": _problem_to_json(entry.problem, store),
            "witness": store.map(entry.witness), "witness_y": store.map(entry.witness_y)}


def _log_from_json(doc: dict, load: Loader) -> LogEntry:
    return LogEntry(doc["step"], doc["request"], doc["name"], doc["status"],
                    _problem_from_json(doc["problem"], load), doc["stage"], load.map(doc["witness"]),
                    load.map(doc.get("witness_y")), doc.get("origin"))


def chain_manifest(chain, extra: dict | None = None) -> tuple[dict, Store]:
    store = Store()
    if isinstance(chain, Chain):
        man = {"kind": "space-chain", "seed": chain.seed,
               "stages": [store.space(s) for s in chain.stages],
               "links": [store.map(l) for l in chain.links],
               "stage_hashes": chain.stage_hashes()}
    else:
        man = {"kind": "operator-chain", "mode": chain.mode, "seed": chain.seed,
               "domains": [store.space(s) for s in chain.domains],
               "codomains": [store.space(s) for s in chain.codomains],
               "ops": [store.map(o) for o in chain.ops],
               "dlinks": [store.map(l) for l in chain.dlinks],
               "clinks": [store.map(l) for l in chain.clinks],
               "stage_hashes": chain.stage_hashes()}
    man["log"] = [_log_to_json(e, store) for e in chain.log]
    man["schema"] = SCHEMA_VERSION
    if extra:
        man.update(extra)
    man["hash"] = content_hash({k: v for k, v in man.items() if k != "hash"})
    return man, store


def chain_to_json(chain, extra: dict | None = None) -> dict:
    man, store = chain_manifest(chain, extra)
    return {"manifest": man, "documents": store.documents()}


def chain_from_json(doc: dict):
    if not isinstance(doc, dict) or "manifest" not in doc:
        raise PreconditionError("$: expected {'manifest', 'documents'}")
    man, load = doc["manifest"], Loader(doc.get("documents", {}))
    log = tuple(_log_from_json(e, load) for e in man.get("log", []))
    if man.get("kind") == "space-chain":
        return Chain(tuple(load.space(s) for s in man["stages"]), tuple(load.map(m) for m in man["links"]),
                     log, man.get("seed", 0))
    if man.get("kind") == "operator-chain":
        return OperatorChain(man["mode"], tuple(load.space(s) for s in man["domains"]),
                             tuple(load.space(s) for s in man["codomains"]),
                             tuple(load.map(m) for m in man["ops"]),
                             tuple(load.map(m) for m in man["dlinks"]),
                             tuple(load.map(m) for m in man["clinks"]), log, man.get("seed", 0))
    raise PreconditionError("$.manifest.kind: expected 'space-chain' or 'operator-chain'")


def write_documents(outdir: str, manifest: dict, documents: dict, name: str = "manifest.json") -> str:
    """One file per space and map plus a manifest."""
    os.makedirs(os.path.join(outdir, "spaces"), exist_ok=True)
    os.makedirs(os.path.join(outdir, "maps"), exist_ok=True)
    for sid, doc in documents.get("spaces", {}).items():
        with open(os.path.join(outdir, "spaces", f"{sid}.json"), "w") as fh:
            fh.write(dumps(doc))
    for mid, doc in documents.get("maps", {}).items():
        with open(os.path.join(outdir, "maps", f"{mid}.json"), "w") as fh:
            fh.write(dumps(doc))
    path = os.path.join(outdir, name)
    with open(path, "w") as fh:
        fh.write(dumps(manifest))
    return path


def read_documents(outdir: str, name: str = "manifest.json") -> dict:
    with open(os.path.join(outdir, name)) as fh:
        manifest = json.load(fh)
    docs = {"spaces": {}, "maps": {}}
    for kind in ("spaces", "maps"):
        d = os.path.join(outdir, kind)
        if os.path.isdir(d):
            for fn in sorted(os.listdir(d)):
                with open(os.path.join(d, fn)) as fh:
                    doc = json.load(fh)
                docs[kind][doc.get("id", fn[:-5])] = doc
    return {"manifest": manifest, "documents": docs}


def load_json(path: str):
    """A JSON file, or a document directory holding ``manifest.json``."""
    if os.path.isdir(path):
        return read_documents(path)
    with open(path) as fh:
        return json.load(fh)


# ------------------------------------------------------- inline documents


def inline_map_to_json(f: LinMap) -> dict:
    return {"domain": space_to_json(f.domain), "codomain": space_to_json(f.codomain),
            "matrix": matrix_to_json(f.matrix)}


def inline_map_from_json(doc: dict, path: str = "$", spaces: dict | None = None) -> LinMap:
    """A map whose domain and codomain are inline space documents (or ids in ``spaces``)."""
    if not isinstance(doc, dict):
        raise PreconditionError(f"{path}: expected an object")
    ends = []
    for key in ("domain", "codomain"):
        if key not in doc:
            raise PreconditionError(f"{path}: missing '{key}'")
        ref = doc[key]
        if isinstance(ref, str):
            if spaces is None or ref not in spaces:
                raise PreconditionError(f"{path}.{key}: unknown space id {ref!r}")
            ends.append(spaces[ref])
        else:
            ends.append(space_from_json(ref, f"{path}.{key}"))
    X, Y = ends
    if "matrix" not in doc:
        raise PreconditionError(f"{path}: missing 'matrix'")
    M = matrix_from_json(doc["matrix"], f"{path}.matrix")
    if len(M) != Y.dim or any(len(r) != X.dim for r in M):
        raise PreconditionError(f"{path}.matrix: shape must be {Y.dim} x {X.dim}")
    return LinMap(X, Y, M)


_REQUEST_MAPS = ("incl", "T", "incl_y", "T0", "anchor_map", "anchor_map_y")


def request_to_json(req) -> dict:
    doc = {"kind": req.kind, "name": req.name, "anchor": req.anchor, "random": req.random,
           "random_dim": req.random_dim}
    for key in _REQUEST_MAPS:
        m = getattr(req, key)
        if m is not None:
            doc[key] = inline_map_to_json(m)
    return doc


def request_from_json(doc: dict, path: str = "$"):
    from .fraisse import Request

    if not isinstance(doc, dict):
        raise PreconditionError(f"{path}: expected an object")
    kind = doc.get("kind")
    if kind not in ("space", "left", "two-sided"):
        raise PreconditionError(f"{path}.kind: expected 'space', 'left' or 'two-sided'")
    kw = {key: inline_map_from_json(doc[key], f"{path}.{key}") for key in _REQUEST_MAPS
          if doc.get(key) is not None}
    rnd = bool(doc.get("random", False))
    if not rnd:
        need = {"space": ("incl",), "left": ("incl", "T"), "two-sided": ("incl", "T", "incl_y")}[kind]
        for key in need:
            if key not in kw:
                raise PreconditionError(f"{path}.{key}: required for a {kind} request")
    return Request(kind, str(doc.get("name", "")), anchor=doc.get("anchor"), random=rnd,
                   random_dim=int(doc.get("random_dim", 2)), **kw)


def schedule_from_json(doc, path: str = "$") -> dict:
    """``{"catalog": [...], "random_every": n, "random_dim": n}`` or a bare list."""
    if isinstance(doc, list):
        doc = {"catalog": doc}
    if not isinstance(doc, dict):
        raise PreconditionError(f"{path}: expected a schedule object or list")
    cat = doc.get("catalog", [])
    if not isinstance(cat, list):
        raise PreconditionError(f"{path}.catalog: expected a list")
    return {"catalog": [request_from_json(r, f"{path}.catalog[{k}]") for k, r in enumerate(cat)],
            "random_every": int(doc.get("random_every", 0)), "random_dim": int(doc.get("random_dim", 2))}
