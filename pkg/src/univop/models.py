"""Request and response bodies of the HTTP service."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .linalg import frac

Rational = str
Vector = list[Rational]
Matrix = list[Vector]


def _check_rational(v):
    if isinstance(v, bool) or not isinstance(v, (str, int)):
        raise ValueError("rationals are strings like \"p/q\"")
    try:
        frac(v)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a rational: {v!r}") from None
    return str(v)


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpaceDoc(Strict):
    id: Optional[str] = None
    dim: int = Field(ge=0)
    facets: Matrix
    labels: Optional[list[str]] = None
    vertices: Optional[Matrix] = None

    @field_validator("facets", "vertices", mode="before")
    @classmethod
    def _rationals(cls, M):
        if M is None:
            return M
        if not isinstance(M, list) or not all(isinstance(r, list) for r in M):
            raise ValueError("expected a list of rows")
        return [[_check_rational(x) for x in r] for r in M]


class MapDoc(Strict):
    domain: SpaceDoc
    codomain: SpaceDoc
    matrix: Matrix

    @field_validator("matrix", mode="before")
    @classmethod
    def _rationals(cls, M):
        if not isinstance(M, list) or not all(isinstance(r, list) for r in M):
            raise ValueError("expected a list of rows")
        return [[_check_rational(x) for x in r] for r in M]


class Job(Strict):
    dim_cap: Optional[int] = Field(default=None, ge=1)


class EpsJob(Job):
    eps: Rational = "0"

    @field_validator("eps", mode="before")
    @classmethod
    def _eps(cls, v):
        return _check_rational(v)


# ------------------------------------------------------------- requests


class SpaceEvalRequest(Job):
    space: SpaceDoc
    vectors: list[Vector]


class SpaceSumRequest(Job):
    left: SpaceDoc
    right: SpaceDoc
    kind: Literal["l1", "max"] = "l1"


class SpaceRandomRequest(Job):
    dim: int = Field(ge=0)
    facets: int = Field(ge=0)
    seed: int = 0


class ConvertVrepRequest(Job):
    dim: int = Field(ge=0)
    vertices: Matrix


class ConvertHrepRequest(Job):
    space: SpaceDoc


class OpNormRequest(Job):
    map: MapDoc
    method: Literal["vertex", "lp"] = "vertex"


class OpCertifyRequest(EpsJob):
    map: MapDoc
    method: Literal["vertex", "lp"] = "vertex"


class OpDistanceRequest(Job):
    f: MapDoc
    g: MapDoc


class AmalgamEpsRequest(EpsJob):
    map: MapDoc
    pi: Optional[MapDoc] = None
    rho: Optional[MapDoc] = None


class AmalgamExactRequest(Job):
    g: MapDoc
    h: MapDoc


class AmalgamCorrectRequest(EpsJob):
    P: MapDoc
    r: MapDoc
    e: MapDoc
    T: MapDoc
    f: MapDoc
    incl: MapDoc
    A: Optional[Matrix] = None
    delta: Optional[Rational] = None


class ScheduleDoc(Strict):
    catalog: list[dict[str, Any]] = []
    random_every: int = Field(default=0, ge=0)
    random_dim: int = Field(default=2, ge=1)


class ChainBuildRequest(Job):
    schedule: ScheduleDoc = ScheduleDoc()
    steps: int = Field(ge=0)
    seed: int = 0


class ChainBuildLeftRequest(ChainBuildRequest):
    S: dict[str, Any]  # a space document or a chain document


class ChainCheckRequest(EpsJob):
    chain: dict[str, Any]
    battery: Optional[ScheduleDoc] = None


class BackforthRequest(Job):
    A: dict[str, Any]
    B: Optional[dict[str, Any]] = None
    steps: int = Field(ge=0)
    glue: Literal["auto", "eps"] = "auto"
    seed_map: Optional[MapDoc] = None  # homogeneity mode: h: X0 -> A.top
    seed_embedding: Optional[MapDoc] = None  # emb0: X0 -> A.top


class GamePlayRequest(Job):
    rounds: int = Field(ge=1)
    eve: Literal["random", "script"] = "random"
    seed: int = 0
    script: Optional[list[dict[str, Any]]] = None
    mode: Literal["exact", "perturb"] = "exact"
    eve_dim_cap: int = Field(default=4, ge=1)
    adam_dim_cap: int = Field(default=6, ge=1)


class GameVerifyRequest(Job):
    documents: list[dict[str, Any]]


# ------------------------------------------------------------ responses


class Result(BaseModel):
    ok: bool = True


class NormsResponse(Result):
    norms: list[Rational]


class SpaceResponse(Result):
    space: dict[str, Any]


class VerticesResponse(Result):
    dim: int
    vertices: Matrix


class NormResponse(Result):
    norm: Rational
    witness: Optional[Vector] = None


class CertifyResponse(Result):
    certificate: dict[str, Any]


class DistanceResponse(Result):
    distance: Rational


class AmalgamResponse(Result):
    Z: dict[str, Any]
    i: dict[str, Any]
    j: dict[str, Any]
    t: Optional[dict[str, Any]] = None
    eps: Rational
    convention: str


class MapResponse(Result):
    map: dict[str, Any]
    certificate: Optional[dict[str, Any]] = None


class ChainResponse(Result):
    manifest: dict[str, Any]
    documents: dict[str, Any]


class CheckResponse(Result):
    errors: list[str] = []
    verdicts: list[dict[str, Any]] = []


class BackforthResponse(Result):
    ledger: list[dict[str, Any]]
    maps: list[dict[str, Any]]
    hash: str


class GamePlayResponse(Result):
    transcript: str  # JSON lines
    report: dict[str, Any]


class ReportResponse(Result):
    violations: list[dict[str, Any]] = []
    bounds: list[dict[str, Any]] = []


class ErrorResponse(BaseModel):
    ok: bool = False
    error: str
    message: str
    locations: list[str] = []
    witness: Optional[Vector] = None
