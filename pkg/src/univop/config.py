from __future__ import annotations

import contextlib
from contextvars import ContextVar
from dataclasses import dataclass, field
from fractions import Fraction

DEFAULT_DIM_CAP = 8

_dim_cap: ContextVar[int] = ContextVar("dim_cap", default=DEFAULT_DIM_CAP)


def dim_cap() -> int:
    return _dim_cap.get()


@contextlib.contextmanager
def dimension_cap(n: int):
    """Temporarily change the vertex-enumeration dimension cap."""
    if n < 1:
        raise ValueError("dimension cap must be positive")
    token = _dim_cap.set(n)
    try:
        yield n
    finally:
        _dim_cap.reset(token)


@dataclass
class Config:
    dim_cap: int = DEFAULT_DIM_CAP
    eps: Fraction = Fraction(1, 4)
    seed: int = 0
    out: str = "out"
    verbosity: int = 0
    extra_seeds: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim_cap < 1:
            raise ValueError("dim_cap must be positive")
