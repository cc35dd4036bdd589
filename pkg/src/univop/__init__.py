"""Exact rational workbench for polyhedral normed spaces, operators between
them, amalgamation, Fraisse-style chains and the Eve/Adam operator game."""
from .config import DEFAULT_DIM_CAP, Config, dim_cap, dimension_cap
from .errors import (DegenerateError, DimensionError, PreconditionError, UnboundedError, UnivopError,
                     VerificationError)
from .operator import LinMap, certify_embedding, compose, distance, identity, op_norm
from .space import Space, direct_sum_l1, direct_sum_max, make_space, reals, sup_space, zero_space

__version__ = "0.1.0"
