"""PiFF: compile predicate-based population models to IDTMC agent models,
minimise them by probabilistic bisimulation and analyse them."""

from __future__ import annotations

__version__ = "0.1.0"

from piff.errors import NotLumpableError, PiffError
from piff.frontend import load_model
from piff.idtmc import PolyMatrix, build_matrix, check_stochasticity, eval_matrix
from piff.kernels import BACKEND
from piff.poly import QuadForm, canonicalize, equal_on_simplex
from piff.translator import translate

__all__ = [
    "BACKEND", "NotLumpableError", "PiffError", "PolyMatrix", "QuadForm", "__version__",
    "build_matrix", "canonicalize", "check_stochasticity", "equal_on_simplex", "eval_matrix",
    "load_model", "translate",
]
