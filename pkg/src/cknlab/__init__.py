"""Numerical stability theory for the two-dimensional CKN inequality.

Submodules: ``params`` (closed-form parameter algebra), ``numerics``
(quadrature, roots, scale maximization), ``profiles`` (bubbles, harmonic
expansions, weighted norms), ``spectrum`` (linearized eigenproblems),
``stability`` (deficit quotient and distance to the bubble manifold) and
``cli``.
"""

from .errors import (
    BadTails, CKNError, FitDegenerate, InvalidParams, NoBracket, NoConvergence, NoRoot,
)
from .params import DerivedParams, ParamPoint, Region, derive

__version__ = "0.1.0"

__all__ = [
    "BadTails", "CKNError", "FitDegenerate", "InvalidParams", "NoBracket", "NoConvergence",
    "NoRoot", "DerivedParams", "ParamPoint", "Region", "derive", "__version__",
]
