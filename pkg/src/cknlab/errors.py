"""Exception types shared across the package."""


class CKNError(Exception):
    """Base class for all errors raised by cknlab."""


class InvalidParams(CKNError, ValueError):
    """Parameter pair (a, b) outside the admissible region for an operation."""


class NoRoot(CKNError):
    """A root does not exist in the bracket required by the construction."""


class NoBracket(CKNError, ValueError):
    """Root-finder called with endpoints of equal sign."""


class NoConvergence(CKNError, RuntimeError):
    """An iterative numerical routine exhausted its budget."""


class BadTails(CKNError, ValueError):
    """Sampled endpoint behaviour contradicts the declared power-law tails."""


class FitDegenerate(CKNError, RuntimeError):
    """Expansion fit signal is below the numerical noise floor."""
