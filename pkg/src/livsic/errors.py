"""Exception hierarchy.

Every domain failure derives from :class:`LivsicError`; the command-line
front end maps these to exit code 1.  :class:`ParseError` is separate and
maps to exit code 2.
"""

from __future__ import annotations


class LivsicError(Exception):
    """Base class for domain errors."""


class NotHermitian(LivsicError):
    """Input expected to be Hermitian is not, within tolerance."""


class ConvergenceFailure(LivsicError):
    """An iterative kernel failed to converge."""


class Singular(LivsicError):
    """Matrix is numerically singular (condition estimate above threshold)."""


class ShapeMismatch(LivsicError):
    """Operand shapes are inconsistent."""


class ChannelTooSmall(LivsicError):
    """The requested channel subspace does not contain ran(Im A)."""


class ExternalMismatch(LivsicError):
    """Two colligations do not share the same external signature."""


class NotInvariant(LivsicError):
    """A subspace in a chain is not invariant under the fundamental operator."""

    def __init__(self, index: int, residual: float):
        super().__init__(f"subspace {index} is not invariant (residual {residual:.3e})")
        self.index = index
        self.residual = residual


class NotSimple(LivsicError):
    """A colligation required to be simple has a nontrivial redundant part."""


class NotJContractive(LivsicError):
    """Matrix is not J-contractive within tolerance."""


class PoleAt(LivsicError):
    """Evaluation point coincides with a pole."""

    def __init__(self, pole: complex):
        super().__init__(f"evaluation point is a pole: {pole}")
        self.pole = pole


class NoConvergence(LivsicError):
    """Refinement did not satisfy the Cauchy criterion."""

    def __init__(self, levels: int, residual: float):
        super().__init__(f"no convergence after {levels} levels (residual {residual:.3e})")
        self.levels = levels
        self.residual = residual


class HypothesisViolated(LivsicError):
    """A uniform bound required by a convergence theorem fails."""


class ConstraintViolation(LivsicError):
    """Model data violate a structural constraint."""


class NotNondecreasing(LivsicError):
    """A function required to be non-decreasing decreases."""


class NotDissipative(LivsicError):
    """Im A has a negative eigenvalue beyond tolerance."""


class ParseError(Exception):
    """Malformed input file."""
