"""Exception hierarchy.

Every error that points at a concrete offending input carries it in
``witness`` so callers (and the CLI) can print it.
"""

from __future__ import annotations


class ZContractError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# domains / metrics
class EmptyDomain(ZContractError):
    pass


class DegenerateInterval(ZContractError):
    pass


class DuplicatePoint(ZContractError):
    pass


class DomainTooLarge(ZContractError):
    pass


class PointNotInDomain(ZContractError):
    pass


class NonFiniteDistance(ZContractError):
    pass


# simulation functions
class InvalidParameter(ZContractError):
    pass


class InvalidInnerFunction(ZContractError):
    pass


class QuadratureFailure(ZContractError):
    pass


class NonFiniteValue(ZContractError):
    pass


# iteration
class NonFinitePoint(ZContractError):
    def __init__(self, message: str, witness=None, trace=None):
        super().__init__(message, witness)
        self.trace = trace


class WindowTooLarge(ZContractError):
    pass


# expressions
class ExprError(ZContractError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, expected: str = ""):
        super().__init__(f"{message} at position {position}", witness=position)
        self.position = position
        self.expected = expected


class UnknownVariable(ExprError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown variable {name!r} at position {position}", witness=position)
        self.name = name
        self.position = position


class ArityError(ExprError):
    def __init__(self, name: str, expected: int, got: int, position: int):
        super().__init__(
            f"{name}() takes {expected} argument(s), got {got} at position {position}",
            witness=position,
        )
        self.position = position


class DomainError(ExprError):
    """Evaluation left the real domain: log of a nonpositive, x/0, overflow."""


class MissingBinding(ExprError):
    pass


class ConfigError(ZContractError):
    pass
