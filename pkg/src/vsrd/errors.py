"""Exception hierarchy.

Two families: ``ValidationError`` for malformed inputs (configs, layouts,
geometry parameters) and ``NumericalError`` for failures inside a
computation. The CLI maps them to exit codes 2 and 3.
"""


class VsrdError(Exception):
    """Base class for all package errors."""


class ValidationError(VsrdError, ValueError):
    pass


class NumericalError(VsrdError, ArithmeticError):
    pass


# network
class InvalidNetwork(ValidationError):
    pass


class SingularNetwork(NumericalError):
    pass


class NonPositiveKernel(NumericalError):
    pass


class DisconnectedNetwork(NumericalError):
    pass


# geometry
class InvalidResolution(ValidationError):
    pass


class InvalidGeometry(ValidationError):
    pass


class UnknownBoundary(ValidationError, KeyError):
    pass


# discretization
class GeometryMismatch(ValidationError):
    pass


class LayoutMismatch(ValidationError):
    pass


class NonConservative(NumericalError):
    pass


# timestepper
class LinearSolveFailure(NumericalError):
    pass


# equilibrium
class KernelDimensionError(NumericalError):
    pass


class SignChangeError(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class ZeroMassError(NumericalError):
    pass


# entropy
class NonpositiveEquilibrium(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


# certifier
class EigensolveFailure(NumericalError):
    pass


class InfeasibleEpsilons(NumericalError):
    pass


class ConfigError(ValidationError):
    pass
