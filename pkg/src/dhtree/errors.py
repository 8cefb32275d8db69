"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers that only care about
"bad input vs. numerical failure" can catch the builtin.
"""


class DHTreeError(Exception):
    """Base class for all package errors."""


# -- network structure -------------------------------------------------------

class ValidationError(DHTreeError, ValueError):
    """Raw network data does not describe a valid single-pump tree."""


class CycleDetected(ValidationError):
    pass


class Disconnected(ValidationError):
    pass


class MissingPump(ValidationError):
    pass


class MultiplePumps(ValidationError):
    pass


class PumpNotRoot(ValidationError):
    pass


class NonLeafValve(ValidationError):
    pass


class LeafNotValve(ValidationError):
    pass


class RootIsLeaf(ValidationError):
    pass


class DuplicateEdge(ValidationError):
    pass


class SelfLoop(ValidationError):
    pass


class InvalidVertex(ValidationError):
    """Duplicate/negative ids, unknown edge endpoints, bad kind."""


class InvalidParameter(ValidationError):
    """Non-finite or out-of-range curve coefficient or pump pressure."""


class IsRoot(DHTreeError, ValueError):
    pass


# -- component curves --------------------------------------------------------

class NonFiniteInput(DHTreeError, ValueError):
    pass


class ClosedValve(DHTreeError, ValueError):
    """Valve opening u <= 0; the valve curve is singular there."""


class BracketExpansionFailed(DHTreeError, ArithmeticError):
    """Numeric inversion could not straddle the target value."""


# -- solvers -----------------------------------------------------------------

class ValveSettingsError(DHTreeError, ValueError):
    """Valve settings do not cover exactly the leaves of the network."""


class DimensionMismatch(DHTreeError, ValueError):
    pass


class SolverError(DHTreeError, ArithmeticError):
    """Numerical failure inside one of the equilibrium solvers."""


class ScalarSolveDiverged(SolverError):
    pass


class MaxIterations(SolverError):
    pass


class ResidualCheckFailed(SolverError):
    pass


class NewtonStalled(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


# -- scenarios and io --------------------------------------------------------

class GridTooLarge(DHTreeError, ValueError):
    pass


class ScenarioError(DHTreeError, ValueError):
    """Malformed sweep or group scenario."""


class CampaignFailed(DHTreeError, AssertionError):
    """A property campaign found a counterexample.

    ``report`` holds the full campaign report and ``bundle`` the serialized
    first failing case (network, pump pressures, valve settings).
    """

    def __init__(self, message, report=None, bundle=None):
        super().__init__(message)
        self.report = report
        self.bundle = bundle


class ParseError(DHTreeError, ValueError):
    pass


class NetworkSyntaxError(ParseError):
    """The network document is not well-formed JSON."""


class SchemaError(ParseError):
    pass
