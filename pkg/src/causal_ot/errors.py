"""Exception types raised by the library.

Every error derives from ``CausalOTError`` so callers (and the CLI) can catch
one base class. Most also derive from a builtin so ordinary ``except
ValueError`` code keeps working.
"""

from __future__ import annotations


class CausalOTError(Exception):
    """Base class for library errors."""


class InputError(CausalOTError, ValueError):
    """Malformed input file or argument. Carries an optional location."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None, column: int | None = None):
        self.path = path
        self.line = line
        self.column = column
        where = ""
        if path is not None:
            where = str(path)
            if line is not None:
                where += f":{line}"
                if column is not None:
                    where += f":{column}"
            where += ": "
        super().__init__(where + message)


class IndexOutOfRange(CausalOTError, IndexError):
    pass


class NonChronologicalPair(CausalOTError, ValueError):
    pass


class NotAGeodesic(CausalOTError, ValueError):
    pass


class ZeroCostPlan(CausalOTError, ValueError):
    pass


class InfeasibleMarginals(CausalOTError, ValueError):
    pass


class NoChronologicalOptimum(CausalOTError, ValueError):
    pass


class NoDiscreteGeodesic(CausalOTError, ValueError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        self.pair = pair
        super().__init__(message)


class DegenerateProblem(CausalOTError, ValueError):
    pass


class DensityUndefined(CausalOTError, ValueError):
    pass


class NotInChronologicalFuture(CausalOTError, ValueError):
    pass


class NotSteep(CausalOTError, ValueError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        self.pair = pair
        super().__init__(message)


class NotTotallyOrdered(CausalOTError, ValueError):
    pass


class ZeroMassTransportSet(CausalOTError, ValueError):
    pass


class ChronologyViolated(CausalOTError, ValueError):
    pass


class ZeroFunction(CausalOTError, ValueError):
    pass


class InsufficientReach(CausalOTError, ValueError):
    pass


class EmptyGeodesicFamily(CausalOTError, ValueError):
    pass


class NotStarShaped(CausalOTError, ValueError):
    def __init__(self, message: str, witness: tuple[int, int] | None = None):
        self.witness = witness
        super().__init__(message)


class VacuousCriterion(CausalOTError, ValueError):
    pass


class NoRaysThroughSet(CausalOTError, ValueError):
    pass
