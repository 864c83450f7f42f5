"""
Exception classes shared by the scheduling engine.

Every class derives from the builtin exception a caller would already
catch (``ValueError`` for bad inputs, ``RuntimeError`` for failures of a
computation), so ``except ValueError`` keeps working around the library.
"""

__version__ = '0.1.0'
__author__ = 'Doctor Mokira'


class DomainError(ValueError):
    """A power, gain or noise value is outside its domain."""


class ProfileError(ValueError):
    """
    An energy harvesting profile breaks one of its invariants.

    :arg field: Name of the offending profile field, when known.
    :type field: str
    """
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class GridMismatchError(ValueError):
    """A schedule is not defined on the epoch grid of the profile."""


class InfeasibleError(ValueError):
    """A requested string endpoint cannot be reached under the staircase."""


class DegenerateRelayError(ValueError):
    """A relay policy was called with a squared S-R gain below one."""


class ContractError(RuntimeError):
    """An internal construction was called outside its precondition."""


class SolverError(RuntimeError):
    """
    The barrier method did not converge.

    :arg best_iterate: Last strictly feasible iterate.
    :arg best_objective: Epigraph objective at ``best_iterate``.
    """
    def __init__(self, message, best_iterate=None, best_objective=None):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.best_objective = best_objective


class ScenarioError(ValueError):
    """
    A scenario file could not be parsed or validated.

    :arg field: Dotted path of the offending field (``profile.instants``).
    :arg line: One-based line number in the source file, when known.
    :arg path: The file the scenario was read from.
    """
    def __init__(self, message, field=None, line=None, path=None):
        self.field = field
        self.line = line
        self.path = path
        location = ''
        if path:
            location += f"{path}"
        if line:
            location += f":{line}"
        if field:
            location += f" [{field}]"
        super().__init__(f"{location}: {message}" if location else message)
