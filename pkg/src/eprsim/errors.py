"""Exception types shared across the package.

Precondition failures subclass :class:`PreconditionError` so the CLI can map
them to a distinct exit status.
"""


class PreconditionError(ValueError):
    """An input violates a documented precondition."""


class CutoffError(PreconditionError):
    """Fock truncation too small for the requested coherent amplitude."""


class QuadratureError(RuntimeError):
    """Half-line overlap quadrature failed to converge."""


class MemoryBoundError(PreconditionError):
    """Requested qubit register exceeds the dense state-vector budget."""


class SubspaceError(PreconditionError):
    """A site's reduced state leaves its two-dimensional pointer subspace."""


class VariableBudgetError(PreconditionError):
    """Brute-force enumeration requested over too many variables."""


class IntegratorError(RuntimeError):
    """Time evolution lost unitarity beyond tolerance."""


class ScenarioError(PreconditionError):
    """Malformed scenario script. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
