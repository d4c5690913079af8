class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class SolverError(RuntimeError):
    """An iterative solver failed; ``diagnostics`` carries the evidence."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
