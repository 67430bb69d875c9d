"""Exception hierarchy shared across the package."""


class GraphError(ValueError):
    """Invalid graph or tree input."""


class GraphParseError(GraphError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DisconnectedGraphError(GraphError):
    pass


class SolverError(RuntimeError):
    """Iterative Laplacian solve did not reach the requested residual."""


class SamplingError(RuntimeError):
    """A randomized subroutine exhausted its retry budget."""


class EnumerationLimitError(ValueError):
    pass


class MalformedLineError(GraphParseError):
    pass


class SelfLoopError(GraphParseError):
    pass


class NegativeWeightError(GraphParseError):
    pass


class VertexRangeError(GraphParseError):
    pass


class DuplicateEdgeError(GraphParseError):
    pass
