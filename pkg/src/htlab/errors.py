"""Exception hierarchy shared by all htlab modules."""


class HtlabError(Exception):
    """Base class for every error raised by htlab."""


class FieldMismatch(HtlabError, ValueError):
    pass


class ZeroInverse(HtlabError, ZeroDivisionError):
    pass


class ValidationError(HtlabError, ValueError):
    """A configuration or input object violates a structural invariant.

    ``problems`` holds one human readable line per violation.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class AssumptionViolated(HtlabError, ValueError):
    """Sum of weights over S(x) is not 1 somewhere it is required."""

    def __init__(self, vertex, total):
        self.vertex = vertex
        self.total = total
        super().__init__(f"weights at vertex {tuple(vertex)} sum to {total}, not 1")


class ResourceLimit(HtlabError, MemoryError):
    """Materializing a tree level would exceed the vertex cap."""


class DepthExhausted(HtlabError):
    """A builder ran out of tree depth before finishing its schedule.

    ``partial`` carries whatever the builder produced so far, ``max_achievable``
    the number of stages that did fit.
    """

    def __init__(self, message, partial=None, max_achievable=None):
        super().__init__(message)
        self.partial = partial
        self.max_achievable = max_achievable
