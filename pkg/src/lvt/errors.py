"""Exception hierarchy shared by all lvt modules."""


class LvtError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(LvtError, ValueError):
    """An argument violates a documented precondition."""


class InvalidModelError(LvtError, ValueError):
    """A hidden-variable model fails its own validity requirements."""


class ConstructionFailureError(LvtError, RuntimeError):
    """Repeated random draws could not produce a usable construction."""


class ResourceLimitError(LvtError, RuntimeError):
    """The request exceeds a hard size or run-time cap."""
