"""Exception types shared across the package."""


class CapacityError(MemoryError):
    """A requested table or enumeration exceeds the configured budget."""


class TableTooSmall(ValueError):
    """A representation table does not reach the range a computation needs."""


class PolicyError(ValueError):
    """A truncation parameter H violates the admissible range for a mode."""


class NotFound(LookupError):
    """A bounded search finished without a qualifying candidate."""
