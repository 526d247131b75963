"""Exception hierarchy shared by every module."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModeSet(SimulationError, ValueError):
    pass


class InvalidSelection(SimulationError, ValueError):
    pass


class InvalidCoupling(SimulationError, ValueError):
    pass


class InvalidRate(SimulationError, ValueError):
    pass


class WrongCase(SimulationError, ValueError):
    """A case-specific analysis was called at the wrong relative phase."""


class InvalidGrid(SimulationError, ValueError):
    pass


class InvalidParams(SimulationError, ValueError):
    pass


class IoError(SimulationError, OSError):
    pass


class ConfigError(SimulationError, ValueError):
    """Schema or constraint violation in a run configuration.

    ``field`` is a dotted path into the JSON document, e.g.
    ``crystal.selected_index``.
    """

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
