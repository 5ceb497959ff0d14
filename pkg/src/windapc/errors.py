"""Exception hierarchy shared by the model, controllers and simulator."""


class WindAPCError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(WindAPCError):
    """A physical model or controller could not produce a valid result."""


class RotorStopped(ModelError):
    """Rotor speed fell below the guard speed; aerodynamic torque is undefined."""


class CalibrationOutOfRange(ModelError):
    pass


class NonMonotonicCurve(ModelError):
    pass


class DimensionMismatch(WindAPCError, ValueError):
    pass


class NegativeReference(WindAPCError, ValueError):
    pass


class UnknownCase(WindAPCError, ValueError):
    pass


class WindowTooShort(WindAPCError, ValueError):
    pass


class ConfigError(WindAPCError, ValueError):
    """Invalid or inconsistent scenario configuration."""
