"""Exception types raised across the package."""


class LapolarError(Exception):
    """Base class for every error raised by lapolar."""


class SizeError(LapolarError, ValueError):
    """A length or block size is outside what an operation supports."""


class RangeError(LapolarError, ValueError):
    """A scalar parameter (stage, M, L, n) is out of its admissible range."""


class ContractError(LapolarError, ValueError):
    """Inputs violate an operation's precondition, e.g. wrong frozen bits."""


class ConfigError(LapolarError, ValueError):
    """An architecture, channel or cost configuration is invalid."""


class StateError(LapolarError, RuntimeError):
    """A stateful circuit model was driven outside its valid cycle window."""
