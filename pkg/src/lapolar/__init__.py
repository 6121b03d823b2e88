"""Look-ahead successive-cancellation polar decoding toolkit."""

from .codec import PolarCode, encode, polar_transform
from .errors import ConfigError, ContractError, LapolarError, RangeError, SizeError, StateError

__all__ = [
    "PolarCode",
    "encode",
    "polar_transform",
    "LapolarError",
    "SizeError",
    "RangeError",
    "ContractError",
    "ConfigError",
    "StateError",
]
__version__ = "0.1.0"
