"""hyperorbit: dense two-generator matrix semigroups, certified and steered."""

from .precision import DEFAULT_DPS, default_dps, set_precision, working_dps

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_DPS",
    "default_dps",
    "set_precision",
    "working_dps",
    "__version__",
]
