"""GHZ-state preparation in a linear ion trap: spin model, bichromatic trap
model, Monte Carlo wave-function bath and comparison utilities."""

from .errors import ConfigError, NumericalError

__all__ = ["ConfigError", "NumericalError"]
__version__ = "0.1.0"
