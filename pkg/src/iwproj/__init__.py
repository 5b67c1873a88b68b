"""Inverse-Wishart credible sets for spectral projectors of a covariance matrix."""

from .errors import InvalidInputError, NumericFailureError

__all__ = ["InvalidInputError", "NumericFailureError"]
__version__ = "0.1.0"
