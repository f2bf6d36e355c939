"""Invariant morphological features of shape graphs and population statistics on them."""
__version__ = "0.1.0"

from .core import ShapeGraph, check, from_polylines, validate  # noqa: E402
from .features import FEATURE_NAMES, extract_features, feature_vector  # noqa: E402

__all__ = [
    "FEATURE_NAMES",
    "ShapeGraph",
    "__version__",
    "check",
    "extract_features",
    "feature_vector",
    "from_polylines",
    "validate",
]
