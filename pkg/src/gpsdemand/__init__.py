"""GPS ping streams to multi-year zone-to-zone travel demand.

The package turns raw device location pings into origin-destination trip
matrices, fits zone-level trip generation regressions, calibrates a
gravity distribution model, and projects flows across study years.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
