"""Multi-agent decision support for CNC blade machining.

Routes natural-language queries to deterministic analysis tools and
knowledge-graph retrieval, verifies candidates with a critic gate, and
surfaces provenance-linked compensation recommendations for human approval.
"""

from millwright.errors import (
    BackendFailure,
    ConfigurationError,
    IntegrityError,
    MillwrightError,
    ToolError,
)

__version__ = "0.1.0"

__all__ = [
    "MillwrightError",
    "ConfigurationError",
    "IntegrityError",
    "ToolError",
    "BackendFailure",
    "__version__",
]
