"""clarifact: classify what an ambiguous claim leaves unsaid, ask for it, score it.

The toolkit turns an ambiguous factual statement into a category-targeted
clarifying question, routes that question to the user or to web retrieval,
folds the answer back into a veracity judgment on a {0, 0.5, 1} scale, and
evaluates the whole loop with abstention-aware metrics.
"""

from clarifact.domain import (
    MissingInfoCategory,
    PossibilityLabel,
    Route,
    RouteKind,
    RouteSource,
    Statement,
    VeracityScore,
    binarize_verdict,
    snap_score,
)
from clarifact.errors import ClarifactError

__version__ = "0.1.0"

__all__ = [
    "ClarifactError",
    "MissingInfoCategory",
    "PossibilityLabel",
    "Route",
    "RouteKind",
    "RouteSource",
    "Statement",
    "VeracityScore",
    "binarize_verdict",
    "snap_score",
    "__version__",
]
