"""Core value types: categories, scores, routes, statements.

Everything here is immutable. These types are shared by the dataset loader,
the resolution pipeline, the metrics layer and the HTTP front end, so they
deliberately carry no I/O and no model-specific behaviour.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional

from clarifact.errors import InvalidCategoryLetter, OutOfRange, UnmappedLabel


class PossibilityLabel(enum.Enum):
    """Annotator judgment of whether a claim can be checked at all.

    POSSIBLE claims are verifiable as stated, HARD ones need substantial
    missing context first, IMPOSSIBLE ones cannot be verified even in
    principle (pure opinion, nonsense, etc.).
    """

    POSSIBLE = "possible"
    HARD = "hard"
    IMPOSSIBLE = "impossible"

    @classmethod
    def parse(cls, raw: str) -> "PossibilityLabel":
        try:
            return cls(raw.strip().lower())
        except ValueError:
            raise UnmappedLabel(f"unknown possibility label: {raw!r}") from None


class MissingInfoCategory(enum.Enum):
    """The kind of information a claim is missing.

    Letters are stable identifiers used in prompts, model replies and
    annotation files. There is intentionally no D: the letter is reserved
    and rejected so that a stray D in a reply surfaces as an error instead
    of silently becoming "Other".
    """

    SPEAKER = "A"
    LOCATION = "B"
    SUBJECT = "C"
    EVIDENCE = "E"
    DATE = "F"
    OTHER = "G"

    @property
    def letter(self) -> str:
        return self.value

    @property
    def display_name(self) -> str:
        return _CATEGORY_NAMES[self]


_CATEGORY_NAMES: Mapping[MissingInfoCategory, str] = {
    MissingInfoCategory.SPEAKER: "Speaker or person",
    MissingInfoCategory.LOCATION: "Location",
    MissingInfoCategory.SUBJECT: "Textual context and subject specification",
    MissingInfoCategory.EVIDENCE: "Non-textual evidence",
    MissingInfoCategory.DATE: "Date and time period",
    MissingInfoCategory.OTHER: "Other",
}


def category_from_letter(letter: str) -> MissingInfoCategory:
    """Resolve a single category letter, case-insensitively.

    Raises InvalidCategoryLetter for anything that is not one of the six
    live letters — including D.
    """
    cleaned = letter.strip().upper()
    try:
        return MissingInfoCategory(cleaned)
    except ValueError:
        raise InvalidCategoryLetter(
            f"no missing-information category has letter {letter!r}"
        ) from None


class RouteKind(enum.Enum):
    """Where a clarifying question should be sent for an answer."""

    USER_QUERY = "user-query"
    WEB_RETRIEVAL = "web-retrieval"


class RouteSource(enum.Enum):
    """What produced a routing decision."""

    LLM_ROUTER = "llm-router"
    HEURISTIC_ROUTER = "heuristic-router"


@dataclass(frozen=True)
class Route:
    value: RouteKind
    source: RouteSource


@dataclass(frozen=True)
class GroundTruth:
    """Binary gold verdict plus the raw label it came from."""

    value: bool
    raw: Optional[str] = None


DEFAULT_VERDICT_MAP: Mapping[str, bool] = {
    "pants-fire": False,
    "false": False,
    "mostly-false": False,
    "half-true": True,
    "mostly-true": True,
    "true": True,
}


def binarize_verdict(
    raw: str, verdict_map: Optional[Mapping[str, bool]] = None
) -> GroundTruth:
    """Map a source rating label onto a binary gold verdict.

    Matching is case-insensitive on the stripped label. Labels absent from
    the map raise UnmappedLabel; silently guessing a polarity would poison
    every downstream metric.
    """
    mapping = DEFAULT_VERDICT_MAP if verdict_map is None else verdict_map
    key = raw.strip().lower()
    folded = {k.strip().lower(): v for k, v in mapping.items()}
    if key not in folded:
        raise UnmappedLabel(f"verdict label {raw!r} not in binarization map")
    return GroundTruth(value=folded[key], raw=raw)


@dataclass(frozen=True)
class VeracityScore:
    """A calibrated three-valued verdict.

    ``snapped`` is always one of {0.0, 0.5, 1.0}; 0.5 is an abstention.
    ``raw`` preserves the number the model actually produced and
    ``reply_text`` the full reply it was parsed from, for audit.
    """

    snapped: float
    raw: float
    reply_text: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.snapped not in (0.0, 0.5, 1.0):
            raise OutOfRange(f"snapped score must be 0, 0.5 or 1, got {self.snapped}")

    @property
    def is_abstention(self) -> bool:
        return self.snapped == 0.5

    @property
    def label(self) -> str:
        return {0.0: "False", 0.5: "Uncertain", 1.0: "True"}[self.snapped]


def snap_score(raw: float, reply_text: Optional[str] = None) -> VeracityScore:
    """Snap a raw in-range value to the nearest of {0, 0.5, 1}.

    The exact midpoints 0.25 and 0.75 snap toward 0.5: when a model's
    number is equidistant between a committed verdict and abstention, we
    keep the abstention rather than inventing confidence.
    """
    if not (0.0 <= raw <= 1.0):
        raise OutOfRange(f"veracity value {raw} outside [0, 1]")
    snapped = min(
        (0.0, 0.5, 1.0),
        key=lambda c: (abs(raw - c), 0 if c == 0.5 else 1),
    )
    return VeracityScore(snapped=snapped, raw=raw, reply_text=reply_text)


@dataclass(frozen=True)
class CategoryAnnotation:
    """One labeler's category call for one statement."""

    labeler_id: str
    category: MissingInfoCategory


@dataclass(frozen=True)
class Statement:
    """One claim under verification.

    ``verdict`` and ``article`` are optional because real corpora are
    ragged; pipeline steps that need them raise specific errors rather
    than assuming presence.
    """

    id: str
    text: str
    possibility: PossibilityLabel = PossibilityLabel.POSSIBLE
    verdict: Optional[GroundTruth] = None
    article: Optional[str] = None
    annotations: tuple[CategoryAnnotation, ...] = ()

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("statement text must be non-empty")
        if len(self.annotations) > 3:
            raise ValueError("a statement carries at most 3 category annotations")
