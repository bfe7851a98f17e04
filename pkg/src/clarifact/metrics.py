"""Abstention-aware evaluation metrics.

A 0.5 prediction is an abstention, and there are two defensible ways to
score it: AbstainAsError treats it as a miss for the gold class (false
negative there, false positive nowhere); ResolvedOnly drops abstentions
before scoring. Both are first-class and every report names the policy it
used — numbers without a policy are not comparable.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from clarifact.dataset import Corpus
from clarifact.domain import GroundTruth, MissingInfoCategory, RouteKind, VeracityScore
from clarifact.errors import (
    EmptyAfterFilter,
    EmptyInput,
    LengthMismatch,
    NoEligibleStatements,
    NoOverlap,
    UnknownStatementId,
)


class AbstainPolicy(enum.Enum):
    ABSTAIN_AS_ERROR = "abstain-as-error"
    RESOLVED_ONLY = "resolved-only"


DEFAULT_POLICY = AbstainPolicy.ABSTAIN_AS_ERROR


@dataclass(frozen=True)
class ClassStats:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if (p + r) else 0.0


def _pairs(
    preds: Sequence[VeracityScore],
    truths: Sequence[GroundTruth],
    policy: AbstainPolicy,
) -> list[tuple[VeracityScore, GroundTruth]]:
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    pairs = list(zip(preds, truths))
    if policy is AbstainPolicy.RESOLVED_ONLY:
        pairs = [(p, t) for p, t in pairs if not p.is_abstention]
    if not pairs:
        raise EmptyAfterFilter("no prediction/truth pairs left to score")
    return pairs


def _class_stats(
    pairs: Sequence[tuple[VeracityScore, GroundTruth]]
) -> dict[bool, ClassStats]:
    stats: dict[bool, ClassStats] = {}
    for cls in (False, True):
        tp = fp = fn = 0
        for pred, truth in pairs:
            predicted_cls = None if pred.is_abstention else (pred.snapped == 1.0)
            if predicted_cls is cls:
                if truth.value is cls:
                    tp += 1
                else:
                    fp += 1
            elif truth.value is cls:
                # Covers both the wrong committed class and an abstention:
                # either way the gold class was not predicted.
                fn += 1
        stats[cls] = ClassStats(tp=tp, fp=fp, fn=fn)
    return stats


def macro_f1(
    preds: Sequence[VeracityScore],
    truths: Sequence[GroundTruth],
    policy: AbstainPolicy = DEFAULT_POLICY,
) -> float:
    """Unweighted mean F1 over the True and False classes, as a percent.

    A class with zero precision+recall denominator contributes F1 = 0 — the
    conventional total definition, so aggregates never go undefined.
    """
    stats = _class_stats(_pairs(preds, truths, policy))
    return 100.0 * (stats[False].f1 + stats[True].f1) / 2.0


def accuracy(
    preds: Sequence[VeracityScore],
    truths: Sequence[GroundTruth],
    policy: AbstainPolicy = DEFAULT_POLICY,
) -> float:
    pairs = _pairs(preds, truths, policy)
    correct = sum(
        1
        for pred, truth in pairs
        if not pred.is_abstention and (pred.snapped == 1.0) == truth.value
    )
    return 100.0 * correct / len(pairs)


def resolution_rate(preds: Sequence[VeracityScore]) -> float:
    """Percent of predictions that commit to a verdict (are not 0.5)."""
    if not preds:
        raise EmptyInput("resolution rate over zero predictions")
    resolved = sum(1 for p in preds if not p.is_abstention)
    return 100.0 * resolved / len(preds)


@dataclass(frozen=True)
class MetricsReport:
    """One strategy's scores under one abstention policy.

    macro_f1 and accuracy are None in the degenerate case where the policy
    filter leaves nothing to score (every prediction abstained under
    ResolvedOnly); resolution is always defined.
    """

    macro_f1: Optional[float]
    accuracy: Optional[float]
    resolution: float
    n_total: int
    n_resolved: int
    n_skipped: int
    per_class: Mapping[str, ClassStats]
    policy: AbstainPolicy

    def __post_init__(self) -> None:
        if self.n_resolved > self.n_total:
            raise ValueError("resolved count exceeds total")
        for value in (self.macro_f1, self.accuracy, self.resolution):
            if value is not None and not (0.0 <= value <= 100.0):
                raise ValueError(f"percent {value} outside [0, 100]")
        expected = 100.0 * self.n_resolved / self.n_total if self.n_total else 0.0
        if abs(self.resolution - expected) > 1e-9:
            raise ValueError("resolution inconsistent with counts")

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "resolution": self.resolution,
            "n_total": self.n_total,
            "n_resolved": self.n_resolved,
            "n_skipped": self.n_skipped,
            "policy": self.policy.value,
            "per_class": {
                name: {
                    "tp": s.tp,
                    "fp": s.fp,
                    "fn": s.fn,
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                }
                for name, s in self.per_class.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def compute_report(
    preds: Sequence[VeracityScore],
    truths: Sequence[GroundTruth],
    policy: AbstainPolicy = DEFAULT_POLICY,
) -> MetricsReport:
    """Bundle macro F1, accuracy and resolution into one report.

    Unlike the bare operations, an all-abstention input under ResolvedOnly
    yields a report with None scores rather than an error, so batch runs
    always produce something inspectable.
    """
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    if not preds:
        raise EmptyInput("no predictions to report on")
    resolution = resolution_rate(preds)
    n_resolved = sum(1 for p in preds if not p.is_abstention)
    n_skipped = (
        len(preds) - n_resolved if policy is AbstainPolicy.RESOLVED_ONLY else 0
    )
    try:
        pairs = _pairs(preds, truths, policy)
    except EmptyAfterFilter:
        return MetricsReport(
            macro_f1=None,
            accuracy=None,
            resolution=resolution,
            n_total=len(preds),
            n_resolved=n_resolved,
            n_skipped=n_skipped,
            per_class={},
            policy=policy,
        )
    stats = _class_stats(pairs)
    return MetricsReport(
        macro_f1=100.0 * (stats[False].f1 + stats[True].f1) / 2.0,
        accuracy=accuracy(preds, truths, policy),
        resolution=resolution,
        n_total=len(preds),
        n_resolved=n_resolved,
        n_skipped=n_skipped,
        per_class={"False": stats[False], "True": stats[True]},
        policy=policy,
    )


def render_table(reports: Mapping[str, MetricsReport]) -> str:
    """Aligned three-column text table over named strategies, 2-decimal percents."""
    headers = ("Strategy", "Macro F1 (%)", "Accuracy (%)", "Resolution (%)")

    def fmt(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.2f}"

    rows = [
        (name, fmt(r.macro_f1), fmt(r.accuracy), fmt(r.resolution))
        for name, r in reports.items()
    ]
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in rows)) if rows else len(headers[i])
        for i in range(4)
    ]

    def line(cells: tuple[str, str, str, str]) -> str:
        first = cells[0].ljust(widths[0])
        rest = "  ".join(cells[i].rjust(widths[i]) for i in range(1, 4))
        return f"{first}  {rest}".rstrip()

    out = [line(headers), line(tuple("-" * w for w in widths))]
    out.extend(line(row) for row in rows)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Category accuracy
# ---------------------------------------------------------------------------

class AgreementFilter(enum.Enum):
    MATCH_ANY = "match-any"
    TWO_OF_THREE = "two-of-three"
    UNANIMOUS = "unanimous"


@dataclass(frozen=True)
class CategoryAccuracyReport:
    overall: float
    per_category: Mapping[MissingInfoCategory, float]
    n_eligible: int
    n_hits: int
    filter: AgreementFilter


def _modal_letter(categories: Sequence[MissingInfoCategory]) -> MissingInfoCategory:
    counts = Counter(categories)
    best = max(counts.values())
    # Lexicographically smallest letter breaks ties deterministically.
    return min((c for c, n in counts.items() if n == best), key=lambda c: c.letter)


def category_accuracy(
    preds: Mapping[str, MissingInfoCategory],
    corpus: Corpus,
    agreement: AgreementFilter = AgreementFilter.MATCH_ANY,
) -> CategoryAccuracyReport:
    """Score category predictions against multi-labeler annotations.

    MatchAny counts a hit when the prediction equals any labeler's letter.
    TwoOfThree keeps only statements where some letter got >= 2 votes and
    scores against that majority letter; Unanimous keeps statements with
    >= 2 annotations all agreeing. The per-category breakdown keys each
    statement by its modal annotation letter (the agreed letter under the
    stricter filters).
    """
    hits = 0
    eligible = 0
    per_cat_hits: Counter = Counter()
    per_cat_totals: Counter = Counter()

    for statement_id, predicted in preds.items():
        statement = corpus.get(statement_id)
        if statement is None:
            raise UnknownStatementId(f"prediction for unknown statement {statement_id!r}")
        labels = [a.category for a in statement.annotations]
        if not labels:
            continue

        if agreement is AgreementFilter.MATCH_ANY:
            key = _modal_letter(labels)
            hit = predicted in labels
        elif agreement is AgreementFilter.TWO_OF_THREE:
            counts = Counter(labels)
            majority = [c for c, n in counts.items() if n >= 2]
            if not majority:
                continue
            key = min(majority, key=lambda c: c.letter)
            hit = predicted is key
        else:
            if len(labels) < 2 or len(set(labels)) != 1:
                continue
            key = labels[0]
            hit = predicted is key

        eligible += 1
        per_cat_totals[key] += 1
        if hit:
            hits += 1
            per_cat_hits[key] += 1

    if eligible == 0:
        raise NoEligibleStatements(
            f"no statements meet the {agreement.value} agreement filter"
        )
    per_category = {
        cat: 100.0 * per_cat_hits[cat] / total
        for cat, total in sorted(per_cat_totals.items(), key=lambda kv: kv[0].letter)
    }
    return CategoryAccuracyReport(
        overall=100.0 * hits / eligible,
        per_category=per_category,
        n_eligible=eligible,
        n_hits=hits,
        filter=agreement,
    )


# ---------------------------------------------------------------------------
# Routing share and agreement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoutingShares:
    per_category: Mapping[MissingInfoCategory, float]
    overall: float
    n_records: int
    per_category_counts: Mapping[MissingInfoCategory, tuple[int, int]]


def routing_share(
    routed: Iterable[tuple[MissingInfoCategory, RouteKind]]
) -> RoutingShares:
    """Percent of questions routed to the user, per category and overall.

    Takes (primary category, route) pairs so callers can feed it from run
    records or from anywhere else. Categories with no records are simply
    absent; an empty input yields an empty report with overall 0.0.
    """
    user: Counter = Counter()
    totals: Counter = Counter()
    for category, route in routed:
        totals[category] += 1
        if route is RouteKind.USER_QUERY:
            user[category] += 1

    n_records = sum(totals.values())
    per_category = {
        cat: 100.0 * user[cat] / total
        for cat, total in sorted(totals.items(), key=lambda kv: kv[0].letter)
    }
    overall = 100.0 * sum(user.values()) / n_records if n_records else 0.0
    counts = {
        cat: (user[cat], total)
        for cat, total in sorted(totals.items(), key=lambda kv: kv[0].letter)
    }
    return RoutingShares(
        per_category=per_category,
        overall=overall,
        n_records=n_records,
        per_category_counts=counts,
    )


def pairwise_agreement(labels_a: Mapping[str, object], labels_b: Mapping[str, object]) -> float:
    """Percent of overlapping ids on which two labelers agree."""
    overlap = labels_a.keys() & labels_b.keys()
    if not overlap:
        raise NoOverlap("labelers share no statement ids")
    matches = sum(1 for key in overlap if labels_a[key] == labels_b[key])
    return 100.0 * matches / len(overlap)
