"""Run records: what one strategy did to one statement, and to a whole corpus.

These types sit between the pipeline (which produces them) and the run store
(which persists them), so they live in their own module. Serialization is
stable — fixed key order, no timestamps, no floats beyond the scores — so a
deterministic backend yields byte-identical record files across reruns.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from clarifact.domain import (
    MissingInfoCategory,
    Route,
    RouteKind,
    RouteSource,
    VeracityScore,
    category_from_letter,
)
from clarifact.metrics import MetricsReport


class Strategy(enum.Enum):
    BASELINE_ENABLED = "baseline-enabled"
    BASELINE_DISABLED = "baseline-disabled"
    GENERIC_QA = "generic-qa"
    CATEGORY_QA = "category-qa"
    CATEGORY_QA_DISABLED = "category-qa-disabled"
    FILL_BLANK = "fill-blank"
    ORACLE = "oracle"

    @classmethod
    def parse(cls, raw: str) -> "Strategy":
        try:
            return cls(raw.strip().lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown strategy {raw!r}; expected one of: {names}") from None


#: Strategies whose per-statement work reads the fact-check article.
ARTICLE_REQUIRED = frozenset(
    {
        Strategy.GENERIC_QA,
        Strategy.CATEGORY_QA,
        Strategy.CATEGORY_QA_DISABLED,
        Strategy.FILL_BLANK,
        Strategy.ORACLE,
    }
)

#: Strategies that ask a clarifying question and consume an answer.
QA_STRATEGIES = frozenset(
    {Strategy.GENERIC_QA, Strategy.CATEGORY_QA, Strategy.CATEGORY_QA_DISABLED}
)


@dataclass(frozen=True)
class TranscriptEntry:
    """One completion in a record: request digest plus the raw reply."""

    digest: str
    reply: str

    def to_dict(self) -> dict:
        return {"digest": self.digest, "reply": self.reply}


@dataclass(frozen=True)
class StatementRecord:
    statement_id: str
    strategy: Strategy
    score: VeracityScore
    question: Optional[str] = None
    question_categories: Optional[tuple[MissingInfoCategory, ...]] = None
    route: Optional[Route] = None
    answer: Optional[str] = None
    context_block: Optional[str] = None
    token_lengths: Optional[tuple[int, int]] = None
    transcript: tuple[TranscriptEntry, ...] = ()

    def __post_init__(self) -> None:
        if self.strategy in QA_STRATEGIES:
            if self.question is None:
                raise ValueError(f"{self.strategy.value} record must carry a question")
        if self.strategy in (Strategy.BASELINE_ENABLED, Strategy.BASELINE_DISABLED):
            if self.question is not None or self.answer is not None:
                raise ValueError("baseline records carry no question or answer")
        if self.strategy is Strategy.CATEGORY_QA or self.strategy is Strategy.CATEGORY_QA_DISABLED:
            if not self.question_categories:
                raise ValueError("category-based records must carry categories")

    def to_dict(self) -> dict:
        return {
            "statement_id": self.statement_id,
            "strategy": self.strategy.value,
            "score": {
                "snapped": self.score.snapped,
                "raw": self.score.raw,
                "reply_text": self.score.reply_text,
            },
            "question": self.question,
            "question_categories": (
                None
                if self.question_categories is None
                else [c.letter for c in self.question_categories]
            ),
            "route": (
                None
                if self.route is None
                else {"value": self.route.value.value, "source": self.route.source.value}
            ),
            "answer": self.answer,
            "context_block": self.context_block,
            "token_lengths": (
                None if self.token_lengths is None else list(self.token_lengths)
            ),
            "transcript": [t.to_dict() for t in self.transcript],
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, raw: Mapping) -> "StatementRecord":
        score = raw["score"]
        route = raw.get("route")
        categories = raw.get("question_categories")
        token_lengths = raw.get("token_lengths")
        return cls(
            statement_id=raw["statement_id"],
            strategy=Strategy(raw["strategy"]),
            score=VeracityScore(
                snapped=float(score["snapped"]),
                raw=float(score["raw"]),
                reply_text=score.get("reply_text"),
            ),
            question=raw.get("question"),
            question_categories=(
                None
                if categories is None
                else tuple(category_from_letter(letter) for letter in categories)
            ),
            route=(
                None
                if route is None
                else Route(
                    value=RouteKind(route["value"]),
                    source=RouteSource(route["source"]),
                )
            ),
            answer=raw.get("answer"),
            context_block=raw.get("context_block"),
            token_lengths=(
                None if token_lengths is None else (int(token_lengths[0]), int(token_lengths[1]))
            ),
            transcript=tuple(
                TranscriptEntry(digest=t["digest"], reply=t["reply"])
                for t in raw.get("transcript", [])
            ),
        )


@dataclass(frozen=True)
class SkipEntry:
    statement_id: str
    reason: str

    def to_dict(self) -> dict:
        return {"statement_id": self.statement_id, "reason": self.reason}


@dataclass(frozen=True)
class FailureEntry:
    statement_id: str
    error: str

    def to_dict(self) -> dict:
        return {"statement_id": self.statement_id, "error": self.error}


def run_id_for(strategy: Strategy, corpus_digest: str, config: Mapping) -> str:
    """Content-addressed run identity.

    Keys that cannot change the produced records (worker width, storage
    location, resume flag) are excluded, so reruns and resumed runs of the
    same experiment land in the same run directory.
    """
    volatile = {"workers", "store_root", "resume"}
    stable = {k: v for k, v in config.items() if k not in volatile}
    blob = "|".join(
        [strategy.value, corpus_digest, json.dumps(stable, sort_keys=True, default=str)]
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class RunResult:
    run_id: str
    strategy: Strategy
    corpus_digest: str
    records: tuple[StatementRecord, ...]
    skipped: tuple[SkipEntry, ...] = ()
    failed: tuple[FailureEntry, ...] = ()
    metrics: Optional[MetricsReport] = None
    config: Mapping = field(default_factory=dict)

    def routing_pairs(self) -> list[tuple[MissingInfoCategory, RouteKind]]:
        """(primary category, route) for records that carry both."""
        return [
            (record.question_categories[0], record.route.value)
            for record in self.records
            if record.question_categories and record.route is not None
        ]

    def summary_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "strategy": self.strategy.value,
            "corpus_digest": self.corpus_digest,
            "n_records": len(self.records),
            "n_skipped": len(self.skipped),
            "n_failed": len(self.failed),
            "skipped": [s.to_dict() for s in self.skipped],
            "failed": [f.to_dict() for f in self.failed],
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "config": dict(self.config),
        }
