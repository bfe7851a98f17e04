"""Corpus loading, filtering and annotation attachment.

Corpora arrive as CSV or JSONL with configurable column names. Loading is
strict by default (first bad row aborts); lenient mode collects row errors
and keeps going, optionally writing a machine-readable error report.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from clarifact.domain import (
    CategoryAnnotation,
    PossibilityLabel,
    Statement,
    binarize_verdict,
    category_from_letter,
)
from clarifact.errors import (
    DuplicateId,
    DuplicateLabeler,
    FileUnreadable,
    InvalidCategoryLetter,
    MalformedRow,
    UnknownStatementId,
    UnmappedLabel,
)

log = logging.getLogger(__name__)


class CorpusFormat(enum.Enum):
    CSV = "csv"
    JSONL = "jsonl"


@dataclass(frozen=True)
class SchemaConfig:
    """Column mapping from a source file onto Statement fields.

    A column set to None means the corpus simply does not carry that field;
    possibility then defaults to POSSIBLE on every row.
    """

    id_column: str = "id"
    text_column: str = "statement"
    possibility_column: Optional[str] = "possibility"
    verdict_column: Optional[str] = "verdict"
    article_column: Optional[str] = None
    format: CorpusFormat = CorpusFormat.CSV
    verdict_map: Optional[Mapping[str, bool]] = None

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SchemaConfig":
        kwargs = dict(raw)
        if "format" in kwargs:
            kwargs["format"] = CorpusFormat(str(kwargs["format"]).lower())
        return cls(**kwargs)


@dataclass(frozen=True)
class RowError:
    row: int
    reason: str


@dataclass(frozen=True)
class Corpus:
    """An ordered, duplicate-free collection of statements.

    Equality and the content digest depend only on the statements, so two
    loads of the same data compare equal regardless of where they came from
    or what rows were rejected along the way.
    """

    statements: tuple[Statement, ...]
    source_meta: Mapping[str, str] = field(default_factory=dict, compare=False)
    rejects: tuple[RowError, ...] = field(default=(), compare=False)

    def __iter__(self) -> Iterator[Statement]:
        return iter(self.statements)

    def __len__(self) -> int:
        return len(self.statements)

    def get(self, statement_id: str) -> Optional[Statement]:
        return self._by_id().get(statement_id)

    def _by_id(self) -> Mapping[str, Statement]:
        return {s.id: s for s in self.statements}

    def digest(self) -> str:
        """Content hash over ids, texts and gold verdicts, order-sensitive."""
        h = hashlib.sha256()
        for s in self.statements:
            verdict = "" if s.verdict is None else str(int(s.verdict.value))
            h.update(f"{s.id}\x1f{s.text}\x1f{verdict}\x1e".encode("utf-8"))
        return h.hexdigest()


def _decode_rows(path: Path) -> str:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        # Report the first undecodable row rather than a byte offset.
        row = data[: exc.start].count(b"\n") + 1
        raise MalformedRow(row, f"invalid UTF-8: {exc.reason}") from exc


def _row_to_statement(raw: Mapping[str, object], schema: SchemaConfig) -> Statement:
    def cell(column: str) -> str:
        value = raw.get(column)
        if value is None:
            raise KeyError(column)
        return str(value)

    try:
        statement_id = cell(schema.id_column).strip()
        text = cell(schema.text_column)
    except KeyError as exc:
        raise ValueError(f"missing column {exc.args[0]!r}") from None
    if not statement_id:
        raise ValueError("empty statement id")
    if not text.strip():
        raise ValueError("empty statement text")

    possibility = PossibilityLabel.POSSIBLE
    if schema.possibility_column is not None:
        raw_possibility = raw.get(schema.possibility_column)
        if raw_possibility is None or not str(raw_possibility).strip():
            raise ValueError(f"missing column {schema.possibility_column!r}")
        possibility = PossibilityLabel.parse(str(raw_possibility))

    verdict = None
    if schema.verdict_column is not None:
        raw_verdict = raw.get(schema.verdict_column)
        if raw_verdict is not None and str(raw_verdict).strip():
            verdict = binarize_verdict(str(raw_verdict), schema.verdict_map)

    article = None
    if schema.article_column is not None:
        raw_article = raw.get(schema.article_column)
        if raw_article is not None and str(raw_article).strip():
            article = str(raw_article)

    return Statement(
        id=statement_id,
        text=text,
        possibility=possibility,
        verdict=verdict,
        article=article,
    )


def _iter_raw_rows(
    text: str, schema: SchemaConfig
) -> Iterator[tuple[int, Mapping[str, object] | Exception]]:
    """Yield (row_number, parsed mapping or the parse failure).

    CSV rows count the header as row 1, so the first data row is row 2.
    JSONL rows are numbered from 1.
    """
    if schema.format is CorpusFormat.CSV:
        reader = csv.DictReader(io.StringIO(text))
        for index, raw in enumerate(reader, start=2):
            if None in raw:
                yield index, ValueError("row has more cells than the header")
            else:
                yield index, raw
    else:
        for index, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                parsed = json.loads(line)
            except json.JSONDecodeError as exc:
                yield index, ValueError(f"invalid JSON: {exc.msg}")
                continue
            if not isinstance(parsed, dict):
                yield index, ValueError("JSONL line is not an object")
            else:
                yield index, parsed


def load_corpus(
    path: str | Path,
    schema: Optional[SchemaConfig] = None,
    strict: bool = True,
    error_report_path: str | Path | None = None,
) -> Corpus:
    """Load a corpus file into validated statements.

    In strict mode the first malformed row raises MalformedRow. In lenient
    mode bad rows are skipped and collected on ``Corpus.rejects``; if
    ``error_report_path`` is given they are also written there as JSONL.
    Duplicate ids always abort — there is no sane lenient reading of two
    different rows claiming the same identity.
    """
    path = Path(path)
    schema = schema or SchemaConfig()
    text = _decode_rows(path)

    statements: list[Statement] = []
    rejects: list[RowError] = []
    seen: set[str] = set()

    for row_number, raw in _iter_raw_rows(text, schema):
        if isinstance(raw, Exception):
            failure: Optional[str] = str(raw)
            statement = None
        else:
            try:
                statement = _row_to_statement(raw, schema)
                failure = None
            except (ValueError, UnmappedLabel) as exc:
                statement = None
                failure = str(exc)
        if failure is not None:
            if strict:
                raise MalformedRow(row_number, failure)
            rejects.append(RowError(row=row_number, reason=failure))
            continue
        assert statement is not None
        if statement.id in seen:
            raise DuplicateId(statement.id, row_number)
        seen.add(statement.id)
        statements.append(statement)

    if rejects:
        log.warning("skipped %d malformed rows while loading %s", len(rejects), path)
        if error_report_path is not None:
            report = Path(error_report_path)
            with report.open("w", encoding="utf-8") as fh:
                for err in rejects:
                    fh.write(json.dumps({"row": err.row, "reason": err.reason}) + "\n")

    return Corpus(
        statements=tuple(statements),
        source_meta={"path": str(path), "format": schema.format.value},
        rejects=tuple(rejects),
    )


def filter_by_possibility(
    corpus: Corpus, drop: Iterable[PossibilityLabel]
) -> Corpus:
    """Return a new corpus without the statements carrying any dropped label."""
    dropped = set(drop)
    kept = tuple(s for s in corpus.statements if s.possibility not in dropped)
    return Corpus(statements=kept, source_meta=dict(corpus.source_meta))


def attach_annotations(corpus: Corpus, labels_path: str | Path) -> Corpus:
    """Merge a labeler CSV (statement_id, labeler_id, category_letter) in.

    Returns a new corpus; the input is untouched. Unknown statement ids,
    bad letters, repeat labelers on one statement, and a fourth annotation
    all raise — annotation files are small and curated, so they get no
    lenient mode.
    """
    labels_path = Path(labels_path)
    text = _decode_rows(labels_path)

    per_statement: dict[str, list[CategoryAnnotation]] = {}
    by_id = {s.id: s for s in corpus.statements}

    reader = csv.DictReader(io.StringIO(text))
    required = {"statement_id", "labeler_id", "category_letter"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise MalformedRow(1, f"annotation header must contain {sorted(required)}")

    for row_number, raw in enumerate(reader, start=2):
        statement_id = (raw.get("statement_id") or "").strip()
        labeler_id = (raw.get("labeler_id") or "").strip()
        letter = (raw.get("category_letter") or "").strip()
        if not statement_id or not labeler_id or not letter:
            raise MalformedRow(row_number, "annotation row has empty cells")
        if statement_id not in by_id:
            raise UnknownStatementId(
                f"annotation row {row_number} names unknown statement {statement_id!r}"
            )
        try:
            category = category_from_letter(letter)
        except InvalidCategoryLetter as exc:
            raise InvalidCategoryLetter(f"row {row_number}: {exc}") from None
        existing = per_statement.setdefault(statement_id, [])
        if any(a.labeler_id == labeler_id for a in existing):
            raise DuplicateLabeler(
                f"labeler {labeler_id!r} appears twice for statement {statement_id!r}"
            )
        if len(existing) >= 3:
            raise MalformedRow(
                row_number, f"statement {statement_id!r} has more than 3 annotations"
            )
        existing.append(CategoryAnnotation(labeler_id=labeler_id, category=category))

    updated = tuple(
        replace(s, annotations=tuple(per_statement.get(s.id, ())))
        if s.id in per_statement
        else s
        for s in corpus.statements
    )
    return Corpus(statements=updated, source_meta=dict(corpus.source_meta))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out as JSONL using the default column names."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s in corpus.statements:
            row: dict[str, object] = {
                "id": s.id,
                "statement": s.text,
                "possibility": s.possibility.value,
            }
            if s.verdict is not None:
                row["verdict"] = (
                    s.verdict.raw
                    if s.verdict.raw is not None
                    else ("true" if s.verdict.value else "false")
                )
            if s.article is not None:
                row["article"] = s.article
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def corpus_from_statements(statements: Sequence[Statement]) -> Corpus:
    """Build a corpus in memory, enforcing unique ids."""
    seen: set[str] = set()
    for index, s in enumerate(statements):
        if s.id in seen:
            raise DuplicateId(s.id, index + 1)
        seen.add(s.id)
    return Corpus(statements=tuple(statements))
