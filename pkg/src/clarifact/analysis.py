"""Corpus analysis: tokenization, n-gram frequencies, lexicon expansion.

These tools support category discovery over model replies: counting the
words/bigrams models use when naming missing information, and growing a
seed list of uncertainty words by embedding similarity so reply scans catch
morphological and synonymous variants.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from clarifact.errors import EmptySeed, FileUnreadable, InvalidN, MalformedRow

_WORD = re.compile(r"[\w']+", re.UNICODE)


@dataclass(frozen=True)
class TokenizeConfig:
    lowercase: bool = True
    strip_punctuation: bool = True
    stopwords: frozenset[str] = frozenset()


def tokenize(text: str, config: TokenizeConfig = TokenizeConfig()) -> list[str]:
    """Deterministic word segmentation: lowercase, punctuation strip, stopwords.

    With punctuation stripping on, tokens are maximal runs of word characters
    and apostrophes (surrounding apostrophes trimmed), so "It's the U.S."
    yields ["it's", "the", "u", "s"]. Without it, plain whitespace splitting.
    """
    if config.lowercase:
        text = text.casefold()
    if config.strip_punctuation:
        tokens = [t.strip("'") for t in _WORD.findall(text)]
        tokens = [t for t in tokens if t]
    else:
        tokens = text.split()
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    return tokens


@dataclass(frozen=True)
class FrequencyTable:
    entries: tuple[tuple[str, int], ...]
    n: int
    corpus_size: int

    def __post_init__(self) -> None:
        for (_, count) in self.entries:
            if count < 0:
                raise ValueError("negative count")
        keys = [(-count, term) for term, count in self.entries]
        if keys != sorted(keys):
            raise ValueError("entries must be sorted by count desc, term asc")

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["term", "count"])
        writer.writerows(self.entries)
        return out.getvalue()

    def render(self, title: str = "") -> str:
        width = max([len(t) for t, _ in self.entries] + [4])
        lines = []
        if title:
            lines.append(title)
        lines.append(f"{'term'.ljust(width)}  count")
        lines.append(f"{'-' * width}  -----")
        for term, count in self.entries:
            lines.append(f"{term.ljust(width)}  {count:5d}")
        return "\n".join(lines) + "\n"


def ngram_frequencies(
    documents: Sequence[str],
    n: int,
    top_k: int,
    config: TokenizeConfig = TokenizeConfig(),
) -> FrequencyTable:
    """Count contiguous n-grams across documents; top_k, ties lexicographic.

    Occurrences are counted per-occurrence, not per-document. Grams never
    cross document boundaries.
    """
    if n not in (1, 2):
        raise InvalidN(f"gram order must be 1 or 2, got {n}")
    if top_k < 1:
        raise ValueError("top_k must be positive")
    counts: dict[str, int] = {}
    for document in documents:
        tokens = tokenize(document, config)
        for i in range(len(tokens) - n + 1):
            gram = " ".join(tokens[i : i + n])
            counts[gram] = counts.get(gram, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    return FrequencyTable(entries=tuple(ordered), n=n, corpus_size=len(documents))


# ---------------------------------------------------------------------------
# Embeddings and lexicon expansion
# ---------------------------------------------------------------------------

class EmbeddingStore:
    """Word vectors loaded from a plain-text file, case-folded, immutable.

    Format: one word per line, "word v1 v2 … vN", an optional leading
    "vocab_size dimension" header line. First occurrence of a case-folded
    word wins.
    """

    def __init__(self, words: Sequence[str], matrix: np.ndarray):
        if matrix.ndim != 2 or len(words) != matrix.shape[0]:
            raise ValueError("words/matrix shape mismatch")
        self._index: dict[str, int] = {}
        for i, word in enumerate(words):
            self._index.setdefault(word.casefold(), i)
        self._matrix = matrix.astype(np.float64)
        norms = np.linalg.norm(self._matrix, axis=1)
        norms[norms == 0.0] = 1.0  # zero vectors stay zero after division
        self._unit = self._matrix / norms[:, None]
        self._words = list(words)

    @property
    def dimension(self) -> int:
        return self._matrix.shape[1]

    @property
    def vocabulary_size(self) -> int:
        return len(self._index)

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self._index

    def vector(self, word: str) -> np.ndarray:
        return self._matrix[self._index[word.casefold()]]

    def words(self) -> list[str]:
        return list(self._words)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise FileUnreadable(f"cannot read {path}: {exc}") from exc

        rows: list[tuple[str, list[float]]] = []
        dimension: Optional[int] = None
        for line_number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if dimension is None and line_number == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # "vocab dim" header
                except ValueError:
                    pass
            word, raw_values = parts[0], parts[1:]
            if not raw_values:
                raise MalformedRow(line_number, "no vector components")
            try:
                values = [float(v) for v in raw_values]
            except ValueError:
                raise MalformedRow(line_number, "non-numeric vector component") from None
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise MalformedRow(
                    line_number,
                    f"vector has {len(values)} components, expected {dimension}",
                )
            rows.append((word, values))
        if not rows:
            raise MalformedRow(1, "embedding file contains no vectors")
        words = [w for w, _ in rows]
        matrix = np.array([v for _, v in rows], dtype=np.float64)
        return cls(words, matrix)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, with zero vectors defined to have similarity 0."""
    norm = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if norm == 0.0:
        return 0.0
    return float(np.dot(a, b) / norm)


@dataclass(frozen=True)
class Lexicon:
    seed: tuple[str, ...]
    expanded: tuple[tuple[str, float], ...]
    threshold: float
    missing: tuple[str, ...] = field(default=(), compare=False)

    def words(self) -> frozenset[str]:
        return frozenset(word for word, _ in self.expanded)

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self.words()


def default_seed_words() -> list[str]:
    """The shipped baseline list of words that signal missing information."""
    text = (
        resources.files("clarifact")
        .joinpath("data/uncertainty_seed_words.txt")
        .read_text(encoding="utf-8")
    )
    return [line.strip() for line in text.splitlines() if line.strip()]


def expand_seed_lexicon(
    seed: Sequence[str], store: EmbeddingStore, threshold: float
) -> Lexicon:
    """Grow a seed word list with every vocabulary word strictly above threshold.

    Inclusion requires cosine similarity to some seed word strictly greater
    than the threshold ("above" reads as exclusive). Seeds are always
    included at similarity 1.0; seeds absent from the store are reported on
    ``missing`` rather than failing the whole expansion.
    """
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    seed_clean = [w.casefold() for w in seed if w.strip()]
    if not seed_clean:
        raise EmptySeed("seed list is empty")
    present = [w for w in seed_clean if w in store]
    missing = tuple(w for w in seed_clean if w not in store)

    scores: dict[str, float] = {}
    if present:
        seed_matrix = np.stack([store.vector(w) for w in present])
        seed_norms = np.linalg.norm(seed_matrix, axis=1)
        seed_norms[seed_norms == 0.0] = 1.0
        seed_unit = seed_matrix / seed_norms[:, None]
        # vocabulary (V×d) against seeds (S×d) in one matrix product
        sims = store._unit @ seed_unit.T
        best = sims.max(axis=1)
        for word, value in zip(store.words(), best.tolist()):
            folded = word.casefold()
            if folded in scores:
                continue
            if value > threshold and folded not in seed_clean:
                scores[folded] = value

    entries = [(w, 1.0) for w in dict.fromkeys(seed_clean)]
    entries.extend(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))
    return Lexicon(
        seed=tuple(dict.fromkeys(seed_clean)),
        expanded=tuple(entries),
        threshold=threshold,
        missing=missing,
    )


def uncertainty_term_frequencies(
    documents: Sequence[str],
    lexicon: Lexicon,
    top_k: int,
    config: TokenizeConfig = TokenizeConfig(),
) -> FrequencyTable:
    """Unigram frequencies restricted to lexicon words (case-insensitive)."""
    members = lexicon.words()
    counts: dict[str, int] = {}
    for document in documents:
        for token in tokenize(document, config):
            if token in members:
                counts[token] = counts.get(token, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    return FrequencyTable(entries=tuple(ordered), n=1, corpus_size=len(documents))


def render_panels(panels: Mapping[str, FrequencyTable]) -> str:
    """Aligned multi-panel frequency report (panel title above each table)."""
    blocks = [table.render(title) for title, table in panels.items()]
    return "\n".join(blocks)
