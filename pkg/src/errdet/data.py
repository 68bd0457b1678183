"""Corpus ingestion and conversion.

Covers the TSV token/label format, vocabulary construction with an unk
threshold, error-span to token-label conversion, alignment of corrected
output back onto source tokens, and the plain-text embedding loader.

File formats
------------
Corpus TSV: one token per line as ``token<TAB>label`` with label ``c``
(correct) or ``i`` (incorrect); a blank line ends a sentence. UTF-8;
CRLF is accepted on input, LF is written.

Embeddings: optional first header line ``<count> <dim>``, then one line
per type: the token followed by ``dim`` space-separated floats.
"""

from __future__ import annotations

import string
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (AnnotationError, ConfigError, ContractError, DataError,
                     ParseError)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1

LABEL_CORRECT = 0
LABEL_INCORRECT = 1

_LABEL_CHARS = {"c": LABEL_CORRECT, "i": LABEL_INCORRECT}
_CHAR_LABELS = {LABEL_CORRECT: "c", LABEL_INCORRECT: "i"}


@dataclass(frozen=True)
class LabeledSentence:
    """Token sequence with per-token 0 (correct) / 1 (incorrect) labels."""

    tokens: tuple[str, ...]
    labels: tuple[int, ...]
    source: str | None = None

    def __init__(self, tokens: Sequence[str], labels: Sequence[int],
                 source: str | None = None):
        object.__setattr__(self, "tokens", tuple(tokens))
        object.__setattr__(self, "labels", tuple(int(l) for l in labels))
        object.__setattr__(self, "source", source)
        if len(self.tokens) != len(self.labels):
            raise DataError(f"{len(self.tokens)} tokens but {len(self.labels)} labels")
        if any(l not in (0, 1) for l in self.labels):
            raise DataError(f"labels must be 0 or 1, got {self.labels}")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class SpanAnnotation:
    """Tokens plus error spans as (start, end) token offsets, end exclusive.

    A zero-length span (start == end) marks a missing-word position.
    Spans may overlap.
    """

    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]

    def __init__(self, tokens: Sequence[str], spans: Sequence[tuple[int, int]]):
        object.__setattr__(self, "tokens", tuple(tokens))
        object.__setattr__(self, "spans", tuple((int(s), int(e)) for s, e in spans))
        n = len(self.tokens)
        for s, e in self.spans:
            if not 0 <= s <= e <= n:
                raise AnnotationError(f"span ({s}, {e}) out of bounds for {n} tokens")


def spans_to_labels(annotation: SpanAnnotation) -> LabeledSentence:
    """Token labels from error spans.

    Every token inside a span is incorrect. A zero-length span marks a
    missing word: the token immediately after the gap is labeled; a gap
    at the very end of the sentence labels the final token.
    """
    tokens = annotation.tokens
    n = len(tokens)
    labels = [LABEL_CORRECT] * n
    for start, end in annotation.spans:
        if start == end:
            if n == 0:
                raise AnnotationError("missing-word span on an empty sentence")
            labels[start if start < n else n - 1] = LABEL_INCORRECT
        else:
            for k in range(start, end):
                labels[k] = LABEL_INCORRECT
    return LabeledSentence(tokens, labels)


def align_correction(source: Sequence[str], corrected: Sequence[str]) -> LabeledSentence:
    """Label source tokens touched by a corrected version of the sentence.

    Token-level Levenshtein alignment (match 0; substitution, insertion,
    deletion 1). Substituted and deleted source tokens are labeled; a
    token inserted on the corrected side labels the source token
    immediately after the insertion point (the final token for an
    insertion at the end). Among minimum-cost alignments the backtrace
    prefers match > substitution > deletion > insertion, read from the
    end of the sentence backwards.
    """
    src = list(source)
    cor = list(corrected)
    if not src:
        raise ContractError("align_correction needs a nonempty source sentence")
    n, m = len(src), len(cor)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            same = src[i - 1] == cor[j - 1]
            dist[i, j] = min(dist[i - 1, j - 1] + (0 if same else 1),
                             dist[i - 1, j] + 1,
                             dist[i, j - 1] + 1)

    labels = [LABEL_CORRECT] * n
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and src[i - 1] == cor[j - 1] and dist[i, j] == dist[i - 1, j - 1]:
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and src[i - 1] != cor[j - 1] and dist[i, j] == dist[i - 1, j - 1] + 1:
            labels[i - 1] = LABEL_INCORRECT
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            labels[i - 1] = LABEL_INCORRECT
            i = i - 1
        else:
            labels[i if i < n else n - 1] = LABEL_INCORRECT
            j = j - 1
    return LabeledSentence(src, labels)


class Vocabulary:
    """Token to id map with reserved padding and unknown entries.

    Ids are dense from 0 with ``<pad>`` = 0 and ``<unk>`` = 1; lookup
    lowercases and never fails (unknown tokens map to unk).
    """

    def __init__(self, tokens: Sequence[str], min_count: int = 2):
        self.min_count = min_count
        self.tokens: list[str] = [PAD_TOKEN, UNK_TOKEN]
        seen = set(self.tokens)
        for tok in tokens:
            if tok in seen:
                raise DataError(f"duplicate vocabulary token {tok!r}")
            seen.add(tok)
            self.tokens.append(tok)
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._ids

    def lookup(self, token: str) -> int:
        return self._ids.get(token.lower(), UNK_ID)

    def id_if_known(self, token: str) -> int | None:
        return self._ids.get(token.lower())

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.lookup(t) for t in tokens]

    @property
    def pad_id(self) -> int:
        return PAD_ID

    @property
    def unk_id(self) -> int:
        return UNK_ID


def build_vocab(corpus: Iterable[LabeledSentence], min_count: int = 2) -> Vocabulary:
    """Count lowercased tokens and keep those occurring >= min_count times.

    Id order is deterministic: descending count, ties broken
    lexicographically.
    """
    counts: dict[str, int] = {}
    total = 0
    for sentence in corpus:
        for token in sentence.tokens:
            token = token.lower()
            counts[token] = counts.get(token, 0) + 1
            total += 1
    if total == 0:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = sorted((tok for tok, c in counts.items() if c >= min_count),
                  key=lambda tok: (-counts[tok], tok))
    return Vocabulary(kept, min_count=min_count)


def load_pretrained(path, vocab: Vocabulary,
                    initial: np.ndarray) -> tuple[np.ndarray, float]:
    """Overlay pretrained embedding rows onto an initialized table.

    ``initial`` is the (vocab_size, dim) random initialization; rows of
    in-vocabulary file tokens are replaced, everything else is kept.
    Returns the new table and the fraction of vocabulary entries covered.
    Duplicate file tokens: the last occurrence wins, with a warning.
    """
    if initial.shape[0] != len(vocab):
        raise ConfigError(f"embedding table has {initial.shape[0]} rows "
                          f"for a vocabulary of {len(vocab)}")
    dim = initial.shape[1]
    table = initial.copy()
    matched: set[int] = set()
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            fields = line.split(" ")
            if lineno == 1 and len(fields) == 2:
                try:
                    int(fields[0]), int(fields[1])
                    continue  # header line "count dim"
                except ValueError:
                    pass
            if len(fields) != dim + 1:
                raise ParseError(f"expected a token and {dim} floats, got "
                                 f"{len(fields)} fields", path=path, line=lineno)
            token = fields[0]
            try:
                values = np.asarray([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"bad float: {exc}", path=path, line=lineno) from exc
            token_id = vocab.id_if_known(token)
            if token_id is None:
                continue
            if token_id in matched:
                warnings.warn(f"duplicate embedding for {token!r} at line {lineno}; "
                              "last occurrence wins")
            matched.add(token_id)
            table[token_id] = values
    return table, len(matched) / len(vocab)


def read_tsv(path) -> list[LabeledSentence]:
    """Read a labeled corpus from the TSV format (see module docstring)."""
    path = Path(path)
    sentences: list[LabeledSentence] = []
    tokens: list[str] = []
    labels: list[int] = []

    def flush():
        if tokens:
            sentences.append(LabeledSentence(tokens, labels, source=str(path)))
            tokens.clear()
            labels.clear()

    with path.open("r", encoding="utf-8", newline="") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                flush()
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(f"expected 'token<TAB>label', got {line!r}",
                                 path=path, line=lineno)
            token, label_char = fields
            if label_char not in _LABEL_CHARS:
                raise ParseError(f"unknown label {label_char!r} (expected 'c' or 'i')",
                                 path=path, line=lineno)
            if not token:
                raise ParseError("empty token", path=path, line=lineno)
            tokens.append(token)
            labels.append(_LABEL_CHARS[label_char])
    flush()
    return sentences


def write_tsv(path, sentences: Iterable[LabeledSentence]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for sentence in sentences:
            for token, label in zip(sentence.tokens, sentence.labels):
                if any(ch in token for ch in "\t\n\r"):
                    raise DataError(f"token {token!r} contains TSV delimiter characters")
                handle.write(f"{token}\t{_CHAR_LABELS[label]}\n")
            handle.write("\n")


def read_sentences(path) -> list[list[str]]:
    """Plain text, one pre-tokenized (space-separated) sentence per line."""
    path = Path(path)
    sentences = []
    with path.open("r", encoding="utf-8") as handle:
        for raw in handle:
            tokens = raw.split()
            if tokens:
                sentences.append(tokens)
    return sentences


_PUNCT = set(string.punctuation)


def simple_tokenize(text: str) -> list[str]:
    """Whitespace split with leading/trailing punctuation detached.

    Meant for raw demo text only; corpus pipelines consume pre-tokenized
    TSV and bypass this.
    """
    out: list[str] = []
    for chunk in text.split():
        left: list[str] = []
        right: list[str] = []
        start, stop = 0, len(chunk)
        while start < stop and chunk[start] in _PUNCT:
            left.append(chunk[start])
            start += 1
        while stop > start and chunk[stop - 1] in _PUNCT:
            right.append(chunk[stop - 1])
            stop -= 1
        out.extend(left)
        if stop > start:
            out.append(chunk[start:stop])
        out.extend(reversed(right))
    return out
