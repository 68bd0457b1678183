"""Essay-level scoring support.

The single extracted feature is the mean probability of being correct
over every token of the essay (token-weighted: a five-token essay built
of two sentences averages over five tokens, not two sentence means).
A univariate least-squares fit maps the feature to a score, and held-out
quality is reported as Pearson's r and Spearman's rho against the gold
scores.

Essay files: a TSV of ``essay_id<TAB>gold_score`` plus a directory with
one ``<essay_id>.txt`` per essay, each line one pre-tokenized sentence.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import LABEL_INCORRECT, Vocabulary
from .errors import ContractError, DataError, ParseError, UndefinedCorrelationError
from .metrics import pearson, spearman
from .model import Model, forward


@dataclass
class EssayRecord:
    essay_id: str
    sentences: list[list[str]]
    gold_score: float
    feature: float | None = None
    predicted_score: float | None = None


def extract_feature(model: Model, vocab: Vocabulary,
                    sentences: Sequence[Sequence[str]]) -> float:
    """Mean P(correct) over all tokens of the essay."""
    total = 0.0
    tokens = 0
    for sentence in sentences:
        if not sentence:
            continue
        probs = forward(model, vocab.encode(sentence))
        total += float((1.0 - probs[:, LABEL_INCORRECT]).sum())
        tokens += len(sentence)
    if tokens == 0:
        raise ContractError("extract_feature needs a nonempty essay")
    return total / tokens


def extract_features(model: Model, vocab: Vocabulary,
                     essays: Sequence[EssayRecord]) -> None:
    for essay in essays:
        essay.feature = extract_feature(model, vocab, essay.sentences)


@dataclass
class CorrelationReport:
    pearson_r: float
    spearman_rho: float
    slope: float
    intercept: float
    train_count: int
    eval_count: int


def fit_and_correlate(essays: Sequence[EssayRecord],
                      train_count: int) -> CorrelationReport:
    """Fit score ~ a*feature + b on the first ``train_count`` essays and
    correlate predictions with gold scores on the rest.

    Essays are consumed in the given order; the fixed first-k/rest split
    keeps the protocol reproducible. Requires at least 3 essays per
    split and features with nonzero variance on the training side.
    """
    if any(e.feature is None for e in essays):
        raise ContractError("call extract_features before fit_and_correlate")
    train, held_out = essays[:train_count], essays[train_count:]
    if len(train) < 3 or len(held_out) < 3:
        raise DataError(f"need >= 3 essays per split, got {len(train)} train "
                        f"and {len(held_out)} eval")
    x = np.asarray([e.feature for e in train])
    y = np.asarray([e.gold_score for e in train])
    if np.ptp(x) == 0.0:
        raise UndefinedCorrelationError("constant feature; cannot fit a scorer")
    slope, intercept = np.polyfit(x, y, deg=1)

    for essay in essays:
        essay.predicted_score = float(slope * essay.feature + intercept)
    predictions = [e.predicted_score for e in held_out]
    gold = [e.gold_score for e in held_out]
    return CorrelationReport(pearson_r=pearson(predictions, gold),
                             spearman_rho=spearman(predictions, gold),
                             slope=float(slope), intercept=float(intercept),
                             train_count=len(train), eval_count=len(held_out))


def read_essays(scores_path, essays_dir) -> list[EssayRecord]:
    scores_path = Path(scores_path)
    essays_dir = Path(essays_dir)
    essays: list[EssayRecord] = []
    with scores_path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError("expected 'essay_id<TAB>score'",
                                 path=scores_path, line=lineno)
            essay_id, score_text = fields
            try:
                score = float(score_text)
            except ValueError as exc:
                raise ParseError(f"bad score {score_text!r}",
                                 path=scores_path, line=lineno) from exc
            essay_file = essays_dir / f"{essay_id}.txt"
            if not essay_file.is_file():
                raise DataError(f"missing essay file {essay_file}")
            sentences = [l.split() for l in
                         essay_file.read_text(encoding="utf-8").splitlines()
                         if l.split()]
            essays.append(EssayRecord(essay_id=essay_id, sentences=sentences,
                                      gold_score=score))
    if not essays:
        raise DataError(f"no essays listed in {scores_path}")
    return essays


def write_scored_csv(path, essays: Sequence[EssayRecord]) -> None:
    lines = ["essay_id,feature,predicted_score"]
    for e in essays:
        lines.append(f"{e.essay_id},{e.feature!r},{e.predicted_score!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
