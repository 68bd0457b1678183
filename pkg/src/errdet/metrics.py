"""Detection metrics (precision, recall, F-beta, raw counts) and
correlation metrics (Pearson, Spearman).

Percentages on the 0-100 scale everywhere a P/R/F value crosses a module
boundary; rounding to one decimal happens only at presentation time.
Zero denominators yield 0 for precision, recall and F.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, UndefinedCorrelationError


@dataclass(frozen=True)
class DetectionCounts:
    """Micro-averaged token counts for a system run against a reference."""

    predicted: int
    gold: int
    correct: int

    def __post_init__(self):
        if min(self.predicted, self.gold, self.correct) < 0:
            raise ValueError("counts must be nonnegative")
        if self.correct > min(self.predicted, self.gold):
            raise ValueError(f"correct={self.correct} exceeds "
                             f"min(predicted={self.predicted}, gold={self.gold})")

    @property
    def precision(self) -> float:
        return 100.0 * self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.correct / self.gold if self.gold else 0.0


def f_beta(precision: float, recall: float, beta: float = 0.5) -> float:
    """F-measure on percentages; beta < 1 weights precision more heavily."""
    b2 = beta * beta
    denominator = b2 * precision + recall
    if denominator == 0.0:
        return 0.0
    return (1.0 + b2) * precision * recall / denominator


@dataclass(frozen=True)
class DetectionResult:
    counts: DetectionCounts
    precision: float
    recall: float
    f05: float


def detection_eval(system: Iterable, reference: Iterable) -> DetectionResult:
    """Micro-averaged token-level scores of a system labeling vs a reference.

    Both streams yield LabeledSentence-like objects (anything with a
    ``labels`` sequence), aligned sentence by sentence.
    """
    predicted = gold = correct = 0
    sys_iter, ref_iter = iter(system), iter(reference)
    index = 0
    while True:
        sys_sent = next(sys_iter, None)
        ref_sent = next(ref_iter, None)
        if sys_sent is None and ref_sent is None:
            break
        if sys_sent is None or ref_sent is None:
            raise AlignmentError(f"sentence count mismatch at sentence {index}")
        sys_labels, ref_labels = list(sys_sent.labels), list(ref_sent.labels)
        if len(sys_labels) != len(ref_labels):
            raise AlignmentError(f"token count mismatch at sentence {index}: "
                                 f"{len(sys_labels)} vs {len(ref_labels)}")
        for s, r in zip(sys_labels, ref_labels):
            predicted += s == 1
            gold += r == 1
            correct += s == 1 and r == 1
        index += 1
    counts = DetectionCounts(predicted=predicted, gold=gold, correct=correct)
    p, r = counts.precision, counts.recall
    return DetectionResult(counts=counts, precision=p, recall=r, f05=f_beta(p, r, 0.5))


def format_report(result: DetectionResult, name: str = "system") -> str:
    """Plain-text table with predicted / correct raw counts and P, R, F0.5."""
    header = f"{'':<16}{'predicted':>10}{'correct':>9}{'P':>7}{'R':>7}{'F0.5':>7}"
    row = (f"{name:<16}{result.counts.predicted:>10}{result.counts.correct:>9}"
           f"{result.precision:>7.1f}{result.recall:>7.1f}{result.f05:>7.1f}")
    return header + "\n" + row


def format_report_csv(result: DetectionResult, name: str = "system") -> str:
    buf = io.StringIO()
    buf.write("name,predicted,correct,precision,recall,f05\n")
    buf.write(f"{name},{result.counts.predicted},{result.counts.correct},"
              f"{result.precision:.1f},{result.recall:.1f},{result.f05:.1f}\n")
    return buf.getvalue()


def _as_float_array(xs: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(list(xs), dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d sequence")
    return arr


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Product-moment correlation; raises on constant inputs."""
    x = _as_float_array(xs, "xs")
    y = _as_float_array(ys, "ys")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt((xc * xc).sum()))
    sy = float(np.sqrt((yc * yc).sum()))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for constant input")
    return float((xc * yc).sum() / (sx * sy))


def _fractional_ranks(values: np.ndarray) -> np.ndarray:
    # ties receive the average of the ranks they span (1-based)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks (average rank for ties)."""
    x = _as_float_array(xs, "xs")
    y = _as_float_array(ys, "ys")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    return pearson(_fractional_ranks(x), _fractional_ranks(y))
