"""Mini-batch training with Adam and per-epoch model selection on dev F0.5.

The objective is the mean over sentences of the per-sentence mean token
cross-entropy; batching never changes it, only the update schedule. Each
sentence builds its own graph, backward passes are seeded with 1/batch
so parameter gradients accumulate to the batch-mean gradient, and the
whole trajectory is a deterministic function of (seed, corpus, config).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import LABEL_INCORRECT, LabeledSentence, Vocabulary
from .errors import ContractError, DataError, TrainingError
from .metrics import DetectionResult, detection_eval
from .model import Model, forward, sentence_loss


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 64
    max_epochs: int = 20
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int | None = None  # epochs without dev-F0.5 improvement; None = never stop
    grad_clip: float | None = None  # global-norm clip threshold; None = off
    freeze_embeddings: bool = False


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(m={n: np.zeros_like(p.data) for n, p in params.items()},
                   v={n: np.zeros_like(p.data) for n, p in params.items()})


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray | None],
              state: AdamState, config: TrainConfig,
              skip: frozenset[str] = frozenset()) -> None:
    """One Adam update, in place.

    Parameters without a gradient are treated as having gradient zero
    (their moments keep decaying). ``skip`` names parameters excluded
    from the update entirely.
    """
    state.t += 1
    correction1 = 1.0 - config.beta1 ** state.t
    correction2 = 1.0 - config.beta2 ** state.t
    for name, p in params.items():
        if name in skip:
            continue
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        elif not np.isfinite(g).all():
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)


def _clip_gradients(params: dict[str, Tensor], threshold: float) -> None:
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    norm = math.sqrt(total)
    if norm > threshold and norm > 0.0:
        factor = threshold / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= factor


@dataclass
class EpochStats:
    epoch: int
    loss: float
    dev_precision: float
    dev_recall: float
    dev_f05: float


HISTORY_HEADER = "epoch,loss,dev_P,dev_R,dev_F05"


def history_to_csv(history: Sequence[EpochStats]) -> str:
    lines = [HISTORY_HEADER]
    for row in history:
        lines.append(f"{row.epoch},{row.loss!r},{row.dev_precision!r},"
                     f"{row.dev_recall!r},{row.dev_f05!r}")
    return "\n".join(lines) + "\n"


def write_history_csv(path, history: Sequence[EpochStats]) -> None:
    Path(path).write_text(history_to_csv(history), encoding="utf-8")


def predict(model: Model, vocab: Vocabulary, tokens: Sequence[str],
            threshold: float = 0.5) -> tuple[list[int], list[float]]:
    """Per-token labels and P(incorrect); label 1 iff P(incorrect) >= threshold."""
    if len(tokens) == 0:
        raise ContractError("predict needs a nonempty sentence")
    probs = forward(model, vocab.encode(tokens))
    probs_incorrect = probs[:, LABEL_INCORRECT]
    labels = [1 if p >= threshold else 0 for p in probs_incorrect]
    return labels, [float(p) for p in probs_incorrect]


def evaluate_model(model: Model, vocab: Vocabulary,
                   corpus: Sequence[LabeledSentence],
                   threshold: float = 0.5) -> DetectionResult:
    """Detection P/R/F0.5 of the model's thresholded predictions."""
    system = []
    for sentence in corpus:
        labels, _ = predict(model, vocab, sentence.tokens, threshold)
        system.append(LabeledSentence(sentence.tokens, labels))
    return detection_eval(system, corpus)


@dataclass
class TrainResult:
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int | None = None
    best_f05: float = 0.0


def train(model: Model, vocab: Vocabulary,
          train_corpus: Sequence[LabeledSentence],
          dev_corpus: Sequence[LabeledSentence],
          config: TrainConfig) -> TrainResult:
    """Train in place and keep the parameters of the best dev-F0.5 epoch.

    Per epoch: seeded shuffle, sentence batches, Adam update per batch;
    then dev-set evaluation at threshold 0.5. On ties the earliest best
    epoch wins. Raises TrainingError as soon as a loss turns non-finite.
    """
    if not train_corpus or not dev_corpus:
        raise DataError("train and dev corpora must be nonempty")
    train_keys = {hash(s.tokens) for s in train_corpus}
    overlap = sum(1 for s in dev_corpus if hash(s.tokens) in train_keys)
    if overlap:
        warnings.warn(f"{overlap} dev sentence(s) also appear in the training set")

    encoded = [(vocab.encode(s.tokens), s.labels) for s in train_corpus]
    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(model.params)
    skip = frozenset({"embed.E"}) if config.freeze_embeddings else frozenset()

    result = TrainResult()
    best_params: dict[str, np.ndarray] | None = None
    since_best = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(encoded))
        loss_sum = 0.0
        for batch_start in range(0, len(order), config.batch_size):
            batch = order[batch_start:batch_start + config.batch_size]
            model.zero_grads()
            for idx in batch:
                ids, labels = encoded[idx]
                with ad.Graph():
                    loss, _ = sentence_loss(model, ids, labels)
                value = loss.item()
                if not math.isfinite(value):
                    raise TrainingError(
                        f"loss became non-finite at epoch {epoch}, "
                        f"batch {batch_start // config.batch_size}")
                loss_sum += value
                ad.backward(loss, seed=1.0 / len(batch))
            if config.grad_clip is not None:
                _clip_gradients(model.params, config.grad_clip)
            grads = {name: p.grad for name, p in model.params.items()}
            adam_step(model.params, grads, state, config, skip=skip)

        dev = evaluate_model(model, vocab, dev_corpus)
        stats = EpochStats(epoch=epoch, loss=loss_sum / len(encoded),
                           dev_precision=dev.precision, dev_recall=dev.recall,
                           dev_f05=dev.f05)
        result.history.append(stats)

        if result.best_epoch is None or dev.f05 > result.best_f05:
            result.best_epoch = epoch
            result.best_f05 = dev.f05
            best_params = {name: p.data.copy() for name, p in model.params.items()}
            since_best = 0
        else:
            since_best += 1
            if config.patience is not None and since_best >= config.patience:
                break

    if best_params is not None:
        for name, p in model.params.items():
            p.data = best_params[name]
    return result
