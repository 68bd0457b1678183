"""Token-level grammatical error detection toolkit.

Training, evaluation and serving for neural sequence labelers that mark
each token of a sentence as correct or incorrect in context.
"""

from .data import (LabeledSentence, SpanAnnotation, Vocabulary,
                   align_correction, build_vocab, load_pretrained, read_tsv,
                   spans_to_labels, write_tsv)
from .metrics import DetectionCounts, detection_eval, f_beta, pearson, spearman
from .model import ARCHITECTURES, Model, ModelConfig, forward, init_model
from .serialize import load_checkpoint, save_checkpoint
from .training import TrainConfig, evaluate_model, predict, train

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES", "DetectionCounts", "LabeledSentence", "Model",
    "ModelConfig", "SpanAnnotation", "TrainConfig", "Vocabulary",
    "align_correction", "build_vocab", "detection_eval", "evaluate_model",
    "f_beta", "forward", "init_model", "load_checkpoint", "load_pretrained",
    "pearson", "predict", "read_tsv", "save_checkpoint", "spans_to_labels",
    "spearman", "train", "write_tsv", "__version__",
]
