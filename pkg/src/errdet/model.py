"""Model configuration, parameter store and the forward pass for the six
composition architectures.

Architectures: a token-window convolution, a bidirectional Elman
recurrence and a bidirectional peephole LSTM, each in a single-layer and
a two-layer (deep) variant. Every architecture shares the same head: a
tanh hidden layer over the composed per-token vector followed by a
per-token softmax over the labels.

Parameter naming is stable and enumerable (it is the serialization and
gradient-check surface):

    embed.E                              (vocab_size, embedding_dim)
    conv1.W / conv2.W, conv2.pad         convolution weights / layer-2 pad
    rnn{1,2}.{fw,bw}.{W,V}               Elman input and recurrent maps
    lstm{1,2}.{fw,bw}.{W,U,V,b}_{i,f,cand,o}
    hidden.W                             (pre_output_dim, composed_dim)
    out.W                                (num_labels, pre_output_dim)

Initialization: embeddings uniform in +-0.05, weight matrices
Glorot-uniform, biases and diagonal peepholes zero, forget-gate bias 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from . import autodiff as ad
from . import layers
from .autodiff import Tensor
from .errors import ConfigError, ContractError, VocabularyError

ARCHITECTURES = ("cnn", "deep-cnn", "bi-rnn", "deep-bi-rnn", "bi-lstm", "deep-bi-lstm")


@dataclass
class ModelConfig:
    architecture: str
    vocab_size: int
    embedding_dim: int = 300
    conv_window: int = 3
    conv_output_dim: int = 300
    recurrent_dim: int = 200
    pre_output_dim: int = 50
    num_labels: int = 2
    pad_id: int = 0
    elman_nonlinearity: str = "sigmoid"
    full_matrix_peepholes: bool = False

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}; "
                              f"expected one of {ARCHITECTURES}")
        for name in ("vocab_size", "embedding_dim", "conv_output_dim",
                     "recurrent_dim", "pre_output_dim"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.conv_window < 0:
            raise ConfigError("conv_window must be >= 0")
        if self.num_labels < 2:
            raise ConfigError("num_labels must be >= 2")
        if not 0 <= self.pad_id < self.vocab_size:
            raise ConfigError(f"pad_id {self.pad_id} outside vocabulary")
        if self.elman_nonlinearity not in ("sigmoid", "tanh"):
            raise ConfigError(f"unknown elman_nonlinearity {self.elman_nonlinearity!r}")

    @property
    def composed_dim(self) -> int:
        """Dimension of the per-token vector the head consumes."""
        if self.architecture in ("cnn", "deep-cnn"):
            return self.conv_output_dim
        return 2 * self.recurrent_dim

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, Tensor] = field(default_factory=dict)

    def parameter_items(self) -> list[tuple[str, Tensor]]:
        return list(self.params.items())

    def zero_grads(self) -> None:
        ad.zero_grads(self.params.values())

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _add_lstm_params(params: dict[str, Tensor], rng: np.random.Generator,
                     prefix: str, in_dim: int, hidden: int, full_peepholes: bool) -> None:
    def peephole() -> np.ndarray:
        if full_peepholes:
            return _glorot(rng, (hidden, hidden))
        return np.zeros(hidden)

    for gate in ("i", "f", "cand", "o"):
        params[f"{prefix}.W_{gate}"] = ad.parameter(_glorot(rng, (hidden, in_dim)))
        params[f"{prefix}.U_{gate}"] = ad.parameter(_glorot(rng, (hidden, hidden)))
        if gate != "cand":
            params[f"{prefix}.V_{gate}"] = ad.parameter(peephole())
        bias = np.zeros(hidden)
        if gate == "f":
            bias += 1.0  # open forget gate at the start of training
        params[f"{prefix}.b_{gate}"] = ad.parameter(bias)


def init_model(config: ModelConfig, seed: int) -> Model:
    """Build a model with freshly initialized parameters (deterministic in
    the seed; parameters are created in a fixed, documented order)."""
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    e, co, r = config.embedding_dim, config.conv_output_dim, config.recurrent_dim
    k = 2 * config.conv_window + 1
    arch = config.architecture

    params["embed.E"] = ad.parameter(rng.uniform(-0.05, 0.05, size=(config.vocab_size, e)))

    if arch in ("cnn", "deep-cnn"):
        params["conv1.W"] = ad.parameter(_glorot(rng, (co, k * e)))
        if arch == "deep-cnn":
            params["conv2.pad"] = ad.parameter(rng.uniform(-0.05, 0.05, size=co))
            params["conv2.W"] = ad.parameter(_glorot(rng, (co, k * co)))
    elif arch in ("bi-rnn", "deep-bi-rnn"):
        for direction in ("fw", "bw"):
            params[f"rnn1.{direction}.W"] = ad.parameter(_glorot(rng, (r, e)))
            params[f"rnn1.{direction}.V"] = ad.parameter(_glorot(rng, (r, r)))
        if arch == "deep-bi-rnn":
            for direction in ("fw", "bw"):
                params[f"rnn2.{direction}.W"] = ad.parameter(_glorot(rng, (r, 2 * r)))
                params[f"rnn2.{direction}.V"] = ad.parameter(_glorot(rng, (r, r)))
    else:
        for direction in ("fw", "bw"):
            _add_lstm_params(params, rng, f"lstm1.{direction}", e, r,
                             config.full_matrix_peepholes)
        if arch == "deep-bi-lstm":
            for direction in ("fw", "bw"):
                _add_lstm_params(params, rng, f"lstm2.{direction}", 2 * r, r,
                                 config.full_matrix_peepholes)

    params["hidden.W"] = ad.parameter(_glorot(rng, (config.pre_output_dim,
                                                    config.composed_dim)))
    params["out.W"] = ad.parameter(_glorot(rng, (config.num_labels,
                                                 config.pre_output_dim)))
    return Model(config=config, params=params)


def expected_parameter_count(config: ModelConfig) -> int:
    """Closed-form parameter count per architecture.

    With e = embedding_dim, co = conv_output_dim, r = recurrent_dim,
    p = pre_output_dim, L = num_labels, V = vocab_size, k = 2*window+1,
    peep = r (diagonal) or r^2 (full matrices):

        shared          V*e + p*composed + L*p
        cnn             co*k*e
        deep-cnn        co*k*e + co*k*co + co
        bi-rnn          2*(r*e + r*r)
        deep-bi-rnn     2*(r*e + r*r) + 2*(r*2r + r*r)
        bi-lstm         2*(4*r*e + 4*r*r + 3*peep + 4*r)
        deep-bi-lstm    ... + 2*(4*r*2r + 4*r*r + 3*peep + 4*r)
    """
    e, co, r = config.embedding_dim, config.conv_output_dim, config.recurrent_dim
    p, L, V = config.pre_output_dim, config.num_labels, config.vocab_size
    k = 2 * config.conv_window + 1
    peep = r * r if config.full_matrix_peepholes else r
    total = V * e + p * config.composed_dim + L * p
    arch = config.architecture
    if arch == "cnn":
        total += co * k * e
    elif arch == "deep-cnn":
        total += co * k * e + co * k * co + co
    elif arch == "bi-rnn":
        total += 2 * (r * e + r * r)
    elif arch == "deep-bi-rnn":
        total += 2 * (r * e + r * r) + 2 * (r * 2 * r + r * r)
    elif arch == "bi-lstm":
        total += 2 * (4 * r * e + 4 * r * r + 3 * peep + 4 * r)
    else:
        total += 2 * (4 * r * e + 4 * r * r + 3 * peep + 4 * r)
        total += 2 * (4 * r * 2 * r + 4 * r * r + 3 * peep + 4 * r)
    return total


def _lstm_cell(model: Model, prefix: str) -> layers.LstmCell:
    p = model.params
    return layers.LstmCell(
        w_i=p[f"{prefix}.W_i"], u_i=p[f"{prefix}.U_i"], v_i=p[f"{prefix}.V_i"],
        b_i=p[f"{prefix}.b_i"],
        w_f=p[f"{prefix}.W_f"], u_f=p[f"{prefix}.U_f"], v_f=p[f"{prefix}.V_f"],
        b_f=p[f"{prefix}.b_f"],
        w_cand=p[f"{prefix}.W_cand"], u_cand=p[f"{prefix}.U_cand"],
        b_cand=p[f"{prefix}.b_cand"],
        w_o=p[f"{prefix}.W_o"], u_o=p[f"{prefix}.U_o"], v_o=p[f"{prefix}.V_o"],
        b_o=p[f"{prefix}.b_o"],
        full_peepholes=model.config.full_matrix_peepholes)


def _elman_cell(model: Model, prefix: str) -> layers.ElmanCell:
    return layers.ElmanCell(w=model.params[f"{prefix}.W"],
                            v=model.params[f"{prefix}.V"],
                            nonlinearity=model.config.elman_nonlinearity)


def _compose(model: Model, token_ids: Sequence[int]) -> list[Tensor]:
    """Per-token composed vectors for the configured architecture."""
    cfg = model.config
    table = model.params["embed.E"]
    arch = cfg.architecture

    if arch in ("cnn", "deep-cnn"):
        xs = layers.embed(table, token_ids)
        pad = ad.row(table, cfg.pad_id)
        hs = layers.conv_compose(xs, cfg.conv_window, pad, model.params["conv1.W"])
        if arch == "deep-cnn":
            hs = layers.conv_compose(hs, cfg.conv_window, model.params["conv2.pad"],
                                     model.params["conv2.W"])
        return hs

    x_matrix = ad.gather_rows(table, list(token_ids))
    if arch in ("bi-rnn", "deep-bi-rnn"):
        hs = layers.bidirectional(_elman_cell(model, "rnn1.fw"),
                                  _elman_cell(model, "rnn1.bw"), x_matrix)
        if arch == "deep-bi-rnn":
            hs = layers.bidirectional(_elman_cell(model, "rnn2.fw"),
                                      _elman_cell(model, "rnn2.bw"),
                                      ad.stack_rows(hs))
        return hs

    hs = layers.bidirectional(_lstm_cell(model, "lstm1.fw"),
                              _lstm_cell(model, "lstm1.bw"), x_matrix)
    if arch == "deep-bi-lstm":
        hs = layers.bidirectional(_lstm_cell(model, "lstm2.fw"),
                                  _lstm_cell(model, "lstm2.bw"), ad.stack_rows(hs))
    return hs


def _check_sentence(model: Model, token_ids: Sequence[int]) -> None:
    if len(token_ids) == 0:
        raise ContractError("forward needs a nonempty sentence")
    for i in token_ids:
        if not 0 <= int(i) < model.config.vocab_size:
            raise VocabularyError(f"token id {i} outside vocabulary of size "
                                  f"{model.config.vocab_size}")


def token_logits(model: Model, token_ids: Sequence[int]) -> list[Tensor]:
    """Per-token label logits (graph tensors when a Graph is active)."""
    _check_sentence(model, token_ids)
    hidden_w, out_w = model.params["hidden.W"], model.params["out.W"]
    logits = []
    for h in _compose(model, token_ids):
        z = ad.tanh(ad.matvec(hidden_w, h))
        logits.append(ad.matvec(out_w, z))
    return logits


def forward(model: Model, token_ids: Sequence[int]) -> np.ndarray:
    """Per-token label distributions, shape (T, num_labels)."""
    return np.stack([ad.softmax_values(l.data) for l in token_logits(model, token_ids)])


def sentence_loss(model: Model, token_ids: Sequence[int],
                  labels: Sequence[int]) -> tuple[Tensor, np.ndarray]:
    """Mean per-token cross-entropy for one sentence.

    Returns the scalar loss tensor (recorded on the active graph) and the
    per-token probability matrix as plain values.
    """
    if len(labels) != len(token_ids):
        raise ContractError(f"{len(token_ids)} tokens but {len(labels)} labels")
    logits = token_logits(model, token_ids)
    losses = []
    rows = []
    for logit, gold in zip(logits, labels):
        probs, loss = ad.softmax_xent(logit, int(gold))
        losses.append(loss)
        rows.append(probs.data)
    total = ad.add_n(losses)
    return ad.scale(total, 1.0 / len(losses)), np.stack(rows)
