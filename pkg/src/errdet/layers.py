"""Composition layers: convolutional context windows, Elman recurrences,
peephole LSTM cells, and the bidirectional wrapper.

Every function here maps autodiff tensors to autodiff tensors, so a layer
recorded under an active Graph is differentiable end to end. Recurrent
cells expose a ``run`` method that consumes the whole sentence as a
(T, dim) matrix: the input-side affine maps are then batched into a
single matmul per direction, which is substantially cheaper than one
matvec per token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, VocabularyError


def embed(table: Tensor, token_ids) -> list[Tensor]:
    """Embedding rows for a token-id sequence; rows stay trainable."""
    vocab_size = table.data.shape[0]
    for i in token_ids:
        if not 0 <= int(i) < vocab_size:
            raise VocabularyError(f"token id {i} outside vocabulary of size {vocab_size}")
    return [ad.row(table, int(i)) for i in token_ids]


def conv_context(xs: list[Tensor], window: int, pad: Tensor) -> list[Tensor]:
    """Concatenated context vectors: window tokens on either side of each
    position, order preserved, out-of-range positions filled with the
    trained padding vector."""
    T = len(xs)
    contexts = []
    for t in range(T):
        parts = [xs[t + d] if 0 <= t + d < T else pad
                 for d in range(-window, window + 1)]
        contexts.append(ad.concat(parts))
    return contexts


def conv_compose(xs: list[Tensor], window: int, pad: Tensor, w: Tensor) -> list[Tensor]:
    """tanh(W c_t) over the context vectors of conv_context."""
    return [ad.tanh(ad.matvec(w, c)) for c in conv_context(xs, window, pad)]


_ACTIVATIONS = {"sigmoid": ad.sigmoid, "tanh": ad.tanh}


def elman_step(x: Tensor, h_prev: Tensor, w: Tensor, v: Tensor,
               nonlinearity: str = "sigmoid") -> Tensor:
    """One Elman recurrence step: act(W x + V h_prev)."""
    return _ACTIVATIONS[nonlinearity](ad.add(ad.matvec(w, x), ad.matvec(v, h_prev)))


@dataclass
class ElmanCell:
    w: Tensor  # (hidden, input)
    v: Tensor  # (hidden, hidden)
    nonlinearity: str = "sigmoid"

    @property
    def hidden_dim(self) -> int:
        return self.w.data.shape[0]

    def run(self, x_matrix: Tensor, reverse: bool = False) -> list[Tensor]:
        act = _ACTIVATIONS[self.nonlinearity]
        xw = ad.matmul(x_matrix, self.w, transpose_b=True)  # (T, hidden)
        T = x_matrix.data.shape[0]
        h = Tensor(np.zeros(self.hidden_dim))
        states: list[Tensor] = [None] * T  # type: ignore[list-item]
        order = range(T - 1, -1, -1) if reverse else range(T)
        for t in order:
            h = act(ad.add(ad.row(xw, t), ad.matvec(self.v, h)))
            states[t] = h
        return states


@dataclass
class LstmCell:
    """Peephole LSTM cell.

    Gate preactivations share one fused affine map (input, forget,
    candidate, output in that order). Peepholes are elementwise
    (diagonal) weights on the cell state by default -- the input and
    forget gates see the previous cell state, the output gate sees the
    updated one -- or full matrices when ``full_peepholes`` is set.
    """

    w_i: Tensor
    u_i: Tensor
    v_i: Tensor
    b_i: Tensor
    w_f: Tensor
    u_f: Tensor
    v_f: Tensor
    b_f: Tensor
    w_cand: Tensor
    u_cand: Tensor
    b_cand: Tensor
    w_o: Tensor
    u_o: Tensor
    v_o: Tensor
    b_o: Tensor
    full_peepholes: bool = False

    @property
    def hidden_dim(self) -> int:
        return self.w_i.data.shape[0]

    def fuse(self) -> tuple[Tensor, Tensor, Tensor]:
        """Gate-stacked weights, recorded on the active graph so the
        gradient flows back to the individual parameters."""
        w4 = ad.concat_rows([self.w_i, self.w_f, self.w_cand, self.w_o])
        u4 = ad.concat_rows([self.u_i, self.u_f, self.u_cand, self.u_o])
        b4 = ad.concat([self.b_i, self.b_f, self.b_cand, self.b_o])
        return w4, u4, b4

    def _peep(self, v: Tensor, c: Tensor) -> Tensor:
        return ad.matvec(v, c) if self.full_peepholes else ad.mul(v, c)

    def step_from_pre(self, pre_x: Tensor, h_prev: Tensor, c_prev: Tensor,
                      u4: Tensor, b4: Tensor) -> tuple[Tensor, Tensor]:
        """One step given the already-applied input map (W4 x_t)."""
        n = self.hidden_dim
        pre = ad.add(ad.add(pre_x, ad.matvec(u4, h_prev)), b4)
        gate_i = ad.sigmoid(ad.add(ad.vslice(pre, 0, n), self._peep(self.v_i, c_prev)))
        gate_f = ad.sigmoid(ad.add(ad.vslice(pre, n, 2 * n), self._peep(self.v_f, c_prev)))
        cand = ad.tanh(ad.vslice(pre, 2 * n, 3 * n))
        c = ad.add(ad.mul(gate_f, c_prev), ad.mul(gate_i, cand))
        gate_o = ad.sigmoid(ad.add(ad.vslice(pre, 3 * n, 4 * n), self._peep(self.v_o, c)))
        h = ad.mul(gate_o, ad.tanh(c))
        return h, c

    def run(self, x_matrix: Tensor, reverse: bool = False) -> list[Tensor]:
        w4, u4, b4 = self.fuse()
        xw = ad.matmul(x_matrix, w4, transpose_b=True)  # (T, 4*hidden)
        T = x_matrix.data.shape[0]
        zeros = np.zeros(self.hidden_dim)
        h, c = Tensor(zeros), Tensor(zeros.copy())
        states: list[Tensor] = [None] * T  # type: ignore[list-item]
        order = range(T - 1, -1, -1) if reverse else range(T)
        for t in order:
            h, c = self.step_from_pre(ad.row(xw, t), h, c, u4, b4)
            states[t] = h
        return states


def lstm_step(x: Tensor, h_prev: Tensor, c_prev: Tensor,
              cell: LstmCell) -> tuple[Tensor, Tensor]:
    """One LSTM step from an explicit input vector and previous states."""
    w4, u4, b4 = cell.fuse()
    return cell.step_from_pre(ad.matvec(w4, x), h_prev, c_prev, u4, b4)


def bidirectional(forward_cell, backward_cell, x_matrix: Tensor) -> list[Tensor]:
    """Per-token concatenation of a left-to-right and a right-to-left pass
    with independent parameter sets."""
    if forward_cell.hidden_dim != backward_cell.hidden_dim:
        raise ConfigError("bidirectional halves must have equal hidden size")
    fw = forward_cell.run(x_matrix, reverse=False)
    bw = backward_cell.run(x_matrix, reverse=True)
    return [ad.concat([f, b]) for f, b in zip(fw, bw)]
