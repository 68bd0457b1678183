"""Reverse-mode automatic differentiation over dense float64 arrays.

Values live in numpy arrays. While a :class:`Graph` is active (used as a
context manager), every differentiable operation appends a backward rule
to the graph's tape; ``backward(loss)`` replays the tape in reverse
recording order. Outside a graph the same functions compute plain values,
which is what inference uses.

Gradients accumulate: a tensor used twice receives the sum of both
contributions, and repeated backward passes keep adding until
``zero_grads`` clears them.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ContractError, LabelError, ShapeError


class Tensor:
    """Dense float64 array with a lazily allocated gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "graph")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.graph: Graph | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != ():
            raise ContractError(f"item() needs a scalar, got shape {self.data.shape}")
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


class Graph:
    """Tape of recorded operations in construction order.

    Single-threaded per instance; separate graphs over shared read-only
    parameters may run in parallel threads (each thread sees its own
    active-graph stack).
    """

    def __init__(self):
        self._tape: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []

    def __enter__(self) -> "Graph":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _stack().pop()
        return False

    def __len__(self) -> int:
        return len(self._tape)

    def backward(self, loss: Tensor, seed: float = 1.0) -> None:
        """Accumulate d(seed * loss)/d(ancestor) into every ancestor's grad.

        Visits each recorded operation exactly once, in reverse recording
        order; operations whose output never received a gradient are
        skipped (they do not feed the loss).
        """
        if loss.data.shape != ():
            raise ContractError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        if loss.graph is not self:
            raise ContractError("loss was not produced by operations recorded on this graph")
        _accumulate(loss, np.asarray(seed, dtype=np.float64))
        for out, rule in reversed(self._tape):
            if out.grad is not None:
                rule(out.grad)


_LOCAL = threading.local()


def _stack() -> list[Graph]:
    stack = getattr(_LOCAL, "stack", None)
    if stack is None:
        stack = _LOCAL.stack = []
    return stack


def _active() -> Graph | None:
    stack = _stack()
    return stack[-1] if stack else None


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _record(out: Tensor, rule: Callable[[np.ndarray], None]) -> None:
    graph = _active()
    if graph is not None and out.requires_grad:
        out.graph = graph
        graph._tape.append((out, rule))


def backward(loss: Tensor, seed: float = 1.0) -> None:
    """Backward pass from a scalar loss through the graph that produced it."""
    if loss.graph is None:
        raise ContractError("loss is not attached to a graph; build it inside `with Graph():`")
    loss.graph.backward(loss, seed=seed)


def zero_grads(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = None


# ---------------------------------------------------------------------------
# operations


def matvec(w: Tensor, x: Tensor) -> Tensor:
    """Matrix-vector product. d/dW = g outer x, d/dx = W^T g."""
    if w.data.ndim != 2 or x.data.ndim != 1 or w.data.shape[1] != x.data.shape[0]:
        raise ShapeError(f"matvec shape mismatch: W {w.data.shape} vs x {x.data.shape}")
    out = Tensor(w.data @ x.data, requires_grad=w.requires_grad or x.requires_grad)

    def rule(g):
        _accumulate(w, np.outer(g, x.data))
        _accumulate(x, w.data.T @ g)

    _record(out, rule)
    return out


def matmul(a: Tensor, b: Tensor, transpose_b: bool = False) -> Tensor:
    """2-d matrix product, optionally A @ B^T."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul needs 2-d operands, got {a.data.shape} and {b.data.shape}")
    bmat = b.data.T if transpose_b else b.data
    if a.data.shape[1] != bmat.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.data.shape} vs {b.data.shape}"
                         f"{' (transposed)' if transpose_b else ''}")
    out = Tensor(a.data @ bmat, requires_grad=a.requires_grad or b.requires_grad)

    def rule(g):
        if transpose_b:
            _accumulate(a, g @ b.data)
            _accumulate(b, g.T @ a.data)
        else:
            _accumulate(a, g @ b.data.T)
            _accumulate(b, a.data.T @ g)

    _record(out, rule)
    return out


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op} shape mismatch: {a.data.shape} vs {b.data.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    out = Tensor(a.data + b.data, requires_grad=a.requires_grad or b.requires_grad)

    def rule(g):
        _accumulate(a, g)
        _accumulate(b, g)

    _record(out, rule)
    return out


def add_n(terms: list[Tensor]) -> Tensor:
    """Elementwise sum of any number of same-shape tensors."""
    if not terms:
        raise ContractError("add_n needs at least one term")
    for t in terms[1:]:
        _same_shape(terms[0], t, "add_n")
    acc = terms[0].data.copy()
    for t in terms[1:]:
        acc += t.data
    out = Tensor(acc, requires_grad=any(t.requires_grad for t in terms))

    def rule(g):
        for t in terms:
            _accumulate(t, g)

    _record(out, rule)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    out = Tensor(a.data * b.data, requires_grad=a.requires_grad or b.requires_grad)

    def rule(g):
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    _record(out, rule)
    return out


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a Python constant (no gradient for the constant)."""
    c = float(c)
    out = Tensor(x.data * c, requires_grad=x.requires_grad)

    def rule(g):
        _accumulate(x, g * c)

    _record(out, rule)
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = Tensor(y, requires_grad=x.requires_grad)

    def rule(g):
        _accumulate(x, (1.0 - y * y) * g)

    _record(out, rule)
    return out


def _sigmoid_values(z: np.ndarray) -> np.ndarray:
    # split on sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid_values(x.data)
    out = Tensor(y, requires_grad=x.requires_grad)

    def rule(g):
        _accumulate(x, y * (1.0 - y) * g)

    _record(out, rule)
    return out


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate vectors along their single axis."""
    if not parts:
        raise ContractError("concat needs at least one part")
    for p in parts:
        if p.data.ndim != 1:
            raise ShapeError(f"concat needs vectors, got shape {p.data.shape}")
    out = Tensor(np.concatenate([p.data for p in parts]),
                 requires_grad=any(p.requires_grad for p in parts))
    sizes = [p.data.shape[0] for p in parts]

    def rule(g):
        offset = 0
        for p, n in zip(parts, sizes):
            _accumulate(p, g[offset:offset + n])
            offset += n

    _record(out, rule)
    return out


def concat_rows(mats: list[Tensor]) -> Tensor:
    """Stack 2-d blocks vertically; backward splits the gradient by rows."""
    if not mats:
        raise ContractError("concat_rows needs at least one block")
    cols = mats[0].data.shape[1]
    for m in mats:
        if m.data.ndim != 2 or m.data.shape[1] != cols:
            raise ShapeError(f"concat_rows column mismatch: {[m.data.shape for m in mats]}")
    out = Tensor(np.vstack([m.data for m in mats]),
                 requires_grad=any(m.requires_grad for m in mats))
    rows = [m.data.shape[0] for m in mats]

    def rule(g):
        offset = 0
        for m, n in zip(mats, rows):
            _accumulate(m, g[offset:offset + n])
            offset += n

    _record(out, rule)
    return out


def stack_rows(vectors: list[Tensor]) -> Tensor:
    """Stack equal-length vectors into a (len(vectors), dim) matrix."""
    if not vectors:
        raise ContractError("stack_rows needs at least one vector")
    dim = vectors[0].data.shape[0]
    for v in vectors:
        if v.data.ndim != 1 or v.data.shape[0] != dim:
            raise ShapeError(f"stack_rows length mismatch: {[v.data.shape for v in vectors]}")
    out = Tensor(np.stack([v.data for v in vectors]),
                 requires_grad=any(v.requires_grad for v in vectors))

    def rule(g):
        for i, v in enumerate(vectors):
            _accumulate(v, g[i])

    _record(out, rule)
    return out


def row(m: Tensor, i: int) -> Tensor:
    """Copy of row i of a matrix; backward scatters into that row."""
    if m.data.ndim != 2:
        raise ShapeError(f"row needs a matrix, got shape {m.data.shape}")
    if not 0 <= i < m.data.shape[0]:
        raise ShapeError(f"row {i} out of range for shape {m.data.shape}")
    out = Tensor(m.data[i].copy(), requires_grad=m.requires_grad)

    def rule(g):
        if m.requires_grad:
            if m.grad is None:
                m.grad = np.zeros_like(m.data)
            m.grad[i] += g

    _record(out, rule)
    return out


def gather_rows(m: Tensor, ids) -> Tensor:
    """Rows m[ids] as a matrix; repeated ids accumulate on backward."""
    idx = np.asarray(ids, dtype=np.intp)
    if m.data.ndim != 2:
        raise ShapeError(f"gather_rows needs a matrix, got shape {m.data.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= m.data.shape[0]):
        raise ShapeError(f"gather_rows index out of range for shape {m.data.shape}")
    out = Tensor(m.data[idx], requires_grad=m.requires_grad)

    def rule(g):
        if m.requires_grad:
            if m.grad is None:
                m.grad = np.zeros_like(m.data)
            np.add.at(m.grad, idx, g)

    _record(out, rule)
    return out


def vslice(x: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice of a vector."""
    if x.data.ndim != 1:
        raise ShapeError(f"vslice needs a vector, got shape {x.data.shape}")
    if not 0 <= start <= stop <= x.data.shape[0]:
        raise ShapeError(f"vslice [{start}:{stop}] out of range for shape {x.data.shape}")
    out = Tensor(x.data[start:stop].copy(), requires_grad=x.requires_grad)

    def rule(g):
        if x.requires_grad:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[start:stop] += g

    _record(out, rule)
    return out


def reduce_sum(x: Tensor) -> Tensor:
    out = Tensor(x.data.sum(), requires_grad=x.requires_grad)

    def rule(g):
        _accumulate(x, np.broadcast_to(g, x.data.shape))

    _record(out, rule)
    return out


def softmax_values(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax of a vector (plain values, no graph)."""
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def softmax_xent(logits: Tensor, gold: int) -> tuple[Tensor, Tensor]:
    """Softmax + cross-entropy against a gold index.

    Returns (probs, loss). probs is detached (no backward rule); the loss
    backpropagates probs - onehot(gold) into the logits.
    """
    k = logits.data.shape[0] if logits.data.ndim == 1 else 0
    if logits.data.ndim != 1 or k < 2:
        raise ContractError(f"softmax_xent needs a vector of >= 2 logits, got shape {logits.data.shape}")
    gold = int(gold)
    if not 0 <= gold < k:
        raise LabelError(f"gold label {gold} out of range for {k} classes")
    z = logits.data
    m = z.max()
    shifted = z - m
    e = np.exp(shifted)
    total = e.sum()
    p = e / total
    loss_value = np.log(total) - shifted[gold]
    probs = Tensor(p)
    loss = Tensor(np.asarray(loss_value), requires_grad=logits.requires_grad)

    def rule(g):
        d = p.copy()
        d[gold] -= 1.0
        _accumulate(logits, d * g)

    _record(loss, rule)
    return probs, loss


# ---------------------------------------------------------------------------
# gradient checking

# entries where analytic and numeric gradients are both below this floor are
# compared absolutely (a pure relative error would amplify roundoff noise)
REL_FLOOR = 1e-6


@dataclass
class GradCheckReport:
    """Worst-case comparison of analytic vs central-difference gradients."""

    eps: float
    tol: float
    max_rel_error: float = 0.0
    worst_param: str | None = None
    worst_index: tuple[int, ...] | None = None
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol

    def __str__(self):
        lines = [f"grad check: max relative error {self.max_rel_error:.3e} "
                 f"({'PASS' if self.passed else 'FAIL'} at tol {self.tol:g})"]
        for name, err in self.per_param.items():
            lines.append(f"  {name}: {err:.3e}")
        return "\n".join(lines)


def grad_check(f: Callable[[], Tensor], params: dict[str, Tensor],
               eps: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients of ``f()`` with central finite differences.

    ``f`` must deterministically rebuild the computation from the current
    parameter values. The analytic pass runs once under a fresh graph; the
    numeric passes evaluate ``f`` with single entries perturbed by +-eps.
    """
    zero_grads(params.values())
    with Graph():
        loss = f()
    backward(loss)
    analytic = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
                for name, p in params.items()}
    zero_grads(params.values())

    report = GradCheckReport(eps=eps, tol=tol)
    for name, p in params.items():
        worst = 0.0
        flat = p.data.reshape(-1)
        for k in range(flat.shape[0]):
            orig = flat[k]
            flat[k] = orig + eps
            up = f().item()
            flat[k] = orig - eps
            down = f().item()
            flat[k] = orig
            numeric = (up - down) / (2.0 * eps)
            a = analytic[name].reshape(-1)[k]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), REL_FLOOR)
            if rel > worst:
                worst = rel
            if rel > report.max_rel_error:
                report.max_rel_error = rel
                report.worst_param = name
                report.worst_index = np.unravel_index(k, p.data.shape)
        report.per_param[name] = worst
    return report
