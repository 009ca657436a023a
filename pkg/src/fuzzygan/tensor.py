"""Dense 2-D float64 tensors with a reverse-mode gradient tape.

Everything is strictly two-dimensional and 64-bit: a batch of vectors is
``[batch, width]``, a scalar loss is ``[1, 1]``. Operations record onto the
innermost active :class:`GradientTape` (if any); replaying the tape in
reverse order accumulates exact partial derivatives into every tensor that
requires gradients. Broadcasting is deliberately limited to repeating a
``1 x cols`` row or a ``rows x 1`` column of the *second* operand, which
keeps every gradient rule explicit.
"""
from __future__ import annotations

import math
import threading

import numpy as np

__all__ = [
    "DimensionError",
    "DomainError",
    "Tensor",
    "GradientTape",
    "active_tape",
    "matmul",
    "affine",
    "add",
    "sub",
    "mul",
    "scale",
    "shift",
    "elu",
    "relu",
    "sigmoid",
    "log",
    "clip",
    "concat_cols",
    "slice_cols",
    "cycle_cols",
    "reduce_sum",
    "reduce_mean",
    "reduce_prod",
    "dropout_apply",
    "he_normal_init",
    "random_normal_init",
    "zeros_init",
]


class DimensionError(ValueError):
    """Operand shapes cannot be combined."""


class DomainError(ValueError):
    """Values fall outside an operation's domain."""


_TAPES = threading.local()


def _tape_stack() -> list:
    stack = getattr(_TAPES, "stack", None)
    if stack is None:
        stack = []
        _TAPES.stack = stack
    return stack


def active_tape():
    """The innermost recording tape of this thread, or None."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """2-D float64 array with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"tensors are strictly 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})\n{self.data}"

    # -- operator sugar; scalars lift to scale/shift ops --
    def __add__(self, other):
        if isinstance(other, (int, float)):
            return shift(self, float(other))
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return shift(self, -float(other))
        return sub(self, other)

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            return shift(scale(self, -1.0), float(other))
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis: str = "all") -> "Tensor":
        return reduce_sum(self, axis)

    def mean(self, axis: str = "all") -> "Tensor":
        return reduce_mean(self, axis)


class GradientTape:
    """Ordered record of differentiable operations.

    Records are appended in execution order, which is already a topological
    order: an operation's inputs exist before its output. ``backward``
    replays the list exactly once, in reverse, accumulating gradients.
    """

    def __init__(self):
        self._records: list = []
        self._output_ids: set[int] = set()
        self._replayed = False

    def __enter__(self) -> "GradientTape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise RuntimeError("gradient tapes must be exited in LIFO order")
        stack.pop()
        return False

    def __len__(self) -> int:
        return len(self._records)

    def _record(self, out: Tensor, pull) -> None:
        self._records.append((out, pull))
        self._output_ids.add(id(out))

    def backward(self, loss: Tensor) -> None:
        """Seed d(loss)/d(loss)=1 and sweep the tape in reverse."""
        if loss.shape != (1, 1):
            raise DimensionError(f"loss must be a 1x1 scalar, got {loss.shape}")
        if id(loss) not in self._output_ids:
            raise ValueError("loss was not produced while this tape was recording")
        if self._replayed:
            raise RuntimeError("tape already replayed; gradients would double")
        self._replayed = True
        loss.grad = np.ones((1, 1))
        for out, pull in reversed(self._records):
            if out.grad is not None:
                pull(out.grad)


def _accum(t: Tensor, g: np.ndarray, own: bool = False) -> None:
    # `own` marks a freshly allocated array the caller will not reuse, which
    # may then be adopted as the gradient buffer without copying.
    if t.grad is None:
        t.grad = g if own else g.copy()
    else:
        t.grad += g


def _make(data: np.ndarray, *parents: Tensor) -> Tensor:
    out = Tensor(data)
    if active_tape() is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
    return out


def _record(out: Tensor, pull) -> None:
    if out.requires_grad:
        active_tape()._record(out, pull)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def _broadcast_kind(a: Tensor, b: Tensor, opname: str) -> str | None:
    """None for equal shapes, 'row'/'col' when b repeats, else raise."""
    if a.shape == b.shape:
        return None
    if b.shape == (1, a.cols):
        return "row"
    if b.shape == (a.rows, 1):
        return "col"
    raise DimensionError(f"{opname}: shapes {a.shape} and {b.shape} are incompatible")


def _unbroadcast(g: np.ndarray, kind: str | None) -> np.ndarray:
    if kind == "row":
        return g.sum(axis=0, keepdims=True)
    if kind == "col":
        return g.sum(axis=1, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    kind = _broadcast_kind(a, b, "add")
    out = _make(a.data + b.data, a, b)

    def pull(g):
        if a.requires_grad:
            _accum(a, g)
        if b.requires_grad:
            _accum(b, _unbroadcast(g, kind), own=kind is not None)

    _record(out, pull)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    kind = _broadcast_kind(a, b, "sub")
    out = _make(a.data - b.data, a, b)

    def pull(g):
        if a.requires_grad:
            _accum(a, g)
        if b.requires_grad:
            _accum(b, -_unbroadcast(g, kind), own=True)

    _record(out, pull)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Hadamard product (with the limited row/col broadcast on b)."""
    kind = _broadcast_kind(a, b, "mul")
    out = _make(a.data * b.data, a, b)

    def pull(g):
        if a.requires_grad:
            _accum(a, g * b.data, own=True)
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, kind), own=True)

    _record(out, pull)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = _make(a.data * c, a)

    def pull(g):
        if a.requires_grad:
            _accum(a, g * c, own=True)

    _record(out, pull)
    return out


def shift(a: Tensor, c: float) -> Tensor:
    out = _make(a.data + c, a)

    def pull(g):
        if a.requires_grad:
            _accum(a, g)

    _record(out, pull)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise DimensionError(f"matmul: inner dimensions disagree, {a.shape} x {b.shape}")
    out = _make(a.data @ b.data, a, b)

    def pull(g):
        if a.requires_grad:
            _accum(a, g @ b.data.T, own=True)
        if b.requires_grad:
            _accum(b, a.data.T @ g, own=True)

    _record(out, pull)
    return out


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Fused dense-layer map x @ w + b with a broadcast 1-row bias."""
    if x.cols != w.rows:
        raise DimensionError(f"affine: inner dimensions disagree, {x.shape} x {w.shape}")
    if b.shape != (1, w.cols):
        raise DimensionError(f"affine: bias must be 1x{w.cols}, got {b.shape}")
    out = _make(x.data @ w.data + b.data, x, w, b)

    def pull(g):
        if x.requires_grad:
            _accum(x, g @ w.data.T, own=True)
        if w.requires_grad:
            _accum(w, x.data.T @ g, own=True)
        if b.requires_grad:
            _accum(b, g.sum(axis=0, keepdims=True), own=True)

    _record(out, pull)
    return out


# ---------------------------------------------------------------------------
# activations


def elu(a: Tensor) -> Tensor:
    """Exponential linear unit with alpha=1: x for x>=0, e^x - 1 below."""
    x = a.data
    deriv = np.exp(np.minimum(x, 0.0))  # 1 for x>=0, e^x for x<0
    out = _make(np.where(x >= 0.0, x, deriv - 1.0), a)

    def pull(g):
        if a.requires_grad:
            _accum(a, g * deriv, own=True)

    _record(out, pull)
    return out


def relu(a: Tensor) -> Tensor:
    x = a.data
    out = _make(np.maximum(x, 0.0), a)

    def pull(g):
        if a.requires_grad:
            _accum(a, g * (x > 0.0), own=True)

    _record(out, pull)
    return out


def sigmoid(a: Tensor) -> Tensor:
    """Numerically stable logistic function 1 / (1 + e^-x)."""
    x = a.data
    s = np.empty_like(x)
    pos = x >= 0.0
    s[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    s[~pos] = ex / (1.0 + ex)
    out = _make(s, a)

    def pull(g):
        if a.requires_grad:
            _accum(a, g * s * (1.0 - s), own=True)

    _record(out, pull)
    return out


def log(a: Tensor) -> Tensor:
    x = a.data
    if np.any(x <= 0.0):
        i, j = np.argwhere(x <= 0.0)[0]
        raise DomainError(f"log of non-positive entry {x[i, j]!r} at ({i}, {j})")
    out = _make(np.log(x), a)

    def pull(g):
        if a.requires_grad:
            _accum(a, g / x, own=True)

    _record(out, pull)
    return out


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient passes through unclipped entries."""
    if not lo < hi:
        raise DomainError(f"clip needs lo < hi, got [{lo}, {hi}]")
    x = a.data
    out = _make(np.clip(x, lo, hi), a)
    inside = (x >= lo) & (x <= hi)

    def pull(g):
        if a.requires_grad:
            _accum(a, g * inside, own=True)

    _record(out, pull)
    return out


# ---------------------------------------------------------------------------
# structure: concatenation, slicing, cyclic column repetition


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.rows != b.rows:
        raise DimensionError(f"concat_cols: row counts differ, {a.shape} vs {b.shape}")
    out = _make(np.concatenate((a.data, b.data), axis=1), a, b)
    p = a.cols

    def pull(g):
        if a.requires_grad:
            _accum(a, g[:, :p])
        if b.requires_grad:
            _accum(b, g[:, p:])

    _record(out, pull)
    return out


def slice_cols(a: Tensor, start: int, length: int) -> Tensor:
    if start < 0 or length < 0 or start + length > a.cols:
        raise IndexError(
            f"slice_cols: [{start}, {start + length}) out of range for {a.cols} columns"
        )
    out = _make(a.data[:, start : start + length].copy(), a)

    def pull(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[:, start : start + length] = g
            _accum(a, full, own=True)

    _record(out, pull)
    return out


def cycle_cols(a: Tensor, width: int) -> Tensor:
    """Extend to `width` columns by cyclically repeating the existing ones.

    Gradients of repeated columns accumulate over all their repetitions.
    """
    if a.cols < 1:
        raise DomainError("cycle_cols needs at least one source column")
    if width < 1:
        raise DomainError(f"cycle_cols: target width must be >= 1, got {width}")
    idx = np.arange(width) % a.cols
    out = _make(a.data[:, idx], a)

    def pull(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, (slice(None), idx), g)
            _accum(a, full, own=True)

    _record(out, pull)
    return out


# ---------------------------------------------------------------------------
# reductions

_AXES = {"rows": 0, "cols": 1, "all": (0, 1)}


def _reduce_axis(a: Tensor, axis: str, opname: str):
    if axis not in _AXES:
        raise ValueError(f"{opname}: axis must be one of {sorted(_AXES)}, got {axis!r}")
    if a.data.size == 0:
        raise DomainError(f"{opname}: cannot reduce an empty tensor of shape {a.shape}")
    return _AXES[axis]


def reduce_sum(a: Tensor, axis: str = "all") -> Tensor:
    ax = _reduce_axis(a, axis, "reduce_sum")
    out = _make(np.sum(a.data, axis=ax, keepdims=True), a)

    def pull(g):
        if a.requires_grad:
            _accum(a, np.broadcast_to(g, a.shape).copy(), own=True)

    _record(out, pull)
    return out


def reduce_mean(a: Tensor, axis: str = "all") -> Tensor:
    ax = _reduce_axis(a, axis, "reduce_mean")
    count = {"rows": a.rows, "cols": a.cols, "all": a.data.size}[axis]
    out = _make(np.mean(a.data, axis=ax, keepdims=True), a)

    def pull(g):
        if a.requires_grad:
            _accum(a, np.broadcast_to(g / count, a.shape).copy(), own=True)

    _record(out, pull)
    return out


def reduce_prod(a: Tensor, axis: str = "all") -> Tensor:
    ax = _reduce_axis(a, axis, "reduce_prod")
    out = _make(np.prod(a.data, axis=ax, keepdims=True), a)

    def pull(g):
        if not a.requires_grad:
            return
        # Leave-one-out products, computed without dividing by zero entries:
        # a group with no zeros uses prod/x, a single zero puts the nonzero
        # product on the zero entry, two or more zeros kill every partial.
        x = a.data
        zero = x == 0.0
        x_safe = np.where(zero, 1.0, x)
        prod_safe = np.prod(x_safe, axis=ax, keepdims=True)
        nzeros = zero.sum(axis=ax, keepdims=True)
        partial = np.where(
            nzeros == 0,
            prod_safe / x_safe,
            np.where(zero & (nzeros == 1), prod_safe, 0.0),
        )
        _accum(a, partial * g, own=True)

    _record(out, pull)
    return out


# ---------------------------------------------------------------------------
# stochastic pieces: dropout and initializers


def dropout_apply(a: Tensor, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero with probability `rate`, scale survivors by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    keep = rng.random(a.shape) >= rate
    factor = 1.0 / (1.0 - rate)
    out = _make(a.data * keep * factor, a)

    def pull(g):
        if a.requires_grad:
            _accum(a, g * keep * factor, own=True)

    _record(out, pull)
    return out


def he_normal_init(rows: int, cols: int, rng: np.random.Generator) -> Tensor:
    """Weight matrix with i.i.d. N(0, 2/fan_in) entries; fan-in is `rows`."""
    if rows < 1:
        raise DomainError(f"he_normal_init: fan-in must be >= 1, got {rows}")
    return Tensor(rng.normal(0.0, math.sqrt(2.0 / rows), (rows, cols)), requires_grad=True)


def random_normal_init(rows: int, cols: int, std: float, rng: np.random.Generator) -> Tensor:
    if std <= 0.0:
        raise DomainError(f"random_normal_init: std must be positive, got {std}")
    return Tensor(rng.normal(0.0, std, (rows, cols)), requires_grad=True)


def zeros_init(rows: int, cols: int) -> Tensor:
    return Tensor(np.zeros((rows, cols)), requires_grad=True)
