"""Reverse-mode automatic differentiation over dense float64 arrays.

Every operation records its inputs and a backward closure on the result;
:meth:`Tensor.backward` walks the recorded graph in reverse topological order.
Only the kernels used by the encoders and losses in this package exist.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not chain."""


class NonFinite(FloatingPointError):
    """A loss, gradient or parameter became NaN or infinite."""


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False, _parents: tuple = (),
                 _backward: Callable | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents if self.requires_grad else ()
        self._backward = _backward if self.requires_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.value)

    def backward(self) -> None:
        if self.value.size != 1:
            raise ShapeError("backward() needs a scalar output")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, g: np.ndarray) -> None:
        if not self.requires_grad:
            return
        self.grad = g.copy() if self.grad is None else self.grad + g

    __add__ = lambda self, o: add(self, o)  # noqa: E731
    __radd__ = lambda self, o: add(o, self)  # noqa: E731
    __sub__ = lambda self, o: sub(self, o)  # noqa: E731
    __rsub__ = lambda self, o: sub(o, self)  # noqa: E731
    __mul__ = lambda self, o: mul(self, o)  # noqa: E731
    __rmul__ = lambda self, o: mul(o, self)  # noqa: E731
    __matmul__ = lambda self, o: matmul(self, o)  # noqa: E731
    __neg__ = lambda self: mul(self, -1.0)  # noqa: E731
    __truediv__ = lambda self, c: mul(self, 1.0 / c)  # noqa: E731


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {a.shape} with {b.shape}") from exc


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)

    def back(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))

    return Tensor(a.value + b.value, _parents=(a, b), _backward=back)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)

    def back(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(-g, b.shape))

    return Tensor(a.value - b.value, _parents=(a, b), _backward=back)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)

    def back(g):
        a._accumulate(_unbroadcast(g * b.value, a.shape))
        b._accumulate(_unbroadcast(g * a.value, b.shape))

    return Tensor(a.value * b.value, _parents=(a, b), _backward=back)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes {a.shape} @ {b.shape}")

    def back(g):
        a._accumulate(g @ b.value.T)
        b._accumulate(a.value.T @ g)

    return Tensor(a.value @ b.value, _parents=(a, b), _backward=back)


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.value > 0

    def back(g):
        x._accumulate(g * mask)

    return Tensor(np.where(mask, x.value, 0.0), _parents=(x,), _backward=back)


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.value)

    def back(g):
        x._accumulate(g * out)

    return Tensor(out, _parents=(x,), _backward=back)


def log(x) -> Tensor:
    x = as_tensor(x)

    def back(g):
        x._accumulate(g / x.value)

    return Tensor(np.log(x.value), _parents=(x,), _backward=back)


def sigmoid_array(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softplus(x) -> Tensor:
    """``log(1 + exp(x))`` evaluated without overflow."""
    x = as_tensor(x)
    v = x.value
    out = np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))

    def back(g):
        x._accumulate(g * sigmoid_array(v))

    return Tensor(out, _parents=(x,), _backward=back)


def sum(x, axis: int | None = None) -> Tensor:  # noqa: A001
    x = as_tensor(x)

    def back(g):
        if axis is None:
            x._accumulate(np.broadcast_to(g, x.shape).copy())
        else:
            x._accumulate(np.broadcast_to(np.expand_dims(g, axis), x.shape).copy())

    return Tensor(x.value.sum(axis=axis), _parents=(x,), _backward=back)


def mean(x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    n = x.value.size if axis is None else x.shape[axis]
    return mul(sum(x, axis), 1.0 / n)


def square(x) -> Tensor:
    return mul(x, x)


def logsumexp(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    m = np.max(x.value, axis=axis, keepdims=True)
    shifted = np.exp(x.value - m)
    total = shifted.sum(axis=axis, keepdims=True)
    out = (np.log(total) + m).squeeze(axis)
    soft = shifted / total

    def back(g):
        x._accumulate(np.expand_dims(g, axis) * soft)

    return Tensor(out, _parents=(x,), _backward=back)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    m = np.max(x.value, axis=axis, keepdims=True)
    z = x.value - m
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    soft = np.exp(out)

    def back(g):
        x._accumulate(g - soft * g.sum(axis=axis, keepdims=True))

    return Tensor(out, _parents=(x,), _backward=back)


def pick(x, index: np.ndarray) -> Tensor:
    """Row-wise selection ``x[i, index[i]]`` of a 2-D tensor."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    if x.value.ndim != 2 or index.shape != (x.shape[0],):
        raise ShapeError(f"pick needs (n, c) and (n,), got {x.shape} and {index.shape}")
    rows = np.arange(x.shape[0])

    def back(g):
        full = np.zeros_like(x.value)
        full[rows, index] = g
        x._accumulate(full)

    return Tensor(x.value[rows, index], _parents=(x,), _backward=back)


def take_rows(x, index: np.ndarray) -> Tensor:
    """Gather rows ``x[index]``; repeated indices accumulate gradient."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)

    def back(g):
        full = np.zeros_like(x.value)
        np.add.at(full, index, g)
        x._accumulate(full)

    return Tensor(x.value[index], _parents=(x,), _backward=back)


def segment_sum(x, segments: np.ndarray, n_segments: int) -> Tensor:
    """Sum rows of ``x`` into ``n_segments`` buckets given by ``segments``."""
    x = as_tensor(x)
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape[0] != x.shape[0]:
        raise ShapeError("one segment id per row required")
    out = np.zeros((n_segments,) + x.shape[1:])
    np.add.at(out, segments, x.value)

    def back(g):
        x._accumulate(g[segments])

    return Tensor(out, _parents=(x,), _backward=back)


def segment_mean(x, segments: np.ndarray, n_segments: int) -> Tensor:
    counts = np.bincount(np.asarray(segments, dtype=np.int64), minlength=n_segments).astype(np.float64)
    scale = 1.0 / np.maximum(counts, 1.0)
    scale = scale.reshape((n_segments,) + (1,) * (as_tensor(x).value.ndim - 1))
    return mul(segment_sum(x, segments, n_segments), scale)


def segment_logsumexp(x, segments: np.ndarray, n_segments: int) -> Tensor:
    """Per-segment log-sum-exp of a 1-D tensor, shifted by each segment maximum."""
    x = as_tensor(x)
    segments = np.asarray(segments, dtype=np.int64)
    if x.value.ndim != 1 or segments.shape != x.shape:
        raise ShapeError("segment_logsumexp expects a vector and matching segment ids")
    m = np.full(n_segments, -np.inf)
    np.maximum.at(m, segments, x.value)
    shifted = np.exp(x.value - m[segments])
    total = np.zeros(n_segments)
    np.add.at(total, segments, shifted)
    with np.errstate(divide="ignore"):
        out = np.log(total) + m
    soft = shifted / total[segments]

    def back(g):
        x._accumulate(g[segments] * soft)

    return Tensor(out, _parents=(x,), _backward=back)


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    try:
        out = np.concatenate([x.value for x in xs], axis=axis)
    except ValueError as exc:
        raise ShapeError(str(exc)) from exc
    sizes = np.cumsum([x.shape[axis] for x in xs])[:-1]

    def back(g):
        for x, piece in zip(xs, np.split(g, sizes, axis=axis)):
            x._accumulate(piece)

    return Tensor(out, _parents=tuple(xs), _backward=back)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)

    def back(g):
        x._accumulate(g.reshape(x.shape))

    return Tensor(x.value.reshape(shape), _parents=(x,), _backward=back)
