"""Dense float64 arrays with tape-free reverse-mode differentiation.

Every op builds a node that remembers its parents and a closure mapping the
upstream gradient to gradients for each parent. `backward` walks the graph
once in reverse topological order, accumulates into leaf `.grad` buffers and
then drops the graph so memory stays bounded by a single forward call.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (reverses numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _as_tensor(x) -> "Tensor":
    return x if isinstance(x, Tensor) else Tensor(x)


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward: Callable | None = None

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def item(self) -> float:
        if self.values.size != 1:
            _raise_not_scalar(self)
        return float(self.values.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Same storage, no gradient tracking."""
        return Tensor(self.values)

    def zero_grad(self):
        self.grad = None

    # -- graph construction -------------------------------------------------

    @staticmethod
    def _node(values: np.ndarray, parents: Sequence["Tensor"], backward: Callable) -> "Tensor":
        out = Tensor(values)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def __add__(self, other):
        other = _as_tensor(other)
        a_shape, b_shape = self.shape, other.shape
        return Tensor._node(
            self.values + other.values,
            (self, other),
            lambda g: (_unbroadcast(g, a_shape), _unbroadcast(g, b_shape)),
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_tensor(other)
        a_shape, b_shape = self.shape, other.shape
        return Tensor._node(
            self.values - other.values,
            (self, other),
            lambda g: (_unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)),
        )

    def __rsub__(self, other):
        return _as_tensor(other) - self

    def __neg__(self):
        return Tensor._node(-self.values, (self,), lambda g: (-g,))

    def __mul__(self, other):
        other = _as_tensor(other)
        a, b = self.values, other.values
        return Tensor._node(
            a * b,
            (self, other),
            lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other)
        a, b = self.values, other.values
        out = a / b
        return Tensor._node(
            out,
            (self, other),
            lambda g: (_unbroadcast(g / b, a.shape), _unbroadcast(-g * out / b, b.shape)),
        )

    def __matmul__(self, other):
        other = _as_tensor(other)
        a, b = self.values, other.values
        if a.shape[-1] != b.shape[-2]:
            raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

        def backward(g):
            ga = _unbroadcast(g @ np.swapaxes(b, -1, -2), a.shape) if self.requires_grad else None
            gb = _unbroadcast(np.swapaxes(a, -1, -2) @ g, b.shape) if other.requires_grad else None
            return ga, gb

        return Tensor._node(a @ b, (self, other), backward)

    def relu(self):
        mask = self.values > 0
        return Tensor._node(self.values * mask, (self,), lambda g: (g * mask,))

    def tanh(self):
        out = np.tanh(self.values)
        return Tensor._node(out, (self,), lambda g: (g * (1.0 - out * out),))

    def abs(self):
        sign = np.sign(self.values)
        return Tensor._node(np.abs(self.values), (self,), lambda g: (g * sign,))

    def maximum(self, floor: float):
        """Elementwise max against a constant; gradient flows where the tensor wins."""
        mask = self.values > floor
        return Tensor._node(np.where(mask, self.values, floor), (self,), lambda g: (g * mask,))

    def sum(self, axis=None, keepdims: bool = False):
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)

        return Tensor._node(self.values.sum(axis=axis, keepdims=keepdims), (self,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.values.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        old = self.shape
        return Tensor._node(self.values.reshape(*shape), (self,), lambda g: (g.reshape(old),))


def concat(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate along the last axis, broadcasting leading dimensions first."""
    tensors = [_as_tensor(t) for t in tensors]
    lead = np.broadcast_shapes(*(t.shape[:-1] for t in tensors))
    arrays = [np.broadcast_to(t.values, lead + t.shape[-1:]) for t in tensors]
    splits = np.cumsum([a.shape[-1] for a in arrays])[:-1]

    def backward(g):
        parts = np.split(g, splits, axis=-1)
        return tuple(_unbroadcast(p, t.shape) for p, t in zip(parts, tensors))

    return Tensor._node(np.concatenate(arrays, axis=-1), tensors, backward)


def _raise_not_scalar(t: Tensor):
    raise ValueError(f"expected a scalar tensor, got shape {t.shape}")


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every tracked leaf reachable from `loss`."""
    if loss.values.size != 1:
        _raise_not_scalar(loss)
    if not loss.requires_grad:
        return

    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg
        node._parents = ()
        node._backward = None
