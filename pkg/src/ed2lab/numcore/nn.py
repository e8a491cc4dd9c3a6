"""Fully connected ReLU networks, optionally stacked along a leading member axis.

A stack of E networks with identical layer sizes keeps weights of shape
(E, fan_in, fan_out) and biases of shape (E, 1, fan_out), so a single batched
matmul evaluates the whole ensemble. Unstacked networks use (fan_in, fan_out)
weights and (fan_out,) biases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor, _unbroadcast


@dataclass
class MlpParams:
    weights: list[Tensor]
    biases: list[Tensor]
    members: int | None = None
    _sizes: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight and at least one layer")
        for prev, nxt in zip(self.weights, self.weights[1:]):
            if prev.shape[-1] != nxt.shape[-2]:
                raise ValueError(f"layer shapes do not chain: {prev.shape} -> {nxt.shape}")
        self._sizes = (self.weights[0].shape[-2],) + tuple(w.shape[-1] for w in self.weights)

    @property
    def sizes(self) -> tuple:
        return self._sizes

    @property
    def in_dim(self) -> int:
        return self._sizes[0]

    @property
    def out_dim(self) -> int:
        return self._sizes[-1]

    def parameters(self) -> list[Tensor]:
        """Weights and biases interleaved in layer order."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def named_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}.layer{i}.weight"] = w.values
            out[f"{prefix}.layer{i}.bias"] = b.values
        return out

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def copy(self, requires_grad: bool | None = None) -> "MlpParams":
        def dup(t):
            return Tensor(t.values.copy(), t.requires_grad if requires_grad is None else requires_grad)

        return MlpParams([dup(w) for w in self.weights], [dup(b) for b in self.biases], self.members)

    def detached(self) -> "MlpParams":
        """Views of the same storage that never receive gradients."""
        return MlpParams([w.detach() for w in self.weights], [b.detach() for b in self.biases], self.members)

    def select(self, index: slice) -> "MlpParams":
        """Untracked view of a contiguous range of members."""
        if self.members is None:
            raise ValueError("select() needs a stacked network")
        ws = [Tensor(w.values[index]) for w in self.weights]
        bs = [Tensor(b.values[index]) for b in self.biases]
        return MlpParams(ws, bs, ws[0].shape[0])


def init_mlp(
    sizes: list[int] | tuple,
    rng: np.random.Generator,
    members: int | None = None,
    shared: bool = False,
) -> MlpParams:
    """Uniform(+-1/sqrt(fan_in)) init for every weight and bias.

    With `shared=True` every member of the stack receives the same draw.
    """
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        if members is None:
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            b = rng.uniform(-bound, bound, size=(fan_out,))
        elif shared:
            w = np.repeat(rng.uniform(-bound, bound, size=(1, fan_in, fan_out)), members, axis=0)
            b = np.repeat(rng.uniform(-bound, bound, size=(1, 1, fan_out)), members, axis=0)
        else:
            w = rng.uniform(-bound, bound, size=(members, fan_in, fan_out))
            b = rng.uniform(-bound, bound, size=(members, 1, fan_out))
        weights.append(Tensor(w, requires_grad=True))
        biases.append(Tensor(b, requires_grad=True))
    return MlpParams(weights, biases, members)


def mlp_forward(params: MlpParams, x, track: bool = True):
    """ReLU hidden layers, linear output.

    `x` is (..., in_dim). For a stacked network the result is
    (members, ..., out_dim) with the input broadcast across members.
    With `track=False` plain arrays are used and nothing is recorded.
    """
    values = x.values if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if values.shape[-1] != params.in_dim:
        raise ValueError(f"input width {values.shape[-1]} does not match network input {params.in_dim}")
    if params.members is not None and values.ndim < 2:
        raise ValueError("stacked networks need batched input of shape (..., batch, in_dim)")
    last = len(params.weights) - 1

    if not track:
        h = values
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            h = h @ w.values
            h += b.values
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h

    h = x if isinstance(x, Tensor) else Tensor(values)
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = dense(h, w, b, relu=i < last)
    return h


def dense(h: Tensor, w: Tensor, b: Tensor, relu: bool = False) -> Tensor:
    """relu?(h @ w + b) as one graph node, which saves the temporaries of three separate ops."""
    a, wv = h.values, w.values
    if a.shape[-1] != wv.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {wv.shape}")
    out = a @ wv
    out += b.values
    if relu:
        np.maximum(out, 0.0, out=out)
        mask = out > 0.0

    def backward(g):
        if relu:
            g = g * mask
        gh = gw = gb = None
        if h.requires_grad:
            # a width-1 output layer makes the matmul an outer product, which broadcasting does faster
            gh = g * np.swapaxes(wv, -1, -2) if wv.shape[-1] == 1 else g @ np.swapaxes(wv, -1, -2)
            gh = _unbroadcast(gh, a.shape)
        if w.requires_grad:
            gw = _unbroadcast(np.swapaxes(a, -1, -2) @ g, wv.shape)
        if b.requires_grad:
            if g.ndim == 3 and b.ndim == 3 and b.shape[1] == 1:
                # batch-axis sum as a matvec, several times faster than a strided reduction
                gb = (np.ones(g.shape[1]) @ g)[:, None, :]
                gb = _unbroadcast(gb, b.shape)
            else:
                gb = _unbroadcast(g, b.shape)
        return gh, gw, gb

    return Tensor._node(out, (h, w, b), backward)
