"""Minimal dense numeric kernel with reverse-mode gradient accumulation.

Tensors wrap contiguous numpy arrays (float32 by default; reductions
accumulate in float64). Every operation builds a tape node whose backward
closure scatters gradients into its parents; `backward(loss)` walks the
tape once in reverse topological order. Forward results are checked for
NaN/Inf and raise FloatingPointError on detection.

A ParamStore is confined to one training thread; forward passes over a
frozen store are read-only and may run concurrently.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32


class Tensor:
    """A value node on the tape. `data` is a numpy array, `grad` matches its shape."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, parents: tuple = (), backward: Optional[Callable] = None,
                 requires_grad: bool = False):
        self.data = np.asarray(data)
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError("non-finite values in tensor")
        self.grad: Optional[np.ndarray] = None
        self._parents = parents
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def accumulate(self, g: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


def constant(data, dtype=None) -> Tensor:
    arr = np.asarray(data, dtype=dtype if dtype is not None else DEFAULT_DTYPE)
    return Tensor(arr)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into .grad over the whole tape."""
    if loss.data.shape != ():
        raise ValueError("backward expects a scalar loss")
    # iterative topological order (tape depth exceeds the recursion limit
    # for long recurrent sequences)
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
        for parent in node._parents:
            if id(parent) not in seen and parent.requires_grad:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data, (a, b))

    def back(g):
        a.accumulate(_unbroadcast(g, a.data.shape))
        b.accumulate(_unbroadcast(g, b.data.shape))

    out._backward = back
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data, (a, b))

    def back(g):
        a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    out._backward = back
    return out


def scale(a: Tensor, s: float) -> Tensor:
    out = Tensor(a.data * a.data.dtype.type(s), (a,))
    out._backward = lambda g: a.accumulate(g * a.data.dtype.type(s))
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a @ b for matrix-matrix, vector-matrix, and matrix-vector shapes."""
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2) or (a.data.ndim, b.data.ndim) == (1, 1):
        raise ValueError(f"matmul expects 2D@2D, 1D@2D or 2D@1D, got {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, (a, b))

    def back(g):
        if a.data.ndim == 1:        # (k,) @ (k,m) -> (m,)
            a.accumulate(b.data @ g)
            b.accumulate(np.outer(a.data, g))
        elif b.data.ndim == 1:      # (n,k) @ (k,) -> (n,)
            a.accumulate(np.outer(g, b.data))
            b.accumulate(a.data.T @ g)
        else:                       # (n,k) @ (k,m) -> (n,m)
            a.accumulate(g @ b.data.T)
            b.accumulate(a.data.T @ g)

    out._backward = back
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.data.T.copy(), (a,))
    out._backward = lambda g: a.accumulate(g.T)
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape), (a,))
    out._backward = lambda g: a.accumulate(g.reshape(a.data.shape))
    return out


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis), tuple(parts))
    sizes = [p.data.shape[axis] for p in parts]

    def back(g):
        offset = 0
        for p, size in zip(parts, sizes):
            index = [slice(None)] * g.ndim
            index[axis] = slice(offset, offset + size)
            p.accumulate(g[tuple(index)])
            offset += size

    out._backward = back
    return out


def stack(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.stack([p.data for p in parts], axis=axis), tuple(parts))

    def back(g):
        for i, p in enumerate(parts):
            p.accumulate(np.take(g, i, axis=axis))

    out._backward = back
    return out


def row(a: Tensor, i: int) -> Tensor:
    """a[i] of a 2-D tensor, as a vector."""
    out = Tensor(a.data[i].copy(), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[i] = g
        a.accumulate(full)

    out._backward = back
    return out


def rows(a: Tensor, indices: Sequence[int]) -> Tensor:
    """Gather a[indices] (embedding lookup); backward scatter-adds."""
    idx = np.asarray(indices, dtype=np.intp)
    out = Tensor(a.data[idx].copy(), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        a.accumulate(full)

    out._backward = back
    return out


def plane(a: Tensor, i: int) -> Tensor:
    """a[i] of a 3-D tensor, as a matrix."""
    out = Tensor(a.data[i].copy(), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[i] = g
        a.accumulate(full)

    out._backward = back
    return out


def element(a: Tensor, i: int) -> Tensor:
    """a[i] of a 1-D tensor, as a scalar."""
    out = Tensor(a.data[i].copy(), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[i] = g
        a.accumulate(full)

    out._backward = back
    return out


def slice1d(a: Tensor, start: int, stop: int) -> Tensor:
    out = Tensor(a.data[start:stop].copy(), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        a.accumulate(full)

    out._backward = back
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y, (a,))
    out._backward = lambda g: a.accumulate(g * (1.0 - y * y))
    return out


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    out = Tensor(y, (a,))
    out._backward = lambda g: a.accumulate(g * (y * (1.0 - y)))
    return out


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0), (a,))
    out._backward = lambda g: a.accumulate(g * (a.data > 0.0))
    return out


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return add(matmul(x, w), b)


def dropout(a: Tensor, p: float, rng: np.random.Generator, train: bool) -> Tensor:
    """Inverted-scaling dropout: expectation of the output equals the input."""
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not train or p == 0.0:
        return a
    keep = (rng.random(a.data.shape) >= p).astype(a.data.dtype) / a.data.dtype.type(1.0 - p)
    out = Tensor(a.data * keep, (a,))
    out._backward = lambda g: a.accumulate(g * keep)
    return out


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(np.asarray(a.data.sum(dtype=np.float64), dtype=a.data.dtype), (a,))
    out._backward = lambda g: a.accumulate(np.full_like(a.data, g))
    return out


def mean_all(a: Tensor) -> Tensor:
    return scale(sum_all(a), 1.0 / a.data.size)


def add_n(parts: Iterable[Tensor]) -> Tensor:
    parts = list(parts)
    total = parts[0]
    for p in parts[1:]:
        total = add(total, p)
    return total


def maxpool_rows(a: Tensor) -> Tensor:
    """Max over axis 0 of a 2-D tensor; gradient flows to the first argmax row."""
    arg = np.argmax(a.data, axis=0)
    out = Tensor(a.data[arg, np.arange(a.data.shape[1])].copy(), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[arg, np.arange(a.data.shape[1])] = g
        a.accumulate(full)

    out._backward = back
    return out


def windows3(a: Tensor) -> Tensor:
    """Zero-padded width-3 windows over the rows of (S, D): returns (S, 3D)."""
    s, d = a.data.shape
    padded = np.zeros((s + 2, d), dtype=a.data.dtype)
    padded[1:-1] = a.data
    win = np.concatenate([padded[:-2], padded[1:-1], padded[2:]], axis=1)
    out = Tensor(win, (a,))

    def back(g):
        full = np.zeros((s + 2, d), dtype=a.data.dtype)
        full[:-2] += g[:, :d]
        full[1:-1] += g[:, d:2 * d]
        full[2:] += g[:, 2 * d:]
        a.accumulate(full[1:-1])

    out._backward = back
    return out


def softmax_cross_entropy(logits: Tensor, gold: int) -> Tensor:
    """-log softmax(logits)[gold] for a 1-D logit vector, computed stably."""
    z = logits.data.astype(np.float64)
    z = z - z.max()
    log_norm = np.log(np.exp(z).sum())
    loss = log_norm - z[gold]
    out = Tensor(np.asarray(loss, dtype=logits.data.dtype), (logits,))

    def back(g):
        probs = np.exp(z - log_norm)
        probs[gold] -= 1.0
        logits.accumulate((g * probs).astype(logits.data.dtype))

    out._backward = back
    return out


class ParamStore:
    """Named trainable tensors with their gradients and Adam moments."""

    def __init__(self, dtype=DEFAULT_DTYPE):
        self.dtype = np.dtype(dtype)
        self.step = 0
        self._params: dict[str, Tensor] = {}
        self._moments: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(np.ascontiguousarray(value, dtype=self.dtype), requires_grad=True)
        self._params[name] = t
        self._moments[name] = (np.zeros_like(t.data), np.zeros_like(t.data))
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def values(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, arr in values.items():
            t = self._params[name]
            if t.data.shape != arr.shape:
                raise ValueError(f"shape mismatch for {name!r}")
            t.data = np.ascontiguousarray(arr, dtype=self.dtype)

    def grad_norm(self) -> float:
        total = 0.0
        for t in self._params.values():
            if t.grad is not None:
                total += float(np.sum(t.grad.astype(np.float64) ** 2))
        return float(np.sqrt(total))


def adam_step(store: ParamStore, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, clip_norm: Optional[float] = 5.0) -> None:
    """One Adam update over every parameter; zeroes gradients and bumps the step.

    Gradients are clipped to `clip_norm` global L2 norm first (recurrent
    training stabilizer); pass clip_norm=None to disable.
    """
    clip_scale = 1.0
    if clip_norm is not None:
        norm = store.grad_norm()
        if norm > clip_norm:
            clip_scale = clip_norm / norm
    t = store.step + 1
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t
    for name, param in store.items():
        g = param.grad
        if g is None:
            g = np.zeros_like(param.data)
        elif clip_scale != 1.0:
            g = g * param.data.dtype.type(clip_scale)
        m, v = store._moments[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        param.data -= (lr * (m / bias1) / (np.sqrt(v / bias2) + eps)).astype(param.data.dtype)
    store.zero_grad()
    store.step = t


def grad_check(f: Callable[[], Tensor], store: ParamStore, epsilon: float = 1e-4) -> float:
    """Max relative error between tape gradients and central finite differences.

    f must be a deterministic scalar forward pass over the store (dropout
    disabled). Use a float64 store: float32 differences drown in rounding.
    """
    store.zero_grad()
    backward(f())
    analytic = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
                for name, p in store.items()}
    worst = 0.0
    for name, param in store.items():
        flat = param.data.reshape(-1)
        ref = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = float(f().data)
            flat[i] = orig - epsilon
            down = float(f().data)
            flat[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            err = abs(float(ref[i]) - numeric) / max(abs(float(ref[i])), abs(numeric), 1.0)
            worst = max(worst, err)
    store.zero_grad()
    return worst
