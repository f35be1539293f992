"""Dense float64 tensors with reverse-mode gradients.

Sized for desk-scale models: every op checks its output for NaN/Inf, keeps
full 64-bit precision, and carries an explicit backward closure. There is no
hidden global state; randomness enters only through generators passed by the
caller.
"""

from __future__ import annotations

import numpy as np


class NonFiniteError(FloatingPointError):
    """An operation produced NaN or Inf."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("tensor holds non-finite values")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        order = []
        seen = set()
        stack = [(self, False)]
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
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __neg__(self):
        return mul(self, -1.0)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)  # own the buffer; g may be shared
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, (gs, ss) in enumerate(zip(g.shape, shape)):
        if ss == 1 and gs != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _make(data, parents, backward) -> Tensor:
    if any(p.requires_grad or p._parents for p in parents):
        return Tensor(data, _parents=tuple(parents), _backward=backward)
    return Tensor(data)


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data + b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data * b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2):
        raise ValueError("matmul supports 1-D and 2-D operands only")
    if a.data.shape[-1] != b.data.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def backward(g):
        if a.data.ndim == 2 and b.data.ndim == 2:
            _accumulate(a, g @ b.data.T)
            _accumulate(b, a.data.T @ g)
        elif a.data.ndim == 1 and b.data.ndim == 2:
            _accumulate(a, b.data @ g)
            _accumulate(b, np.outer(a.data, g))
        elif a.data.ndim == 2 and b.data.ndim == 1:
            _accumulate(a, np.outer(g, b.data))
            _accumulate(b, a.data.T @ g)
        else:  # 1-D dot product
            _accumulate(a, g * b.data)
            _accumulate(b, g * a.data)

    return _make(out_data, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    a = _wrap(a)

    def backward(g):
        _accumulate(a, g.T)

    return _make(a.data.T, (a,), backward)


def reshape(a: Tensor, shape) -> Tensor:
    a = _wrap(a)

    def backward(g):
        _accumulate(a, g.reshape(a.data.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def sum_all(a: Tensor) -> Tensor:
    a = _wrap(a)

    def backward(g):
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy())

    return _make(a.data.sum(), (a,), backward)


def mean_rows(a: Tensor) -> Tensor:
    """Mean over axis 0 of a 2-D tensor."""
    a = _wrap(a)
    p = a.data.shape[0]

    def backward(g):
        _accumulate(a, np.tile(g / p, (p, 1)))

    return _make(a.data.mean(axis=0), (a,), backward)


def concat(tensors, axis=0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accumulate(t, g[tuple(sl)])

    return _make(out_data, tensors, backward)


def tile_rows(v: Tensor, p: int) -> Tensor:
    """Broadcast a vector to p identical rows."""
    v = _wrap(v)

    def backward(g):
        _accumulate(v, g.sum(axis=0))

    return _make(np.tile(v.data, (p, 1)), (v,), backward)


def diag_part(a: Tensor) -> Tensor:
    """Diagonal of a square matrix as a vector."""
    a = _wrap(a)

    def backward(g):
        full = np.zeros_like(a.data)
        np.fill_diagonal(full, g)
        _accumulate(a, full)

    return _make(np.diagonal(a.data).copy(), (a,), backward)


def tanh(a: Tensor) -> Tensor:
    a = _wrap(a)
    out_data = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), backward)


def relu(a: Tensor) -> Tensor:
    a = _wrap(a)
    out_data = np.maximum(a.data, 0.0)

    def backward(g):
        _accumulate(a, g * (a.data > 0.0))

    return _make(out_data, (a,), backward)


def identity(a: Tensor) -> Tensor:
    return _wrap(a)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_tau(a: Tensor, tau: float) -> Tensor:
    """Temperature sigmoid 1 / (1 + exp(-tau * x))."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    a = _wrap(a)
    out_data = _stable_sigmoid(tau * a.data)

    def backward(g):
        _accumulate(a, g * tau * out_data * (1.0 - out_data))

    return _make(out_data, (a,), backward)


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis (rows of a matrix, or a whole vector)."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    out_data = ex / ex.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * out_data).sum(axis=-1, keepdims=True)
        _accumulate(a, out_data * (g - inner))

    return _make(out_data, (a,), backward)


softmax_rows = softmax


def maxpool_columns(a: Tensor) -> Tensor:
    """Column-wise max of an L x F matrix; gradient goes to the first argmax."""
    a = _wrap(a)
    if a.data.ndim != 2 or a.data.shape[0] < 1:
        raise ValueError(f"expected a non-empty 2-D tensor, got shape {a.data.shape}")
    idx = np.argmax(a.data, axis=0)
    cols = np.arange(a.data.shape[1])

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx, cols] = g
        _accumulate(a, full)

    return _make(a.data[idx, cols], (a,), backward)


def pad_rows(a: Tensor, length: int) -> Tensor:
    """Zero-pad a p x d tensor at the tail to at least `length` rows."""
    a = _wrap(a)
    p, d = a.data.shape
    if p >= length:
        return a
    out_data = np.vstack([a.data, np.zeros((length - p, d))])

    def backward(g):
        _accumulate(a, g[:p])

    return _make(out_data, (a,), backward)


def conv1d_raw(x: Tensor, kernels: Tensor) -> Tensor:
    """Valid 1-D convolution over token windows.

    x is p x d, kernels F x h x d; output is (p-h+1) x F with
    out[i, f] = sum_{j, c} x[i+j, c] * kernels[f, j, c].
    """
    x, kernels = _wrap(x), _wrap(kernels)
    p, d = x.data.shape
    f_count, h, dk = kernels.data.shape
    if dk != d:
        raise ValueError(f"kernel width {dk} != input width {d}")
    if p < h:
        raise ValueError(f"sequence length {p} < kernel length {h}")
    length = p - h + 1
    windows = np.lib.stride_tricks.sliding_window_view(x.data, (h, d))[:, 0]
    flat = windows.reshape(length, h * d)
    out_data = flat @ kernels.data.reshape(f_count, h * d).T

    def backward(g):
        _accumulate(kernels, (g.T @ flat).reshape(f_count, h, d))
        dx = np.zeros_like(x.data)
        for j in range(h):
            dx[j : j + length] += g @ kernels.data[:, j, :]
        _accumulate(x, dx)

    return _make(out_data, (x, kernels), backward)


ACTIVATIONS = {"tanh": tanh, "relu": relu, "identity": identity}


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor, activation=tanh) -> Tensor:
    """Convolution plus bias plus elementwise activation."""
    if isinstance(activation, str):
        activation = ACTIVATIONS[activation]
    return activation(add(conv1d_raw(x, kernels), bias))


def cross_entropy(logits: Tensor, label: int) -> Tensor:
    """Negative log softmax probability of the given 0-based class index."""
    logits = _wrap(logits)
    k = logits.data.shape[-1]
    if logits.data.ndim != 1:
        raise ValueError("cross_entropy expects a 1-D logit vector")
    if not 0 <= label < k:
        raise IndexError(f"label {label} outside 0..{k - 1}")
    shifted = logits.data - logits.data.max()
    log_z = np.log(np.exp(shifted).sum())
    probs = np.exp(shifted - log_z)
    loss = log_z - shifted[label]

    def backward(g):
        grad = probs.copy()
        grad[label] -= 1.0
        _accumulate(logits, g * grad)

    return _make(loss, (logits,), backward)


def grad_check(fn, inputs, h: float = 1e-5) -> float:
    """Max relative mismatch between reverse-mode and central-difference grads.

    fn must be a deterministic scalar-valued function of the given tensors;
    returns max over all elements of |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
    """
    inputs = list(inputs)
    out = fn(*inputs)
    if out.data.size != 1:
        raise ValueError("grad_check requires a scalar-valued function")
    for t in inputs:
        t.zero_grad()
    out.backward()
    worst = 0.0
    for t in inputs:
        g_ad = (t.grad if t.grad is not None else np.zeros_like(t.data)).reshape(-1)
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(fn(*inputs).data)
            flat[i] = orig - h
            down = float(fn(*inputs).data)
            flat[i] = orig
            g_fd = (up - down) / (2.0 * h)
            denom = max(1e-8, abs(g_ad[i]) + abs(g_fd))
            worst = max(worst, abs(g_ad[i] - g_fd) / denom)
    return worst
