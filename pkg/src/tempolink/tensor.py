"""Dense tensors with reverse-mode automatic differentiation.

Values are numpy arrays in row-major order, float64 by default (float32
selectable globally via :func:`set_default_precision`). Combining tensors
records an operation graph; calling :meth:`Tensor.backward` on a scalar
walks the recorded graph and accumulates ``d(scalar)/d(leaf)`` into each
reachable tensor's ``grad``. Every gradient has exactly the shape of the
tensor it differentiates.

Only the primitives the network layers need are implemented; dense is
sufficient at desk scale and there is no broadcasting beyond what those
layers require.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySupportError, NonFiniteError, ShapeError

_DTYPES = {32: np.float32, 64: np.float64}
_default_dtype = np.float64
_debug_checks = False


def set_default_precision(bits: int) -> None:
    """Select the global float width for new tensors: 64 (default) or 32."""
    global _default_dtype
    if bits not in _DTYPES:
        raise ValueError(f"precision must be 32 or 64, got {bits!r}")
    _default_dtype = _DTYPES[bits]


def default_dtype() -> np.dtype:
    return np.dtype(_default_dtype)


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf detection on every tensor an operation produces."""
    global _debug_checks
    _debug_checks = bool(enabled)


def _check_finite(data: np.ndarray) -> None:
    if not np.isfinite(data).all():
        raise NonFiniteError("tensor contains NaN or Inf")


class Tensor:
    """A dense array plus the bookkeeping needed to differentiate through it.

    Treat instances as immutable once constructed: operations never modify
    their inputs, so sharing tensors across threads for reading is safe.
    (The optimizer rebinds parameter ``data`` between steps, which is the
    single-writer exception.)
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else _default_dtype)
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        if _debug_checks:
            _check_finite(arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into ``grad`` across the recorded graph.

        ``self`` must hold a single value (a scalar loss).
        """
        if self.data.size != 1:
            raise ShapeError(f"backward requires a scalar, got shape {self.data.shape}")
        order = _topo_order(self)
        seed = np.ones_like(self.data)
        self.grad = seed if self.grad is None else self.grad + seed
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            for parent, grad in zip(node._parents, node._backward(node.grad)):
                if grad is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = grad
                else:
                    parent.grad = parent.grad + grad

    # operators ----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not supported; divide by a scalar")
        return mul(self, 1.0 / float(other))

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)


def as_tensor(value) -> Tensor:
    """Wrap a value as a constant Tensor (no-op on tensors)."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def _from_op(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcasted gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    for _ in range(grad.ndim - len(shape)):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# arithmetic ---------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _from_op(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _from_op(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _from_op(data, (a, b), backward)


def power(a, exponent: float) -> Tensor:
    """Elementwise power with a fixed real exponent."""
    a = as_tensor(a)
    exponent = float(exponent)
    data = a.data**exponent

    def backward(g):
        return (g * exponent * a.data ** (exponent - 1.0),)

    return _from_op(data, (a,), backward)


def matmul(a, b) -> Tensor:
    """Matrix product for 2-D × 2-D, 2-D × 1-D, 1-D × 2-D and 1-D × 1-D operands."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise ShapeError(f"matmul supports 1-D/2-D operands, got shapes {ad.shape} and {bd.shape}")
    inner_a = ad.shape[-1]
    inner_b = bd.shape[0]
    if inner_a != inner_b:
        raise ShapeError(f"matmul: inner dimensions disagree for shapes {ad.shape} and {bd.shape}")
    data = ad @ bd

    def backward(g):
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if ad.ndim == 2 and bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        if ad.ndim == 1 and bd.ndim == 2:
            return bd @ g, np.outer(ad, g)
        return g * bd, g * ad

    return _from_op(data, (a, b), backward)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a 2-D tensor, got shape {a.data.shape}")
    data = a.data.T.copy()

    def backward(g):
        return (g.T,)

    return _from_op(data, (a,), backward)


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    data = a.data.reshape(shape)

    def backward(g):
        return (g.reshape(a.data.shape),)

    return _from_op(data, (a,), backward)


def take(a, index) -> Tensor:
    """Basic indexing with an int or slice (e.g. one row of a matrix)."""
    a = as_tensor(a)
    if not isinstance(index, (int, np.integer, slice)):
        raise TypeError(f"only int/slice indexing is supported, got {type(index).__name__}")
    data = np.array(a.data[index])  # copy; 0-d results stay 0-d

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] += g
        return (full,)

    return _from_op(data, (a,), backward)


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("concat requires at least one tensor")
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.ascontiguousarray(piece) for piece in np.split(g, offsets, axis=axis))

    return _from_op(data, tuple(parts), backward)


def stack(tensors: Iterable[Tensor]) -> Tensor:
    """Stack equally-shaped tensors as the rows of a new leading axis."""
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("stack requires at least one tensor")
    data = np.stack([p.data for p in parts], axis=0)

    def backward(g):
        return tuple(np.ascontiguousarray(g[i]) for i in range(len(parts)))

    return _from_op(data, tuple(parts), backward)


def tensor_sum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        expanded = g if keepdims else np.expand_dims(g, axis=axis)
        return (np.broadcast_to(expanded, a.data.shape).copy(),)

    return _from_op(data, (a,), backward)


def tensor_mean(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tensor_sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# activations ---------------------------------------------------------------


def relu(a) -> Tensor:
    a = as_tensor(a)
    data = np.maximum(a.data, 0.0)

    def backward(g):
        return (g * (a.data > 0.0),)

    return _from_op(data, (a,), backward)


def leaky_relu(a, alpha: float = 0.2) -> Tensor:
    a = as_tensor(a)
    data = np.where(a.data >= 0.0, a.data, alpha * a.data)

    def backward(g):
        return (g * np.where(a.data >= 0.0, 1.0, alpha),)

    return _from_op(data, (a,), backward)


def elu(a) -> Tensor:
    """Exponential linear unit with unit scale: x if x >= 0 else exp(x) - 1."""
    a = as_tensor(a)
    negative = np.expm1(np.minimum(a.data, 0.0))
    data = np.where(a.data >= 0.0, a.data, negative)

    def backward(g):
        return (g * np.where(a.data >= 0.0, 1.0, negative + 1.0),)

    return _from_op(data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    # two-branch form avoids exp overflow for large |x|
    data = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def backward(g):
        return (g * data * (1.0 - data),)

    return _from_op(data, (a,), backward)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    data = np.tanh(a.data)

    def backward(g):
        return (g * (1.0 - data * data),)

    return _from_op(data, (a,), backward)


# normalization and attention primitives ------------------------------------


def softmax_masked(logits, allowed) -> Tensor:
    """Softmax restricted to an allowed support.

    ``allowed`` is a boolean array of the same shape as ``logits``; for 2-D
    input each row is normalized independently over its own support.
    Disallowed positions are exactly zero in the output; allowed positions
    are positive and sum to one. Computed with max-subtraction for
    stability. A row with no allowed position raises
    :class:`EmptySupportError`.
    """
    a = as_tensor(logits)
    mask = np.asarray(allowed, dtype=bool)
    if mask.shape != a.data.shape:
        raise ShapeError(f"mask shape {mask.shape} does not match logits shape {a.data.shape}")
    if a.data.ndim not in (1, 2):
        raise ShapeError(f"softmax_masked expects a vector or matrix, got shape {a.data.shape}")

    if a.data.ndim == 1:
        if not mask.any():
            raise EmptySupportError("softmax support is empty")
    else:
        rows = ~mask.any(axis=1)
        if rows.any():
            raise EmptySupportError(f"softmax support is empty at row {int(np.argmax(rows))}")

    shifted = np.where(mask, a.data, -np.inf)
    peak = shifted.max(axis=-1, keepdims=True)
    weights = np.exp(shifted - peak)  # exp(-inf) == 0 exactly at disallowed positions
    data = weights / weights.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * data).sum(axis=-1, keepdims=True)
        return (data * (g - inner),)

    return _from_op(data, (a,), backward)


def layer_norm(x, eps: float = 1e-5) -> Tensor:
    """Normalize to zero mean and unit variance along the last axis.

    No learnable gain or bias. ``eps`` keeps constant inputs finite (they
    normalize to exactly zero).
    """
    t = as_tensor(x)
    if t.data.ndim == 0 or t.data.shape[-1] == 0:
        raise ShapeError(f"layer_norm needs a nonempty vector, got shape {t.data.shape}")
    mu = tensor_mean(t, axis=-1, keepdims=True)
    centered = sub(t, mu)
    var = tensor_mean(mul(centered, centered), axis=-1, keepdims=True)
    return mul(centered, power(add(var, eps), -0.5))
