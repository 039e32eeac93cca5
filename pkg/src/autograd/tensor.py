import threading
import numpy as np
from typing import Callable, List, Optional, Sequence, Tuple
from utils.errors import DimensionError, DomainError, UsageError

_local = threading.local()


def current_tape() -> Optional["Tape"]:
    """Return the innermost active tape of this thread, if any."""
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


class _Record:
    __slots__ = ("output", "inputs", "backward")

    def __init__(self, output, inputs, backward):
        self.output = output
        self.inputs = inputs
        self.backward = backward


class Tape:
    """
    Ordered record of the differentiable operations executed while it is active.

    Operations append themselves in execution order, which is a topological order of the
    graph. A tape is confined to the thread that entered it and can be backpropagated
    exactly once; a second backward raises UsageError. Gradients of leaf tensors
    accumulate across tapes until they are zeroed.
    """

    def __init__(self):
        self.records: List[_Record] = []
        self.consumed = False

    def __enter__(self):
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _local.stack.pop()
        return False

    def __len__(self):
        return len(self.records)

    def record(self, output: "Tensor", inputs: Sequence["Tensor"], backward: Callable):
        output._tape = self
        self.records.append(_Record(output, tuple(inputs), backward))

    def reset(self):
        """Drop every record so the tape can be reused for a fresh forward pass."""
        self.records = []
        self.consumed = False

    def backward(self, loss: "Tensor"):
        if loss.values.size != 1:
            raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss._tape is not self:
            raise UsageError("Loss was not produced on this tape")
        if self.consumed:
            raise UsageError("Tape was already backpropagated; call reset() and rerun the forward pass")
        self.consumed = True

        pending = {id(loss): np.ones_like(loss.values)}
        for record in reversed(self.records):
            grad = pending.pop(id(record.output), None)
            if grad is None:
                continue
            record.output.grad = grad
            input_grads = record.backward(grad)
            for tensor, tensor_grad in zip(record.inputs, input_grads):
                if tensor_grad is None or not tensor.requires_grad:
                    continue
                if tensor._tape is self:
                    key = id(tensor)
                    pending[key] = pending[key] + tensor_grad if key in pending else tensor_grad
                else:
                    tensor.grad = np.array(tensor_grad) if tensor.grad is None else tensor.grad + tensor_grad


class Tensor:
    """Dense float64 array with optional gradient tracking."""

    __array_priority__ = 1000

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.array(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._tape: Optional[Tape] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __len__(self):
        return self.shape[0]

    def numpy(self) -> np.ndarray:
        return self.values.copy()

    def item(self) -> float:
        if self.values.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.values)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self._tape is None:
            raise UsageError("Tensor was not produced on an active tape")
        self._tape.backward(self)

    # arithmetic
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

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    # shape
    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)

    # reductions and pointwise
    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return reduce_mean(self, axis, keepdims)

    def relu(self):
        return relu(self)

    def elu(self):
        return elu(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def tanh(self):
        return tanh(self)

    def sqrt(self):
        return sqrt(self)

    def abs(self):
        return absolute(self)

    def softmax(self, axis=-1):
        return softmax(self, axis)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(values: np.ndarray, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    out = Tensor(values)
    tape = current_tape()
    if tape is not None and not tape.consumed and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, backward)
    return out


def broadcast_shape(a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
    """Numpy-style broadcasting; missing dimensions are only ever added at the front."""
    ndim = max(len(a), len(b))
    pa = (1,) * (ndim - len(a)) + tuple(a)
    pb = (1,) * (ndim - len(b)) + tuple(b)
    shape = []
    for da, db in zip(pa, pb):
        if da != db and da != 1 and db != 1:
            raise DimensionError("Operands are not broadcast-compatible", a, b)
        shape.append(max(da, db))
    return tuple(shape)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return _result(a.values + b.values, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return _result(a.values - b.values, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g * b.values, a.shape), unbroadcast(g * a.values, b.shape)

    return _result(a.values * b.values, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    broadcast_shape(a.shape, b.shape)
    out = a.values / b.values

    def backward(g):
        return unbroadcast(g / b.values, a.shape), unbroadcast(-g * out / b.values, b.shape)

    return _result(out, (a, b), backward)


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes; leading axes must agree exactly."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2] or a.shape[:-2] != b.shape[:-2]:
        raise DimensionError("matmul inner dimensions disagree", a.shape, b.shape)

    def backward(g):
        return g @ np.swapaxes(b.values, -1, -2), np.swapaxes(a.values, -1, -2) @ g

    return _result(a.values @ b.values, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.values > 0

    def backward(g):
        return (g * mask,)

    return _result(x.values * mask, (x,), backward)


def elu(x: Tensor) -> Tensor:
    """ELU with alpha = 1."""
    positive = x.values > 0
    out = np.where(positive, x.values, np.expm1(np.minimum(x.values, 0.0)))

    def backward(g):
        return (g * np.where(positive, 1.0, out + 1.0),)

    return _result(out, (x,), backward)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.values)

    def backward(g):
        return (g * out,)

    return _result(out, (x,), backward)


def log(x: Tensor) -> Tensor:
    if np.any(x.values <= 0):
        raise DomainError(f"log of non-positive value (min {x.values.min()})")

    def backward(g):
        return (g / x.values,)

    return _result(np.log(x.values), (x,), backward)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.values)

    def backward(g):
        return (g * (1.0 - out * out),)

    return _result(out, (x,), backward)


def sqrt(x: Tensor) -> Tensor:
    if np.any(x.values < 0):
        raise DomainError(f"sqrt of negative value (min {x.values.min()})")
    out = np.sqrt(x.values)

    def backward(g):
        return (g / (2.0 * out),)

    return _result(out, (x,), backward)


def absolute(x: Tensor) -> Tensor:
    def backward(g):
        return (g * np.sign(x.values),)

    return _result(np.abs(x.values), (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _result(out, (x,), backward)


def _normalize_axes(axis, ndim) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise DimensionError(f"axis {ax} is out of range for a {ndim}-d tensor")
    return tuple(ax % ndim for ax in axes)


def reduce_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes) if axes else g
        return (np.broadcast_to(g, x.shape).copy(),)

    return _result(x.values.sum(axis=axes, keepdims=keepdims), (x,), backward)


def reduce_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[ax] for ax in axes])) if axes else 1
    if count == 0:
        raise DimensionError("mean over an empty axis", x.shape)
    return reduce_sum(x, axis, keepdims) / float(count)


def reshape(x: Tensor, shape) -> Tensor:
    try:
        out = x.values.reshape(shape)
    except ValueError:
        raise DimensionError(f"Cannot reshape to {tuple(shape)}", x.shape)

    def backward(g):
        return (g.reshape(x.shape),)

    return _result(out, (x,), backward)


def transpose(x: Tensor, axes=None) -> Tensor:
    axes = tuple(reversed(range(x.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _result(np.transpose(x.values, axes), (x,), backward)


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, (slice, int, type(None), type(Ellipsis))) for p in parts)


def getitem(x: Tensor, index) -> Tensor:
    basic = _is_basic_index(index)

    def backward(g):
        grad = np.zeros_like(x.values)
        if basic:
            grad[index] += g
        else:
            np.add.at(grad, index, g)
        return (grad,)

    return _result(np.array(x.values[index]), (x,), backward)
