import numpy as np
from typing import Sequence, Tuple, Union
from numpy.lib.stride_tricks import sliding_window_view
from utils.errors import DimensionError, UsageError
from autograd.tensor import (
    Tensor, _result, add, sub, mul, relu, elu, exp, log, softmax, as_tensor, reduce_mean,
)

PaddingMode = Union[str, Tuple[int, int]]


def resolve_padding(padding: PaddingMode, kernel_size: int) -> Tuple[int, int]:
    """Turn a padding mode into explicit (left, right) zero-padding amounts."""
    if padding == "same":
        total = kernel_size - 1
        return total // 2, total - total // 2
    if padding == "valid":
        return 0, 0
    if isinstance(padding, (tuple, list)) and len(padding) == 2 and min(padding) >= 0:
        return int(padding[0]), int(padding[1])
    raise UsageError(f"Unknown padding mode: {padding!r}")


def conv1d(x: Tensor, kernel: Tensor, stride: int = 1, padding: PaddingMode = "same") -> Tensor:
    """
    1-D cross-correlation of a (C_in, W) map with a (C_out, C_in, K) kernel.

    Output width is floor((W + pad_total - K) / stride) + 1.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if stride < 1:
        raise UsageError(f"stride must be >= 1, got {stride}")
    if x.ndim != 2 or kernel.ndim != 3 or kernel.shape[1] != x.shape[0]:
        raise DimensionError("conv1d expects x (C_in, W) and kernel (C_out, C_in, K)", x.shape, kernel.shape)

    c_out, c_in, k = kernel.shape
    left, right = resolve_padding(padding, k)
    width = x.shape[1]
    padded_width = width + left + right
    if k > padded_width:
        raise DimensionError(f"kernel width {k} exceeds padded input width {padded_width}", x.shape, kernel.shape)

    xp = np.pad(x.values, ((0, 0), (left, right)))
    windows = sliding_window_view(xp, k, axis=1)[:, ::stride, :]
    out_width = windows.shape[1]
    cols = windows.transpose(1, 0, 2).reshape(out_width, c_in * k)
    kmat = kernel.values.reshape(c_out, c_in * k)
    out = kmat @ cols.T

    def backward(g):
        grad_kernel = (g @ cols).reshape(c_out, c_in, k)
        grad_cols = (g.T @ kmat).reshape(out_width, c_in, k)
        grad_xp = np.zeros_like(xp)
        stop = stride * (out_width - 1) + 1
        for tap in range(k):
            grad_xp[:, tap:tap + stop:stride] += grad_cols[:, :, tap].T
        return grad_xp[:, left:left + width], grad_kernel

    return _result(out, (x, kernel), backward)


def moments(x: Tensor, axis: int = -1, keepdims: bool = True):
    """Population mean and variance along one axis (divide by count, not count - 1)."""
    x = as_tensor(x)
    if x.ndim == 0 or x.shape[axis] == 0:
        raise DimensionError(f"moments over an empty axis {axis}", x.shape)
    mean = reduce_mean(x, axis, keepdims=True)
    centred = sub(x, mean)
    var = reduce_mean(mul(centred, centred), axis, keepdims=True)
    if not keepdims:
        mean = mean.reshape(tuple(d for i, d in enumerate(mean.shape) if i != axis % x.ndim))
        var = var.reshape(mean.shape)
    return mean, var


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError("concat operands disagree off the concat axis", *[t.shape for t in tensors])
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _result(out, tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise DimensionError("stack operands must share one shape", *[t.shape for t in tensors])

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _result(np.stack([t.values for t in tensors], axis=axis), tensors, backward)


def take(x: Tensor, indices, axis: int = 0) -> Tensor:
    """Gather slices of x along an axis; repeated indices accumulate their gradients."""
    x = as_tensor(x)
    indices = np.asarray(indices, dtype=np.int64)

    def backward(g):
        grad = np.zeros_like(x.values)
        moved = np.moveaxis(grad, axis, 0)
        np.add.at(moved, indices, np.moveaxis(g, axis, 0))
        return (grad,)

    return _result(np.take(x.values, indices, axis=axis), (x,), backward)


def avg_pool1d(x: Tensor, kernel: int = 2, stride: int = 2) -> Tensor:
    """Average pooling along the last axis of a (C, W) map for kernel == stride."""
    if kernel != stride:
        raise UsageError("avg_pool1d only supports kernel == stride")
    channels, width = x.shape
    if width < kernel:
        raise UsageError(f"avg_pool1d needs at least {kernel} frames, got {width}")
    usable = (width // kernel) * kernel
    return x[:, :usable].reshape(channels, width // kernel, kernel).mean(axis=2)


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "relu": relu,
    "elu": elu,
    "exp": exp,
    "log": log,
}


def elementwise(op: str, *operands, axis: int = -1) -> Tensor:
    """Dispatch one of add, sub, mul, relu, elu, exp, log, softmax by name."""
    if op == "softmax":
        return softmax(as_tensor(operands[0]), axis)
    if op not in _ELEMENTWISE:
        raise UsageError(f"Unknown elementwise op: {op}")
    return _ELEMENTWISE[op](*[as_tensor(o) for o in operands])
