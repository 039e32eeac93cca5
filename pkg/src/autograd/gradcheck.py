import numpy as np
from typing import Callable, Dict, Iterable, Optional, Tuple
from loguru import logger
from utils.errors import UsageError
from autograd.tensor import Tape, Tensor


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / scale


def _check_step(h: float):
    if not 0.0 < h <= 1e-2:
        raise UsageError(f"finite-difference step must lie in (0, 1e-2], got {h}")


def _analytic_grads(f: Callable[[], Tensor], tensors: Iterable[Tensor]):
    tensors = list(tensors)
    saved = [(t.requires_grad, t.grad) for t in tensors]
    for t in tensors:
        t.requires_grad = True
        t.grad = None
    with Tape() as tape:
        loss = f()
    tape.backward(loss)
    grads = [np.zeros_like(t.values) if t.grad is None else t.grad.copy() for t in tensors]
    for t, (requires_grad, grad) in zip(tensors, saved):
        t.requires_grad = requires_grad
        t.grad = grad
    return grads


def _central_difference(f: Callable[[], Tensor], tensor: Tensor, index, h: float) -> float:
    flat = tensor.values.reshape(-1)
    original = flat[index]
    flat[index] = original + h
    plus = f().item()
    flat[index] = original - h
    minus = f().item()
    flat[index] = original
    return (plus - minus) / (2.0 * h)


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5) -> float:
    """
    Compare reverse-mode gradients of a scalar function against central differences.

    @param f: Function mapping x to a scalar Tensor.
    @param x: Point at which to check; its values are restored afterwards.
    @param h: Finite-difference step in (0, 1e-2].
    @return: Max over coordinates of |analytic - fd| / max(|analytic|, |fd|, 1e-8).
    """
    _check_step(h)
    (analytic,) = _analytic_grads(lambda: f(x), [x])
    analytic = analytic.reshape(-1)
    numeric = np.array([_central_difference(lambda: f(x), x, i, h) for i in range(x.size)])
    return float(relative_error(analytic, numeric).max()) if x.size else 0.0


def grad_check_params(
    f: Callable[[], Tensor],
    params: Dict[str, Tensor],
    h: float = 1e-5,
    coords_per_param: Optional[int] = 6,
    rng: Optional[np.random.Generator] = None,
) -> Dict[str, float]:
    """
    Grad-check a closure with respect to a set of named tensors.

    Large tensors are sampled: only `coords_per_param` coordinates of each are perturbed
    (all of them when None). Returns the max relative error per tensor name.
    """
    _check_step(h)
    rng = rng if rng is not None else np.random.default_rng(0)
    names = sorted(params)
    grads = _analytic_grads(f, [params[n] for n in names])

    errors = {}
    for name, analytic in zip(names, grads):
        tensor = params[name]
        if coords_per_param is None or tensor.size <= coords_per_param:
            coords = np.arange(tensor.size)
        else:
            coords = rng.choice(tensor.size, size=coords_per_param, replace=False)
        flat_analytic = analytic.reshape(-1)
        numeric = np.array([_central_difference(f, tensor, int(i), h) for i in coords])
        errors[name] = float(relative_error(flat_analytic[coords], numeric).max())
        if errors[name] > 1e-4:
            logger.warning(f"Gradient mismatch on {name}: relative error {errors[name]:.3e}")
    return errors


def worst(errors: Dict[str, float]) -> Tuple[str, float]:
    name = max(errors, key=errors.get)
    return name, errors[name]
