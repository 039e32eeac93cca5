import numpy as np
from typing import Dict, Iterator, List, Optional, Tuple
from autograd.tensor import Tensor


class Parameter(Tensor):
    """A trainable tensor; always tracks gradients."""

    def __init__(self, values):
        super().__init__(values, requires_grad=True)


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> Parameter:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Parameter(rng.uniform(-limit, limit, size=shape))


class Module:
    """
    Base class for every layer.

    Parameters and sub-modules are discovered from instance attributes (including lists of
    modules), so names follow the attribute path, e.g. ``streams.1.attention.query.weight``.
    """

    training = True

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def _children(self) -> Iterator[Tuple[str, object]]:
        for name, value in vars(self).items():
            if isinstance(value, (Parameter, Module)):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, (Parameter, Module)):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Parameter]]:
        found = []
        for name, child in self._children():
            full = f"{prefix}{name}"
            if isinstance(child, Parameter):
                found.append((full, child))
            else:
                found.extend(child.named_parameters(f"{full}."))
        return found

    def parameters(self) -> Dict[str, Parameter]:
        return dict(self.named_parameters())

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, child in self._children():
            if isinstance(child, Module):
                yield from child.modules()

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def reseed(self, rng: Optional[np.random.Generator]):
        """Hand a fresh generator to every stochastic layer (dropout)."""
        for module in self.modules():
            if hasattr(module, "rng"):
                module.rng = rng

    def zero_grad(self):
        for _, param in self.named_parameters():
            param.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.size for _, p in self.named_parameters())
