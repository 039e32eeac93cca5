import numpy as np
from typing import Tuple
from autograd.tensor import Tensor
from layers.module import Module, glorot_uniform
from layers.linear import Linear


class AttentionPool(Module):
    """
    Learned-query attention pooling over the leading axis.

    Each item x along axis 0 is scored as q . tanh(W x + b); the scores are
    softmax-normalized over axis 0 and the items are averaged with those weights.
    """

    def __init__(self, dim: int, rng: np.random.Generator):
        self.dim = dim
        self.projection = Linear(dim, dim, rng)
        self.query = glorot_uniform(rng, (dim, 1), dim, 1)

    def forward(self, items: Tensor) -> Tuple[Tensor, Tensor]:
        """
        @param items: Tensor of shape (N, ..., D).
        @return: pooled Tensor of shape (..., D) and the weights of shape (N, ...).
        """
        lead = items.shape[:-1]
        scores = (self.projection(items).tanh().reshape(-1, self.dim) @ self.query).reshape(lead)
        weights = scores.softmax(axis=0)
        pooled = (items * weights.reshape(lead + (1,))).sum(axis=0)
        return pooled, weights
