from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import DimensionError, LinearLoss, RegretMinimizer, as_vector
from ..sets import Product


class CartesianProduct(RegretMinimizer):
    """Minimizer over ``X_1 x ... x X_k``.

    The incoming gradient is cut into per-factor blocks; each factor minimizes
    regret on its own block and the decisions are concatenated.  Regret is
    exactly the sum of the factors' regrets.
    """

    kind = "product"

    def __init__(self, factors: Sequence[RegretMinimizer], history: bool = False):
        self.factors = list(factors)
        if not self.factors:
            raise ValueError("product needs at least one factor")
        self.dims = [f.dim for f in self.factors]
        super().__init__(sum(self.dims), history)
        self._cuts = np.cumsum([0] + self.dims)
        self._slices = [slice(a, b) for a, b in zip(self._cuts[:-1], self._cuts[1:])]

    def split(self, vector) -> list[np.ndarray]:
        v = as_vector(vector, self.dim)
        return [v[s] for s in self._slices]

    def _next(self):
        return np.concatenate([f.next_decision() for f in self.factors])

    def _observe(self, loss: LinearLoss):
        for f, s in zip(self.factors, self._slices):
            f.observe(LinearLoss(loss.gradient[s]))

    def best_response(self, gradient):
        g = as_vector(gradient, self.dim, "gradient")
        parts = [f.best_response(g[s]) for f, s in zip(self.factors, self._slices)]
        return np.concatenate([p[0] for p in parts]), float(sum(p[1] for p in parts))

    def contains(self, x, tol=None):
        x = as_vector(x, self.dim)
        return all(f.contains(x[s], tol) for f, s in zip(self.factors, self._slices))

    def domain(self):
        return Product([f.domain() for f in self.factors])

    def children(self):
        return self.factors


def cartesian_product(*factors: RegretMinimizer) -> CartesianProduct:
    if len(factors) == 1 and not isinstance(factors[0], RegretMinimizer):
        factors = tuple(factors[0])
    return CartesianProduct(factors)
