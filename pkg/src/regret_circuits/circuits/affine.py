from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import DimensionError, LinearLoss, RegretMinimizer, UnsupportedOperation, as_vector
from .product import CartesianProduct


class AffineMap:
    """``x -> M x + b``."""

    def __init__(self, matrix, offset=None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        m, _ = self.matrix.shape
        self.offset = np.zeros(m) if offset is None else as_vector(offset, m, "offset")

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ as_vector(x, self.in_dim) + self.offset

    def pullback(self, loss: LinearLoss) -> LinearLoss:
        """``loss o T`` as a loss on the domain: ``(M^T g, c + <g, b>)``."""
        if loss.dim != self.out_dim:
            raise DimensionError(f"loss has dimension {loss.dim}, map outputs {self.out_dim}")
        return LinearLoss(self.matrix.T @ loss.gradient, loss.offset + float(loss.gradient @ self.offset))


class BlockEmbedding(AffineMap):
    """Places a vector into a coordinate block of a larger space and adds a
    fixed offset vector.  Same contract as :class:`AffineMap`, without the
    dense matrix products."""

    def __init__(self, in_dim: int, out_dim: int, start: int, offset=None):
        self._in, self._out, self.start = int(in_dim), int(out_dim), int(start)
        if start < 0 or start + in_dim > out_dim:
            raise DimensionError("embedding block falls outside the target space")
        self.offset = np.zeros(out_dim) if offset is None else as_vector(offset, out_dim, "offset")
        self._block = slice(self.start, self.start + self._in)

    @property
    def matrix(self):
        M = np.zeros((self._out, self._in))
        M[self._block, :] = np.eye(self._in)
        return M

    @property
    def in_dim(self):
        return self._in

    @property
    def out_dim(self):
        return self._out

    def __call__(self, x):
        y = self.offset.copy()
        y[self._block] += as_vector(x, self._in)
        return y

    def pullback(self, loss):
        if loss.dim != self._out:
            raise DimensionError(f"loss has dimension {loss.dim}, map outputs {self._out}")
        g = loss.gradient
        return LinearLoss(g[self._block], loss.offset + float(g @ self.offset))


class AffineImage(RegretMinimizer):
    """Minimizer over ``T(X)`` from a minimizer over ``X``.

    Losses are pulled back through ``T`` and their constant term dropped
    before reaching the inner minimizer; decisions are pushed forward.
    """

    kind = "affine"

    def __init__(self, inner: RegretMinimizer, transform: AffineMap, history: bool = False):
        if transform.in_dim != inner.dim:
            raise DimensionError(
                f"map expects dimension {transform.in_dim}, inner minimizer has {inner.dim}")
        super().__init__(transform.out_dim, history)
        self.inner = inner
        self.transform = transform

    def _next(self):
        return self.transform(self.inner.next_decision())

    def _observe(self, loss):
        self.inner.observe(self.transform.pullback(loss).linear_part())

    def best_response(self, gradient):
        g = as_vector(gradient, self.dim, "gradient")
        pulled = self.transform.pullback(LinearLoss(g))
        x, value = self.inner.best_response(pulled.gradient)
        return self.transform(x), value + pulled.offset

    def contains(self, x, tol=None):
        raise UnsupportedOperation("membership in an affine image is not tracked")

    def children(self):
        return [self.inner]


def affine_image(inner: RegretMinimizer, transform: AffineMap) -> AffineImage:
    return AffineImage(inner, transform)


def minkowski_sum(rm_x: RegretMinimizer, rm_y: RegretMinimizer) -> AffineImage:
    """``X + Y`` as the image of ``X x Y`` under ``(x, y) -> x + y``."""
    if rm_x.dim != rm_y.dim:
        raise DimensionError(f"Minkowski summands have dimensions {rm_x.dim} and {rm_y.dim}")
    n = rm_x.dim
    image = AffineImage(CartesianProduct([rm_x, rm_y]), AffineMap(np.hstack([np.eye(n), np.eye(n)])))
    image.kind = "minkowski"
    return image
