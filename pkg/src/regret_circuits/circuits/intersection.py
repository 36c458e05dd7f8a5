from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import (
    InfeasibleError,
    LinearLoss,
    RegretMinimizer,
    UnsupportedOperation,
    as_vector,
    tolerances,
)
from ..sets import ConvexSet, Intersection


@dataclass
class BregmanGeometry:
    """Distance-generating function with its strong-convexity and smoothness
    constants (w.r.t. the Euclidean norm).

    ``metric`` is set for quadratic DGFs ``d(x) = 1/2 x'Qx``; it is what the
    projection solver works with.  ``None`` means the identity.
    """

    d: Callable[[np.ndarray], float]
    grad_d: Callable[[np.ndarray], np.ndarray]
    mu: float
    smoothness: float
    metric: Optional[np.ndarray] = None
    quadratic: bool = False

    def __post_init__(self):
        if not 0 < self.mu <= self.smoothness:
            raise ValueError("need 0 < mu <= smoothness")

    @classmethod
    def euclidean(cls) -> "BregmanGeometry":
        return cls(lambda x: 0.5 * float(x @ x), lambda x: np.asarray(x, float).copy(),
                   1.0, 1.0, None, True)

    @classmethod
    def quadratic_form(cls, Q) -> "BregmanGeometry":
        Q = np.asarray(Q, dtype=float)
        if not np.allclose(Q, Q.T):
            raise ValueError("metric must be symmetric")
        eig = np.linalg.eigvalsh(Q)
        return cls(lambda x: 0.5 * float(x @ Q @ x), lambda x: Q @ x,
                   float(eig.min()), float(eig.max()), Q, True)

    def divergence(self, y, x) -> float:
        y, x = np.asarray(y, float), np.asarray(x, float)
        return self.d(y) - self.d(x) - float(self.grad_d(x) @ (y - x))

    @property
    def dilation_factor(self) -> float:
        return self.smoothness * (1.0 + self.mu) / self.mu


def bregman_project(x, target: ConvexSet, geometry: Optional[BregmanGeometry] = None) -> np.ndarray:
    """``argmin_{y in target} D(y || x)``.

    Quadratic DGFs are supported on every set: polyhedra by an exact QP, the
    Euclidean case additionally through each set's own projection (closed
    forms, or Dykstra for non-polyhedral intersections).
    """
    geometry = geometry or BregmanGeometry.euclidean()
    x = as_vector(x, target.dim)
    if target.contains(x):
        return x.copy()
    if not geometry.quadratic:
        raise UnsupportedOperation("projection implemented for quadratic distance-generating functions")
    if geometry.metric is None:
        return target.project(x)
    return target.as_polyhedron().project(x, metric=geometry.metric)


class ProjectIntersection(RegretMinimizer):
    """Exact minimizer over ``X ∩ Y`` from a minimizer over ``X``.

    Decisions of the inner minimizer are projected onto the intersection.  The
    inner minimizer is charged the loss plus ``alpha_t`` times the gradient
    gap ``grad d(x_t) - grad d([x_t])``, with ``alpha_t`` chosen so that the
    cumulative condition ``sum l([x]-x)/mu <= sum alpha ||[x]-x||^2`` holds.
    """

    kind = "intersection"

    def __init__(self, inner: RegretMinimizer, constraint_set: ConvexSet,
                 geometry: Optional[BregmanGeometry] = None, domain: Optional[ConvexSet] = None,
                 history: bool = False):
        super().__init__(inner.dim, history)
        self.inner = inner
        self.geometry = geometry or BregmanGeometry.euclidean()
        domain = domain if domain is not None else inner.domain()
        self.target = Intersection([domain, constraint_set])
        if self.target.is_polyhedral:
            self.target.check_nonempty()
        self.raw: Optional[np.ndarray] = None
        self.alphas: list[float] = []
        self.alpha_lhs = 0.0
        self.alpha_rhs = 0.0
        self.alpha_condition_held = True
        self.max_dilation = 0.0

    def _next(self):
        self.raw = self.inner.next_decision()
        if self.target.contains(self.raw):
            return self.raw
        projected = bregman_project(self.raw, self.target, self.geometry)
        if not self.target.contains(projected):
            raise InfeasibleError("projection left the intersection")
        return projected

    def _observe(self, loss):
        g = loss.gradient
        gap = self.last_decision - self.raw
        if not gap.any():
            alpha = 0.0
            forwarded = g
        else:
            mu = self.geometry.mu
            sq = float(gap @ gap)
            lin = float(g @ gap)
            alpha = max(0.0, lin / (mu * sq))
            forwarded = g + alpha * (self.geometry.grad_d(self.raw) - self.geometry.grad_d(self.last_decision))
            self.alpha_lhs += lin / mu
            self.alpha_rhs += alpha * sq
        if self.alpha_lhs > self.alpha_rhs + 1e-9 * (1.0 + abs(self.alpha_rhs)):
            self.alpha_condition_held = False
        norm = float(np.linalg.norm(g))
        if norm > 0:
            self.max_dilation = max(self.max_dilation, float(np.linalg.norm(forwarded)) / norm)
        self.alphas.append(alpha)
        self.last_forwarded = forwarded
        self.inner.observe(LinearLoss(forwarded))

    def best_response(self, gradient):
        return self.target.linear_minimizer(gradient)

    def contains(self, x, tol=None):
        return self.target.contains(x, tol)

    def domain(self):
        return self.target

    def children(self):
        return [self.inner]


def project_intersection(inner, constraint_set, geometry=None, domain=None) -> ProjectIntersection:
    return ProjectIntersection(inner, constraint_set, geometry, domain)
