"""Convex sets with membership tests, linear oracles and Euclidean projections.

The circuits only need three things from a set: a membership test, the exact
minimum of a linear functional over it, and (for the intersection circuit) a
projection.  Polyhedral sets also expose ``as_polyhedron()`` so that
intersections of them can be handled by one exact QP or LP.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import (
    ConvergenceError,
    DimensionError,
    InfeasibleError,
    UnsupportedOperation,
    as_vector,
    tolerances,
)
from .qp import solve_qp


def _tol(tol):
    return tolerances.feasibility if tol is None else tol


def project_simplex(v, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) = total}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


class ConvexSet:
    dim: int

    def contains(self, x, tol: Optional[float] = None) -> bool:
        raise NotImplementedError

    def linear_minimizer(self, gradient) -> tuple[np.ndarray, float]:
        poly = self.as_polyhedron()
        return poly.linear_minimizer(gradient)

    def project(self, x) -> np.ndarray:
        return self.as_polyhedron().project(x)

    def as_polyhedron(self) -> "Polyhedron":
        raise UnsupportedOperation(f"{type(self).__name__} is not polyhedral")

    @property
    def is_polyhedral(self) -> bool:
        try:
            self.as_polyhedron()
        except UnsupportedOperation:
            return False
        return True


class Polyhedron(ConvexSet):
    """``{x : A_eq x = b_eq, A_ub x <= b_ub}``."""

    def __init__(self, dim, A_eq=None, b_eq=None, A_ub=None, b_ub=None):
        self.dim = int(dim)
        self.A_eq = np.zeros((0, dim)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, float))
        self.b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float).reshape(-1)
        self.A_ub = np.zeros((0, dim)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, float))
        self.b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float).reshape(-1)
        for A, b in ((self.A_eq, self.b_eq), (self.A_ub, self.b_ub)):
            if A.shape[1] != self.dim or A.shape[0] != b.shape[0]:
                raise DimensionError("constraint matrix does not match dimension")

    def as_polyhedron(self):
        return self

    def violation(self, x) -> float:
        x = as_vector(x, self.dim)
        parts = [0.0]
        if self.A_eq.shape[0]:
            parts.append(float(np.abs(self.A_eq @ x - self.b_eq).max()))
        if self.A_ub.shape[0]:
            parts.append(float((self.A_ub @ x - self.b_ub).max()))
        return max(parts)

    def contains(self, x, tol=None):
        return self.violation(x) <= _tol(tol)

    def linear_minimizer(self, gradient):
        g = as_vector(gradient, self.dim, "gradient")
        res = linprog(
            g,
            A_ub=self.A_ub if self.A_ub.shape[0] else None,
            b_ub=self.b_ub if self.A_ub.shape[0] else None,
            A_eq=self.A_eq if self.A_eq.shape[0] else None,
            b_eq=self.b_eq if self.A_eq.shape[0] else None,
            bounds=(None, None),
            method="highs",
        )
        if res.status == 2:
            raise InfeasibleError("polyhedron is empty")
        if res.status != 0:
            raise UnsupportedOperation(f"linear program failed: {res.message}")
        return res.x, float(g @ res.x)

    def project(self, x, metric=None):
        """Projection in the norm ``||.||_Q`` (Euclidean when ``metric`` is None)."""
        x = as_vector(x, self.dim)
        Q = np.eye(self.dim) if metric is None else np.asarray(metric, float)
        return solve_qp(Q, -Q @ x, self.A_eq, self.b_eq, -self.A_ub, -self.b_ub)

    def check_nonempty(self) -> None:
        res = linprog(
            np.zeros(self.dim),
            A_ub=self.A_ub if self.A_ub.shape[0] else None,
            b_ub=self.b_ub if self.A_ub.shape[0] else None,
            A_eq=self.A_eq if self.A_eq.shape[0] else None,
            b_eq=self.b_eq if self.A_eq.shape[0] else None,
            bounds=(None, None),
            method="highs",
        )
        if res.status == 2:
            raise InfeasibleError("intersection is empty")


class Simplex(ConvexSet):
    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionError("simplex needs at least one coordinate")
        self.dim = int(dim)

    def contains(self, x, tol=None):
        x = as_vector(x, self.dim)
        t = _tol(tol)
        return bool(x.min() >= -t and abs(x.sum() - 1.0) <= t)

    def linear_minimizer(self, gradient):
        g = as_vector(gradient, self.dim, "gradient")
        i = int(np.argmin(g))
        x = np.zeros(self.dim)
        x[i] = 1.0
        return x, float(g[i])

    def project(self, x):
        return project_simplex(as_vector(x, self.dim))

    def as_polyhedron(self):
        return Polyhedron(self.dim, np.ones((1, self.dim)), [1.0], -np.eye(self.dim), np.zeros(self.dim))


class Halfspace(ConvexSet):
    """``{x : <normal, x> <= bound}``."""

    def __init__(self, normal, bound: float):
        self.normal = as_vector(normal)
        if not np.any(self.normal):
            raise ValueError("halfspace normal must be nonzero")
        self.bound = float(bound)
        self.dim = self.normal.shape[0]

    def contains(self, x, tol=None):
        return float(self.normal @ as_vector(x, self.dim)) - self.bound <= _tol(tol)

    def project(self, x):
        x = as_vector(x, self.dim)
        excess = float(self.normal @ x) - self.bound
        if excess <= 0:
            return x.copy()
        return x - excess / float(self.normal @ self.normal) * self.normal

    def linear_minimizer(self, gradient):
        raise UnsupportedOperation("halfspace is unbounded")

    def as_polyhedron(self):
        return Polyhedron(self.dim, A_ub=self.normal[None, :], b_ub=[self.bound])


class Ball(ConvexSet):
    def __init__(self, center, radius: float):
        self.center = as_vector(center)
        self.radius = float(radius)
        self.dim = self.center.shape[0]

    def contains(self, x, tol=None):
        return float(np.linalg.norm(as_vector(x, self.dim) - self.center)) <= self.radius + _tol(tol)

    def project(self, x):
        x = as_vector(x, self.dim)
        d = x - self.center
        r = float(np.linalg.norm(d))
        if r <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / r)

    def linear_minimizer(self, gradient):
        g = as_vector(gradient, self.dim, "gradient")
        norm = float(np.linalg.norm(g))
        if norm == 0:
            return self.center.copy(), 0.0
        x = self.center - self.radius * g / norm
        return x, float(g @ x)


class Product(ConvexSet):
    """Cartesian product, coordinates concatenated in order."""

    def __init__(self, factors: Sequence[ConvexSet]):
        self.factors = list(factors)
        self.dims = [f.dim for f in self.factors]
        self.dim = sum(self.dims)
        self._cuts = np.cumsum([0] + self.dims)

    def _split(self, x):
        return [x[a:b] for a, b in zip(self._cuts[:-1], self._cuts[1:])]

    def contains(self, x, tol=None):
        x = as_vector(x, self.dim)
        return all(f.contains(p, tol) for f, p in zip(self.factors, self._split(x)))

    def linear_minimizer(self, gradient):
        g = as_vector(gradient, self.dim, "gradient")
        parts = [f.linear_minimizer(p) for f, p in zip(self.factors, self._split(g))]
        return np.concatenate([p[0] for p in parts]), sum(p[1] for p in parts)

    def project(self, x):
        x = as_vector(x, self.dim)
        return np.concatenate([f.project(p) for f, p in zip(self.factors, self._split(x))])

    def as_polyhedron(self):
        polys = [f.as_polyhedron() for f in self.factors]
        n = self.dim
        eq_rows, eq_b, ub_rows, ub_b = [], [], [], []
        for poly, lo in zip(polys, self._cuts[:-1]):
            for A, b, rows, bs in ((poly.A_eq, poly.b_eq, eq_rows, eq_b), (poly.A_ub, poly.b_ub, ub_rows, ub_b)):
                for row, val in zip(A, b):
                    full = np.zeros(n)
                    full[lo:lo + poly.dim] = row
                    rows.append(full)
                    bs.append(val)
        return Polyhedron(
            n,
            np.array(eq_rows).reshape(-1, n), eq_b,
            np.array(ub_rows).reshape(-1, n), ub_b,
        )


class Intersection(ConvexSet):
    def __init__(self, sets: Sequence[ConvexSet]):
        self.sets = list(sets)
        if not self.sets:
            raise ValueError("empty intersection")
        self.dim = self.sets[0].dim
        if any(s.dim != self.dim for s in self.sets):
            raise DimensionError("intersected sets must share a dimension")

    def contains(self, x, tol=None):
        return all(s.contains(x, tol) for s in self.sets)

    def as_polyhedron(self):
        polys = [s.as_polyhedron() for s in self.sets]
        return Polyhedron(
            self.dim,
            np.vstack([p.A_eq for p in polys]), np.concatenate([p.b_eq for p in polys]),
            np.vstack([p.A_ub for p in polys]), np.concatenate([p.b_ub for p in polys]),
        )

    def linear_minimizer(self, gradient):
        if self.is_polyhedral:
            return self.as_polyhedron().linear_minimizer(gradient)
        raise UnsupportedOperation("linear oracle needs a polyhedral intersection")

    def project(self, x):
        x = as_vector(x, self.dim)
        if len(self.sets) == 2:
            a, b = self.sets
            if isinstance(a, Halfspace) and isinstance(b, Simplex):
                a, b = b, a
            if isinstance(a, Simplex) and isinstance(b, Halfspace):
                return project_simplex_halfspace(x, b.normal, b.bound)
        if self.is_polyhedral:
            return self.as_polyhedron().project(x)
        return dykstra(x, [s.project for s in self.sets], self.contains)

    def check_nonempty(self):
        if self.is_polyhedral:
            self.as_polyhedron().check_nonempty()


def project_simplex_halfspace(x, normal, bound, tol: float = 1e-12) -> np.ndarray:
    """Euclidean projection onto ``simplex ∩ {<normal, y> <= bound}``.

    The solution is ``P_simplex(x - theta * normal)`` for the multiplier
    ``theta >= 0`` that makes the halfspace tight.  ``<normal, y(theta)>`` is
    piecewise linear and nonincreasing in ``theta``; bisection locates the
    linear piece and the root is then solved for exactly on that piece.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(normal, dtype=float)
    y = project_simplex(x)
    if a @ y <= bound + tol:
        return y
    if a.min() > bound + tol:
        raise InfeasibleError("simplex and halfspace do not intersect")

    def phi(theta):
        return float(a @ project_simplex(x - theta * a))

    lo, hi = 0.0, 1.0
    while phi(hi) > bound:
        hi *= 2.0
        if hi > 1e12:
            return Polyhedron(x.size, np.ones((1, x.size)), [1.0],
                              np.vstack([-np.eye(x.size), a]),
                              np.append(np.zeros(x.size), bound)).project(x)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) > bound:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * (1.0 + hi):
            break
    for theta_probe in (0.5 * (lo + hi), lo, hi):
        support = project_simplex(x - theta_probe * a) > 0
        k = support.sum()
        aS, xS = a[support], x[support]
        # on this support: y_S = x_S - theta a_S + tau, tau = (1 - sum x_S + theta sum a_S) / k
        c0 = float(aS @ xS) + (1.0 - xS.sum()) * aS.sum() / k
        c1 = -float(aS @ aS) + aS.sum() ** 2 / k
        if c1 == 0:
            continue
        theta = (bound - c0) / c1
        tau = (1.0 - xS.sum() + theta * aS.sum()) / k
        y = np.where(support, x - theta * a + tau, 0.0)
        ok = (theta >= -tol and y.min() >= -tol
              and np.all((x - theta * a + tau)[~support] <= tol))
        if ok:
            return np.maximum(y, 0.0)
    return Polyhedron(x.size, np.ones((1, x.size)), [1.0],
                      np.vstack([-np.eye(x.size), a]),
                      np.append(np.zeros(x.size), bound)).project(x)


def dykstra(x, projectors, contains=None, tol: float = 1e-9, max_iter: int = 100_000) -> np.ndarray:
    """Dykstra's alternating projections onto an intersection.

    Converges to the Euclidean projection of ``x`` onto the intersection of
    the sets whose projection operators are given.
    """
    y = np.asarray(x, dtype=float).copy()
    increments = [np.zeros_like(y) for _ in projectors]
    change = np.inf
    gap = 0.0
    for _ in range(max_iter):
        prev = y
        for i, proj in enumerate(projectors):
            z = proj(y + increments[i])
            increments[i] = y + increments[i] - z
            y = z
        change = float(np.abs(y - prev).max())
        if change <= tol:
            # a point is in every set exactly when each projection fixes it
            gap = max(float(np.abs(proj(y) - y).max()) for proj in projectors)
            if gap <= tol and (contains is None or contains(y, tol)):
                return y
    raise ConvergenceError("Dykstra projection did not converge", max(change, gap))
