"""Atomic regret minimizers over the probability simplex.

These are the leaves and mixers of every circuit: regret matching (RM), its
clipped variant RM+, Hedge (exponential weights) and the constant minimizer
over a single point.
"""
from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .core import LinearLoss, RegretMinimizer, as_vector, tolerances
from .sets import Simplex


def regret_matching_next(regrets) -> np.ndarray:
    """Positive parts of the regrets, normalized; uniform if none is positive."""
    r = np.maximum(np.asarray(regrets, dtype=float), 0.0)
    total = r.sum()
    if total <= 0.0:
        return np.full(r.shape[0], 1.0 / r.shape[0])
    return r / total


def hedge_weights(cumulative_loss, eta: float) -> np.ndarray:
    z = -eta * np.asarray(cumulative_loss, dtype=float)
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def anytime_step_size(n: int) -> Callable[[int], float]:
    """``eta_t = sqrt(ln n / t)``."""
    log_n = math.log(n)
    return lambda t: math.sqrt(log_n / max(t, 1))


class SimplexMinimizer(RegretMinimizer):
    kind = "simplex"

    def __init__(self, n: int, history: bool = False):
        super().__init__(n, history=history)
        self._simplex = Simplex(n)

    def best_response(self, gradient):
        return self._simplex.linear_minimizer(gradient)

    def contains(self, x, tol=None):
        return self._simplex.contains(x, tol)

    def domain(self):
        return self._simplex

    def describe(self, indent=0):
        return " " * indent + f"{self.kind} dim={self.dim}"

    def _instantaneous_regret(self, loss: LinearLoss) -> np.ndarray:
        g = loss.gradient
        return float(g @ self.last_decision) - g


class RegretMatching(SimplexMinimizer):
    kind = "rm"

    def __init__(self, n: int, history: bool = False):
        super().__init__(n, history)
        self.regrets = np.zeros(n)

    def _next(self):
        return regret_matching_next(self.regrets)

    def _observe(self, loss):
        self.regrets += self._instantaneous_regret(loss)


class RegretMatchingPlus(SimplexMinimizer):
    kind = "rm_plus"

    def __init__(self, n: int, history: bool = False):
        super().__init__(n, history)
        self.regrets = np.zeros(n)

    def _next(self):
        return regret_matching_next(self.regrets)

    def _observe(self, loss):
        self.regrets = np.maximum(self.regrets + self._instantaneous_regret(loss), 0.0)


class Hedge(SimplexMinimizer):
    kind = "hedge"

    def __init__(self, n: int, step_size: Optional[Callable[[int], float]] = None,
                 history: bool = False):
        super().__init__(n, history)
        self.cumulative_loss = np.zeros(n)
        self.step_size = step_size or anytime_step_size(n)

    def _next(self):
        t = self.rounds
        if t == 0:
            return np.full(self.dim, 1.0 / self.dim)
        eta = self.step_size(t)
        if eta <= 0 and self.dim > 1:
            raise ValueError("Hedge step size must be positive")
        return hedge_weights(self.cumulative_loss, eta)

    def _observe(self, loss):
        self.cumulative_loss += loss.gradient


class ConstantMinimizer(RegretMinimizer):
    """Minimizer over the singleton ``{v}``: always outputs ``v``."""

    kind = "constant"

    def __init__(self, v, history: bool = False):
        v = as_vector(v)
        super().__init__(v.shape[0], history)
        self.point = v

    def _next(self):
        return self.point

    def _observe(self, loss):
        pass

    def best_response(self, gradient):
        return self.point.copy(), float(as_vector(gradient, self.dim) @ self.point)

    def contains(self, x, tol=None):
        t = tolerances.feasibility if tol is None else tol
        return bool(np.abs(as_vector(x, self.dim) - self.point).max() <= t)

    def describe(self, indent=0):
        return " " * indent + f"constant dim={self.dim}"


ATOMS = {
    "rm": RegretMatching,
    "rm_plus": RegretMatchingPlus,
    "hedge": Hedge,
}


def atom_factory(name: str) -> Callable[[int], SimplexMinimizer]:
    try:
        return ATOMS[name]
    except KeyError:
        raise ValueError(f"unknown atom {name!r}; choose from {sorted(ATOMS)}") from None
