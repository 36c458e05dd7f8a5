from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..atoms import atom_factory
from ..core import (
    ConfigurationError,
    ConvexLoss,
    LinearLoss,
    LossEvaluationError,
    RegretMinimizer,
    UnsupportedOperation,
    as_vector,
)
from ..sets import Simplex


def linear_constraint(normal, bound: float) -> ConvexLoss:
    """``g(x) = <normal, x> - bound``; feasible where ``g <= 0``."""
    a = as_vector(normal)
    return ConvexLoss(lambda x: float(a @ x) - bound, lambda x: a)


@dataclass
class PenaltySchedule:
    """How the penalty multiplier ``beta_t`` is chosen.

    ``fixed`` uses ``beta = kappa * L * D`` every round (or ``beta`` when given
    explicitly).  ``adaptive`` lets a two-action regret minimizer over
    ``{0, beta_max}`` pick ``beta``, charging it ``-beta * violation``.
    """

    mode: str = "fixed"
    kappa: float = 100.0
    loss_bound: Optional[float] = None
    diameter: Optional[float] = None
    beta: Optional[float] = None
    beta_max: Optional[float] = None
    atom: str = "rm"

    def validate(self) -> None:
        if self.mode not in ("fixed", "adaptive"):
            raise ConfigurationError(f"unknown penalty mode {self.mode!r}")
        if not self.kappa > 0:
            raise ConfigurationError("kappa must be positive")
        if self.beta is not None and self.beta < 0:
            raise ValueError("penalty multiplier must be nonnegative")


class PenaltyController:
    def __init__(self, schedule: PenaltySchedule, diameter: float):
        schedule.validate()
        self.schedule = schedule
        self.diameter = diameter
        self.observed_norm = 0.0
        self._warned = False
        self.beta_minimizer: Optional[RegretMinimizer] = None
        self.beta_max = None
        if schedule.mode == "adaptive":
            self.beta_max = schedule.beta_max
            if self.beta_max is None:
                D = schedule.diameter if schedule.diameter is not None else diameter
                if schedule.loss_bound is None or not D:
                    raise ConfigurationError("adaptive mode needs beta_max, or both loss_bound and a diameter")
                self.beta_max = 10.0 * schedule.kappa * schedule.loss_bound * D
            self.beta_minimizer = atom_factory(schedule.atom)(2)
            self._weights = self.beta_minimizer.next_decision()

    def current(self, loss_norm: float) -> float:
        s = self.schedule
        self.observed_norm = max(self.observed_norm, loss_norm)
        if s.mode == "adaptive":
            beta = float(self._weights[1] * self.beta_max)
        elif s.beta is not None:
            beta = s.beta
        else:
            L = s.loss_bound
            if L is None:
                if not self._warned:
                    warnings.warn(
                        "loss_bound not set: estimating L from observed gradient norms; the "
                        "feasibility guarantee assumes an a-priori bound", RuntimeWarning, stacklevel=3)
                    self._warned = True
                L = self.observed_norm
            beta = s.kappa * L * self.diameter
        if beta < 0:
            raise ValueError(f"penalty multiplier became negative ({beta})")
        return beta

    def update(self, violation: float) -> Optional[float]:
        """Feed ``max(0, g(x_t))``; returns the next multiplier in adaptive mode."""
        if self.beta_minimizer is None:
            return None
        self.beta_minimizer.observe(LinearLoss([0.0, -self.beta_max * violation]))
        self._weights = self.beta_minimizer.next_decision()
        return float(self._weights[1] * self.beta_max)


def _diameter_of(domain) -> Optional[float]:
    if isinstance(domain, Simplex):
        return math.sqrt(2.0) if domain.dim > 1 else 0.0
    bound = getattr(domain, "diameter_bound", None)
    return bound() if callable(bound) else None


class LagrangianConstrain(RegretMinimizer):
    """Approximate minimizer over ``X ∩ {g <= 0}`` by penalizing violations.

    When the current decision violates the constraint, the inner minimizer is
    charged ``l(x) + beta * <dg(x_t), x>``; otherwise it sees ``l`` unchanged.
    Individual decisions may be infeasible; only the averages are driven
    toward feasibility.
    """

    kind = "lagrangian"

    def __init__(self, inner: RegretMinimizer, constraint: ConvexLoss,
                 schedule: Optional[PenaltySchedule] = None, history: bool = False):
        super().__init__(inner.dim, history)
        self.inner = inner
        self.constraint = constraint
        self.schedule = schedule or PenaltySchedule()
        diameter = self.schedule.diameter
        if diameter is None:
            try:
                diameter = _diameter_of(inner.domain())
            except UnsupportedOperation:
                diameter = None
        if diameter is None and self.schedule.beta is None and self.schedule.mode == "fixed":
            raise ConfigurationError("diameter bound D is required for this set")
        self.controller = PenaltyController(self.schedule, diameter if diameter is not None else 0.0)
        self.betas: list[float] = []
        self.violations: list[float] = []
        self._sum_x = np.zeros(self.dim)
        self._sum_beta_x = np.zeros(self.dim)
        self._sum_beta = 0.0

    def _next(self):
        return self.inner.next_decision()

    def _observe(self, loss):
        x = self.last_decision
        try:
            gx = float(self.constraint(x))
        except Exception as exc:
            raise LossEvaluationError(f"round {self.rounds}: constraint evaluation failed: {exc}") from exc
        beta = self.controller.current(float(np.linalg.norm(loss.gradient)))
        gradient = loss.gradient
        if gx > 0:
            try:
                sub = as_vector(self.constraint.subgradient(x), self.dim, "constraint subgradient")
            except Exception as exc:
                raise LossEvaluationError(f"round {self.rounds}: constraint subgradient failed: {exc}") from exc
            gradient = gradient + beta * sub
        self.betas.append(beta)
        self.violations.append(max(0.0, gx))
        self._sum_x += x
        self._sum_beta_x += beta * x
        self._sum_beta += beta
        self.controller.update(max(0.0, gx))
        self.inner.observe(LinearLoss(gradient))

    def average(self) -> np.ndarray:
        """Uniform average of the emitted decisions."""
        if self.rounds == 0:
            raise ValueError("no rounds played")
        return self._sum_x / self.rounds

    def weighted_average(self) -> np.ndarray:
        """``beta``-weighted average; falls back to uniform if all ``beta`` are 0."""
        if self._sum_beta <= 0:
            return self.average()
        return self._sum_beta_x / self._sum_beta

    def average_violation(self, weighted: bool = False) -> float:
        xbar = self.weighted_average() if weighted else self.average()
        return max(0.0, float(self.constraint(xbar)))

    def best_response(self, gradient):
        return self.inner.best_response(gradient)

    def contains(self, x, tol=None):
        return self.inner.contains(x, tol)

    def domain(self):
        return self.inner.domain()

    def children(self):
        return [self.inner]


def lagrangian_constrain(inner, constraint, schedule=None) -> LagrangianConstrain:
    return LagrangianConstrain(inner, constraint, schedule)
