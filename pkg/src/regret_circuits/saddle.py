"""Self-play for regularized bilinear saddle-point problems

    min_x max_y  x'Ay + d1(x) - d2(y)

together with the saddle-point residual, per-player exploitability and the
check that the residual of the average profile is bounded by the players'
average regrets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .core import (
    ConvexLoss,
    DimensionError,
    LinearLoss,
    RegretMinimizer,
    UnsupportedOperation,
    as_vector,
)


class QuadraticRegularizer:
    """``d(x) = weight/2 * ||x - center||^2``."""

    def __init__(self, weight: float, center):
        if weight <= 0:
            raise ValueError("regularizer weight must be positive")
        self.weight = float(weight)
        self.center = as_vector(center)

    def __call__(self, x) -> float:
        d = np.asarray(x, float) - self.center
        return 0.5 * self.weight * float(d @ d)

    def subgradient(self, x) -> np.ndarray:
        return self.weight * (np.asarray(x, float) - self.center)

    def as_loss(self) -> ConvexLoss:
        return ConvexLoss(self, self.subgradient)

    def minimize_linear_plus(self, convex_set, gradient, scale: float = 1.0):
        """``min_x <g, x> + scale * d(x)`` over the set, via one projection."""
        g = as_vector(gradient, convex_set.dim)
        project = getattr(convex_set, "project", None)
        if project is None:
            raise UnsupportedOperation("regularized oracle needs a projectable set")
        x = project(self.center - g / (scale * self.weight))
        return x, float(g @ x) + scale * self(x)


def _oracle(convex_set, gradient, reg, scale: float = 1.0):
    if reg is None:
        return convex_set.linear_minimizer(gradient)
    minimize = getattr(reg, "minimize_linear_plus", None)
    if minimize is None:
        raise UnsupportedOperation("no regularized best-response oracle for this regularizer")
    return minimize(convex_set, gradient, scale)


@dataclass
class SaddleProblem:
    A: np.ndarray
    set_x: object
    set_y: object
    d1: Optional[QuadraticRegularizer] = None
    d2: Optional[QuadraticRegularizer] = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if self.A.shape != (self.set_x.dim, self.set_y.dim):
            raise DimensionError(
                f"payoff matrix is {self.A.shape}, sets have dimensions ({self.set_x.dim}, {self.set_y.dim})")

    @property
    def regularized(self) -> bool:
        return self.d1 is not None or self.d2 is not None

    def objective(self, x, y) -> float:
        v = float(x @ self.A @ y)
        if self.d1 is not None:
            v += self.d1(x)
        if self.d2 is not None:
            v -= self.d2(y)
        return v

    def loss_x(self, y):
        g = self.A @ y
        if self.d1 is None:
            return LinearLoss(g)
        d1 = self.d1
        return ConvexLoss(lambda x: float(g @ x) + d1(x), lambda x: g + d1.subgradient(x))

    def loss_y(self, x):
        g = -(self.A.T @ x)
        if self.d2 is None:
            return LinearLoss(g)
        d2 = self.d2
        return ConvexLoss(lambda y: float(g @ y) + d2(y), lambda y: g + d2.subgradient(y))


def saddle_residual(problem: SaddleProblem, x_bar, y_bar) -> float:
    """``max_y {d1(x̄) - d2(y) + <x̄, Ay>} - min_x {d1(x) - d2(ȳ) + <x, Aȳ>}``."""
    x_bar = as_vector(x_bar, problem.set_x.dim)
    y_bar = as_vector(y_bar, problem.set_y.dim)
    _, min_y = _oracle(problem.set_y, -(problem.A.T @ x_bar), problem.d2)
    _, min_x = _oracle(problem.set_x, problem.A @ y_bar, problem.d1)
    d1 = problem.d1(x_bar) if problem.d1 is not None else 0.0
    d2 = problem.d2(y_bar) if problem.d2 is not None else 0.0
    return (d1 - min_y) - (min_x - d2)


def exploitability(problem: SaddleProblem, x_bar, y_bar) -> tuple[float, float]:
    """Each player's best-response improvement against the other's strategy."""
    if problem.regularized:
        raise UnsupportedOperation("exploitability is defined for the unregularized game")
    x_bar = as_vector(x_bar, problem.set_x.dim)
    y_bar = as_vector(y_bar, problem.set_y.dim)
    value = float(x_bar @ problem.A @ y_bar)
    _, min_x = problem.set_x.linear_minimizer(problem.A @ y_bar)
    _, min_neg_y = problem.set_y.linear_minimizer(-(problem.A.T @ x_bar))
    return value - min_x, -min_neg_y - value


def value_against_best_response(problem: SaddleProblem, x_bar) -> float:
    """``max_y x̄'Ay``: the x player's expected loss against a best response."""
    _, v = problem.set_y.linear_minimizer(-(problem.A.T @ as_vector(x_bar, problem.set_x.dim)))
    return -v


def geometric_checkpoints(T: int, start: int = 10) -> list[int]:
    points, t = [], start
    while t < T:
        points.append(t)
        t *= 2
    points.append(T)
    return points


@dataclass
class CheckpointRow:
    iter: int
    regret_x: float
    regret_y: float
    residual: float
    exploit_x: Optional[float]
    exploit_y: Optional[float]
    violation: Optional[float] = None

    @property
    def avg_regret_x(self) -> float:
        return self.regret_x / self.iter

    @property
    def avg_regret_y(self) -> float:
        return self.regret_y / self.iter


@dataclass
class SelfPlayTrace:
    rounds: int = 0
    sum_x: Optional[np.ndarray] = None
    sum_y: Optional[np.ndarray] = None
    incurred_x: float = 0.0
    incurred_y: float = 0.0
    rows: list[CheckpointRow] = field(default_factory=list)
    decisions_x: list[np.ndarray] = field(default_factory=list)
    decisions_y: list[np.ndarray] = field(default_factory=list)
    linear_regret_x: float = 0.0
    linear_regret_y: float = 0.0

    @property
    def average_x(self) -> np.ndarray:
        return self.sum_x / self.rounds

    @property
    def average_y(self) -> np.ndarray:
        return self.sum_y / self.rounds


def trace_regrets(problem: SaddleProblem, trace: SelfPlayTrace) -> tuple[float, float]:
    """Regrets on the losses the driver built (convex ones when regularized)."""
    T = trace.rounds
    if T == 0:
        return 0.0, 0.0
    _, min_x = _oracle(problem.set_x, problem.A @ trace.sum_y, problem.d1, scale=T)
    _, min_y = _oracle(problem.set_y, -(problem.A.T @ trace.sum_x), problem.d2, scale=T)
    return trace.incurred_x - min_x, trace.incurred_y - min_y


def self_play(problem: SaddleProblem, rm_x: RegretMinimizer, rm_y: RegretMinimizer, T: int,
              checkpoints: Optional[Iterable[int]] = None,
              violation: Optional[Callable[[np.ndarray], float]] = None,
              keep_history: bool = False,
              on_checkpoint: Optional[Callable[[CheckpointRow], None]] = None) -> SelfPlayTrace:
    """Both players decide, then both observe the loss induced by the other's
    current decision (simultaneous updates)."""
    if rm_x.dim != problem.set_x.dim or rm_y.dim != problem.set_y.dim:
        raise DimensionError(
            f"minimizers have dimensions ({rm_x.dim}, {rm_y.dim}), "
            f"problem needs ({problem.set_x.dim}, {problem.set_y.dim})")
    if T < 1:
        raise ValueError("need at least one round")
    marks = set(geometric_checkpoints(T) if checkpoints is None else checkpoints)
    trace = SelfPlayTrace(sum_x=np.zeros(rm_x.dim), sum_y=np.zeros(rm_y.dim))
    A = problem.A
    for t in range(1, T + 1):
        x = rm_x.next_decision()
        y = rm_y.next_decision()
        loss_x = problem.loss_x(y)
        loss_y = problem.loss_y(x)
        trace.incurred_x += loss_x(x)
        trace.incurred_y += loss_y(y)
        rm_x.observe(loss_x)
        rm_y.observe(loss_y)
        trace.sum_x += x
        trace.sum_y += y
        trace.rounds = t
        if keep_history:
            trace.decisions_x.append(x.copy())
            trace.decisions_y.append(y.copy())
        if t in marks:
            row = _checkpoint(problem, trace, violation)
            trace.rows.append(row)
            if on_checkpoint is not None:
                on_checkpoint(row)
    try:
        trace.linear_regret_x = rm_x.regret()
        trace.linear_regret_y = rm_y.regret()
    except UnsupportedOperation:
        trace.linear_regret_x = trace.linear_regret_y = float("nan")
    return trace


def _checkpoint(problem, trace, violation) -> CheckpointRow:
    rx, ry = trace_regrets(problem, trace)
    xb, yb = trace.average_x, trace.average_y
    residual = saddle_residual(problem, xb, yb)
    ex = ey = None
    if not problem.regularized:
        ex, ey = exploitability(problem, xb, yb)
    v = violation(xb) if violation is not None else None
    return CheckpointRow(trace.rounds, rx, ry, residual, ex, ey, v)


@dataclass
class FolkReport:
    residual: float
    avg_regret_x: float
    avg_regret_y: float
    slack: float
    holds: bool


def folk_average_check(problem: SaddleProblem, trace: SelfPlayTrace, tol: float = 1e-9) -> FolkReport:
    """Residual of the average profile vs. the sum of average regrets."""
    rx, ry = trace_regrets(problem, trace)
    T = trace.rounds
    residual = saddle_residual(problem, trace.average_x, trace.average_y)
    bound = rx / T + ry / T
    return FolkReport(residual, rx / T, ry / T, bound - residual, residual <= bound + tol)
