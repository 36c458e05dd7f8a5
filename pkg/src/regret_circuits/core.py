"""Regret-minimizer protocol, loss representations and regret bookkeeping.

A regret minimizer alternates two operations: ``next_decision()`` emits a
point of its set and ``observe(loss)`` receives the loss that evaluates that
point.  Every minimizer keeps a :class:`RegretLedger` of what it emitted and
what it was charged, so its cumulative regret can be evaluated exactly through
its own best-response oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np


class Tolerances:
    """Global feasibility tolerances (absolute)."""

    def __init__(self) -> None:
        self.feasibility = 1e-9

    def set(self, feasibility: float) -> None:
        if feasibility <= 0:
            raise ValueError("tolerance must be positive")
        self.feasibility = float(feasibility)


tolerances = Tolerances()


class DimensionError(ValueError):
    pass


class ProtocolError(RuntimeError):
    pass


class UnsupportedOperation(NotImplementedError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class InfeasibleError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


class LossEvaluationError(RuntimeError):
    """A user-supplied loss or constraint callable raised during a round."""


def as_vector(x, dim: Optional[int] = None, what: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"{what} has dimension {v.shape[0]}, expected {dim}")
    return v


@dataclass(frozen=True)
class LinearLoss:
    """Affine functional ``x -> <gradient, x> + offset``."""

    gradient: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gradient", as_vector(self.gradient))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.gradient.shape[0]

    def __call__(self, x) -> float:
        if not isinstance(x, np.ndarray):
            x = np.asarray(x, dtype=float)
        return float(self.gradient @ x) + self.offset

    def linear_part(self) -> "LinearLoss":
        return LinearLoss(self.gradient)


@dataclass(frozen=True)
class ConvexLoss:
    """Convex loss given by a value callable and a subgradient callable."""

    value: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def tangent(self, x) -> LinearLoss:
        """Tangent plane at ``x``: exact at ``x``, below the loss elsewhere."""
        x = np.asarray(x, dtype=float)
        g = as_vector(self.subgradient(x), x.shape[0], "subgradient")
        return LinearLoss(g, self(x) - float(g @ x))

    def check_subgradient(self, points: Sequence[np.ndarray], tol: float = 1e-9) -> bool:
        """Spot-check ``f(y) >= f(x) + <g(x), y - x>`` over all ordered pairs."""
        for x in points:
            fx, gx = self(x), np.asarray(self.subgradient(np.asarray(x, float)))
            for y in points:
                if self(y) < fx + float(gx @ (np.asarray(y) - x)) - tol:
                    return False
        return True

    @classmethod
    def from_linear(cls, loss: LinearLoss) -> "ConvexLoss":
        return cls(loss, lambda x: loss.gradient)


Loss = Union[LinearLoss, ConvexLoss]


def coerce_linear(loss, dim: int) -> LinearLoss:
    if isinstance(loss, LinearLoss):
        if loss.dim != dim:
            raise DimensionError(f"loss has dimension {loss.dim}, expected {dim}")
        return loss
    if isinstance(loss, ConvexLoss):
        raise TypeError("convex losses must go through a Linearizer")
    return LinearLoss(as_vector(loss, dim, "loss gradient"))


class RegretLedger:
    """Running record of decisions and linear losses.

    Only sums are needed to evaluate regret, so the per-round history is kept
    only when ``history=True``.
    """

    def __init__(self, dim: int, history: bool = False):
        self.dim = dim
        self.history = history
        self.decisions: list[np.ndarray] = []
        self.losses: list[LinearLoss] = []
        self.incurred = 0.0
        self.cumulative_gradient = np.zeros(dim)
        self.offset_total = 0.0
        self.rounds = 0

    def record(self, decision: np.ndarray, loss: LinearLoss) -> None:
        if loss.dim != self.dim:
            raise DimensionError(f"loss has dimension {loss.dim}, expected {self.dim}")
        self.incurred += float(loss.gradient @ decision) + loss.offset
        self.cumulative_gradient += loss.gradient
        self.offset_total += loss.offset
        self.rounds += 1
        if self.history:
            self.decisions.append(np.array(decision, dtype=float))
            self.losses.append(loss)

    def recomputed_incurred(self) -> float:
        if not self.history:
            raise UnsupportedOperation("ledger was created without history")
        return math.fsum(l(x) for x, l in zip(self.decisions, self.losses))

    def __len__(self) -> int:
        return self.rounds


BestOracle = Callable[[np.ndarray], "tuple[np.ndarray, float]"]


def cumulative_regret(ledger: RegretLedger, best_oracle: BestOracle) -> float:
    """``sum_t l_t(x_t) - min_x sum_t l_t(x)``; zero for an empty ledger."""
    if ledger.rounds == 0:
        return 0.0
    _, best = best_oracle(ledger.cumulative_gradient)
    return ledger.incurred - (best + ledger.offset_total)


class RegretMinimizer:
    """Base class for every atom and circuit.

    Subclasses implement ``_next()``, ``_observe(loss)`` and
    ``best_response(gradient)``.  The base class enforces strict alternation
    of decisions and losses and keeps the regret ledger.
    """

    kind = "minimizer"

    def __init__(self, dim: int, history: bool = False):
        self.dim = int(dim)
        self.ledger = RegretLedger(self.dim, history=history)
        self.last_decision: Optional[np.ndarray] = None
        self._awaiting_loss = False

    @property
    def rounds(self) -> int:
        return self.ledger.rounds

    def next_decision(self) -> np.ndarray:
        if self._awaiting_loss:
            raise ProtocolError(f"{self.kind}: decision requested twice without an intervening loss")
        x = np.asarray(self._next(), dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"{self.kind} produced shape {x.shape}, expected ({self.dim},)")
        self.last_decision = x
        self._awaiting_loss = True
        return x

    def observe(self, loss) -> None:
        if not self._awaiting_loss:
            raise ProtocolError(f"{self.kind}: loss observed without an outstanding decision")
        loss = coerce_linear(loss, self.dim)
        self.ledger.record(self.last_decision, loss)
        self._awaiting_loss = False
        self._observe(loss)

    def regret(self) -> float:
        return cumulative_regret(self.ledger, self.best_response)

    def best_response(self, gradient: np.ndarray) -> tuple[np.ndarray, float]:
        raise UnsupportedOperation(f"{self.kind} has no best-response oracle")

    def contains(self, x, tol: Optional[float] = None) -> bool:
        raise UnsupportedOperation(f"{self.kind} has no membership test")

    def domain(self):
        """The feasible set as a :mod:`regret_circuits.sets` object, when known."""
        raise UnsupportedOperation(f"{self.kind} does not expose its set")

    def children(self) -> list["RegretMinimizer"]:
        return []

    def describe(self, indent: int = 0) -> str:
        lines = [" " * indent + f"{self.kind} dim={self.dim}"]
        for child in self.children():
            lines.append(child.describe(indent + 2))
        return "\n".join(lines)

    def _next(self) -> np.ndarray:
        raise NotImplementedError

    def _observe(self, loss: LinearLoss) -> None:
        raise NotImplementedError


def step(minimizer: RegretMinimizer, previous_loss=None) -> np.ndarray:
    """Feed the loss for the previous decision (if any) and return the next one."""
    if previous_loss is not None:
        minimizer.observe(previous_loss)
    return minimizer.next_decision()


def best_fixed_value(minimizer_or_set, cumulative_gradient) -> tuple[np.ndarray, float]:
    """Exact minimizer and minimum of a linear functional over a set."""
    oracle = getattr(minimizer_or_set, "best_response", None)
    if oracle is None:
        oracle = getattr(minimizer_or_set, "linear_minimizer", None)
    if oracle is None:
        raise UnsupportedOperation(f"no linear oracle for {type(minimizer_or_set).__name__}")
    dim = minimizer_or_set.dim
    return oracle(as_vector(cumulative_gradient, dim, "gradient"))


class Linearizer(RegretMinimizer):
    """Turns a linear-loss minimizer into a convex-loss one.

    Each convex loss is replaced by its tangent plane at the decision it
    evaluates.  The convex losses themselves are kept in ``convex_losses`` so
    the convex-loss regret can be measured against a supplied minimum.
    """

    kind = "linearize"

    def __init__(self, inner: RegretMinimizer, history: bool = True):
        super().__init__(inner.dim, history=history)
        self.inner = inner
        self.convex_losses: list[ConvexLoss] = []
        self.convex_incurred = 0.0

    def observe(self, loss) -> None:
        if not isinstance(loss, ConvexLoss):
            if not isinstance(loss, LinearLoss):
                loss = LinearLoss(as_vector(loss, self.dim, "loss gradient"))
            loss = ConvexLoss.from_linear(loss)
        if not self._awaiting_loss:
            raise ProtocolError("linearize: loss observed without an outstanding decision")
        try:
            tangent = loss.tangent(self.last_decision)
        except Exception as exc:
            raise LossEvaluationError(f"round {self.rounds + 1}: subgradient evaluation failed: {exc}") from exc
        if self.ledger.history:
            self.convex_losses.append(loss)
        self.convex_incurred += loss(self.last_decision)
        super().observe(tangent)

    def _next(self):
        return self.inner.next_decision()

    def _observe(self, loss: LinearLoss) -> None:
        self.inner.observe(loss)

    def best_response(self, gradient):
        return self.inner.best_response(gradient)

    def contains(self, x, tol=None):
        return self.inner.contains(x, tol)

    def domain(self):
        return self.inner.domain()

    def children(self):
        return [self.inner]

    def convex_regret(self, minimum_of_sum: float) -> float:
        """Regret on the convex losses given ``min_x sum_t f_t(x)``."""
        return self.convex_incurred - minimum_of_sum
