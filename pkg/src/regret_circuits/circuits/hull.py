from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..core import DimensionError, LinearLoss, ProtocolError, RegretMinimizer, as_vector


class ConvexHull(RegretMinimizer):
    """Minimizer over ``co{X_1, ..., X_k}``.

    Every child sees the incoming loss unchanged.  The mixer over the
    k-simplex sees, for the same round, the loss ``lambda -> sum_i lambda_i
    l(x_i)`` built from the child decisions that were combined into the
    output.  Regret is at most the mixer's regret plus the largest child
    regret.
    """

    kind = "hull"

    def __init__(self, children: Sequence[RegretMinimizer], mixer: RegretMinimizer,
                 history: bool = False):
        self.members = list(children)
        if len(self.members) < 2:
            raise ValueError("convex hull needs at least two children")
        dims = {c.dim for c in self.members}
        if len(dims) != 1:
            raise DimensionError(f"hull children have different dimensions {sorted(dims)}")
        if mixer.dim != len(self.members):
            raise DimensionError(f"mixer has dimension {mixer.dim}, expected {len(self.members)}")
        super().__init__(dims.pop(), history)
        self.mixer = mixer
        self.child_decisions: Optional[np.ndarray] = None
        self.weights: Optional[np.ndarray] = None
        self.last_mixer_loss: Optional[np.ndarray] = None

    def _next(self):
        self.child_decisions = np.stack([c.next_decision() for c in self.members])
        self.weights = self.mixer.next_decision()
        return self.weights @ self.child_decisions

    def _observe(self, loss):
        for c in self.members:
            c.observe(loss)
        mixer_loss = self.child_decisions @ loss.gradient + loss.offset
        self.last_mixer_loss = mixer_loss
        self.mixer.observe(LinearLoss(mixer_loss))

    def best_response(self, gradient):
        g = as_vector(gradient, self.dim, "gradient")
        best_x, best_v = None, np.inf
        for c in self.members:
            x, v = c.best_response(g)
            if v < best_v:
                best_x, best_v = x, v
        return best_x, float(best_v)

    def children(self):
        return self.members + [self.mixer]


def convex_hull(children: Sequence[RegretMinimizer], mixer: RegretMinimizer) -> ConvexHull:
    return ConvexHull(children, mixer)


class VPolytope(RegretMinimizer):
    """Minimizer over ``co{v_1, ..., v_n}`` driven by a single simplex mixer
    that is charged ``(l(v_1), ..., l(v_n))``."""

    kind = "v_polytope"

    def __init__(self, vertices, mixer: RegretMinimizer, history: bool = False):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] == 0:
            raise ValueError("V-polytope needs a nonempty list of equal-length vertices")
        if mixer.dim != V.shape[0]:
            raise DimensionError(f"mixer has dimension {mixer.dim}, expected {V.shape[0]}")
        super().__init__(V.shape[1], history)
        self.vertices = V
        self.mixer = mixer
        self.last_mixer_loss: Optional[np.ndarray] = None

    def _next(self):
        return self.mixer.next_decision() @ self.vertices

    def _observe(self, loss):
        self.last_mixer_loss = self.vertices @ loss.gradient + loss.offset
        self.mixer.observe(LinearLoss(self.last_mixer_loss))

    def best_response(self, gradient):
        values = self.vertices @ as_vector(gradient, self.dim, "gradient")
        i = int(np.argmin(values))
        return self.vertices[i].copy(), float(values[i])

    def children(self):
        return [self.mixer]


def v_polytope(vertices, mixer: RegretMinimizer) -> VPolytope:
    return VPolytope(vertices, mixer)


class MixExperts:
    """Combiner weighting experts that each face their own loss stream.

    Each round the combiner publishes weights over the experts together with
    the experts' recommendations; the round's losses arrive as one linear
    loss per expert.  The combiner is charged ``sum_i lambda_i l_i(x_i)``.
    """

    kind = "mix_experts"

    def __init__(self, experts: Sequence[RegretMinimizer], mixer: RegretMinimizer):
        self.experts = list(experts)
        if not self.experts:
            raise ValueError("need at least one expert")
        if mixer.dim != len(self.experts):
            raise DimensionError(f"mixer has dimension {mixer.dim}, expected {len(self.experts)}")
        self.mixer = mixer
        self.recommendations: Optional[list[np.ndarray]] = None
        self.weights: Optional[np.ndarray] = None
        self.incurred = 0.0
        self.rounds = 0
        self._awaiting = False

    def next_decision(self) -> tuple[np.ndarray, list[np.ndarray]]:
        if self._awaiting:
            raise ProtocolError("mix_experts: decision requested twice without losses")
        self.recommendations = [e.next_decision() for e in self.experts]
        self.weights = self.mixer.next_decision()
        self._awaiting = True
        return self.weights, self.recommendations

    def observe(self, losses: Sequence) -> None:
        if not self._awaiting:
            raise ProtocolError("mix_experts: losses observed without an outstanding decision")
        losses = list(losses)
        if len(losses) != len(self.experts):
            raise ValueError(f"got {len(losses)} loss streams for {len(self.experts)} experts")
        expert_values = np.empty(len(self.experts))
        for i, (expert, loss, x) in enumerate(zip(self.experts, losses, self.recommendations)):
            if not isinstance(loss, LinearLoss):
                loss = LinearLoss(as_vector(loss, expert.dim, "loss gradient"))
            expert_values[i] = loss(x)
            expert.observe(loss)
        self.incurred += float(self.weights @ expert_values)
        self.mixer.observe(LinearLoss(expert_values))
        self.rounds += 1
        self._awaiting = False

    def regret(self) -> float:
        """``sum_t sum_i lambda_i l_i(x_i) - min_i min_x sum_t l_i(x)``."""
        if self.rounds == 0:
            return 0.0
        best = min(
            e.best_response(e.ledger.cumulative_gradient)[1] + e.ledger.offset_total
            for e in self.experts
        )
        return self.incurred - best

    def bound(self) -> float:
        return max(e.regret() for e in self.experts) + self.mixer.regret()


def mix_experts(experts: Sequence[RegretMinimizer], mixer: RegretMinimizer) -> MixExperts:
    return MixExperts(experts, mixer)
