"""Problem instances: matrix games, Kuhn poker in sequence form and a
constrained Kuhn variant whose constraint couples several information sets.

Sign convention: the x (row / first) player minimizes ``x'Ay``, so ``A``
holds the first player's expected *loss*.  In Kuhn poker the first player's
equilibrium payoff is -1/18, i.e. the saddle value of ``x'Ay`` is +1/18.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .atoms import atom_factory as _atom_factory
from .circuits.intersection import BregmanGeometry, ProjectIntersection
from .circuits.lagrangian import LagrangianConstrain, PenaltySchedule, linear_constraint
from .core import ConvexLoss, InfeasibleError
from .saddle import SaddleProblem
from .sets import Halfspace, Intersection, Simplex
from .treeplex import CFRMinimizer, Treeplex, build_infoset, build_observation


class GameFormatError(ValueError):
    pass


@dataclass
class MatrixGame:
    A: np.ndarray
    row_labels: list[str] = field(default_factory=list)
    col_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if not np.all(np.isfinite(self.A)):
            raise ValueError("payoff matrix has non-finite entries")
        m, n = self.A.shape
        self.row_labels = self.row_labels or [f"r{i}" for i in range(m)]
        self.col_labels = self.col_labels or [f"c{j}" for j in range(n)]

    def problem(self) -> SaddleProblem:
        m, n = self.A.shape
        return SaddleProblem(self.A, Simplex(m), Simplex(n))


NAMED_MATRICES = {
    "matching_pennies": (np.array([[1.0, -1.0], [-1.0, 1.0]]), ["heads", "tails"], ["heads", "tails"]),
    # row loss: rock vs paper loses (+1), rock vs scissors wins (-1)
    "rps": (np.array([[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]]),
            ["rock", "paper", "scissors"], ["rock", "paper", "scissors"]),
}


def matrix_game(name_or_matrix) -> MatrixGame:
    if isinstance(name_or_matrix, str):
        try:
            A, rows, cols = NAMED_MATRICES[name_or_matrix]
        except KeyError:
            raise ValueError(f"unknown matrix game {name_or_matrix!r}; known: {sorted(NAMED_MATRICES)}") from None
        return MatrixGame(A.copy(), list(rows), list(cols))
    return MatrixGame(name_or_matrix)


def parse_matrix(text: str) -> MatrixGame:
    """First line ``rows cols``, then row-major entries separated by whitespace."""
    lines = [(i, l.split("#", 1)[0].split()) for i, l in enumerate(text.splitlines(), 1)]
    lines = [(i, toks) for i, toks in lines if toks]
    if not lines:
        raise GameFormatError("empty matrix file")
    head_line, head = lines[0]
    if len(head) != 2:
        raise GameFormatError(f"line {head_line}: expected 'rows cols'")
    try:
        m, n = int(head[0]), int(head[1])
    except ValueError:
        raise GameFormatError(f"line {head_line}: dimensions must be integers") from None
    if m < 1 or n < 1:
        raise GameFormatError(f"line {head_line}: dimensions must be positive")
    values = []
    for lineno, toks in lines[1:]:
        for tok in toks:
            try:
                values.append(float(tok))
            except ValueError:
                raise GameFormatError(f"line {lineno}: not a number: {tok!r}") from None
    if len(values) != m * n:
        raise GameFormatError(f"expected {m * n} entries, found {len(values)}")
    return MatrixGame(np.array(values).reshape(m, n))


def load_matrix(path) -> MatrixGame:
    with open(path) as fh:
        return parse_matrix(fh.read())


CARDS = ("J", "Q", "K")


def kuhn_player1_root():
    hands = []
    for card in CARDS:
        facing_bet = build_infoset(f"1{card}cb", ["fold", "call"])
        after_check = build_observation([facing_bet], name=f"1{card}c")
        hands.append(build_infoset(f"1{card}", ["check", "bet"], {"check": after_check}))
    return build_observation(hands, name="P1")


def kuhn_player2_root():
    infosets = []
    for card in CARDS:
        infosets.append(build_infoset(f"2{card}c", ["check", "bet"]))
        infosets.append(build_infoset(f"2{card}b", ["fold", "call"]))
    return build_observation(infosets, name="P2")


@dataclass
class KuhnGame:
    treeplex_x: Treeplex
    treeplex_y: Treeplex
    A: np.ndarray

    def problem(self) -> SaddleProblem:
        return SaddleProblem(self.A, self.treeplex_x, self.treeplex_y)

    def bet_indices(self) -> list[int]:
        """First player's opening-bet sequences, one per hand."""
        return [self.treeplex_x.index[f"1{c}:bet"] for c in CARDS]


def kuhn_poker() -> KuhnGame:
    tx = Treeplex(kuhn_player1_root())
    ty = Treeplex(kuhn_player2_root())
    A = np.zeros((tx.dim, ty.dim))
    chance = 1.0 / 6.0
    for c1 in range(3):
        for c2 in range(3):
            if c1 == c2:
                continue
            p1, p2 = CARDS[c1], CARDS[c2]
            win = 1.0 if c1 > c2 else -1.0  # first player's showdown sign
            x = tx.index
            y = ty.index
            # terminal histories: first player's payoff; A stores its negation
            terminals = [
                (x[f"1{p1}:check"], y[f"2{p2}c:check"], win * 1.0),
                (x[f"1{p1}cb:fold"], y[f"2{p2}c:bet"], -1.0),
                (x[f"1{p1}cb:call"], y[f"2{p2}c:bet"], win * 2.0),
                (x[f"1{p1}:bet"], y[f"2{p2}b:fold"], 1.0),
                (x[f"1{p1}:bet"], y[f"2{p2}b:call"], win * 2.0),
            ]
            for i, j, payoff in terminals:
                A[i, j] -= chance * payoff
    return KuhnGame(tx, ty, A)


@dataclass
class StrategyConstraint:
    description: str
    function: ConvexLoss
    halfspace: Optional[Halfspace] = None


def bet_mass_constraint(game: KuhnGame, bound: float) -> StrategyConstraint:
    """``sum over hands of x[bet] <= bound``: couples the three opening infosets."""
    a = np.zeros(game.treeplex_x.dim)
    a[game.bet_indices()] = 1.0
    return StrategyConstraint(
        f"total opening-bet probability <= {bound:g}",
        linear_constraint(a, bound),
        Halfspace(a, bound),
    )


@dataclass
class ConstrainedKuhn:
    game: KuhnGame
    constraint: StrategyConstraint

    @property
    def feasible_set(self) -> Intersection:
        return Intersection([self.game.treeplex_x, self.constraint.halfspace])

    def problem(self, backend: str = "projection") -> SaddleProblem:
        """Saddle problem whose x-set is the constrained set (projection) or
        the relaxed treeplex (Lagrangian, where only averages become feasible)."""
        set_x = self.feasible_set if backend == "projection" else self.game.treeplex_x
        return SaddleProblem(self.game.A, set_x, self.game.treeplex_y)

    def projection_minimizer(self, atom: str = "rm_plus", geometry: Optional[BregmanGeometry] = None):
        inner = CFRMinimizer(self.game.treeplex_x, _atom_factory(atom))
        return ProjectIntersection(inner, self.constraint.halfspace, geometry, domain=self.game.treeplex_x)

    def lagrangian_minimizer(self, atom: str = "rm_plus", kappa: float = 100.0,
                             schedule: Optional[PenaltySchedule] = None):
        inner = CFRMinimizer(self.game.treeplex_x, _atom_factory(atom))
        if schedule is None:
            # ||Ay|| is convex in y, so its maximum sits at a pure strategy
            loss_bound = max(float(np.linalg.norm(self.game.A @ y))
                             for y in self.game.treeplex_y.pure_strategies())
            schedule = PenaltySchedule(kappa=kappa, loss_bound=loss_bound,
                                       diameter=self.game.treeplex_x.diameter_bound())
        return LagrangianConstrain(inner, self.constraint.function, schedule)

    def violation(self, x) -> float:
        return max(0.0, float(self.constraint.function(x)))


def constrained_kuhn(constraint: Optional[StrategyConstraint] = None, bound: float = 0.3) -> ConstrainedKuhn:
    game = kuhn_poker()
    if constraint is None:
        constraint = bet_mass_constraint(game, bound)
    if constraint.halfspace is not None:
        Intersection([game.treeplex_x, constraint.halfspace]).check_nonempty()
    return ConstrainedKuhn(game, constraint)
