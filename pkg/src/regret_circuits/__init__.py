"""Composable regret minimization: simplex atoms, circuit combinators, CFR
over treeplexes and a bilinear saddle-point self-play driver."""
from .atoms import ConstantMinimizer, Hedge, RegretMatching, RegretMatchingPlus, atom_factory
from .core import (
    ConvexLoss,
    LinearLoss,
    Linearizer,
    RegretLedger,
    RegretMinimizer,
    best_fixed_value,
    cumulative_regret,
    step,
)

__version__ = "0.1.0"
