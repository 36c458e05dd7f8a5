"""Command-line experiment runner.

    regret-circuits experiment.cfg [--iters T] [--seed S] [--out PATH] [--validate]

Reads a flat ``key = value`` config, wires the regret circuits for both
players, runs self-play (or a single-agent run against seeded random losses
for ``problem = treeplex``) and writes one CSV row per checkpoint.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .atoms import atom_factory
from .circuits.lagrangian import PenaltySchedule
from .config import ConfigError, ExperimentConfig, load_config
from .core import InfeasibleError, LinearLoss, Linearizer, RegretMinimizer
from .games import GameFormatError, constrained_kuhn, kuhn_poker, load_matrix, matrix_game
from .saddle import (
    CheckpointRow,
    QuadraticRegularizer,
    SaddleProblem,
    geometric_checkpoints,
    self_play,
)
from .treeplex import CFRMinimizer, Treeplex, TreeplexFormatError, load_treeplex

COLUMNS = ["iter", "regret_x", "regret_y", "avg_regret_x", "avg_regret_y",
           "residual", "exploit_x", "exploit_y", "violation"]

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3


@dataclass
class Experiment:
    """Everything a run needs: the problem and one minimizer per player.

    For single-agent runs ``problem`` and ``rm_y`` are ``None``.
    """

    rm_x: RegretMinimizer
    rm_y: Optional[RegretMinimizer]
    problem: Optional[SaddleProblem]
    violation: Optional[Callable[[np.ndarray], float]] = None


def _simplex_player(n: int, atom: str) -> RegretMinimizer:
    return atom_factory(atom)(n)


def _matrix_experiment(config: ExperimentConfig) -> Experiment:
    if config.problem == "matrix":
        game = load_matrix(config.matrix_file)
    elif config.problem == "random":
        rng = np.random.default_rng(config.seed)
        game = matrix_game(rng.uniform(-1.0, 1.0, size=(config.rows, config.cols)))
    else:
        game = matrix_game(config.problem)
    problem = game.problem()
    m, n = game.A.shape
    if config.reg_x:
        problem.d1 = QuadraticRegularizer(config.reg_x, np.full(m, 1.0 / m))
    if config.reg_y:
        problem.d2 = QuadraticRegularizer(config.reg_y, np.full(n, 1.0 / n))
    rm_x = _simplex_player(m, config.x_atom)
    rm_y = _simplex_player(n, config.y_atom)
    if problem.d1 is not None:
        rm_x = Linearizer(rm_x, history=False)
    if problem.d2 is not None:
        rm_y = Linearizer(rm_y, history=False)
    return Experiment(rm_x, rm_y, problem)


def build_experiment(config: ExperimentConfig) -> Experiment:
    """Construct the problem and circuits.  Raises on malformed inputs."""
    if config.problem in ("matching_pennies", "rps", "matrix", "random"):
        return _matrix_experiment(config)
    if config.problem == "kuhn":
        game = kuhn_poker()
        return Experiment(CFRMinimizer(game.treeplex_x, atom_factory(config.x_atom)),
                          CFRMinimizer(game.treeplex_y, atom_factory(config.y_atom)),
                          game.problem())
    if config.problem == "constrained_kuhn":
        ck = constrained_kuhn(bound=config.constraint_bound)
        if config.backend == "projection":
            rm_x = ck.projection_minimizer(config.x_atom)
        else:
            schedule = None
            if config.penalty_mode == "adaptive":
                base = ck.lagrangian_minimizer(config.x_atom, config.kappa).schedule
                schedule = PenaltySchedule(mode="adaptive", kappa=config.kappa,
                                           loss_bound=base.loss_bound, diameter=base.diameter)
            rm_x = ck.lagrangian_minimizer(config.x_atom, config.kappa, schedule)
        rm_y = CFRMinimizer(ck.game.treeplex_y, atom_factory(config.y_atom))
        return Experiment(rm_x, rm_y, ck.problem(config.backend), ck.violation)
    if config.problem == "treeplex":
        root = load_treeplex(config.treeplex_file)
        return Experiment(CFRMinimizer(root, atom_factory(config.x_atom)), None, None)
    raise ConfigError(f"problem: unknown problem {config.problem!r}")


def _fmt(value) -> str:
    return "" if value is None else format(float(value), ".12g")


def _row_cells(row: CheckpointRow) -> list[str]:
    return [str(row.iter), _fmt(row.regret_x), _fmt(row.regret_y),
            _fmt(row.avg_regret_x), _fmt(row.avg_regret_y), _fmt(row.residual),
            _fmt(row.exploit_x), _fmt(row.exploit_y), _fmt(row.violation)]


def _single_agent(experiment: Experiment, config: ExperimentConfig, marks, emit) -> dict:
    """CFR on a standalone treeplex against seeded uniform [-1, 1] losses."""
    rng = np.random.default_rng(config.seed)
    rm = experiment.rm_x
    regret = 0.0
    for t in range(1, config.iterations + 1):
        rm.next_decision()
        rm.observe(LinearLoss(rng.uniform(-1.0, 1.0, size=rm.dim)))
        if t in marks:
            regret = rm.regret()
            emit([str(t), _fmt(regret), "", _fmt(regret / t), "", "", "", "", ""])
    return {"iterations": config.iterations, "regret_x": regret,
            "avg_regret_x": regret / config.iterations}


def run(config: ExperimentConfig, out=None) -> dict:
    """Run the experiment, writing the CSV to ``config.output`` (or ``out``).

    Returns the summary of the last checkpoint.
    """
    experiment = build_experiment(config)
    T = config.iterations
    marks = config.checkpoint_list()
    marks = set(geometric_checkpoints(T) if marks is None else marks)

    handle = out if out is not None else open(config.output, "w", newline="")
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COLUMNS)

        def emit(cells):
            writer.writerow(cells)
            handle.flush()

        if experiment.problem is None:
            return _single_agent(experiment, config, marks, emit)
        trace = self_play(experiment.problem, experiment.rm_x, experiment.rm_y, T,
                          checkpoints=sorted(marks), violation=experiment.violation,
                          on_checkpoint=lambda row: emit(_row_cells(row)))
    finally:
        if out is None:
            handle.close()
    last = trace.rows[-1]
    summary = {"iterations": T, "regret_x": last.regret_x, "regret_y": last.regret_y,
               "residual": last.residual}
    if last.exploit_x is not None:
        summary["value"] = float(trace.average_x @ experiment.problem.A @ trace.average_y)
    if last.violation is not None:
        summary["violation"] = last.violation
    return summary


def validate(config: ExperimentConfig) -> str:
    """Build the circuits without iterating and describe them."""
    experiment = build_experiment(config)
    lines = [f"problem {config.problem}", "player x:", experiment.rm_x.describe(2)]
    if experiment.rm_y is not None:
        lines += ["player y:", experiment.rm_y.describe(2)]
    return "\n".join(lines)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="regret-circuits",
                                description="Run a regret-minimization self-play experiment.")
    p.add_argument("config", help="experiment config file (key = value lines)")
    p.add_argument("--iters", type=int, help="override iterations")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--out", help="override output CSV path")
    p.add_argument("--validate", action="store_true", help="build the circuits, print them and exit")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {"iterations": args.iters, "seed": args.seed, "output": args.out}
    try:
        config = load_config(args.config, overrides)
        if args.validate:
            print(validate(config))
            return EXIT_OK
        summary = run(config)
    except InfeasibleError as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, GameFormatError, TreeplexFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(" ".join(f"{k}={_fmt(v)}" for k, v in summary.items()))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
