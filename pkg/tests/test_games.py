import numpy as np
import pytest

import oracles
from regret_circuits import RegretMatchingPlus
from regret_circuits.core import InfeasibleError
from regret_circuits.games import (
    GameFormatError,
    bet_mass_constraint,
    constrained_kuhn,
    kuhn_poker,
    matrix_game,
    parse_matrix,
)
from regret_circuits.saddle import self_play
from regret_circuits.treeplex import CFRMinimizer


def test_named_matrices():
    np.testing.assert_array_equal(matrix_game("matching_pennies").A, [[1, -1], [-1, 1]])
    rps = matrix_game("rps").A
    assert rps.shape == (3, 3)
    assert set(np.unique(rps)) == {-1.0, 0.0, 1.0}
    np.testing.assert_array_equal(rps, -rps.T)
    # cyclic: every row is the previous one shifted by one
    np.testing.assert_array_equal(rps[1], np.roll(rps[0], 1))
    with pytest.raises(ValueError, match="unknown matrix game"):
        matrix_game("chess")


def test_explicit_matrix_sets():
    problem = matrix_game(np.arange(6.0).reshape(2, 3)).problem()
    assert (problem.set_x.dim, problem.set_y.dim) == (2, 3)
    assert problem.d1 is None and problem.d2 is None


def test_parse_matrix_file_format():
    game = parse_matrix("2 3\n1 2 3\n4 5 6  # trailing comment\n")
    np.testing.assert_array_equal(game.A, [[1, 2, 3], [4, 5, 6]])


@pytest.mark.parametrize("text,match", [
    ("", "empty"),
    ("2\n1 2\n", "line 1"),
    ("2 2\n1 2\n3 x\n", "line 3"),
    ("2 2\n1 2 3\n", "expected 4 entries"),
    ("0 2\n", "line 1"),
])
def test_parse_matrix_errors(text, match):
    with pytest.raises(GameFormatError, match=match):
        parse_matrix(text)


def behavioral_to_oracle(game, bx, by):
    s1 = {I: bx["1" + I] for I in oracles.P1_INFOSETS}
    s2 = {I: by["2" + I] for I in oracles.P2_INFOSETS}
    return s1, s2


def test_uniform_profile_matches_tree_walk():
    game = kuhn_poker()
    x, y = game.treeplex_x.uniform(), game.treeplex_y.uniform()
    s1, s2 = behavioral_to_oracle(game, game.treeplex_x.behavioral(x), game.treeplex_y.behavioral(y))
    assert float(x @ game.A @ y) == pytest.approx(-oracles.kuhn_value(s1, s2), abs=1e-12)


def test_bilinear_form_matches_tree_walk_on_random_profiles():
    game = kuhn_poker()
    rng = np.random.default_rng(0)
    for _ in range(1000):
        bx = {i.name: rng.dirichlet(np.ones(2)) for i in game.treeplex_x.infosets}
        by = {i.name: rng.dirichlet(np.ones(2)) for i in game.treeplex_y.infosets}
        x, y = game.treeplex_x.from_behavioral(bx), game.treeplex_y.from_behavioral(by)
        s1, s2 = behavioral_to_oracle(game, bx, by)
        assert float(x @ game.A @ y) == pytest.approx(-oracles.kuhn_value(s1, s2), abs=1e-9)


def test_kuhn_game_value_oracle():
    value, M = oracles.kuhn_game_value()
    assert M.shape == (27, 64)
    assert value == pytest.approx(-1 / 18, abs=1e-9)


def test_bet_constraint_couples_infosets():
    game = kuhn_poker()
    con = bet_mass_constraint(game, 0.3)
    touched = {game.treeplex_x.labels[i].split(":")[0] for i in np.flatnonzero(con.halfspace.normal)}
    assert touched == {"1J", "1Q", "1K"}
    assert con.function(game.treeplex_x.uniform()) == pytest.approx(1.5 - 0.3)


def test_infeasible_constraint_rejected():
    with pytest.raises(InfeasibleError):
        constrained_kuhn(bound=-0.1)


def run_constrained(ck, backend, T, atom="rm_plus"):
    rm_x = ck.projection_minimizer(atom) if backend == "projection" else ck.lagrangian_minimizer(atom)
    rm_y = CFRMinimizer(ck.game.treeplex_y, RegretMatchingPlus)
    trace = self_play(ck.problem(backend), rm_x, rm_y, T, checkpoints=[T],
                      violation=ck.violation, keep_history=backend == "projection")
    return rm_x, trace


def test_vacuous_constraint_matches_unconstrained():
    T = 5000
    game = kuhn_poker()
    plain = self_play(game.problem(), CFRMinimizer(game.treeplex_x, RegretMatchingPlus),
                      CFRMinimizer(game.treeplex_y, RegretMatchingPlus), T, checkpoints=[T])
    _, constrained = run_constrained(constrained_kuhn(bound=3.0), "projection", T)
    assert abs(constrained.rows[-1].residual - plain.rows[-1].residual) <= 0.01


def test_projection_backend_iterates_feasible():
    ck = constrained_kuhn(bound=0.3)
    rm_x, trace = run_constrained(ck, "projection", 3000)
    feasible = ck.feasible_set
    assert all(feasible.contains(x, 1e-9) for x in trace.decisions_x)
    assert rm_x.alpha_condition_held
    assert trace.rows[-1].violation <= 1e-9


def test_lagrangian_backend_average_feasible():
    T = 5000
    ck = constrained_kuhn(bound=0.3)
    rm_x, trace = run_constrained(ck, "lagrangian", T)
    assert ck.violation(trace.average_x) <= 0.01 + 0.5 / np.sqrt(T)
    assert rm_x.average_violation() == pytest.approx(ck.violation(trace.average_x))
