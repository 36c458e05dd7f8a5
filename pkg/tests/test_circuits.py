import math

import numpy as np
import pytest

from oracles import min_over_points, simplex_vertices
from regret_circuits import ConstantMinimizer, ConvexLoss, Hedge, LinearLoss, RegretMatching, RegretMatchingPlus
from regret_circuits.circuits import (
    AffineMap,
    BregmanGeometry,
    ConvexHull,
    LagrangianConstrain,
    PenaltyController,
    PenaltySchedule,
    ProjectIntersection,
    affine_image,
    bregman_project,
    cartesian_product,
    convex_hull,
    linear_constraint,
    minkowski_sum,
    mix_experts,
    v_polytope,
)
from regret_circuits.core import (
    ConfigurationError,
    DimensionError,
    InfeasibleError,
    LossEvaluationError,
    UnsupportedOperation,
)
from regret_circuits.sets import Halfspace, Intersection, Simplex


def play(rm, losses):
    out = []
    for g in losses:
        out.append(rm.next_decision().copy())
        rm.observe(LinearLoss(g) if not isinstance(g, LinearLoss) else g)
    return out


# -- Cartesian product --------------------------------------------------------

def test_product_concatenates_and_splits():
    a, b = RegretMatching(2, history=True), ConstantMinimizer([1.0, 0.0], history=True)
    prod = cartesian_product(a, b)
    np.testing.assert_allclose(prod.next_decision(), [0.5, 0.5, 1.0, 0.0])
    prod.observe(LinearLoss([1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_array_equal(a.ledger.losses[0].gradient, [1.0, 2.0])
    np.testing.assert_array_equal(b.ledger.losses[0].gradient, [3.0, 4.0])


def test_product_regret_identity():
    rng = np.random.default_rng(0)
    a, b = RegretMatching(2), Hedge(3)
    prod = cartesian_product(a, b)
    play(prod, rng.normal(size=(10, 5)))
    assert abs(prod.regret() - a.regret() - b.regret()) <= 1e-9


def test_product_rejects_wrong_dimension():
    prod = cartesian_product(RegretMatching(2), RegretMatching(2))
    prod.next_decision()
    with pytest.raises(DimensionError):
        prod.observe(LinearLoss([1.0, 2.0, 3.0]))


# -- affine image -------------------------------------------------------------

def test_identity_image_matches_inner():
    rng = np.random.default_rng(1)
    losses = rng.normal(size=(30, 3))
    img = affine_image(RegretMatching(3), AffineMap(np.eye(3)))
    bare = RegretMatching(3)
    for x, y in zip(play(img, losses), play(bare, losses)):
        np.testing.assert_array_equal(x, y)


def test_scaled_image_forwards_scaled_gradient():
    inner = RegretMatching(2, history=True)
    img = affine_image(inner, AffineMap(2 * np.eye(2)))
    np.testing.assert_allclose(img.next_decision(), [1.0, 1.0])
    img.observe(LinearLoss([0.5, -1.0], 3.0))
    np.testing.assert_array_equal(inner.ledger.losses[0].gradient, [1.0, -2.0])
    assert inner.ledger.losses[0].offset == 0.0


def test_constant_map_image_has_zero_regret():
    rng = np.random.default_rng(2)
    c = np.array([0.2, -1.0, 4.0])
    img = affine_image(RegretMatching(2), AffineMap(np.zeros((3, 2)), c))
    for x in play(img, rng.normal(size=(20, 3))):
        np.testing.assert_array_equal(x, c)
    assert img.regret() == pytest.approx(0.0, abs=1e-12)


def test_affine_pullback_formula():
    M = np.array([[1.0, 2.0], [0.0, -1.0], [3.0, 1.0]])
    b = np.array([1.0, 2.0, -1.0])
    T = AffineMap(M, b)
    loss = LinearLoss([0.5, -1.0, 2.0], 0.25)
    pulled = T.pullback(loss)
    np.testing.assert_allclose(pulled.gradient, M.T @ loss.gradient)
    x = np.array([0.3, 0.7])
    assert pulled(x) == pytest.approx(loss(T(x)))


def test_affine_image_regret_equals_inner_regret():
    rng = np.random.default_rng(3)
    M = rng.normal(size=(4, 3))
    inner = RegretMatchingPlus(3)
    img = affine_image(inner, AffineMap(M, rng.normal(size=4)))
    play(img, rng.normal(size=(50, 4)))
    assert img.regret() == pytest.approx(inner.regret(), abs=1e-9)


def test_affine_image_dimension_mismatch():
    with pytest.raises(DimensionError):
        affine_image(RegretMatching(2), AffineMap(np.eye(3)))


# -- Minkowski sum ------------------------------------------------------------

def test_minkowski_with_zero_summand_matches_simplex():
    rng = np.random.default_rng(4)
    losses = rng.normal(size=(30, 2))
    msum = minkowski_sum(ConstantMinimizer([0.0, 0.0]), RegretMatching(2))
    bare = RegretMatching(2)
    for x, y in zip(play(msum, losses), play(bare, losses)):
        np.testing.assert_allclose(x, y, atol=1e-15)


def test_minkowski_adds_decisions():
    msum = minkowski_sum(RegretMatching(2), ConstantMinimizer([1.0, 0.0]))
    np.testing.assert_allclose(msum.next_decision(), [1.5, 0.5])


def test_minkowski_regret_bound():
    rng = np.random.default_rng(5)
    a, b = RegretMatching(2), Hedge(2)
    msum = minkowski_sum(a, b)
    play(msum, rng.normal(size=(20, 2)))
    assert msum.regret() <= a.regret() + b.regret() + 1e-9


def test_minkowski_dimension_mismatch():
    with pytest.raises(DimensionError):
        minkowski_sum(RegretMatching(2), RegretMatching(3))


# -- convex hull ----------------------------------------------------------------

def test_hull_combines_with_mixer_weights():
    mixer = ConstantMinimizer([0.3, 0.7])
    hull = ConvexHull([ConstantMinimizer([1.0, 0.0]), ConstantMinimizer([0.0, 1.0])], mixer)
    np.testing.assert_allclose(hull.next_decision(), [0.3, 0.7])


def test_hull_mixer_loss_from_child_values():
    mixer = RegretMatching(2, history=True)
    hull = convex_hull([ConstantMinimizer([1.0, 0.0]), ConstantMinimizer([0.0, 1.0])], mixer)
    hull.next_decision()
    hull.observe(LinearLoss([5.0, 1.0]))
    np.testing.assert_array_equal(mixer.ledger.losses[0].gradient, [5.0, 1.0])


def test_hull_of_constants_reduces_to_mixer():
    rng = np.random.default_rng(6)
    losses = rng.normal(size=(40, 3))
    hull = convex_hull([ConstantMinimizer(e) for e in np.eye(3)], RegretMatching(3))
    bare = RegretMatching(3)
    for x, y in zip(play(hull, losses), play(bare, losses)):
        np.testing.assert_allclose(x, y, atol=1e-15)


def test_hull_bound_long_adversarial_run():
    # two copies of the 2-simplex embedded in R^4 on disjoint coordinates
    rng = np.random.default_rng(7)
    a = affine_image(RegretMatching(2), AffineMap(np.vstack([np.eye(2), np.zeros((2, 2))])))
    b = affine_image(Hedge(2), AffineMap(np.vstack([np.zeros((2, 2)), np.eye(2)])))
    mixer = RegretMatchingPlus(2)
    hull = convex_hull([a, b], mixer)
    vertices = simplex_vertices(4)
    total = np.zeros(4)
    for t in range(10_000):
        x = hull.next_decision()
        # adversary punishes whatever carries the most mass
        g = np.where(x >= x.max() - 1e-12, 1.0, 0.0) + rng.uniform(0, 0.1, 4)
        total += g
        hull.observe(g)
    assert hull.regret() <= mixer.regret() + max(a.regret(), b.regret()) + 1e-9
    _, best = min_over_points(vertices, total)
    assert hull.regret() == pytest.approx(hull.ledger.incurred - best, abs=1e-6)


def test_hull_validation():
    with pytest.raises(ValueError):
        ConvexHull([RegretMatching(2)], RegretMatching(1))
    with pytest.raises(DimensionError):
        ConvexHull([RegretMatching(2), RegretMatching(2)], RegretMatching(3))
    with pytest.raises(DimensionError):
        ConvexHull([RegretMatching(2), RegretMatching(3)], RegretMatching(2))


# -- V-polytope -----------------------------------------------------------------

def test_vpolytope_of_basis_is_the_mixer():
    rng = np.random.default_rng(8)
    losses = rng.normal(size=(30, 4))
    vp = v_polytope(np.eye(4), RegretMatchingPlus(4))
    bare = RegretMatchingPlus(4)
    for x, y in zip(play(vp, losses), play(bare, losses)):
        np.testing.assert_allclose(x, y, atol=1e-15)


def test_vpolytope_square_mixer_loss():
    mixer = RegretMatching(4, history=True)
    vp = v_polytope([[0, 0], [0, 1], [1, 0], [1, 1]], mixer)
    vp.next_decision()
    vp.observe(LinearLoss([1.0, 1.0]))
    np.testing.assert_array_equal(mixer.ledger.losses[0].gradient, [0, 1, 1, 2])


def test_vpolytope_single_vertex():
    vp = v_polytope([[0.25, 0.75]], RegretMatching(1))
    for x in play(vp, np.random.default_rng(9).normal(size=(10, 2))):
        np.testing.assert_allclose(x, [0.25, 0.75])
    assert vp.regret() == pytest.approx(0.0, abs=1e-12)


def test_vpolytope_matches_hull_of_constants():
    rng = np.random.default_rng(10)
    V = rng.normal(size=(3, 2))
    losses = rng.normal(size=(25, 2))
    vp = v_polytope(V, RegretMatching(3))
    hull = convex_hull([ConstantMinimizer(v) for v in V], RegretMatching(3))
    for x, y in zip(play(vp, losses), play(hull, losses)):
        np.testing.assert_allclose(x, y, atol=1e-12)


def test_vpolytope_empty():
    with pytest.raises(ValueError):
        v_polytope(np.zeros((0, 2)), RegretMatching(1))


# -- mixing experts -------------------------------------------------------------

def test_mixer_moves_to_better_expert():
    combo = mix_experts([ConstantMinimizer([1.0]), ConstantMinimizer([1.0])], RegretMatching(2))
    for _ in range(1000):
        combo.next_decision()
        combo.observe([LinearLoss([1.0]), LinearLoss([0.0])])
    weights, _ = combo.next_decision()
    assert weights[1] > 0.99


def test_identical_experts_bound():
    rng = np.random.default_rng(11)
    combo = mix_experts([RegretMatching(3), RegretMatching(3)], Hedge(2))
    for _ in range(300):
        combo.next_decision()
        g = rng.normal(size=3)
        combo.observe([g, g])
    a, b = combo.experts
    assert a.regret() == pytest.approx(b.regret())
    assert combo.regret() <= a.regret() + combo.mixer.regret() + 1e-9


def test_three_expert_bound():
    rng = np.random.default_rng(12)
    combo = mix_experts([RegretMatching(2), Hedge(3), RegretMatchingPlus(4)], RegretMatching(3))
    for _ in range(1000):
        combo.next_decision()
        combo.observe([rng.normal(size=2), rng.normal(size=3), rng.normal(size=4)])
    assert combo.regret() <= combo.bound() + 1e-9


def test_expert_stream_count_mismatch():
    combo = mix_experts([RegretMatching(2), RegretMatching(2)], RegretMatching(2))
    combo.next_decision()
    with pytest.raises(ValueError, match="loss streams"):
        combo.observe([[1.0, 0.0]])


# -- Lagrangian relaxation -----------------------------------------------------

def x1_constraint():
    return linear_constraint([1.0, 0.0], 0.5)


def test_lagrangian_forwards_penalty_when_violated():
    inner = ConstantMinimizer([0.8, 0.2], history=True)
    lag = LagrangianConstrain(inner, x1_constraint(), PenaltySchedule(beta=10.0, diameter=1.0))
    lag.next_decision()
    lag.observe(LinearLoss([0.3, 0.4]))
    np.testing.assert_allclose(inner.ledger.losses[0].gradient, [10.3, 0.4])


def test_lagrangian_passes_loss_when_feasible():
    inner = ConstantMinimizer([0.2, 0.8], history=True)
    lag = LagrangianConstrain(inner, x1_constraint(), PenaltySchedule(beta=10.0, diameter=1.0))
    lag.next_decision()
    lag.observe(LinearLoss([0.3, 0.4]))
    np.testing.assert_array_equal(inner.ledger.losses[0].gradient, [0.3, 0.4])


def test_fixed_beta_is_kappa_l_d():
    lag = LagrangianConstrain(RegretMatching(2), x1_constraint(),
                              PenaltySchedule(kappa=100.0, loss_bound=2.0))
    play(lag, [[0.0, 1.0]] * 3)
    assert lag.betas == pytest.approx([100.0 * 2.0 * math.sqrt(2.0)] * 3)


def test_lagrangian_average_feasibility_simplex_demo():
    T = 10_000
    lag = LagrangianConstrain(RegretMatching(2), x1_constraint(),
                              PenaltySchedule(kappa=100.0, loss_bound=1.0))
    play(lag, [[0.0, 1.0]] * T)
    assert lag.average_violation() <= 1 / 100 + 0.05
    assert lag.average().sum() == pytest.approx(1.0)


def test_lagrangian_warns_when_loss_bound_estimated():
    lag = LagrangianConstrain(RegretMatching(2), x1_constraint(), PenaltySchedule())
    lag.next_decision()
    with pytest.warns(RuntimeWarning, match="loss_bound"):
        lag.observe(LinearLoss([0.0, 1.0]))


def test_negative_beta_rejected():
    with pytest.raises(ValueError):
        LagrangianConstrain(RegretMatching(2), x1_constraint(), PenaltySchedule(beta=-1.0, diameter=1.0))


def test_adaptive_requires_beta_max():
    with pytest.raises(ConfigurationError):
        PenaltyController(PenaltySchedule(mode="adaptive"), diameter=1.0)


def test_adaptive_beta_grows_under_persistent_violation():
    ctrl = PenaltyController(PenaltySchedule(mode="adaptive", beta_max=50.0), diameter=1.0)
    betas = [ctrl.current(1.0)]
    for _ in range(100):
        betas.append(ctrl.update(0.1))
    assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(betas, betas[1:]))
    assert betas[-1] == pytest.approx(50.0)


def test_adaptive_beta_static_without_violation():
    ctrl = PenaltyController(PenaltySchedule(mode="adaptive", beta_max=50.0), diameter=1.0)
    start = ctrl.current(1.0)
    for _ in range(100):
        assert ctrl.update(0.0) == pytest.approx(start)
    assert ctrl.beta_minimizer.ledger.cumulative_gradient.tolist() == [0.0, 0.0]


def test_adaptive_beta_max_default():
    ctrl = PenaltyController(PenaltySchedule(mode="adaptive", kappa=2.0, loss_bound=3.0), diameter=0.5)
    assert ctrl.beta_max == pytest.approx(10 * 2.0 * 3.0 * 0.5)


def test_lagrangian_constraint_failure_propagates():
    def bad(x):
        raise ZeroDivisionError

    lag = LagrangianConstrain(RegretMatching(2), ConvexLoss(bad, bad), PenaltySchedule(beta=1.0, diameter=1.0))
    lag.next_decision()
    with pytest.raises(LossEvaluationError):
        lag.observe(LinearLoss([0.0, 1.0]))


# -- projection intersection ---------------------------------------------------

def test_geometry_divergence_strong_convexity():
    rng = np.random.default_rng(13)
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    for geom in (BregmanGeometry.euclidean(), BregmanGeometry.quadratic_form(Q)):
        for _ in range(100):
            x, y = rng.normal(size=2), rng.normal(size=2)
            assert geom.divergence(y, x) >= geom.mu / 2 * float((y - x) @ (y - x)) - 1e-12
    assert BregmanGeometry.euclidean().dilation_factor == 2.0


def halfspace_circuit(inner):
    return ProjectIntersection(inner, Halfspace([1.0, 0.0], 0.5), domain=Simplex(2))


def test_alpha_example():
    inner = ConstantMinimizer([0.8, 0.2], history=True)
    pi = halfspace_circuit(inner)
    np.testing.assert_allclose(pi.next_decision(), [0.5, 0.5])
    pi.observe(LinearLoss([0.0, 1.0]))
    assert pi.alphas[0] == pytest.approx(5 / 3)
    np.testing.assert_allclose(inner.ledger.losses[0].gradient, [0.0, 1.0] + 5 / 3 * np.array([0.3, -0.3]))


def test_feasible_raw_decision_forwards_loss_unchanged():
    inner = ConstantMinimizer([0.2, 0.8], history=True)
    pi = halfspace_circuit(inner)
    pi.next_decision()
    pi.observe(LinearLoss([0.7, -0.1]))
    assert pi.alphas == [0.0]
    np.testing.assert_array_equal(inner.ledger.losses[0].gradient, [0.7, -0.1])


def test_projection_circuit_random_losses():
    rng = np.random.default_rng(14)
    pi = halfspace_circuit(RegretMatchingPlus(2))
    target = pi.domain()
    for _ in range(10_000):
        x = pi.next_decision()
        assert target.contains(x, 1e-9)
        g = rng.uniform(-1, 1, 2)
        pi.observe(LinearLoss(g))
        assert np.linalg.norm(pi.last_forwarded) <= 2 * np.linalg.norm(g) + 1e-12
    assert pi.alpha_condition_held
    assert pi.regret() / 10_000 <= 0.05


def test_empty_intersection_rejected():
    with pytest.raises(InfeasibleError):
        ProjectIntersection(RegretMatching(2), Halfspace([1.0, 1.0], 0.5), domain=Simplex(2))


def test_non_quadratic_geometry_unsupported():
    entropy = BregmanGeometry(lambda x: float(x @ np.log(x)), lambda x: np.log(x) + 1, 1.0, 1.0)
    target = Intersection([Simplex(2), Halfspace([1.0, 0.0], 0.5)])
    with pytest.raises(UnsupportedOperation):
        bregman_project([0.8, 0.2], target, entropy)
