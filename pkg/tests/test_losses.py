import numpy as np
import pytest

from helpers import central_diff_gradient
from sadmm import (
    SIGMOID_CURVATURE,
    FiniteSumLoss,
    LeastSquaresComponent,
    ShapeError,
    SigmoidComponent,
)


def random_sigmoid_loss(rng, n=10, d=6):
    comps = [
        SigmoidComponent(rng.standard_normal(d), rng.choice([-1.0, 1.0]))
        for _ in range(n)
    ]
    return FiniteSumLoss(comps)


def random_least_squares_loss(rng, n=10, d=6):
    comps = [
        LeastSquaresComponent(rng.standard_normal(d), rng.standard_normal())
        for _ in range(n)
    ]
    return FiniteSumLoss(comps)


def test_sigmoid_gradient_at_zero():
    c = SigmoidComponent([1.0, 0.0], 1.0)
    assert np.allclose(c.gradient([0.0, 0.0]), [-0.25, 0.0])
    assert c.value([0.0, 0.0]) == pytest.approx(0.5)


def test_least_squares_gradient_example():
    c = LeastSquaresComponent([1.0, 1.0], 3.0)
    assert np.array_equal(c.gradient([1.0, 1.0]), [-2.0, -2.0])
    assert c.value([1.0, 1.0]) == pytest.approx(1.0)


def test_sigmoid_gradient_matches_finite_differences():
    c = SigmoidComponent([2.0, -1.0], -1.0)
    x = np.array([0.3, 0.7])
    fd = central_diff_gradient(c.value, x)
    grad = c.gradient(x)
    assert np.linalg.norm(grad - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))


def test_component_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    for loss in (random_sigmoid_loss(rng), random_least_squares_loss(rng)):
        for _ in range(20):
            x = rng.standard_normal(loss.dim)
            for i in range(loss.n):
                fd = central_diff_gradient(lambda v: loss.component_value(i, v), x)
                grad = loss.component_gradient(i, x)
                err = np.linalg.norm(grad - fd)
                assert err <= 1e-5 * max(1.0, np.linalg.norm(fd))


def test_full_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    loss = random_sigmoid_loss(rng, n=10, d=5)
    x = rng.standard_normal(5)
    fd = central_diff_gradient(loss.full_value, x)
    assert np.linalg.norm(loss.full_gradient(x) - fd) <= 1e-6 * max(
        1.0, np.linalg.norm(fd)
    )


def test_row_dot_primitive_is_row_consistent():
    # the exact-equality contracts (mean consistency, gradient-table
    # cancellation) rest on this property of the row-dot kernel
    from sadmm.losses import _row_dots

    rng = np.random.default_rng(99)
    mat = rng.standard_normal((500, 37))
    x = rng.standard_normal(37)
    full = _row_dots(mat, x)
    for i in range(0, 500, 13):
        assert full[i] == _row_dots(mat[i : i + 1], x)[0]
    idx = rng.integers(0, 500, 40)
    assert np.array_equal(_row_dots(mat[idx], x), full[idx])


def test_full_gradient_is_exact_mean_of_components():
    rng = np.random.default_rng(2)
    for loss in (random_sigmoid_loss(rng, 13, 7), random_least_squares_loss(rng, 13, 7)):
        x = rng.standard_normal(7)
        stacked = np.stack([loss.component_gradient(i, x) for i in range(loss.n)])
        mean = np.add.reduce(stacked, axis=0) / loss.n
        assert np.array_equal(loss.full_gradient(x), mean)
        values = np.array([loss.component_value(i, x) for i in range(loss.n)])
        assert loss.full_value(x) == np.add.reduce(values) / loss.n


def test_single_component_full_gradient():
    c = LeastSquaresComponent([1.0, 2.0], 0.5)
    loss = FiniteSumLoss([c])
    x = np.array([0.4, -0.2])
    assert np.array_equal(loss.full_gradient(x), loss.component_gradient(0, x))


def test_symmetric_residuals_cancel():
    loss = FiniteSumLoss(
        [LeastSquaresComponent([1.0], 0.0), LeastSquaresComponent([1.0], 2.0)]
    )
    assert np.array_equal(loss.full_gradient(np.array([1.0])), [0.0])


def test_lipschitz_bound_values():
    ls = FiniteSumLoss([LeastSquaresComponent([1.0, 2.0], 0.0)])
    assert ls.lipschitz_bound().L == pytest.approx(10.0)

    sig = FiniteSumLoss([SigmoidComponent([1.0, 0.0, 0.0], 1.0)])
    assert sig.lipschitz_bound().L == pytest.approx(1.0 / (6.0 * np.sqrt(3.0)))

    zero = FiniteSumLoss([SigmoidComponent([0.0, 0.0], 1.0)])
    assert zero.lipschitz_bound().L == 0.0


def test_sigmoid_curvature_matches_grid_maximization():
    # Oracle: maximize |g (1 - g) (1 - 2 g)| over the logistic value g.
    g = np.arange(1e-6, 1.0, 1e-6)
    oracle = np.max(np.abs(g * (1.0 - g) * (1.0 - 2.0 * g)))
    assert abs(oracle - SIGMOID_CURVATURE) < 1e-9


def test_lipschitz_certificate_sampled_pairs():
    rng = np.random.default_rng(3)
    for loss in (random_sigmoid_loss(rng, 5, 4), random_least_squares_loss(rng, 5, 4)):
        L = loss.lipschitz_bound().L
        for _ in range(1000):
            x = 3.0 * rng.standard_normal(loss.dim)
            y = 3.0 * rng.standard_normal(loss.dim)
            for i in range(loss.n):
                lhs = np.linalg.norm(
                    loss.component_gradient(i, x) - loss.component_gradient(i, y)
                )
                assert lhs <= L * np.linalg.norm(x - y) * (1.0 + 1e-9)


def test_value_ranges():
    rng = np.random.default_rng(4)
    sig = random_sigmoid_loss(rng, 8, 3)
    ls = random_least_squares_loss(rng, 8, 3)
    for _ in range(50):
        x = rng.standard_normal(3)
        assert np.all((sig.component_values(x) > 0) & (sig.component_values(x) < 1))
        assert np.all(ls.component_values(x) >= 0)


def test_extreme_scores_do_not_overflow():
    c = SigmoidComponent([700.0], 1.0)
    for x in ([1.0], [-1.0]):
        assert np.isfinite(c.value(x))
        assert np.isfinite(c.gradient(x)).all()
    assert c.value([1.0]) == pytest.approx(0.0, abs=1e-300)
    assert c.value([-1.0]) == pytest.approx(1.0)


def test_mixed_kinds_fall_back_to_loop():
    rng = np.random.default_rng(5)
    comps = [
        SigmoidComponent(rng.standard_normal(4), 1.0),
        LeastSquaresComponent(rng.standard_normal(4), 0.3),
    ]
    loss = FiniteSumLoss(comps)
    x = rng.standard_normal(4)
    assert np.array_equal(loss.component_gradient(0, x), comps[0].gradient(x))
    assert np.array_equal(loss.component_gradient(1, x), comps[1].gradient(x))
    stacked = np.stack([c.gradient(x) for c in comps])
    assert np.array_equal(loss.full_gradient(x), np.add.reduce(stacked, axis=0) / 2)


def test_dimension_and_index_errors():
    with pytest.raises(ShapeError):
        FiniteSumLoss([])
    with pytest.raises(ShapeError):
        FiniteSumLoss(
            [LeastSquaresComponent([1.0], 0.0), LeastSquaresComponent([1.0, 2.0], 0.0)]
        )
    loss = FiniteSumLoss([LeastSquaresComponent([1.0, 2.0], 0.0)])
    with pytest.raises(IndexError):
        loss.component_gradient(5, [0.0, 0.0])
    with pytest.raises(ShapeError):
        loss.full_gradient([1.0, 2.0, 3.0])
