import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planactlearn.domain import TransitionFn
from planactlearn.errors import InvalidParameter, InvalidState
from planactlearn.perception import (
    PerceptionTable,
    exact_argmax,
    greedy_argmax,
    init_perception,
    likelihood,
    max_likelihood_state,
    max_p_init,
    update_perception,
)


def table_with(states_mus, sigma=1.0):
    pt = PerceptionTable(2, sigma * np.eye(2))
    for s, mu in states_mus:
        pt.add(s, np.asarray(mu, dtype=float))
    return pt


def test_density_at_mean_identity():
    pt = table_with([((0, 0), (0.5, 0.5))])
    assert likelihood(pt, [0.5, 0.5], (0, 0)) == pytest.approx(1 / (2 * math.pi), rel=1e-12)


@pytest.mark.parametrize("sigma", [0.1, 1.0, 2.5])
def test_max_p_init(sigma):
    pt = PerceptionTable(2, sigma * np.eye(2))
    assert max_p_init(pt) == pytest.approx(1 / (2 * math.pi * sigma), rel=1e-12)


def test_density_matches_numeric_integral(rng):
    """The density integrates to one over a wide grid."""
    pt = PerceptionTable(2, np.array([[0.3, 0.1], [0.1, 0.2]]))
    pt.add((0,), np.array([0.2, -0.1]))
    xs = np.linspace(-4, 4, 401)
    X, Y = np.meshgrid(xs, xs)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    dens = np.exp(pt.logpdf_matrix(pts)[:, 0])
    h = xs[1] - xs[0]
    assert dens.sum() * h * h == pytest.approx(1.0, abs=1e-6)


def test_example1_argmax(ex1):
    s, _ = max_likelihood_state(ex1.perception, ex1.gamma, [1.51, 0.49], (1, 0))
    assert s == (1, 0)


def test_argmax_ties_prefer_predicted_then_smallest():
    pt = table_with([((0,), (0.0, 0.0)), ((1,), (0.0, 0.0)), ((2,), (0.0, 0.0))])
    assert exact_argmax(pt, [0, 0], predicted=(2,))[0] == (2,)
    assert exact_argmax(pt, [0, 0], predicted=None)[0] == (0,)


def test_empty_table_raises():
    pt = PerceptionTable(2, np.eye(2))
    with pytest.raises(InvalidState):
        max_likelihood_state(pt, TransitionFn(), [0, 0], (0,))


def grid_table(k=5, sigma=0.01):
    pt = PerceptionTable(2, sigma * np.eye(2))
    for i in range(k):
        for j in range(k):
            pt.add((i, j), np.array([i + 0.5, j + 0.5]))
    return pt


def test_greedy_matches_exhaustive_on_separated_grid(rng):
    pt = grid_table()
    for _ in range(100):
        x = rng.uniform(0, 5, size=2)
        start = tuple(int(v) for v in rng.integers(0, 5, size=2))
        g, _ = greedy_argmax(pt, x, start, None, (5, 5))
        e, _ = exact_argmax(pt, x)
        assert g == e


def test_mode_selection():
    pt = grid_table(3)
    s1, _ = max_likelihood_state(pt, None, [2.4, 0.6], (0, 0), (3, 3), mode="greedy")
    s2, _ = max_likelihood_state(pt, None, [2.4, 0.6], (0, 0), mode="exact")
    assert s1 == s2 == (2, 0)
    with pytest.raises(InvalidParameter):
        max_likelihood_state(pt, None, [0, 0], (0, 0), mode="fast")


def stream_update(xs, beta=0.0, p_init=0.1):
    pt = PerceptionTable(2, p_init * np.eye(2), sigma_floor=0.0)
    pt.add((0,), xs[0])
    for x in xs[1:]:
        update_perception(pt, (0,), x, pt.count((0,)) + 1, beta)
    return pt


def test_streaming_mean_is_batch_mean(rng):
    xs = rng.normal(size=(500, 2)) * [1.0, 3.0] + [2.0, -1.0]
    pt = stream_update(xs)
    assert np.allclose(pt.mean((0,)), xs.mean(axis=0), atol=1e-12, rtol=0)


def test_streaming_covariance_identity(rng):
    """beta = 0 gives the batch ML covariance plus the prior pseudo-count term."""
    xs = rng.normal(size=(300, 2)) @ np.array([[1.0, 0.3], [0.0, 0.5]])
    pt = stream_update(xs, p_init=0.1)
    n = len(xs)
    batch = np.cov(xs.T, bias=True)
    assert np.allclose(pt[(0,)].sigma, batch + 0.1 * np.eye(2) / n, rtol=1e-9, atol=1e-12)


def test_beta_one_leaves_parameters_untouched(ex1, rng):
    before = ex1.perception[(0, 0)]
    for _ in range(20):
        update_perception(ex1.perception, (0, 0), rng.normal(size=2), ex1.perception.count((0, 0)) + 1, 1.0)
    after = ex1.perception[(0, 0)]
    assert np.array_equal(before.mu, after.mu) and np.array_equal(before.sigma, after.sigma)


def test_beta_half_moves_mean_toward_x(ex1):
    before = ex1.perception.mean((1, 0)).copy()
    x = np.array([1.51, 0.49])
    update_perception(ex1.perception, (1, 0), x, 2, 0.5)
    after = ex1.perception.mean((1, 0))
    assert np.linalg.norm(after - x) < np.linalg.norm(before - x)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=2, max_size=40),
    st.sampled_from([0.0, 0.25, 0.5, 0.75]),
)
def test_update_keeps_covariance_spd(points, beta):
    xs = np.array(points, dtype=float)
    pt = PerceptionTable(2, 0.1 * np.eye(2))
    pt.add((0,), xs[0])
    for x in xs[1:]:
        g = update_perception(pt, (0,), x, pt.count((0,)) + 1, beta)
        assert np.all(np.linalg.eigvalsh(g.sigma) > 0)
        assert np.allclose(g.sigma, g.sigma.T)


def test_update_rejects_bad_arguments(ex1):
    with pytest.raises(InvalidParameter):
        update_perception(ex1.perception, (0, 0), [0, 0], 2, 1.5)
    with pytest.raises(InvalidParameter):
        update_perception(ex1.perception, (0, 0), [0, 0], 0, 0.5)


def test_init_perception_and_capacity_growth():
    g = init_perception([1.0, 2.0], 0.1 * np.eye(2))
    assert g.count == 1 and np.array_equal(g.mu, [1.0, 2.0])
    pt = PerceptionTable(2, 0.1 * np.eye(2), capacity=1)
    for k in range(40):
        pt.add((k,), np.array([k, 0.0]))
    assert len(pt) == 40
    assert np.array_equal(pt.mean((39,)), [39.0, 0.0])
    assert pt.copy().means.shape == (40, 2)
