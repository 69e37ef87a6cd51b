import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_evidence, random_net, random_state
from sbnmf.data import BitmapDataset, gen_random_layered, make_rng, random_dag
from sbnmf.learning import (
    TrainConfig, classify, classify_many, grad_bias, grad_weight, gradients, normalized_score, score_patterns, train,
)
from sbnmf.meanfield import MeanFieldState, bound, solve
from sbnmf.network import Evidence, NetworkError, SigmoidBeliefNetwork, sigmoid


def bound_with(net, ev, state, h=None, w=None):
    h = net.biases if h is None else h
    w = net.weights if w is None else w
    return bound(net.with_parameters(h, w), ev, state).total


def fd_weight(net, ev, state, e, step=1e-5):
    def f(x):
        w = net.weights.copy()
        w[e] = x
        return bound_with(net, ev, state, w=w)
    x = net.weights[e]
    return (f(x + step) - f(x - step)) / (2 * step)


def fd_bias(net, ev, state, i, step=1e-5):
    def f(x):
        h = net.biases.copy()
        h[i] = x
        return bound_with(net, ev, state, h=h)
    x = net.biases[i]
    return (f(x + step) - f(x - step)) / (2 * step)


def test_grad_weight_examples():
    zero = SigmoidBeliefNetwork(2, [0.0, 0.0], [(1, 0, 0.0)])
    s = MeanFieldState(np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    # phi = 1/2 and unit tilts: the two moment terms cancel, leaving -(xi - mu_i) mu_j
    assert grad_weight(zero, Evidence(), s, 1, 0) == pytest.approx(0.0, abs=1e-15)
    s = MeanFieldState(np.array([0.5, 0.75]), np.array([0.5, 0.5]))
    assert grad_weight(zero, Evidence(), s, 1, 0) == pytest.approx(0.125, abs=1e-15)
    net = SigmoidBeliefNetwork(2, [0.3, -0.2], [(1, 0, 1.7)])
    s = MeanFieldState(np.array([0.0, 0.6]), np.array([0.5, 0.35]))
    assert grad_weight(net, Evidence(), s, 1, 0) == 0.0
    with pytest.raises(NetworkError):
        grad_weight(net, Evidence(), s, 0, 1)


def test_grad_bias_examples():
    zero = SigmoidBeliefNetwork(3, np.zeros(3), [(2, 0, 0.0), (2, 1, 0.0)])
    s = MeanFieldState(np.full(3, 0.5), np.full(3, 0.5))
    for i in range(3):
        assert grad_bias(zero, Evidence(), s, i) == 0.0
    net = SigmoidBeliefNetwork(2, [0.0, 0.4], [(1, 0, -1.1)])
    ev = Evidence({0: 1, 1: 1})
    for xi in (0.0, 0.6, 1.0):
        s = MeanFieldState.initial(net, ev, xi0=xi)
        assert grad_bias(net, ev, s, 1) == pytest.approx(1 - sigmoid(-0.7), abs=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_gradients_match_finite_differences(seed):
    rng = make_rng(seed)
    net = random_net(rng)
    ev = random_evidence(net, rng)
    s = random_state(net, ev, rng)
    for e, (i, j) in enumerate(zip(net.edge_child, net.edge_parent)):
        g = grad_weight(net, ev, s, int(i), int(j))
        assert g == pytest.approx(fd_weight(net, ev, s, e), rel=1e-6, abs=1e-9)
    for i in range(net.n_nodes):
        assert grad_bias(net, ev, s, i) == pytest.approx(fd_bias(net, ev, s, i), rel=1e-6, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_vectorized_gradients_match_scalar(seed):
    rng = make_rng(seed)
    net = random_dag(9, 0.5, (-2, 2), rng)
    ev = random_evidence(net, rng)
    s = random_state(net, ev, rng)
    gh, gw = gradients(net, s)
    for i in range(net.n_nodes):
        assert gh[i] == pytest.approx(grad_bias(net, ev, s, i), rel=1e-14, abs=1e-15)
    for e, (i, j) in enumerate(zip(net.edge_child, net.edge_parent)):
        assert gw[e] == pytest.approx(grad_weight(net, ev, s, int(i), int(j)), rel=1e-14, abs=1e-15)


def test_partial_gradient_is_total_derivative_at_convergence():
    # at a converged solve the state is stationary, so re-solving after a
    # parameter nudge changes L_V only through the explicit dependence
    for k in range(5):
        net = gen_random_layered((2, 4, 6), seed=900 + k)
        ev = Evidence({i: int(b) for i, b in zip(range(6, 12), make_rng(k).integers(0, 2, 6))})
        sol = solve(net, ev)
        step = 1e-5
        for e in (0, 7, 19, 31):
            def f(x):
                w = net.weights.copy()
                w[e] = x
                return solve(net.with_parameters(net.biases, w), ev).total
            x = net.weights[e]
            fd = (f(x + step) - f(x - step)) / (2 * step)
            g = grad_weight(net, ev, sol.state, int(net.edge_child[e]), int(net.edge_parent[e]))
            assert abs(g - fd) < 1e-4
        for i in (0, 3, 8):
            def f(x):
                h = net.biases.copy()
                h[i] = x
                return solve(net.with_parameters(h, net.weights), ev).total
            x = net.biases[i]
            fd = (f(x + step) - f(x - step)) / (2 * step)
            assert abs(grad_bias(net, ev, sol.state, i) - fd) < 1e-4


# -- training ------------------------------------------------------------------

def _ds(patterns, rows, cols):
    return BitmapDataset(rows, cols, np.asarray(patterns, dtype=np.uint8))


def test_train_zero_rate_is_noop():
    net = gen_random_layered((2, 3, 4), seed=1)
    data = _ds(make_rng(0).integers(0, 2, (6, 4)), 2, 2)
    res = train(net, data, np.arange(5, 9), TrainConfig(rate=0.0, sweeps=3))
    assert res.net == net
    assert res.trace[0] == res.trace[1] == res.trace[2]


def test_train_single_node_closed_form():
    net = SigmoidBeliefNetwork(1, [0.0])
    data = _ds([[1]] * 3, 1, 1)
    res = train(net, data, [0], TrainConfig(rate=0.5, sweeps=4))
    h = 0.0
    for _ in range(12):
        h += 0.5 * (1 - sigmoid(h))
    assert res.net.biases[0] == pytest.approx(h, abs=1e-14)
    assert np.all(np.diff(res.trace) > 0) and res.trace[-1] < 0


def test_train_rejects_bad_input():
    net = gen_random_layered((2, 4), seed=0)
    with pytest.raises(ValueError):
        train(net, _ds([[0, 1, 1]], 1, 3), np.arange(2, 6))
    with pytest.raises(ValueError):
        train(net, _ds([[0, 1, 1, 0]], 2, 2), np.arange(2, 6), TrainConfig(rate=-1.0))


def test_train_improves_bound_on_structured_data():
    rng = make_rng(3)
    proto = np.array([1, 1, 0, 0, 1, 0, 1, 0, 0])
    flips = rng.random((40, 9)) < 0.1
    data = _ds(proto ^ flips, 3, 3)
    net = gen_random_layered((2, 9), (-0.1, 0.1), seed=4)
    res = train(net, data, np.arange(2, 11), TrainConfig(rate=0.1, sweeps=4))
    assert res.nonconverged == 0
    assert res.trace[-1] > res.trace[0]


def test_train_is_deterministic():
    net = gen_random_layered((2, 4), (-0.1, 0.1), seed=5)
    data = _ds(make_rng(6).integers(0, 2, (10, 4)), 2, 2)
    a = train(net, data, np.arange(2, 6), TrainConfig(seed=11, sweeps=2))
    b = train(net, data, np.arange(2, 6), TrainConfig(seed=11, sweeps=2))
    assert a.net == b.net and a.trace == b.trace


# -- classification and scores -------------------------------------------------

def test_classify_tie_goes_to_lowest_index():
    net = gen_random_layered((2, 4), seed=2)
    assert classify([net, net, net], [1, 0, 1, 1], np.arange(2, 6)) == 0


def test_classify_dominance():
    pos = SigmoidBeliefNetwork(4, [0.0, 3.0, 3.0, 3.0], [(1, 0, 0.1), (2, 0, 0.1), (3, 0, 0.1)])
    neg = pos.with_parameters([0.0, -3.0, -3.0, -3.0], pos.weights)
    vis = [1, 2, 3]
    assert classify([pos, neg], [1, 1, 1], vis) == 0
    assert classify([pos, neg], [0, 0, 0], vis) == 1
    labels, scores = classify_many([pos, neg], [[1, 1, 1], [0, 0, 0]], vis)
    assert labels.tolist() == [0, 1] and scores.shape == (2, 2)
    with pytest.raises(ValueError):
        classify([pos], [1, 1, 1], vis)


def test_normalized_score_examples():
    assert normalized_score(0.0, 5, 64) == 0.0
    raw = -0.511 * (400 * 64 * math.log(2))
    assert normalized_score(raw, 400, 64) == pytest.approx(-0.511, abs=1e-14)
    with pytest.raises(ValueError):
        normalized_score(-1.0, 0, 64)
    with pytest.raises(ValueError):
        normalized_score(-1.0, 3, 0)


def test_zero_model_scores_minus_one():
    net = gen_random_layered((3, 5, 9), (0.0, 0.0), seed=0)
    pats = make_rng(1).integers(0, 2, (7, 9))
    total = score_patterns(net, pats, np.arange(8, 17)).sum()
    assert normalized_score(total, 7, 9) == pytest.approx(-1.0, abs=1e-12)
