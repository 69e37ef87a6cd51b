import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import bottom_zero, random_evidence, random_net
from sbnmf.data import gen_random_layered, make_rng, random_dag
from sbnmf.exact import (
    HiddenSetTooLarge, TooManyParents, bound_exact_expectation, expected_softplus_exact, kl_divergence,
    log_likelihood_exact, posterior_table,
)
from sbnmf.network import Evidence, SigmoidBeliefNetwork, log_joint, log_sigmoid, sigmoid, softplus


def test_loglik_single_clamped_node():
    for h in (-3.0, 0.0, 0.7):
        net = SigmoidBeliefNetwork(1, [h])
        assert log_likelihood_exact(net, Evidence({0: 1})) == pytest.approx(log_sigmoid(h), abs=1e-15)


def test_loglik_no_hidden_is_log_joint():
    net = random_dag(6, 0.5, (-1, 1), make_rng(1))
    cfg = [1, 0, 0, 1, 1, 0]
    ev = Evidence(dict(enumerate(cfg)))
    assert log_likelihood_exact(net, ev) == pytest.approx(log_joint(net, cfg), abs=1e-14)


def test_loglik_2x4x6_plain_sum():
    net = gen_random_layered((2, 4, 6), seed=3)
    ll = log_likelihood_exact(net, bottom_zero(net))
    assert ll < 0
    direct = 0.0
    for top in itertools.product([0, 1], repeat=6):
        direct += math.exp(log_joint(net, list(top) + [0] * 6))
    assert math.exp(ll) == pytest.approx(direct, rel=1e-12)


def test_loglik_guard():
    net = SigmoidBeliefNetwork(26, np.zeros(26))
    with pytest.raises(HiddenSetTooLarge):
        log_likelihood_exact(net, Evidence())
    with pytest.raises(HiddenSetTooLarge):
        posterior_table(SigmoidBeliefNetwork(21, np.zeros(21)), Evidence())


def test_chunked_enumeration_matches_single_pass():
    # 17 hidden nodes spans several enumeration chunks
    net = random_dag(18, 0.2, (-1, 1), make_rng(8))
    ev = Evidence({17: 1})
    table = posterior_table(net, ev)
    assert log_likelihood_exact(net, ev) == pytest.approx(table.log_likelihood, abs=1e-12)


def test_posterior_no_hidden():
    net = SigmoidBeliefNetwork(2, [0.1, 0.2], [(1, 0, 0.3)])
    t = posterior_table(net, Evidence({0: 1, 1: 0}))
    assert len(t) == 1 and t.probs[0] == pytest.approx(1.0, abs=1e-15)


def test_posterior_disconnected_node_keeps_prior():
    # node 0 is isolated from the evidence on node 2
    net = SigmoidBeliefNetwork(3, [0.8, -0.4, 0.3], [(2, 1, 1.7)])
    t = posterior_table(net, Evidence({2: 1}))
    m = t.marginals()
    assert m[list(t.hidden).index(0)] == pytest.approx(sigmoid(0.8), abs=1e-14)


def test_posterior_three_node_hand_enumeration():
    # values computed term-by-term from the sigmoid conditionals
    net = SigmoidBeliefNetwork(3, [0.5, -0.3, 0.2], [(1, 0, 1.2), (2, 0, -0.8), (2, 1, 1.5)])
    t = posterior_table(net, Evidence({2: 1}))
    expected = {(0, 0): 0.1882418898376928, (0, 1): 0.21445086057089874,
                (1, 0): 0.10064304738110337, (1, 1): 0.496664202210305}
    for row, p in zip(t.configs, t.probs):
        assert p == pytest.approx(expected[tuple(int(b) for b in row)], abs=1e-14)
    assert t.log_likelihood == pytest.approx(-0.45654360292855534, abs=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_posterior_sums_to_one_and_marginals(seed):
    rng = make_rng(seed)
    net = random_net(rng)
    ev = random_evidence(net, rng)
    t = posterior_table(net, ev)
    assert t.probs.sum() == pytest.approx(1.0, abs=1e-12)
    m = t.marginals()
    for b in range(len(t.hidden)):
        assert m[b] == pytest.approx(sum(p for p, row in zip(t.probs, t.configs) if row[b]), abs=1e-12)


def test_kl_zero_for_factorized_posterior():
    # hidden roots with no links to each other or the evidence: posterior is the prior product
    net = SigmoidBeliefNetwork(3, [0.4, -1.1, 0.0])
    ev = Evidence({2: 1})
    assert kl_divergence(net, ev, [sigmoid(0.4), sigmoid(-1.1)]) == pytest.approx(0.0, abs=1e-12)
    uniform = SigmoidBeliefNetwork(3, [0.0, 0.0, 0.0], [(2, 0, 0.0)])
    assert kl_divergence(uniform, Evidence(), [0.5, 0.5, 0.5]) == pytest.approx(0.0, abs=1e-12)


def test_kl_equals_likelihood_gap_on_8_hidden():
    rng = make_rng(17)
    net = random_dag(11, 0.5, (-2, 2), rng)
    ev = Evidence({8: 1, 9: 0, 10: 1})
    for _ in range(10):
        mu = rng.uniform(0.01, 0.99, size=8)
        kl = kl_divergence(net, ev, mu)
        assert kl >= 0
        gap = log_likelihood_exact(net, ev) - bound_exact_expectation(net, ev, mu)
        assert kl == pytest.approx(gap, abs=1e-11)


def test_kl_handles_degenerate_q():
    net = random_dag(5, 0.6, (-1, 1), make_rng(2))
    ev = Evidence({4: 0})
    kl = kl_divergence(net, ev, [0.0, 1.0, 0.0, 1.0])
    assert math.isfinite(kl) and kl >= 0
    assert kl == pytest.approx(log_likelihood_exact(net, ev) - bound_exact_expectation(net, ev, [0, 1, 0, 1]),
                               abs=1e-12)


def test_expected_softplus_examples():
    net = SigmoidBeliefNetwork(2, [0.0, 0.6], [(1, 0, 2.5)])
    assert expected_softplus_exact(net, [0.3, 0.9], 0) == pytest.approx(softplus(0.0))
    lone = SigmoidBeliefNetwork(2, [0.0, 0.0], [(1, 0, 2.5)])
    assert expected_softplus_exact(lone, [0.5, 0.0], 1) == pytest.approx(0.5 * softplus(0) + 0.5 * softplus(2.5))


def test_expected_softplus_monte_carlo():
    rng = make_rng(4)
    J = rng.uniform(-2, 2, size=6)
    net = SigmoidBeliefNetwork(7, np.r_[np.zeros(6), 0.3], [(6, j, J[j]) for j in range(6)])
    mu = np.r_[rng.uniform(0, 1, size=6), 0.0]
    draws = (rng.random((1_000_000, 6)) < mu[:6]).astype(float)
    vals = np.logaddexp(0.0, draws @ J + 0.3)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(expected_softplus_exact(net, mu, 6) - vals.mean()) < 3 * se


def test_expected_softplus_guard():
    net = SigmoidBeliefNetwork(22, np.zeros(22), [(21, j, 0.1) for j in range(21)])
    with pytest.raises(TooManyParents):
        expected_softplus_exact(net, np.full(22, 0.5), 21)


def test_bound_exact_tight_cases():
    net = random_dag(5, 0.6, (-2, 2), make_rng(6))
    cfg = [0, 1, 1, 0, 1]
    ev = Evidence(dict(enumerate(cfg)))
    assert bound_exact_expectation(net, ev, []) == pytest.approx(log_joint(net, cfg), abs=1e-13)
    single = SigmoidBeliefNetwork(1, [1.3])
    assert bound_exact_expectation(single, Evidence(), [sigmoid(1.3)]) == pytest.approx(0.0, abs=1e-15)


def test_gap_identity_2x4x6():
    rng = make_rng(12)
    for k in range(20):
        net = gen_random_layered((2, 4, 6), seed=100 + k)
        ev = bottom_zero(net)
        mu = rng.uniform(0, 1, size=6)
        ll = log_likelihood_exact(net, ev)
        b = bound_exact_expectation(net, ev, mu)
        assert ll - b == pytest.approx(kl_divergence(net, ev, mu), abs=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_jensen_bound_below_likelihood(seed):
    rng = make_rng(seed)
    net = random_net(rng)
    ev = random_evidence(net, rng)
    mu = rng.uniform(0, 1, size=net.n_nodes)
    assert bound_exact_expectation(net, ev, mu) <= log_likelihood_exact(net, ev) + 1e-12
