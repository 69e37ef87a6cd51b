import itertools
import math

import numpy as np
import pytest
from hypothesis import settings

from sbnmf.data import random_dag, random_layered
from sbnmf.meanfield import MeanFieldState
from sbnmf.network import Evidence

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def all_configs(n):
    return np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.int8)


def random_net(rng, kind=None):
    """A 2x4x6 layered net or a random sparse DAG with at most 14 nodes."""
    if kind is None:
        kind = "layered" if rng.random() < 0.5 else "dag"
    if kind == "layered":
        return random_layered((2, 4, 6), (-1.0, 1.0), rng)
    n = int(rng.integers(2, 15))
    return random_dag(n, float(rng.uniform(0.2, 0.6)), (-2.0, 2.0), rng)


def random_evidence(net, rng, max_hidden=12):
    """Random clamp set leaving between 0 and ``max_hidden`` hidden nodes."""
    n = net.n_nodes
    n_hidden = int(rng.integers(0, min(n, max_hidden) + 1))
    hidden = set(rng.choice(n, size=n_hidden, replace=False).tolist())
    return Evidence({i: int(rng.integers(0, 2)) for i in range(n) if i not in hidden})


def random_state(net, evidence, rng, lo=0.05, hi=0.95):
    mu = rng.uniform(lo, hi, size=net.n_nodes)
    for k, v in evidence.clamped.items():
        mu[k] = v
    return MeanFieldState(mu, rng.uniform(0.0, 1.0, size=net.n_nodes))


def bottom_zero(net, bottom=6):
    n = net.n_nodes
    return Evidence({i: 0 for i in range(n - bottom, n)})


def enum_moment(net, mu, i, t):
    """<e^{t z_i}> by enumerating every parent configuration."""
    pa, w = net.parents(i), net.parent_weights(i)
    total = 0.0
    for bits in itertools.product([0, 1], repeat=len(pa)):
        p = 1.0
        for b, j in zip(bits, pa):
            p *= mu[j] if b else 1.0 - mu[j]
        total += p * math.exp(t * (net.biases[i] + sum(b * wj for b, wj in zip(bits, w))))
    return total
