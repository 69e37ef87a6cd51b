"""Brute-force inference by enumerating hidden configurations.

These routines are exponential in the number of hidden units and exist to
check the mean-field machinery on small networks. They work from the dense
weight matrix and share no code with the mean-field kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .network import Evidence, SigmoidBeliefNetwork, log_joint_batch, softplus_array

MAX_HIDDEN_LIKELIHOOD = 25
MAX_HIDDEN_TABLE = 20
MAX_PARENTS = 20
_CHUNK = 1 << 15


class HiddenSetTooLarge(ValueError):
    pass


class TooManyParents(ValueError):
    pass


def _bits(indices: np.ndarray, width: int) -> np.ndarray:
    """Row r holds the binary digits of indices[r], least significant first."""
    return ((indices[:, None] >> np.arange(width)) & 1).astype(np.int8)


def _completions(net, evidence, hidden, start, stop):
    S = np.zeros((stop - start, net.n_nodes), dtype=np.int8)
    for k, v in evidence.clamped.items():
        S[:, k] = v
    S[:, hidden] = _bits(np.arange(start, stop, dtype=np.int64), len(hidden))
    return S


def _check_hidden(n_hidden, limit):
    if n_hidden > limit:
        raise HiddenSetTooLarge(f"{n_hidden} hidden nodes exceeds the enumeration limit of {limit}")


def log_likelihood_exact(net: SigmoidBeliefNetwork, evidence: Evidence,
                         max_hidden: int = MAX_HIDDEN_LIKELIHOOD) -> float:
    """ln P(V), summing the joint over all 2^|H| hidden completions."""
    hidden = evidence.hidden(net.n_nodes)
    _check_hidden(len(hidden), max_hidden)
    total = 1 << len(hidden)
    acc = -np.inf
    for start in range(0, total, _CHUNK):
        lp = log_joint_batch(net, _completions(net, evidence, hidden, start, min(total, start + _CHUNK)))
        acc = np.logaddexp(acc, logsumexp(lp))
    return float(acc)


@dataclass(frozen=True)
class PosteriorTable:
    """P(H | V) over every hidden configuration.

    ``configs[r, b]`` is the value of node ``hidden[b]`` in row ``r``; rows
    follow the binary count of r with hidden[0] as the least significant bit.
    """

    hidden: np.ndarray
    configs: np.ndarray
    probs: np.ndarray
    log_likelihood: float

    def marginals(self) -> np.ndarray:
        """P(S_h = 1 | V) for each hidden node."""
        return self.probs @ self.configs

    def __len__(self):
        return len(self.probs)


def posterior_table(net: SigmoidBeliefNetwork, evidence: Evidence,
                    max_hidden: int = MAX_HIDDEN_TABLE) -> PosteriorTable:
    hidden = evidence.hidden(net.n_nodes)
    _check_hidden(len(hidden), max_hidden)
    S = _completions(net, evidence, hidden, 0, 1 << len(hidden))
    lp = log_joint_batch(net, S)
    ll = float(logsumexp(lp))
    return PosteriorTable(hidden, S[:, hidden], np.exp(lp - ll), ll)


def _hidden_means(net, evidence, mu):
    """Accept either a length-|H| vector or a full length-N vector."""
    hidden = evidence.hidden(net.n_nodes)
    mu = np.asarray(mu, dtype=float)
    if mu.shape == (len(hidden),):
        out = mu
    elif mu.shape == (net.n_nodes,):
        out = mu[hidden]
    else:
        raise ValueError(f"mu must have length {len(hidden)} (hidden) or {net.n_nodes} (all nodes)")
    if np.any((out < 0) | (out > 1)):
        raise ValueError("mu entries must lie in [0, 1]")
    return hidden, out


def full_means(net: SigmoidBeliefNetwork, evidence: Evidence, mu) -> np.ndarray:
    """Length-N means with the visible entries set to their evidence values."""
    hidden, mh = _hidden_means(net, evidence, mu)
    full = np.zeros(net.n_nodes)
    full[hidden] = mh
    for k, v in evidence.clamped.items():
        full[k] = v
    return full


def kl_divergence(net: SigmoidBeliefNetwork, evidence: Evidence, mu) -> float:
    """KL(Q || P(H|V)) for the factorized Q with hidden means ``mu``."""
    hidden, mh = _hidden_means(net, evidence, mu)
    table = posterior_table(net, evidence)
    C = table.configs.astype(bool)
    with np.errstate(divide="ignore"):
        log_q = np.where(C, np.log(mh), np.log1p(-mh)).sum(axis=1)
        log_p = np.log(table.probs)
    q = np.exp(log_q)
    support = q > 0
    if np.any(np.isneginf(log_p[support])):
        return float("inf")
    return float(np.sum(q[support] * (log_q[support] - log_p[support])))


def expected_softplus_exact(net: SigmoidBeliefNetwork, mu, i: int, max_parents: int = MAX_PARENTS) -> float:
    """<ln(1 + e^{z_i})> with parents independent Bernoulli(mu_j), by enumeration."""
    net._check(i)
    pa = net.parents(i)
    if len(pa) > max_parents:
        raise TooManyParents(f"node {i} has {len(pa)} parents; limit is {max_parents}")
    mu = np.asarray(mu, dtype=float)
    B = _bits(np.arange(1 << len(pa), dtype=np.int64), len(pa)).astype(float)
    m = mu[pa]
    weight = np.prod(np.where(B == 1, m, 1.0 - m), axis=1)
    z = B @ net.parent_weights(i) + net.biases[i]
    return float(np.sum(weight * softplus_array(z)))


def bound_exact_expectation(net: SigmoidBeliefNetwork, evidence: Evidence, mu) -> float:
    """Jensen bound on ln P(V) with the softplus expectation done exactly."""
    hidden = evidence.hidden(net.n_nodes)
    m = full_means(net, evidence, mu)
    J = net.weight_matrix()
    energy = m @ J @ m + net.biases @ m
    energy -= sum(expected_softplus_exact(net, m, i) for i in range(net.n_nodes))
    mh = m[hidden]
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.sum(np.where(mh > 0, mh * np.log(mh), 0.0) + np.where(mh < 1, (1 - mh) * np.log1p(-mh), 0.0))
    return float(energy + ent)
