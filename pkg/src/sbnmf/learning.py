"""Gradient-ascent learning on the mean-field bound and max-bound classification."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .data import BitmapDataset, make_rng
from .meanfield import MeanFieldState, SolveOptions, _net_arrays, solve
from .network import Evidence, NetworkError, SigmoidBeliefNetwork

log = logging.getLogger(__name__)


def grad_weight(net: SigmoidBeliefNetwork, evidence: Evidence, state: MeanFieldState, i: int, j: int) -> float:
    """dL/dJ_ij at fixed (mu, xi)."""
    e = net.edge_index(i, j)
    if e is None:
        raise NetworkError(f"({i}, {j}) is not an edge of the network")
    return K.weight_gradient(i, e, *_net_arrays(net), state.mu, state.xi)


def grad_bias(net: SigmoidBeliefNetwork, evidence: Evidence, state: MeanFieldState, i: int) -> float:
    """dL/dh_i = mu_i - phi_i."""
    net._check(i)
    return float(state.mu[i] - K.phi(i, *_net_arrays(net), state.mu, state.xi))


def gradients(net: SigmoidBeliefNetwork, state: MeanFieldState) -> tuple[np.ndarray, np.ndarray]:
    """All bias gradients and all weight gradients (canonical edge order)."""
    return K.all_gradients(*_net_arrays(net), state.mu, state.xi)


@dataclass
class TrainConfig:
    rate: float = 0.05
    sweeps: int = 5
    seed: int = 0
    shuffle: bool = True
    solve: SolveOptions = field(default_factory=SolveOptions)


@dataclass
class TrainResult:
    net: SigmoidBeliefNetwork
    trace: list[float]
    nonconverged: int


def _check_patterns(patterns, visible_map):
    P = np.asarray(patterns.patterns if isinstance(patterns, BitmapDataset) else patterns)
    if P.ndim != 2 or P.shape[1] != len(visible_map):
        raise ValueError(f"patterns of width {P.shape[-1]} do not match {len(visible_map)} visible nodes")
    return P


def train(net: SigmoidBeliefNetwork, dataset, visible_map: Sequence[int],
          config: TrainConfig | None = None) -> TrainResult:
    """Stochastic gradient ascent on the per-pattern bound.

    For every pattern the mean-field equations are solved from a fresh
    start, then all weights and biases move by ``rate`` times the gradient
    of that pattern's bound. The trace holds each epoch's mean bound,
    measured before the corresponding updates.
    """
    cfg = config or TrainConfig()
    if cfg.rate < 0:
        raise ValueError("learning rate must be non-negative")
    P = _check_patterns(dataset, visible_map)
    visible = [int(v) for v in visible_map]
    rng = make_rng(cfg.seed)
    h = net.biases.copy()
    w = net.weights.copy()
    trace = []
    nonconverged = 0
    for epoch in range(cfg.sweeps):
        order = rng.permutation(len(P)) if cfg.shuffle else np.arange(len(P))
        total = 0.0
        for r in order:
            ev = Evidence.from_pattern(visible, P[r])
            sol = solve(net, ev, cfg.solve)
            if not sol.converged:
                nonconverged += 1
            total += sol.total
            gh, gw = gradients(net, sol.state)
            h += cfg.rate * gh
            w += cfg.rate * gw
            net = net.with_parameters(h, w)
        trace.append(total / len(P))
        log.info("epoch %d: mean bound %.6f", epoch + 1, trace[-1])
    if nonconverged:
        log.warning("%d solves did not converge during training", nonconverged)
    return TrainResult(net, trace, nonconverged)


def score_patterns(net: SigmoidBeliefNetwork, patterns, visible_map: Sequence[int],
                   options: SolveOptions | None = None) -> np.ndarray:
    """Mean-field bound on ln P(pattern) for each pattern."""
    P = _check_patterns(patterns, visible_map)
    visible = [int(v) for v in visible_map]
    return np.array([solve(net, Evidence.from_pattern(visible, p), options).total for p in P])


def classify(models: Sequence[SigmoidBeliefNetwork], pattern: Sequence[int], visible_map: Sequence[int],
             options: SolveOptions | None = None) -> int:
    """Index of the model with the highest bound; ties go to the lowest index."""
    if len(models) < 2:
        raise ValueError("need at least two models to classify")
    ev = Evidence.from_pattern([int(v) for v in visible_map], pattern)
    scores = [solve(m, ev, options).total for m in models]
    return int(np.argmax(scores))


def classify_many(models, patterns, visible_map, options=None) -> tuple[np.ndarray, np.ndarray]:
    """Labels and the (n_patterns, n_models) score matrix."""
    if len(models) < 2:
        raise ValueError("need at least two models to classify")
    scores = np.column_stack([score_patterns(m, patterns, visible_map, options) for m in models])
    return np.argmax(scores, axis=1), scores


def normalized_score(total_bound: float, n_patterns: int, n_visible: int) -> float:
    """Total bound in units where a parameter-free network scores -1."""
    if n_patterns <= 0 or n_visible <= 0:
        raise ValueError("pattern and visible counts must be positive")
    return total_bound / (n_patterns * n_visible * math.log(2.0))
