"""Mean-field lower bound on ln P(V) for sigmoid belief networks.

The variational family is a product of Bernoulli distributions over the
hidden units with means ``mu``. The intractable expectation
<ln(1 + e^{z_i})> is replaced by the upper bound

    xi_i <z_i> + ln <e^{-xi_i z_i} + e^{(1 - xi_i) z_i}>,

with one extra parameter ``xi_i`` in [0, 1] per unit. The bound is then
tightened by alternating (i) independent 1-D minimizations over each xi_i
and (ii) asynchronous fixed-point updates of each hidden mu_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .network import Evidence, NetworkError, SigmoidBeliefNetwork

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class MeanFieldState:
    """Means ``mu`` for every node (visible ones clamped) and bound parameters ``xi``."""

    mu: np.ndarray
    xi: np.ndarray

    @classmethod
    def initial(cls, net: SigmoidBeliefNetwork, evidence: Evidence,
                mu0: float = 0.5, xi0: float = 0.5) -> "MeanFieldState":
        evidence.validate(net.n_nodes)
        mu = np.full(net.n_nodes, float(mu0))
        for k, v in evidence.clamped.items():
            mu[k] = float(v)
        return cls(mu, np.full(net.n_nodes, float(xi0)))

    def copy(self) -> "MeanFieldState":
        return MeanFieldState(self.mu.copy(), self.xi.copy())

    def validate(self, net: SigmoidBeliefNetwork, evidence: Evidence) -> None:
        n = net.n_nodes
        if self.mu.shape != (n,) or self.xi.shape != (n,):
            raise NetworkError(f"state arrays must have shape ({n},)")
        if np.any((self.mu < 0) | (self.mu > 1)) or np.any((self.xi < 0) | (self.xi > 1)):
            raise NetworkError("mu and xi must lie in [0, 1]")
        for k, v in evidence.clamped.items():
            if self.mu[k] != v:
                raise NetworkError(f"mu[{k}] = {self.mu[k]} disagrees with evidence {v}")


@dataclass(frozen=True)
class BoundBreakdown:
    quadratic: float
    bias: float
    xi_linear: float
    log_moment: float
    entropy: float

    @property
    def total(self) -> float:
        return self.quadratic + self.bias - self.xi_linear - self.log_moment + self.entropy

    @property
    def energy(self) -> float:
        """Mean-field energy part (negated), everything except the entropy."""
        return self.quadratic + self.bias - self.xi_linear - self.log_moment


@dataclass
class SolveOptions:
    init_mu: float = 0.5
    tol_mu: float = 1e-8
    tol_bound: float = 1e-10
    max_sweeps: int = 1000
    xi_tol: float = 1e-10


@dataclass
class MeanFieldSolution:
    state: MeanFieldState
    bound: BoundBreakdown
    converged: bool
    sweeps: int
    history: list = field(default_factory=list, repr=False)

    @property
    def total(self) -> float:
        return self.bound.total


def _net_arrays(net):
    s = net.structure
    return net.biases, net.weights, s.parent_ptr, net.edge_parent


def _child_arrays(net):
    s = net.structure
    return s.child_ptr, s.child_idx, s.child_edge


def hidden_mask(net: SigmoidBeliefNetwork, evidence: Evidence) -> np.ndarray:
    evidence.validate(net.n_nodes)
    mask = np.ones(net.n_nodes, dtype=np.bool_)
    mask[evidence.visible()] = False
    return mask


def log_moment_neg(net: SigmoidBeliefNetwork, state: MeanFieldState, i: int) -> float:
    """ln <e^{-xi_i z_i}>."""
    net._check(i)
    return K.log_moment(i, -state.xi[i], *_net_arrays(net), state.mu)


def log_moment_pos(net: SigmoidBeliefNetwork, state: MeanFieldState, i: int) -> float:
    """ln <e^{(1 - xi_i) z_i}>."""
    net._check(i)
    return K.log_moment(i, 1.0 - state.xi[i], *_net_arrays(net), state.mu)


def phi(net: SigmoidBeliefNetwork, state: MeanFieldState, i: int) -> float:
    net._check(i)
    return K.phi(i, *_net_arrays(net), state.mu, state.xi)


def kappa(net: SigmoidBeliefNetwork, state: MeanFieldState, i: int, j: int) -> float:
    """K_ij = -d/dmu_j ln <e^{-xi_i z_i} + e^{(1-xi_i) z_i}>; zero unless j is a parent of i."""
    net._check(i)
    net._check(j)
    e = net.edge_index(i, j)
    if e is None:
        return 0.0
    return K.kappa(i, e, *_net_arrays(net), state.mu, state.xi)


def bound(net: SigmoidBeliefNetwork, evidence: Evidence, state: MeanFieldState) -> BoundBreakdown:
    """Evaluate the mean-field lower bound L_V at a given (mu, xi)."""
    terms = K.bound_terms(*_net_arrays(net), state.mu, state.xi, hidden_mask(net, evidence))
    return BoundBreakdown(*terms)


def minimize_convex_on_unit_interval(f: Callable[[float], float], tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section search for the minimum of a convex ``f`` on [0, 1].

    Both endpoints are compared against the final interior point, so a
    minimum on the boundary is returned exactly. For non-convex ``f`` the
    result is a local minimum. ``f`` is never evaluated outside [0, 1].
    """
    a, b = 0.0, 1.0
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc < fd else (d, fd)
    for end in (0.0, 1.0):
        fe = f(end)
        if fe < fx:
            x, fx = end, fe
    return x, fx


def update_xi(net: SigmoidBeliefNetwork, evidence: Evidence, state: MeanFieldState,
              tol: float = 1e-10) -> MeanFieldState:
    """Set every xi_i to the minimizer of its bound term; mu is untouched.

    The state is updated in place and returned.
    """
    evidence.validate(net.n_nodes)
    K.xi_pass(tol, *_net_arrays(net), state.mu, state.xi)
    return state


def update_mu(net: SigmoidBeliefNetwork, evidence: Evidence, state: MeanFieldState, i: int) -> float:
    """New value of mu_i from the fixed-point equation (state is not modified).

    The effective input collects the bias, the parents' means and, for each
    child k, J_ki (mu_k - xi_k) + K_ki. Because K_ki depends on mu_i, the
    equation is solved self-consistently in mu_i.
    """
    net._check(i)
    if i in evidence.clamped:
        raise NetworkError(f"node {i} is visible; only hidden means are updated")
    return K.mu_update_node(i, *_net_arrays(net), *_child_arrays(net), state.mu, state.xi)


def solve(net: SigmoidBeliefNetwork, evidence: Evidence, options: SolveOptions | None = None,
          monitor: Callable[[str, int, MeanFieldState], None] | None = None,
          state: MeanFieldState | None = None) -> MeanFieldSolution:
    """Maximize the bound by alternating xi passes and asynchronous mu sweeps.

    Stops once max |dmu| < ``tol_mu`` and |dL| < ``tol_bound`` after a full
    sweep, or after ``max_sweeps``. Non-convergence is reported through
    ``converged`` rather than raised.

    ``monitor(kind, node, state)`` is called after each xi pass
    (``kind="xi"``, ``node=-1``) and after each single mu update
    (``kind="mu"``); it slows the solve down and is meant for diagnostics.
    """
    opts = options or SolveOptions()
    if state is None:
        state = MeanFieldState.initial(net, evidence, mu0=opts.init_mu)
    else:
        state.validate(net, evidence)
    arrs = _net_arrays(net)
    carrs = _child_arrays(net)
    mask = hidden_mask(net, evidence)
    hidden = np.flatnonzero(mask)
    mu, xi = state.mu, state.xi

    prev = sum_terms(K.bound_terms(*arrs, mu, xi, mask))
    history = []
    converged = False
    sweeps = 0
    while sweeps < opts.max_sweeps:
        sweeps += 1
        if monitor is None:
            K.xi_pass(opts.xi_tol, *arrs, mu, xi)
            delta = K.mu_sweep(*arrs, *carrs, mu, xi, mask)
        else:
            K.xi_pass(opts.xi_tol, *arrs, mu, xi)
            monitor("xi", -1, state)
            delta = 0.0
            for i in hidden:
                new = K.mu_update_node(i, *arrs, *carrs, mu, xi)
                delta = max(delta, abs(new - mu[i]))
                mu[i] = new
                monitor("mu", int(i), state)
        cur = sum_terms(K.bound_terms(*arrs, mu, xi, mask))
        history.append(cur)
        if delta < opts.tol_mu and abs(cur - prev) < opts.tol_bound:
            converged = True
            break
        prev = cur
    return MeanFieldSolution(state, bound(net, evidence, state), converged, sweeps, history)


def sum_terms(terms: Sequence[float]) -> float:
    quad, bias, xi_lin, logmom, ent = terms
    return quad + bias - xi_lin - logmom + ent
