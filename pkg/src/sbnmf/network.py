"""Sigmoid belief networks: structure, local conditionals, joint probability.

Nodes are identified by their topological index. Every edge points from a
lower-indexed parent to a higher-indexed child, so a network is a DAG by
construction and ancestral sampling can proceed in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# softplus switches to its asymptotic forms beyond this magnitude
_SOFTPLUS_BRANCH = 30.0


class NetworkError(ValueError):
    """Raised for structurally invalid networks, configurations or evidence."""


def sigmoid(z: float) -> float:
    """Logistic function, stable for large |z|."""
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def softplus(z: float) -> float:
    """ln(1 + e^z) without overflow."""
    if z > _SOFTPLUS_BRANCH:
        return z + math.log1p(math.exp(-z))
    if z < -_SOFTPLUS_BRANCH:
        return math.exp(z)
    return math.log1p(math.exp(z))


def log_sigmoid(z: float) -> float:
    return -softplus(-z)


def softplus_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.logaddexp(0.0, z)


class SigmoidBeliefNetwork:
    """A DAG of binary units with logistic conditionals.

    Parameters
    ----------
    n_nodes:
        Number of units N.
    biases:
        Length-N sequence of biases h_i.
    edges:
        Iterable of ``(child, parent, weight)`` with ``parent < child``.

    The object is treated as immutable: arrays are exposed read-only and
    :meth:`with_parameters` returns a new network sharing the structure.
    """

    def __init__(self, n_nodes: int, biases: Sequence[float], edges: Iterable[tuple[int, int, float]] = ()):
        n_nodes = int(n_nodes)
        if n_nodes < 1:
            raise NetworkError(f"network needs at least one node, got {n_nodes}")
        h = np.array(biases, dtype=float)
        if h.shape != (n_nodes,):
            raise NetworkError(f"expected {n_nodes} biases, got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise NetworkError("biases must be finite")

        triples = []
        seen = set()
        for child, parent, weight in edges:
            child, parent, weight = int(child), int(parent), float(weight)
            if not (0 <= child < n_nodes and 0 <= parent < n_nodes):
                raise NetworkError(f"edge ({child}, {parent}) out of range for N={n_nodes}")
            if parent >= child:
                raise NetworkError(f"edge ({child}, {parent}) violates parent < child")
            if (child, parent) in seen:
                raise NetworkError(f"duplicate edge ({child}, {parent})")
            if not math.isfinite(weight):
                raise NetworkError(f"edge ({child}, {parent}) has non-finite weight")
            seen.add((child, parent))
            triples.append((child, parent, weight))
        triples.sort()

        n_edges = len(triples)
        child = np.array([t[0] for t in triples], dtype=np.int64).reshape(n_edges)
        parent = np.array([t[1] for t in triples], dtype=np.int64).reshape(n_edges)
        weight = np.array([t[2] for t in triples], dtype=float).reshape(n_edges)
        self._init_arrays(n_nodes, h, child, parent, weight)

    def _init_arrays(self, n_nodes, h, child, parent, weight, structure=None):
        self.n_nodes = n_nodes
        self.biases = _readonly(h)
        self.edge_child = _readonly(child)
        self.edge_parent = _readonly(parent)
        self.weights = _readonly(weight)
        if structure is None:
            structure = _Structure.build(n_nodes, child, parent)
        self._structure = structure

    @classmethod
    def from_arrays(cls, n_nodes, biases, edge_child, edge_parent, weights) -> "SigmoidBeliefNetwork":
        return cls(n_nodes, biases, zip(edge_child, edge_parent, weights))

    def with_parameters(self, biases: np.ndarray, weights: np.ndarray) -> "SigmoidBeliefNetwork":
        """Same structure, new parameters (weights in canonical edge order)."""
        h = np.array(biases, dtype=float)
        w = np.array(weights, dtype=float)
        if h.shape != self.biases.shape or w.shape != self.weights.shape:
            raise NetworkError("parameter shapes do not match the network structure")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(w))):
            raise NetworkError("parameters must be finite")
        net = object.__new__(SigmoidBeliefNetwork)
        net._init_arrays(self.n_nodes, h, self.edge_child, self.edge_parent, w, self._structure)
        return net

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def structure(self) -> "_Structure":
        return self._structure

    def parents(self, i: int) -> np.ndarray:
        s = self._structure
        self._check(i)
        return self.edge_parent[s.parent_ptr[i]:s.parent_ptr[i + 1]]

    def parent_weights(self, i: int) -> np.ndarray:
        s = self._structure
        self._check(i)
        return self.weights[s.parent_ptr[i]:s.parent_ptr[i + 1]]

    def children(self, j: int) -> np.ndarray:
        s = self._structure
        self._check(j)
        return s.child_idx[s.child_ptr[j]:s.child_ptr[j + 1]]

    def child_weights(self, j: int) -> np.ndarray:
        """Weights J_kj for each child k of j, aligned with :meth:`children`."""
        s = self._structure
        self._check(j)
        return self.weights[s.child_edge[s.child_ptr[j]:s.child_ptr[j + 1]]]

    def edge_index(self, i: int, j: int) -> int | None:
        """Position of edge (child i, parent j) in the canonical edge order."""
        return self._structure.lookup.get((int(i), int(j)))

    def weight(self, i: int, j: int) -> float:
        k = self.edge_index(i, j)
        return 0.0 if k is None else float(self.weights[k])

    def weight_matrix(self) -> np.ndarray:
        """Dense J with J[i, j] the weight from parent j into child i."""
        J = np.zeros((self.n_nodes, self.n_nodes))
        J[self.edge_child, self.edge_parent] = self.weights
        return J

    def _check(self, i):
        if not 0 <= i < self.n_nodes:
            raise IndexError(f"node {i} out of range for N={self.n_nodes}")

    def __eq__(self, other):
        if not isinstance(other, SigmoidBeliefNetwork):
            return NotImplemented
        return (self.n_nodes == other.n_nodes
                and np.array_equal(self.biases, other.biases)
                and np.array_equal(self.edge_child, other.edge_child)
                and np.array_equal(self.edge_parent, other.edge_parent)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def __repr__(self):
        return f"SigmoidBeliefNetwork(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


@dataclass(frozen=True, eq=False)
class _Structure:
    """CSR-style parent and child indexes shared between parameterizations."""

    parent_ptr: np.ndarray
    child_ptr: np.ndarray
    child_idx: np.ndarray
    child_edge: np.ndarray
    lookup: dict = field(repr=False)

    @classmethod
    def build(cls, n, child, parent):
        # edges arrive sorted by (child, parent), so the parent index is already CSR
        parent_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(parent_ptr, child + 1, 1)
        parent_ptr = np.cumsum(parent_ptr)
        order = np.lexsort((child, parent))
        child_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(child_ptr, parent + 1, 1)
        child_ptr = np.cumsum(child_ptr)
        lookup = {(int(c), int(p)): k for k, (c, p) in enumerate(zip(child, parent))}
        return cls(_readonly(parent_ptr), _readonly(child_ptr),
                   _readonly(child[order].astype(np.int64)), _readonly(order.astype(np.int64)), lookup)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Evidence:
    """Partial instantiation: node index -> observed bit."""

    clamped: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, v in dict(self.clamped).items():
            k = int(k)
            if k < 0:
                raise NetworkError(f"negative node index {k} in evidence")
            if v not in (0, 1):
                raise NetworkError(f"evidence for node {k} must be 0 or 1, got {v!r}")
            clean[k] = int(v)
        object.__setattr__(self, "clamped", dict(sorted(clean.items())))

    @classmethod
    def from_pattern(cls, visible: Sequence[int], pattern: Sequence[int]) -> "Evidence":
        if len(visible) != len(pattern):
            raise NetworkError(f"pattern of length {len(pattern)} does not match {len(visible)} visible nodes")
        return cls(dict(zip((int(v) for v in visible), (int(b) for b in pattern))))

    def validate(self, n_nodes: int) -> None:
        for k in self.clamped:
            if k >= n_nodes:
                raise NetworkError(f"evidence node {k} out of range for N={n_nodes}")

    def visible(self) -> np.ndarray:
        return np.array(list(self.clamped), dtype=np.int64)

    def hidden(self, n_nodes: int) -> np.ndarray:
        self.validate(n_nodes)
        return np.array([i for i in range(n_nodes) if i not in self.clamped], dtype=np.int64)

    def __len__(self):
        return len(self.clamped)


def as_configuration(net: SigmoidBeliefNetwork, config: Sequence[int]) -> np.ndarray:
    """Validate a full 0/1 assignment and return it as an int8 array."""
    s = np.asarray(config)
    if s.shape != (net.n_nodes,):
        raise NetworkError(f"configuration must have length {net.n_nodes}, got shape {s.shape}")
    if not np.all((s == 0) | (s == 1)):
        raise NetworkError("configuration entries must be 0 or 1")
    return s.astype(np.int8)


def local_field(net: SigmoidBeliefNetwork, config: Sequence[int], i: int) -> float:
    """z_i = sum over parents of J_ij S_j, plus h_i."""
    net._check(i)
    z = float(net.biases[i])
    for j, w in zip(net.parents(i), net.parent_weights(i)):
        if config[j]:
            z += float(w)
    return z


def conditional(net: SigmoidBeliefNetwork, i: int, config: Sequence[int]) -> float:
    """P(S_i = config[i] | parents of i)."""
    z = local_field(net, config, i)
    return sigmoid(z) if config[i] else sigmoid(-z)


def log_conditional(net: SigmoidBeliefNetwork, i: int, config: Sequence[int]) -> float:
    z = local_field(net, config, i)
    return log_sigmoid(z) if config[i] else log_sigmoid(-z)


def log_joint(net: SigmoidBeliefNetwork, config: Sequence[int]) -> float:
    s = as_configuration(net, config)
    return math.fsum(log_conditional(net, i, s) for i in range(net.n_nodes))


def energy(net: SigmoidBeliefNetwork, config: Sequence[int]) -> float:
    """-ln P(S) written as pairwise, bias and softplus terms."""
    return -log_joint(net, config)


def log_joint_batch(net: SigmoidBeliefNetwork, configs: np.ndarray) -> np.ndarray:
    """Vectorized ln P(S) for an (M, N) array of configurations."""
    S = np.asarray(configs, dtype=float)
    Z = S @ net.weight_matrix().T + net.biases
    return np.sum(S * Z - softplus_array(Z), axis=1)


def noisy_or_conditional(p: Sequence[float], parent_bits: Sequence[int]) -> float:
    """Activation probability 1 - prod_j (1 - p_j)^{S_j} of a noisy-OR unit.

    Evaluated through theta_j = -ln(1 - p_j) and rho(x) = 1 - e^{-x}.
    """
    p = [float(x) for x in p]
    bits = [int(b) for b in parent_bits]
    if len(p) != len(bits):
        raise ValueError("need one probability per parent bit")
    for x in p:
        if not 0.0 <= x < 1.0:
            raise ValueError(f"noisy-OR probabilities must lie in [0, 1), got {x}")
    theta = math.fsum(-math.log1p(-x) for x, b in zip(p, bits) if b)
    return -math.expm1(-theta)


def ancestral_sample(net: SigmoidBeliefNetwork, rng: np.random.Generator) -> np.ndarray:
    """Draw one full configuration, parents before children."""
    s = np.zeros(net.n_nodes, dtype=np.int8)
    u = rng.random(net.n_nodes)
    for i in range(net.n_nodes):
        s[i] = u[i] < sigmoid(local_field(net, s, i))
    return s


def ancestral_samples(net: SigmoidBeliefNetwork, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n configurations at once; row r uses the same rule as :func:`ancestral_sample`."""
    J = net.weight_matrix()
    u = rng.random((n, net.n_nodes))
    S = np.zeros((n, net.n_nodes), dtype=np.int8)
    for i in range(net.n_nodes):
        z = S @ J[i] + net.biases[i]
        S[:, i] = u[:, i] < 1.0 / (1.0 + np.exp(-z))
    return S
