"""Text formats, bitmap datasets, random networks and the seeding contract.

Network files::

    SBN 1
    N <n_nodes>
    H <i> <bias>            one per node, ascending i
    J <i> <j> <weight>      parent j < child i, sorted by (i, j)

Evidence files hold one ``<node-index> <0|1>`` per line. Bitmap datasets::

    BITMAP 1
    <rows> <cols> <count>
    <rows*cols characters of 0/1>   count lines, row-major

Every file is UTF-8 with ``\\n`` line endings. Parsers reject anything
off-format instead of repairing it. Reals are written with ``repr``, the
shortest decimal that parses back to the identical double.

Randomness comes from numpy's PCG64 generator; uniform reals use the top
53 bits of each 64-bit draw (numpy's ``Generator.random``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import Evidence, NetworkError, SigmoidBeliefNetwork


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# -- seeding -----------------------------------------------------------------

def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(seed: int, index: int) -> int:
    """Independent per-task seed: (seed XOR index) pushed through one PCG64 step."""
    bg = np.random.PCG64(int(seed) ^ int(index))
    return int(bg.random_raw())


# -- network format ----------------------------------------------------------

def _split_lines(text: str) -> list[str]:
    if "\r" in text:
        raise ParseError("carriage return in input; files must use \\n line endings",
                         text[:text.index("\r")].count("\n") + 1)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _int(tok: str, lineno: int, col: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", lineno, col) from None


def _real(tok: str, lineno: int, col: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ParseError(f"expected a real number, got {tok!r}", lineno, col) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite number {tok!r}", lineno, col)
    return x


def _fields(line: str, lineno: int, tag: str, n: int) -> list[tuple[str, int]]:
    toks = line.split(" ")
    if toks[0] != tag:
        raise ParseError(f"expected {tag!r} record, got {toks[0]!r}", lineno)
    if len(toks) != n or any(t == "" for t in toks):
        raise ParseError(f"{tag!r} record takes {n - 1} single-space separated fields", lineno)
    cols, c = [], 1
    for t in toks:
        cols.append((t, c))
        c += len(t) + 1
    return cols[1:]


def parse_network(text: str) -> SigmoidBeliefNetwork:
    lines = _split_lines(text)
    if len(lines) < 2 or lines[0] != "SBN 1":
        raise ParseError("expected header 'SBN 1'", 1)
    (tok, col), = _fields(lines[1], 2, "N", 2)
    n = _int(tok, 2, col)
    if n < 1:
        raise ParseError("N must be positive", 2, col)
    if len(lines) < 2 + n:
        raise ParseError(f"expected {n} 'H' records", len(lines) + 1)
    biases = []
    for i in range(n):
        lineno = 3 + i
        (ti, ci), (tb, cb) = _fields(lines[2 + i], lineno, "H", 3)
        if _int(ti, lineno, ci) != i:
            raise ParseError(f"'H' records must list nodes in order; expected node {i}", lineno, ci)
        biases.append(_real(tb, lineno, cb))
    edges = []
    prev = None
    for k, line in enumerate(lines[2 + n:]):
        lineno = 3 + n + k
        (ti, ci), (tj, cj), (tw, cw) = _fields(line, lineno, "J", 4)
        i, j = _int(ti, lineno, ci), _int(tj, lineno, cj)
        if not 0 <= i < n:
            raise ParseError(f"child {i} out of range", lineno, ci)
        if not 0 <= j < n:
            raise ParseError(f"parent {j} out of range", lineno, cj)
        if j >= i:
            raise ParseError(f"edge ({i}, {j}) needs parent < child", lineno, cj)
        if prev is not None:
            if (i, j) == prev:
                raise ParseError(f"duplicate edge ({i}, {j})", lineno, ci)
            if (i, j) < prev:
                raise ParseError("'J' records must be sorted by (child, parent)", lineno, ci)
        prev = (i, j)
        edges.append((i, j, _real(tw, lineno, cw)))
    return SigmoidBeliefNetwork(n, biases, edges)


def emit_network(net: SigmoidBeliefNetwork) -> str:
    out = ["SBN 1", f"N {net.n_nodes}"]
    out += [f"H {i} {float(b)!r}" for i, b in enumerate(net.biases)]
    out += [f"J {int(i)} {int(j)} {float(w)!r}"
            for i, j, w in zip(net.edge_child, net.edge_parent, net.weights)]
    return "\n".join(out) + "\n"


# -- evidence ----------------------------------------------------------------

def parse_evidence(text: str) -> Evidence:
    clamped = {}
    for lineno, line in enumerate(_split_lines(text), start=1):
        toks = line.split(" ")
        if len(toks) != 2:
            raise ParseError("expected '<node-index> <0|1>'", lineno)
        k = _int(toks[0], lineno, 1)
        if k < 0:
            raise ParseError(f"negative node index {k}", lineno, 1)
        if toks[1] not in ("0", "1"):
            raise ParseError(f"evidence value must be 0 or 1, got {toks[1]!r}", lineno, len(toks[0]) + 2)
        if k in clamped:
            raise ParseError(f"node {k} listed twice", lineno, 1)
        clamped[k] = int(toks[1])
    return Evidence(clamped)


def emit_evidence(evidence: Evidence) -> str:
    return "".join(f"{k} {v}\n" for k, v in evidence.clamped.items())


# -- bitmap datasets ---------------------------------------------------------

@dataclass(frozen=True)
class BitmapDataset:
    rows: int
    cols: int
    patterns: np.ndarray  # (count, rows*cols) uint8

    def __post_init__(self):
        p = np.asarray(self.patterns, dtype=np.uint8)
        if p.ndim == 1 and p.size == 0:
            p = p.reshape(0, self.rows * self.cols)
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        if p.ndim != 2 or p.shape[1] != self.rows * self.cols:
            raise ValueError(f"patterns must have {self.rows * self.cols} columns")
        if not np.all(p <= 1):
            raise ValueError("patterns must be 0/1")
        object.__setattr__(self, "patterns", p)

    @property
    def width(self) -> int:
        return self.rows * self.cols

    def __len__(self):
        return len(self.patterns)


def parse_dataset(text: str) -> BitmapDataset:
    lines = _split_lines(text)
    if not lines or lines[0] != "BITMAP 1":
        raise ParseError("expected header 'BITMAP 1'", 1)
    if len(lines) < 2:
        raise ParseError("missing '<rows> <cols> <count>' line", 2)
    toks = lines[1].split(" ")
    if len(toks) != 3:
        raise ParseError("expected '<rows> <cols> <count>'", 2)
    rows, cols, count = (_int(t, 2, 1) for t in toks)
    if rows < 1 or cols < 1 or count < 0:
        raise ParseError("rows and cols must be positive and count non-negative", 2)
    body = lines[2:]
    if len(body) != count:
        raise ParseError(f"header announces {count} patterns but {len(body)} follow", 3 + min(len(body), count))
    width = rows * cols
    patterns = np.zeros((count, width), dtype=np.uint8)
    for r, line in enumerate(body):
        lineno = 3 + r
        if len(line) != width:
            raise ParseError(f"pattern has {len(line)} characters, expected {width}", lineno)
        for c, ch in enumerate(line):
            if ch not in "01":
                raise ParseError(f"bad character {ch!r}", lineno, c + 1)
        patterns[r] = np.frombuffer(line.encode("ascii"), dtype=np.uint8) - ord("0")
    return BitmapDataset(rows, cols, patterns)


def emit_dataset(ds: BitmapDataset) -> str:
    out = ["BITMAP 1", f"{ds.rows} {ds.cols} {len(ds)}"]
    out += ["".join("1" if b else "0" for b in p) for p in ds.patterns]
    return "\n".join(out) + "\n"


def default_visible_map(net: SigmoidBeliefNetwork, width: int) -> np.ndarray:
    """The last ``width`` node indices, i.e. the bottom layer of a layered net."""
    if width > net.n_nodes:
        raise NetworkError(f"cannot map {width} pixels onto {net.n_nodes} nodes")
    return np.arange(net.n_nodes - width, net.n_nodes, dtype=np.int64)


# -- random networks ---------------------------------------------------------

def layer_offsets(layer_sizes: Sequence[int]) -> list[int]:
    return [0, *np.cumsum(layer_sizes).tolist()]


def random_layered(layer_sizes: Sequence[int], weight_range: tuple[float, float],
                   rng: np.random.Generator) -> SigmoidBeliefNetwork:
    """Layered net drawn from an existing stream (see :func:`gen_random_layered`)."""
    sizes = [int(s) for s in layer_sizes]
    if not sizes:
        raise ValueError("need at least one layer")
    if any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    a, b = map(float, weight_range)
    if a > b:
        raise ValueError(f"empty weight range [{a}, {b}]")
    off = layer_offsets(sizes)
    n = off[-1]
    biases = rng.uniform(a, b, size=n)
    edges = [(i, j) for l in range(1, len(sizes))
             for i in range(off[l], off[l + 1])
             for j in range(off[l - 1], off[l])]
    weights = rng.uniform(a, b, size=len(edges))
    return SigmoidBeliefNetwork(n, biases, [(i, j, w) for (i, j), w in zip(edges, weights)])


def gen_random_layered(layer_sizes: Sequence[int], weight_range: tuple[float, float] = (-1.0, 1.0),
                       seed: int = 0) -> SigmoidBeliefNetwork:
    """Fully connected adjacent layers, edges pointing from layer l-1 down to layer l.

    Nodes are numbered top layer first. Biases (node order) and then weights
    (sorted by child, parent) are drawn i.i.d. uniform on ``weight_range``.
    """
    return random_layered(layer_sizes, weight_range, make_rng(seed))


def random_dag(n_nodes: int, edge_prob: float, weight_range: tuple[float, float],
               rng: np.random.Generator) -> SigmoidBeliefNetwork:
    """Random sparse DAG: each pair j < i is an edge with probability ``edge_prob``."""
    a, b = map(float, weight_range)
    biases = rng.uniform(a, b, size=n_nodes)
    edges = []
    for i in range(n_nodes):
        for j in range(i):
            if rng.random() < edge_prob:
                edges.append((i, j, rng.uniform(a, b)))
    return SigmoidBeliefNetwork(n_nodes, biases, edges)
