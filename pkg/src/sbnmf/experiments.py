"""Experiment harnesses shared by the CLI, scripts/ and the acceptance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .data import derive_seed, make_rng, random_layered
from .exact import log_likelihood_exact
from .learning import TrainConfig, classify_many, train
from .meanfield import SolveOptions, minimize_convex_on_unit_interval, solve
from .network import Evidence, SigmoidBeliefNetwork, ancestral_samples

# <ln(1 + e^z)> for z ~ N(0, 1), quoted alongside the bound as a reference value
GAUSS_EXACT_REFERENCE = 0.806


def gauss_xi_objective(x: float) -> float:
    """ln(e^{x^2/2} + e^{(1-x)^2/2}): the xi-bound for a standard normal input."""
    return float(np.logaddexp(0.5 * x * x, 0.5 * (1.0 - x) ** 2))


@dataclass
class GaussCheck:
    argmin: float
    minimum: float
    at_zero: float
    exact_reference: float = GAUSS_EXACT_REFERENCE


def gauss_check(tol: float = 1e-10) -> GaussCheck:
    x, fx = minimize_convex_on_unit_interval(gauss_xi_objective, tol)
    return GaussCheck(x, fx, gauss_xi_objective(0.0))


def expected_softplus_gauss(order: int = 150) -> float:
    """<ln(1 + e^z)> for z ~ N(0, 1) by Gauss-Hermite quadrature."""
    x, w = np.polynomial.hermite_e.hermegauss(order)
    return float(np.sum(w * np.logaddexp(0.0, x)) / math.sqrt(2 * math.pi))


@dataclass
class Fig5Row:
    index: int
    exact: float
    bound: float
    e_mf: float
    e_unif: float
    converged: bool


@dataclass
class Fig5Summary:
    count: int
    mean_e_mf: float
    rms_e_unif: float
    min_e_mf: float
    nonconverged: int
    rows: list[Fig5Row] = field(repr=False, default_factory=list)


FIG5_LAYERS = (2, 4, 6)


def fig5_rows(count: int, seed: int, options: SolveOptions | None = None,
              weight_range=(-1.0, 1.0)) -> Iterator[Fig5Row]:
    """Random 2x4x6 nets with the bottom layer clamped to zero, one row per net.

    Net k is generated from its own derived seed, so rows do not depend on
    the order in which they are computed.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    n = sum(FIG5_LAYERS)
    bottom = FIG5_LAYERS[-1]
    ev = Evidence({i: 0 for i in range(n - bottom, n)})
    log_unif = bottom * math.log(0.5)
    for k in range(count):
        net = random_layered(FIG5_LAYERS, weight_range, make_rng(derive_seed(seed, k)))
        exact = log_likelihood_exact(net, ev)
        sol = solve(net, ev, options)
        yield Fig5Row(k, exact, sol.total, sol.total / exact - 1.0, log_unif / exact - 1.0, sol.converged)


def fig5(count: int, seed: int, options: SolveOptions | None = None) -> Fig5Summary:
    rows = list(fig5_rows(count, seed, options))
    e_mf = np.array([r.e_mf for r in rows])
    e_unif = np.array([r.e_unif for r in rows])
    return Fig5Summary(count, float(e_mf.mean()), float(np.sqrt(np.mean(e_unif ** 2))),
                       float(e_mf.min()), sum(not r.converged for r in rows), rows)


# -- synthetic teacher/student learning run ----------------------------------

@dataclass
class TeacherSetup:
    layers: tuple = (4, 8, 16)
    n_classes: int = 4
    n_train: int = 200
    n_test: int = 100
    bias_offset: float = 2.0
    weight_range: tuple = (-1.0, 1.0)
    student_init_range: tuple = (-0.1, 0.1)
    seed: int = 2024


def make_teachers(setup: TeacherSetup) -> list[SigmoidBeliefNetwork]:
    """Teacher nets sharing one architecture.

    Each class draws its parameters uniformly from ``weight_range`` and then
    shifts every visible bias by +offset or -offset, with the signs drawn
    per class and per pixel.
    """
    rng = make_rng(derive_seed(setup.seed, 0))
    n_vis = setup.layers[-1]
    teachers = []
    for _ in range(setup.n_classes):
        net = random_layered(setup.layers, setup.weight_range, rng)
        signs = rng.choice([-1.0, 1.0], size=n_vis)
        h = net.biases.copy()
        h[-n_vis:] += setup.bias_offset * signs
        teachers.append(net.with_parameters(h, net.weights))
    return teachers


@dataclass
class TeacherRun:
    traces: list[list[float]]
    accuracy: float
    confusion: np.ndarray
    students: list[SigmoidBeliefNetwork] = field(repr=False)
    nonconverged: int = 0


def sample_visible(net: SigmoidBeliefNetwork, count: int, n_visible: int, rng) -> np.ndarray:
    return ancestral_samples(net, count, rng)[:, -n_visible:].astype(np.uint8)


def teacher_datasets(setup: TeacherSetup, teachers=None):
    teachers = teachers or make_teachers(setup)
    n_vis = setup.layers[-1]
    rng = make_rng(derive_seed(setup.seed, 1))
    train_sets = [sample_visible(t, setup.n_train, n_vis, rng) for t in teachers]
    test_sets = [sample_visible(t, setup.n_test, n_vis, rng) for t in teachers]
    return train_sets, test_sets


def run_teacher_experiment(setup: TeacherSetup | None = None, rate: float = 0.05, sweeps: int = 5,
                           options: SolveOptions | None = None) -> TeacherRun:
    setup = setup or TeacherSetup()
    train_sets, test_sets = teacher_datasets(setup)
    n_vis = setup.layers[-1]
    n = sum(setup.layers)
    visible = np.arange(n - n_vis, n)
    students, traces, bad = [], [], 0
    for c in range(setup.n_classes):
        init = random_layered(setup.layers, setup.student_init_range, make_rng(derive_seed(setup.seed, 100 + c)))
        cfg = TrainConfig(rate=rate, sweeps=sweeps, seed=derive_seed(setup.seed, 200 + c),
                          solve=options or SolveOptions())
        res = train(init, train_sets[c], visible, cfg)
        students.append(res.net)
        traces.append(res.trace)
        bad += res.nonconverged
    confusion = np.zeros((setup.n_classes, setup.n_classes), dtype=int)
    for c, test in enumerate(test_sets):
        labels, _ = classify_many(students, test, visible, options)
        confusion[c] += np.bincount(labels, minlength=setup.n_classes)
    accuracy = float(np.trace(confusion) / confusion.sum())
    return TeacherRun(traces, accuracy, confusion, students, bad)
