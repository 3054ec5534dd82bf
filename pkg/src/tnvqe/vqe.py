"""Joint TN-VQE cost, gradients, gradient descent and sweep orchestration.

The cost is ``E(theta, phi) = sum_P c_P(theta) <P>_phi`` with
``c_P(theta)`` the Pauli coefficients of ``U(theta)^dag H U(theta)`` and
``<P>_phi`` the expectation values in the ansatz state. Circuit gradients use
the parameter-shift rule with ``c_P(theta)`` held fixed; network gradients
use central finite differences of the cost.
"""

from __future__ import annotations

import enum
import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import circuit
from .circuit import CircuitConfig
from .hamiltonian import TfimParams, build_tfim_mpo, dense_from_mpo, exact_ground_energy
from .pauli import (
    PauliDecomposition,
    coefficient_vector,
    decompose,
    enumerate_strings,
    matrix_from_vector,
    transformed_coefficients,
)
from .utn import RotationMode, UtnLayout, build_utn, build_utn_batch, similarity_transform

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
WORKERS_ENV = "TNVQE_WORKERS"


@dataclass(eq=False)
class Problem:
    """A Hamiltonian plus the circuit and (optional) network that act on it.

    ``layout=None`` is plain VQE: no U(theta) is ever built.
    """

    hamiltonian: np.ndarray
    circuit: CircuitConfig
    circuit_layers: int
    layout: UtnLayout | None = None
    mode: RotationMode = RotationMode.ONE_PARAM
    ground_energy: float | None = None
    _plain: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=np.complex128)
        dim = self.hamiltonian.shape[0]
        if dim != 2**self.circuit.n_qubits:
            raise ValueError(f"Hamiltonian dimension {dim} does not match {self.circuit.n_qubits} qubits")
        if self.layout is not None and self.layout.n_sites != self.circuit.n_qubits:
            raise ValueError("network and circuit act on different numbers of sites")
        if self.circuit_layers < 1:
            raise ValueError("circuit_layers must be >= 1")
        if self.ground_energy is None:
            self.ground_energy = exact_ground_energy(self.hamiltonian)
        if self.layout is None:
            self._plain = coefficient_vector(self.hamiltonian)
            self._plain.setflags(write=False)

    @property
    def n_theta(self) -> int:
        return 0 if self.layout is None else self.layout.n_params(self.mode)

    @property
    def phi_shape(self) -> tuple[int, int, int]:
        return (self.circuit_layers, self.circuit.n_qubits, 3)

    def transformed_hamiltonian(self, theta) -> np.ndarray:
        if self.layout is None:
            return self.hamiltonian
        return similarity_transform(self.hamiltonian, build_utn(self.layout, self.mode, theta))

    def coefficients(self, theta) -> PauliDecomposition:
        """``c_P(theta)``; with no network these are the Pauli terms of H itself."""
        if self.layout is None:
            return decompose(self.hamiltonian)
        return transformed_coefficients(self.hamiltonian, build_utn(self.layout, self.mode, theta))

    def coefficient_vector(self, theta) -> np.ndarray:
        if self.layout is None:
            return self._plain
        return coefficient_vector(self.transformed_hamiltonian(theta))


def tfim_problem(
    params: TfimParams,
    circuit_layers: int,
    tn_layers: int | None,
    mode: RotationMode = RotationMode.ONE_PARAM,
    entangler_ranges: tuple[int, ...] | None = None,
) -> Problem:
    """TFIM problem with its Hamiltonian assembled from the MPO.

    ``tn_layers=None`` gives plain VQE. Zero layers on an odd chain (where no
    brick wall exists) falls back to plain VQE, which is the same cost.
    """
    h = dense_from_mpo(build_tfim_mpo(params))
    if tn_layers == 0 and params.n_sites % 2:
        tn_layers = None
    layout = None if tn_layers is None else UtnLayout(params.n_sites, tn_layers)
    return Problem(h, CircuitConfig(params.n_sites, entangler_ranges), circuit_layers, layout, mode)


@dataclass
class JointParams:
    theta: np.ndarray
    phi: np.ndarray

    def copy(self) -> "JointParams":
        return JointParams(self.theta.copy(), self.phi.copy())


def random_params(problem: Problem, seed: int) -> JointParams:
    """Uniform draws on [0, 2pi); phi is drawn first so it does not depend on the network."""
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, TWO_PI, size=problem.phi_shape)
    theta = rng.uniform(0.0, TWO_PI, size=problem.n_theta)
    return JointParams(theta, phi)


def _check_params(theta, phi, problem: Problem) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    phi = np.asarray(phi, dtype=float)
    if theta.size != problem.n_theta:
        raise ValueError(f"theta has {theta.size} values, expected {problem.n_theta}")
    if phi.shape != problem.phi_shape:
        raise ValueError(f"phi has shape {phi.shape}, expected {problem.phi_shape}")
    return theta, phi


def energy(theta, phi, problem: Problem) -> float:
    theta, phi = _check_params(theta, phi, problem)
    state = circuit.run_ansatz(phi, problem.circuit)
    return float(circuit.energy_batch(state[None], problem.coefficients(theta))[0])


def dense_energy(theta, phi, problem: Problem) -> float:
    """``<psi(phi)| U^dag H U |psi(phi)>`` by matrix products, no Pauli strings."""
    theta, phi = _check_params(theta, phi, problem)
    psi = circuit.run_ansatz(phi, problem.circuit)
    if problem.layout is not None:
        psi = build_utn(problem.layout, problem.mode, theta) @ psi
    return float(np.real(np.vdot(psi, problem.hamiltonian @ psi)))


def _theta_fd_gradient(theta, problem: Problem, rho: np.ndarray, fd_step: float) -> np.ndarray:
    """Central differences of ``Tr[rho U^dag H U]`` with every shifted network built in one batch."""
    k = theta.size
    if k == 0:
        return np.zeros(0)
    steps = np.zeros((2 * k, k))
    idx = np.arange(k)
    steps[2 * idx, idx] = fd_step
    steps[2 * idx + 1, idx] = -fd_step
    us = build_utn_batch(problem.layout, problem.mode, theta[None, :] + steps)
    h_tn = us.conj().transpose(0, 2, 1) @ problem.hamiltonian @ us
    # Tr[rho A] = sum_ij rho_ji A_ij
    energies = np.real(np.einsum("ji,bij->b", rho, h_tn))
    return (energies[0::2] - energies[1::2]) / (2 * fd_step)


def evaluate(theta, phi, problem: Problem, fd_step: float = 1e-6):
    """Cost and both gradients at one point: ``(E, grad_theta, grad_phi)``.

    The energy is ``sum_P c_P <P>`` over all ``4**n`` strings with every
    ``<P>`` taken from the ansatz state. For the network derivative the same
    sum is regrouped as ``Tr[rho H_TN]`` with
    ``rho = sum_P <P> P / 2**n`` rebuilt from those expectations.
    """
    theta, phi = _check_params(theta, phi, problem)
    n = problem.circuit.n_qubits
    coeffs = problem.coefficient_vector(theta)
    state = circuit.run_ansatz(phi, problem.circuit)
    expect = circuit.pauli_expectations(state[None], enumerate_strings(n))[0]
    e = float(np.real(expect @ coeffs))
    grad_phi = circuit.param_shift_grad(phi, problem.circuit, matrix_from_vector(coeffs))
    rho = matrix_from_vector(expect.astype(np.complex128)) / 2**n
    grad_theta = _theta_fd_gradient(theta, problem, rho, fd_step)
    return e, grad_theta, grad_phi


def joint_gradient(theta, phi, problem: Problem, fd_step: float = 1e-6):
    _, grad_theta, grad_phi = evaluate(theta, phi, problem, fd_step)
    return grad_theta, grad_phi


class Termination(str, enum.Enum):
    MAX_ITERATIONS = "MaxIterations"
    VANISHING_GRADIENT = "VanishingGradient"


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.1
    max_iterations: int = 200
    grad_tolerance: float = 1e-8
    seed: int = 0
    theta_fd_step: float = 1e-6

    def __post_init__(self):
        if self.learning_rate <= 0 or self.grad_tolerance <= 0 or self.theta_fd_step <= 0:
            raise ValueError("learning_rate, grad_tolerance and theta_fd_step must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class IterationRow:
    iteration: int
    energy: float
    relative_error: float
    grad_inf_norm: float


@dataclass
class RunRecord:
    rows: list[IterationRow]
    termination: Termination
    final_params: JointParams
    ground_energy: float

    @property
    def final(self) -> IterationRow:
        return self.rows[-1]


def relative_error(e: float, e_ground: float) -> float:
    return abs(e - e_ground) / abs(e_ground)


def optimize(initial: JointParams, cfg: OptimizerConfig, problem: Problem) -> RunRecord:
    """Plain gradient descent on theta and phi together.

    Row ``k`` describes the parameters after ``k`` updates. The loop stops
    when the gradient's infinity norm falls below ``cfg.grad_tolerance``
    (``VanishingGradient``) or after ``cfg.max_iterations`` rows, so the
    returned parameters are always those of the last row.
    """
    theta, phi = _check_params(initial.theta, initial.phi, problem)
    theta, phi = theta.copy(), phi.copy()
    rows: list[IterationRow] = []
    termination = Termination.MAX_ITERATIONS
    for k in range(cfg.max_iterations):
        e, g_theta, g_phi = evaluate(theta, phi, problem, cfg.theta_fd_step)
        norm = max(float(np.max(np.abs(g_phi))), float(np.max(np.abs(g_theta), initial=0.0)))
        rows.append(IterationRow(k, e, relative_error(e, problem.ground_energy), norm))
        if norm < cfg.grad_tolerance:
            termination = Termination.VANISHING_GRADIENT
            break
        if k == cfg.max_iterations - 1:
            break
        theta = theta - cfg.learning_rate * g_theta
        phi = phi - cfg.learning_rate * g_phi
    return RunRecord(rows, termination, JointParams(theta, phi), problem.ground_energy)


@dataclass
class VarianceReport:
    """``Var[d_k E]`` estimated as the mean of squared partial derivatives."""

    theta: np.ndarray
    phi: np.ndarray
    sample_count: int


def gradient_variance(problem: Problem, sample_count: int = 200, seed: int = 0,
                      fd_step: float = 1e-6) -> VarianceReport:
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    rng = np.random.default_rng(seed)
    sq_theta = np.zeros(problem.n_theta)
    sq_phi = np.zeros(problem.phi_shape)
    for _ in range(sample_count):
        phi = rng.uniform(0.0, TWO_PI, size=problem.phi_shape)
        theta = rng.uniform(0.0, TWO_PI, size=problem.n_theta)
        g_theta, g_phi = joint_gradient(theta, phi, problem, fd_step)
        sq_theta += g_theta**2
        sq_phi += g_phi**2
    return VarianceReport(sq_theta / sample_count, sq_phi / sample_count, sample_count)


@dataclass(frozen=True, order=True)
class SweepCell:
    circuit_layers: int
    tn_layers: int
    mode: RotationMode

    def key(self, seed: int) -> tuple[int, int, str, int]:
        return (self.circuit_layers, self.tn_layers, self.mode.value, seed)


def sweep_cells(circuit_layers: Iterable[int], tn_layers: Iterable[int],
                modes: Iterable[RotationMode]) -> list[SweepCell]:
    cells = [SweepCell(c, t, RotationMode(m))
             for c, t, m in itertools.product(circuit_layers, tn_layers, modes)]
    if not cells:
        raise ValueError("sweep grid is empty")
    return cells


def cell_problem(cell: SweepCell, tfim: TfimParams,
                 entangler_ranges: tuple[int, ...] | None = None) -> Problem:
    return tfim_problem(tfim, cell.circuit_layers, cell.tn_layers, cell.mode, entangler_ranges)


def run_cell(cell: SweepCell, seed: int, tfim: TfimParams, cfg: OptimizerConfig,
             entangler_ranges: tuple[int, ...] | None = None) -> RunRecord:
    problem = cell_problem(cell, tfim, entangler_ranges)
    return optimize(random_params(problem, seed), cfg, problem)


def _run_job(job):
    cell, seed, tfim, cfg, ranges = job
    return cell, seed, run_cell(cell, seed, tfim, cfg, ranges)


def default_workers() -> int:
    cap = os.environ.get(WORKERS_ENV)
    n = os.cpu_count() or 1
    return max(1, min(n, int(cap))) if cap else n


def run_sweep(
    cells: Iterable[SweepCell],
    seeds: Iterable[int],
    tfim: TfimParams,
    cfg: OptimizerConfig,
    workers: int = 1,
    skip: set | None = None,
    on_result: Callable[[SweepCell, int, RunRecord], None] | None = None,
    entangler_ranges: tuple[int, ...] | None = None,
) -> dict[tuple, RunRecord]:
    """Run every (cell, seed) not in ``skip``; results keyed by ``cell.key(seed)``.

    A run that raises is logged and left out of the result; the others
    continue. ``on_result`` sees results in completion order.
    """
    skip = skip or set()
    jobs = [(c, s, tfim, cfg, entangler_ranges) for c in cells for s in seeds if c.key(s) not in skip]
    results: dict[tuple, RunRecord] = {}

    def collect(cell, seed, record):
        results[cell.key(seed)] = record
        if on_result is not None:
            on_result(cell, seed, record)

    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            try:
                collect(*_run_job(job))
            except Exception:
                log.exception("run %s seed %d failed", job[0], job[1])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_job, job): job for job in jobs}
            for fut in as_completed(futures):
                job = futures[fut]
                try:
                    collect(*fut.result())
                except Exception:
                    log.exception("run %s seed %d failed", job[0], job[1])
    return dict(sorted(results.items()))

