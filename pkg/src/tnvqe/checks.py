"""Consistency checks run by ``tnvqe check``.

Three structural checks (unitarity of U(theta), spectrum of H_MPO against
H_TN, spectrum of H_MPO against the Pauli-sum Hamiltonian with matching
coefficients) plus independent oracles for the dense assembly, the
eigensolver, the two energy paths and the gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import RunConfig
from .hamiltonian import (
    MpoHamiltonian,
    TfimParams,
    build_tfim_mpo,
    build_tfim_pauli_sum,
    dense_from_mpo,
    dense_from_pauli_sum,
)
from .pauli import decompose
from .tensor import hermitian_eigenvalues
from .utn import (
    RotationMode,
    UtnLayout,
    build_utn,
    contract_utn,
    similarity_transform,
    unitarity_report,
)
from .vqe import Problem, dense_energy, energy, evaluate, random_params

SPECTRUM_TOL = 1e-9
ORACLE_TOL = 1e-12
ENERGY_TOL = 1e-10
GRADIENT_TOL = 1e-5

MpoBuilder = Callable[[TfimParams], MpoHamiltonian]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def corrupted_mpo(p: TfimParams) -> MpoHamiltonian:
    """Negative control: the -Z entry of the first tensor is scaled by 1.1."""
    m = build_tfim_mpo(p)
    m.tensors[0] = m.tensors[0].copy()
    m.tensors[0][1] *= 1.1
    return m


def _spectrum_diff(name: str, a: np.ndarray, b: np.ndarray, label_a: str, label_b: str) -> CheckResult:
    ea, eb = hermitian_eigenvalues(a), hermitian_eigenvalues(b)
    diff = np.abs(ea - eb)
    worst = int(np.argmax(diff))
    if diff[worst] < SPECTRUM_TOL:
        return CheckResult(name, True, f"max |dlambda| = {diff[worst]:.2e}")
    return CheckResult(
        name, False,
        f"eigenvalue mismatch: max |dlambda| = {diff[worst]:.3e} at index {worst} "
        f"({label_a} {ea[worst]:.12f} vs {label_b} {eb[worst]:.12f})",
    )


def _check_layout(cfg: RunConfig) -> UtnLayout:
    layers = max(max(cfg.tn_layer_list), 3)
    return UtnLayout(cfg.n_sites if cfg.n_sites % 2 == 0 else cfg.n_sites + 1, layers)


def check_unitarity(cfg: RunConfig, rng: np.random.Generator, draws: int) -> list[CheckResult]:
    layout = _check_layout(cfg)
    out = []
    for mode in RotationMode:
        worst_dev, worst_trace, worst_net = 0.0, 0.0, 0.0
        ok = True
        for _ in range(draws):
            theta = rng.uniform(0, 2 * np.pi, layout.n_params(mode))
            u = build_utn(layout, mode, theta)
            rep = unitarity_report(u)
            ok &= rep.passed
            worst_dev = max(worst_dev, rep.max_deviation)
            worst_trace = max(worst_trace, abs(rep.normalized_trace - 1))
            net = contract_utn(layout, mode, theta).reshape(u.shape)
            worst_net = max(worst_net, float(np.max(np.abs(net - u))))
        ok &= worst_net < ORACLE_TOL
        out.append(CheckResult(
            f"unitarity [{mode.value}]", bool(ok),
            f"{draws} draws, max |U^dag U - I| = {worst_dev:.2e}, |Tr/dim - 1| = {worst_trace:.2e}, "
            f"network vs dense U = {worst_net:.2e}",
        ))
    return out


def check_mpo_vs_tn(h_mpo: np.ndarray, cfg: RunConfig, rng, draws: int) -> list[CheckResult]:
    n = cfg.n_sites
    if n % 2:
        return [CheckResult("H_MPO vs H_TN spectrum", True, "skipped: odd chain has no brick wall")]
    layout = UtnLayout(n, max(max(cfg.tn_layer_list), 3))
    out = []
    for mode in RotationMode:
        worst = None
        for _ in range(draws):
            theta = rng.uniform(0, 2 * np.pi, layout.n_params(mode))
            h_tn = similarity_transform(h_mpo, build_utn(layout, mode, theta))
            res = _spectrum_diff(f"H_MPO vs H_TN spectrum [{mode.value}]", h_mpo, h_tn, "H_MPO", "H_TN")
            if worst is None or not res.passed:
                worst = res
            if not res.passed:
                break
        out.append(worst if not worst.passed else
                   CheckResult(worst.name, True, f"{draws} draws, {worst.detail}"))
    zero = similarity_transform(h_mpo, build_utn(layout, RotationMode.ONE_PARAM, np.zeros(layout.n_params(RotationMode.ONE_PARAM))))
    exact = bool(np.array_equal(zero, h_mpo))
    out.append(CheckResult("theta = 0 gives H_TN = H_MPO", exact,
                           "exact equality" if exact else f"max entry diff {np.max(np.abs(zero - h_mpo)):.3e}"))
    return out


def check_mpo_vs_pauli(p: TfimParams, h_mpo: np.ndarray) -> list[CheckResult]:
    ps = build_tfim_pauli_sum(p)
    h_ps = dense_from_pauli_sum(ps)
    out = [_spectrum_diff("H_MPO vs Pauli-sum spectrum", h_mpo, h_ps, "H_MPO", "Pauli-sum")]
    coeffs = decompose(h_mpo).coeffs
    expected = {w: complex(c) for w, c in ps.terms.items()}
    missing = sorted(set(expected) - set(coeffs))
    extra = sorted(set(coeffs) - set(expected))
    wrong = sorted(w for w in set(expected) & set(coeffs) if abs(coeffs[w] - expected[w]) > ORACLE_TOL)
    ok = not (missing or extra or wrong)
    detail = f"{len(coeffs)} nonzero strings match" if ok else (
        f"coefficient mismatch: missing {missing[:4]}, extra {extra[:4]}, "
        f"wrong {[(w, coeffs[w].real, expected[w].real) for w in wrong[:4]]}")
    out.append(CheckResult("Pauli coefficients of H_MPO", ok, detail))
    return out


def check_dense_oracle(builder: MpoBuilder) -> CheckResult:
    worst = 0.0
    for n in (2, 3, 4, 5):
        for g in (0.0, 0.5, 1.0, 2.0):
            for j in (1.0, -0.7):
                p = TfimParams(n, j, g)
                d = np.max(np.abs(dense_from_mpo(builder(p)) - dense_from_pauli_sum(build_tfim_pauli_sum(p))))
                worst = max(worst, float(d))
    return CheckResult("oracle: dense MPO = dense Pauli sum (32 params)", worst < ORACLE_TOL,
                       f"max entry diff {worst:.2e}")


def check_eigensolver(h: np.ndarray) -> CheckResult:
    cases = [
        (np.diag([1.0, -1.0]), [-1.0, 1.0]),
        (np.array([[2.0, 1.0], [1.0, 2.0]]), [1.0, 3.0]),
        (dense_from_pauli_sum(build_tfim_pauli_sum(TfimParams(2, 1.0, 1.0))), [-np.sqrt(5), -1, 1, np.sqrt(5)]),
    ]
    worst = max(float(np.max(np.abs(hermitian_eigenvalues(m, "jacobi") - np.array(ref)))) for m, ref in cases)
    lapack = float(np.max(np.abs(hermitian_eigenvalues(h, "jacobi") - hermitian_eigenvalues(h, "lapack"))))
    ok = worst < ORACLE_TOL and lapack < SPECTRUM_TOL
    return CheckResult("oracle: Jacobi eigensolver", ok,
                       f"closed forms {worst:.2e}, LAPACK on H {lapack:.2e}")


def check_energy_paths(h: np.ndarray, cfg: RunConfig, draws: int) -> list[CheckResult]:
    from .circuit import CircuitConfig

    if cfg.n_sites % 2:
        layout = None
    else:
        layout = UtnLayout(cfg.n_sites, max(max(cfg.tn_layer_list), 1))
    problem = Problem(h, CircuitConfig(cfg.n_sites, cfg.entangler_ranges), 2, layout,
                      RotationMode.THREE_PARAM)
    worst_e, worst_g = 0.0, 0.0
    for seed in range(draws):
        jp = random_params(problem, 1000 + seed)
        worst_e = max(worst_e, abs(energy(jp.theta, jp.phi, problem) - dense_energy(jp.theta, jp.phi, problem)))
    for seed in range(2):
        jp = random_params(problem, 2000 + seed)
        _, g_theta, g_phi = evaluate(jp.theta, jp.phi, problem, cfg.theta_fd_step)
        hstep = 1e-5
        flat = np.concatenate([jp.theta, jp.phi.reshape(-1)])
        ref = np.empty_like(flat)

        def f(x):
            return dense_energy(x[:problem.n_theta], x[problem.n_theta:].reshape(problem.phi_shape), problem)

        for k in range(flat.size):
            step = np.zeros_like(flat)
            step[k] = hstep
            ref[k] = (f(flat + step) - f(flat - step)) / (2 * hstep)
        got = np.concatenate([g_theta, g_phi.reshape(-1)])
        worst_g = max(worst_g, float(np.max(np.abs(got - ref))))
    return [
        CheckResult("oracle: Pauli-sum energy = dense energy", worst_e < ENERGY_TOL,
                    f"{draws} draws, max diff {worst_e:.2e}"),
        CheckResult("oracle: joint gradient vs central differences", worst_g < GRADIENT_TOL,
                    f"2 draws over {flat.size} parameters, max diff {worst_g:.2e}"),
    ]


def run_checks(cfg: RunConfig, corrupt_mpo: bool = False, seed: int = 0, draws: int = 20) -> list[CheckResult]:
    builder: MpoBuilder = corrupted_mpo if corrupt_mpo else build_tfim_mpo
    p = cfg.tfim()
    rng = np.random.default_rng(seed)
    h_mpo = dense_from_mpo(builder(p))
    results = []
    results += check_unitarity(cfg, rng, draws)
    results += check_mpo_vs_tn(h_mpo, cfg, rng, draws)
    results += check_mpo_vs_pauli(p, h_mpo)
    results.append(check_dense_oracle(builder))
    results.append(check_eigensolver(h_mpo))
    results += check_energy_paths(h_mpo, cfg, min(draws, 10))
    return results
