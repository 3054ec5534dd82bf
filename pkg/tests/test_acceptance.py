"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line, printed in the "acceptance criteria"
section of the pytest summary. The full convergence sweep (criterion 6) runs
the default 640-run grid and takes several minutes.
"""

import itertools
import time

import numpy as np
import pytest

from conftest import random_hermitian
from tnvqe import circuit
from tnvqe.cli import main
from tnvqe.hamiltonian import TfimParams, build_tfim_mpo, build_tfim_pauli_sum, dense_from_mpo, dense_from_pauli_sum
from tnvqe.pauli import coefficient_vector, decompose, enumerate_strings, frobenius_weight, matrix_from_vector, reconstruct
from tnvqe.results import load_traces
from tnvqe.tensor import hermitian_eigenvalues
from tnvqe.utn import RotationMode, UtnLayout, build_utn, similarity_transform, unitarity_report
from tnvqe.vqe import (
    OptimizerConfig,
    Problem,
    SweepCell,
    dense_energy,
    energy,
    gradient_variance,
    joint_gradient,
    optimize,
    random_params,
    run_sweep,
    tfim_problem,
)

TF = TfimParams(4, 1.0, 1.0)
SWEEP_BUDGET_S = 600.0
# learning rate used for criterion 6(b) when the default does not reach 1e-6
FALLBACK_LR = 0.21
# reported (not used for the verdict) when 6(a) misses at the default
PLAIN_VQE_PROBE_LR = 0.16


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_c1_hamiltonian_oracle(criterion):
    def work():
        worst = 0.0
        for n, g, j in itertools.product((2, 3, 4, 5), (0.0, 0.5, 1.0, 2.0), (1.0, -0.7)):
            p = TfimParams(n, j, g)
            d = np.max(np.abs(dense_from_mpo(build_tfim_mpo(p)) - dense_from_pauli_sum(build_tfim_pauli_sum(p))))
            worst = max(worst, float(d))
        return worst

    worst, dt = _timed(work)
    ok = worst < 1e-12 and dt < 1.0
    criterion("C1 MPO = Pauli sum (32 params)", ok, f"max entry error {worst:.2e} (< 1e-12), {dt:.2f} s (< 1 s)")
    assert ok


def test_c2_pauli_round_trip(criterion):
    rng = np.random.default_rng(20)

    def work():
        rt, parseval = 0.0, 0.0
        for _ in range(20):
            h = random_hermitian(rng, 16)
            d = decompose(h)
            rt = max(rt, float(np.max(np.abs(reconstruct(d) - h))))
            parseval = max(parseval, abs(frobenius_weight(d) - np.linalg.norm(h) ** 2))
        return rt, parseval

    (rt, parseval), dt = _timed(work)
    ok = rt < 1e-10 and parseval < 1e-9 and dt < 1.0
    criterion("C2 Pauli round trip (20 x 16x16)", ok,
              f"max entry error {rt:.2e} (< 1e-10), Parseval {parseval:.2e} (< 1e-9), {dt:.2f} s (< 1 s)")
    assert ok


def test_c3_unitarity_and_spectrum(criterion):
    rng = np.random.default_rng(30)
    layout = UtnLayout(4, 3)
    h = dense_from_mpo(build_tfim_mpo(TF))
    ref = hermitian_eigenvalues(h)

    def work():
        dev, spec = 0.0, 0.0
        for mode in RotationMode:
            for _ in range(100):
                u = build_utn(layout, mode, rng.uniform(0, 2 * np.pi, layout.n_params(mode)))
                dev = max(dev, unitarity_report(u).max_deviation)
                spec = max(spec, float(np.max(np.abs(hermitian_eigenvalues(similarity_transform(h, u)) - ref))))
        return dev, spec

    (dev, spec), dt = _timed(work)
    ok = dev < 1e-10 and spec < 1e-9 and dt < 10.0
    criterion("C3 unitarity + spectrum (100 theta x 2 modes)", ok,
              f"max |U^dag U - I| {dev:.2e} (< 1e-10), eigenvalue diff {spec:.2e} (< 1e-9), {dt:.2f} s (< 10 s)")
    assert ok


def test_c4_energy_paths(criterion):
    problems = [tfim_problem(TF, c, t, m) for c, t, m in
                itertools.product((1, 4), (0, 3), RotationMode)]

    def work():
        worst = 0.0
        for k in range(50):
            p = problems[k % len(problems)]
            jp = random_params(p, 400 + k)
            worst = max(worst, abs(energy(jp.theta, jp.phi, p) - dense_energy(jp.theta, jp.phi, p)))
        return worst

    worst, dt = _timed(work)
    ok = worst < 1e-10 and dt < 10.0
    criterion("C4 Pauli vs dense energy (50 points)", ok, f"max diff {worst:.2e} (< 1e-10), {dt:.2f} s (< 10 s)")
    assert ok


def _full_fd(p, theta, phi, h=1e-5):
    flat = np.concatenate([theta, phi.reshape(-1)])

    def f(x):
        return dense_energy(x[:p.n_theta], x[p.n_theta:].reshape(p.phi_shape), p)

    out = np.empty_like(flat)
    for k in range(flat.size):
        s = np.zeros_like(flat)
        s[k] = h
        out[k] = (f(flat + s) - f(flat - s)) / (2 * h)
    return out


def test_c5_gradients(criterion):
    problems = [tfim_problem(TF, 3, 3, RotationMode.THREE_PARAM), tfim_problem(TF, 2, 2, RotationMode.ONE_PARAM)]

    def work():
        worst = 0.0
        for k in range(20):
            p = problems[k % 2]
            jp = random_params(p, 500 + k)
            g_theta, g_phi = joint_gradient(jp.theta, jp.phi, p)
            got = np.concatenate([g_theta, g_phi.reshape(-1)])
            worst = max(worst, float(np.max(np.abs(got - _full_fd(p, jp.theta, jp.phi)))))
        return worst

    worst, dt = _timed(work)
    ok = worst < 1e-5 and dt < 30.0
    criterion("C5 joint gradient vs central differences (20 points)", ok,
              f"max diff {worst:.2e} (< 1e-5), {dt:.2f} s (< 30 s)")
    assert ok


@pytest.fixture(scope="module")
def full_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    code, dt = _timed(lambda: main(["sweep", "--out", str(out)]))
    assert code == 0
    return load_traces(out / "sweep.csv"), dt


def _best(traces, pred):
    errs = [t.final.relative_error for t in traces if pred(t.key)]
    return min(errs), len(errs)


def test_c6_sweep_runtime(full_sweep, criterion):
    traces, dt = full_sweep
    ok = len(traces) == 640 and dt < SWEEP_BUDGET_S
    criterion("C6 full sweep runtime", ok, f"{len(traces)} runs in {dt:.0f} s (< {SWEEP_BUDGET_S:.0f} s)")
    assert ok


def test_c6a_plain_vqe_converges(full_sweep, criterion):
    traces, _ = full_sweep
    best, n = _best(traces, lambda k: k[0] == 4 and k[1] == 0)
    ok = best < 1e-4
    detail = f"default lr 0.1: best final relative error {best:.3e} over {n} runs"
    if not ok:
        res = run_sweep([SweepCell(4, 0, RotationMode.ONE_PARAM)], range(20), TF,
                        OptimizerConfig(learning_rate=PLAIN_VQE_PROBE_LR))
        probe = min(r.final.relative_error for r in res.values())
        detail += f" (for reference, lr {PLAIN_VQE_PROBE_LR}: {probe:.3e})"
    criterion("C6a circuit 4, TN 0 reaches < 1e-4", ok, detail)
    assert ok


def test_c6b_tn_vqe_below_1e6(full_sweep, criterion):
    traces, _ = full_sweep
    best, n = _best(traces, lambda k: k[0] == 3 and k[1] > 0)
    if best < 1e-6:
        criterion("C6b circuit 3 TN-VQE reaches < 1e-6", True, f"default lr: best {best:.3e} over {n} runs")
        return
    cells = [SweepCell(3, t, m) for t in (1, 2, 3) for m in RotationMode]
    res = run_sweep(cells, range(20), TF, OptimizerConfig(learning_rate=FALLBACK_LR))
    alt = min(r.final.relative_error for r in res.values())
    ok = alt < 1e-6
    criterion("C6b circuit 3 TN-VQE reaches < 1e-6", ok,
              f"default lr 0.1: best {best:.3e}; documented lr {FALLBACK_LR}: best {alt:.3e} over {len(res)} runs")
    assert ok


def test_c7_single_qubit_variance(criterion):
    p = Problem(np.diag([1.0, -1.0]), circuit.CircuitConfig(1), 1)
    rep, dt = _timed(lambda: gradient_variance(p, 200, seed=0))
    var_b = float(rep.phi[0, 0, 1])
    ok = abs(var_b - 0.5) <= 0.07 and dt < 1.0
    criterion("C7 single-qubit variance", ok, f"Var[dE/db] = {var_b:.4f} (0.5 +/- 0.07), {dt:.2f} s (< 1 s)")
    assert ok


def test_c8_determinism(tmp_path, criterion):
    small = ["--seeds", "2", "--max-iterations", "5"]
    cell = ["--circuit-layers", "2", "--tn-layers", "2", "--mode", "ThreeParam"]
    commands = {
        "run": (["run", *cell, *small], ["run.csv", "run_summary.json"]),
        "sweep": (["sweep", "--seeds", "1", "--max-iterations", "3"], ["sweep.csv"]),
        "variance": (["variance", *cell, "--seeds", "1"], ["variance.csv"]),
    }
    same = {}
    for name, (argv, files) in commands.items():
        outs = []
        for rep, workers in (("a", "1"), ("b", "2")):
            d = tmp_path / name / rep
            assert main([*argv, "--out", str(d), "--workers", workers]) == 0
            outs.append([(d / f).read_bytes() for f in files])
        same[name] = outs[0] == outs[1]
    for rep in "ab":
        assert main(["report", str(tmp_path / "sweep" / "a" / "sweep.csv"), "--svg",
                     "--out", str(tmp_path / "report" / rep)]) == 0
    same["report svg"] = ((tmp_path / "report/a/relative_error.svg").read_bytes()
                          == (tmp_path / "report/b/relative_error.svg").read_bytes())
    ok = all(same.values())
    criterion("C8 byte-identical repeats", ok, ", ".join(f"{k} {'identical' if v else 'DIFFER'}" for k, v in same.items()))
    assert ok


def _plain_vqe_trace(h, phi, lr, iterations, cfg):
    """Gradient descent on <psi(phi)|H|psi(phi)> alone; no network anywhere."""
    words = enumerate_strings(cfg.n_qubits)
    coeffs = coefficient_vector(h)
    obs = matrix_from_vector(coeffs)
    rows = []
    for _ in range(iterations):
        state = circuit.run_ansatz(phi, cfg)
        expect = circuit.pauli_expectations(state[None], words)[0]
        e = float(np.real(expect @ coeffs))
        grad = circuit.param_shift_grad(phi, cfg, obs)
        rows.append((e, float(np.max(np.abs(grad)))))
        phi = phi - lr * grad
    return rows


def test_c9_reduction_to_plain_vqe(monkeypatch, criterion):
    import tnvqe.utn as utn

    cfg = OptimizerConfig(max_iterations=200)
    results = []
    for c in (1, 2, 4):
        for mode in RotationMode:
            p = tfim_problem(TF, c, 0, mode)
            init = random_params(p, 11)
            rec = optimize(init, cfg, p)
            calls = []
            monkeypatch.setattr(utn, "build_utn_batch", lambda *a: calls.append(a))
            plain = _plain_vqe_trace(p.hamiltonian, init.phi.copy(), cfg.learning_rate, len(rec.rows), p.circuit)
            monkeypatch.undo()
            assert not calls
            got = [(r.energy, r.grad_inf_norm) for r in rec.rows]
            results.append(got == plain)
    ok = all(results)
    criterion("C9 TN 0 trace == plain VQE trace", ok,
              f"{sum(results)}/{len(results)} cells bit-identical over all iterations")
    assert ok
