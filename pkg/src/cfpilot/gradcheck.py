"""Finite-difference validation of every gradient path."""
from __future__ import annotations

import numpy as np

from .config import SystemConfig
from .models import HqcnnModel, N_PQC_PARAMS
from .qsim import (_apply_unchecked, angle_embedding, expect_z, pqc15,
                   qcnn_forward, qcnn_jacobian, ring_layout)
from .scenario import generate_topology, lsf_matrix

REL_TOL = 1e-4
ABS_FLOOR = 1e-6
FD_STEP = 1e-6


def _max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = np.maximum(np.abs(numeric), ABS_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / scale))


def _fd_gradient(fn, theta, step=FD_STEP):
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        plus, minus = theta.copy(), theta.copy()
        plus.flat[i] += step
        minus.flat[i] -= step
        grad.flat[i] = (fn(plus) - fn(minus)) / (2 * step)
    return grad


def _corrupted_jacobian(state0, layout, theta):
    """The paper-as-printed variant with a plus between the shifted evaluations."""
    table = np.tile(theta, (layout.n_layers, 1))
    n = layout.n0
    gates = layout.conv_gates()
    jac = np.zeros((len(layout.measured), N_PQC_PARAMS))
    for g, (li, pair) in enumerate(gates):
        for i in range(N_PQC_PARAMS):
            vals = []
            for sign in (np.pi / 2, -np.pi / 2):
                t = table[li].copy()
                t[i] += sign
                s = state0
                for gg, (lj, pj) in enumerate(gates):
                    u = pqc15(t) if gg == g else pqc15(table[lj])
                    s = _apply_unchecked(s, u, pj, n)
                vals.append(np.array([expect_z(s, q) for q in layout.measured]))
            jac[:, i] += (vals[0] + vals[1]) / 2.0
    return jac


def check_circuit_gradient(seed: int, corrupt_sign: bool = False) -> float:
    """Shared-parameter 4-qubit circuit: parameter shift vs central differences."""
    rng = np.random.default_rng(seed)
    layout = ring_layout(4, 1)
    h = rng.uniform(-np.pi, np.pi, size=4)
    theta = rng.uniform(-np.pi, np.pi, size=N_PQC_PARAMS)
    weights = rng.normal(size=len(layout.measured))
    state0 = angle_embedding(h)

    jac = (_corrupted_jacobian(state0, layout, theta) if corrupt_sign
           else qcnn_jacobian(state0, layout, theta))
    analytic = weights @ jac
    numeric = _fd_gradient(
        lambda t: float(weights @ qcnn_forward(state0, layout, t)), theta)
    return _max_rel_err(analytic, numeric)


def check_model_gradient(seed: int, mode: str) -> float:
    """End-to-end gradient of the hybrid model at (M, K, tau_p, n) = (4, 3, 2, 4)."""
    config = SystemConfig(M=4, L=2, K=3, tau_p=2)
    rng = np.random.default_rng(seed)
    betas = []
    for i in range(2):
        topo = generate_topology(config, seed * 97 + i)
        betas.append(lsf_matrix(topo, config, seed * 97 + i + 50))
    betas = np.stack(betas)
    db = 10 * np.log10(betas)
    model = HqcnnModel(config.M, config.K, config.tau_p, n_qubits=4, seed=seed,
                       input_mean=float(db.mean()), input_std=float(db.std()))
    labels = [rng.integers(0, config.tau_p, size=config.K) for _ in range(2)]

    _, grads = model.loss_and_grad(betas, labels, mode, config)

    worst = 0.0
    for name, arr in model.params().items():
        def fn(vals, arr=arr):
            from .training import dataset_loss
            saved = arr.copy()
            np.copyto(arr, vals.reshape(arr.shape))
            loss = dataset_loss(model, betas, labels, mode, config)
            np.copyto(arr, saved)
            return loss
        numeric = _fd_gradient(fn, arr.reshape(-1)).reshape(arr.shape)
        worst = max(worst, _max_rel_err(grads[name], numeric))
    return worst


def run_gradcheck(seed: int = 0, corrupt_sign: bool = False) -> dict[str, float]:
    """Max relative finite-difference error per gradient group."""
    return {
        "circuit_parameter_shift": check_circuit_gradient(seed, corrupt_sign),
        "hqcnn_supervised": check_model_gradient(seed, "supervised"),
        "hqcnn_unsupervised": check_model_gradient(seed, "unsupervised"),
    }
