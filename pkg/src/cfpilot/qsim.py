"""Small-qubit quantum simulator for the shared-parameter QCNN.

Statevector and density-matrix pipelines, angle embedding, the 15-angle
two-qubit convolution unitary, pooling by discard, Pauli-Z expectations,
parameter-shift gradients, depolarizing noise, shot sampling, and zero-noise
extrapolation. Qubit 0 is the least significant bit of the amplitude index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

MAX_QUBITS = 12
N_PQC_PARAMS = 15

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def init_state(n: int) -> np.ndarray:
    """|0...0> on n qubits."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    state = np.zeros(2**n, dtype=complex)
    state[0] = 1.0
    return state


def _num_qubits(state: np.ndarray) -> int:
    n = int(np.log2(state.shape[0]))
    if 2**n != state.shape[0]:
        raise ValueError("state length is not a power of two")
    return n


def apply_unitary(state: np.ndarray, u: np.ndarray, targets: list[int]) -> np.ndarray:
    """Apply a 2^k x 2^k unitary to the target qubits (targets[0] = gate LSB)."""
    n = _num_qubits(state)
    k = len(targets)
    u = np.asarray(u, dtype=complex)
    if u.shape != (2**k, 2**k):
        raise ValueError("unitary dimension does not match target count")
    if not np.allclose(u @ u.conj().T, np.eye(2**k), atol=1e-10):
        raise ValueError("matrix is not unitary")
    if len(set(targets)) != k or any(not 0 <= q < n for q in targets):
        raise ValueError("invalid target qubits")
    return _apply_unchecked(state, u, targets, n)


def _apply_unchecked(state: np.ndarray, u: np.ndarray, targets, n: int) -> np.ndarray:
    # Axis of qubit q in the reshaped tensor is n-1-q (MSB first).
    axes = [n - 1 - q for q in reversed(targets)]
    psi = np.moveaxis(state.reshape([2] * n), axes, range(len(targets)))
    shape = psi.shape
    psi = (u @ psi.reshape(2 ** len(targets), -1)).reshape(shape)
    return np.moveaxis(psi, range(len(targets)), axes).reshape(-1)


def expect_z(state: np.ndarray, qubit: int) -> float:
    """<Z> on one qubit of a pure state."""
    n = _num_qubits(state)
    probs = np.abs(state) ** 2
    mask = (np.arange(2**n) >> qubit) & 1
    return float(probs[mask == 0].sum() - probs[mask == 1].sum())


def angle_embedding(h: np.ndarray) -> np.ndarray:
    """Product state with qubit i prepared as cos(h_i)|0> + sin(h_i)|1>."""
    h = np.asarray(h, dtype=float)
    factors = [np.array([np.cos(v), np.sin(v)], dtype=complex) for v in h]
    return reduce(np.kron, reversed(factors))


def _rot(axis: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i * theta/2 * P) for a Pauli word P with eigenvalues +-1."""
    dim = axis.shape[0]
    return np.cos(theta / 2) * np.eye(dim, dtype=complex) - 1j * np.sin(theta / 2) * axis


def _euler_zyz(angles) -> np.ndarray:
    a, b, c = angles
    return _rot(_Z, a) @ _rot(_Y, b) @ _rot(_Z, c)


def pqc15(theta: np.ndarray) -> np.ndarray:
    """15-parameter two-qubit convolution unitary.

    Layer order (applied left to right): per-qubit Z-Y-Z rotations
    (theta[0:3] on gate qubit 0, theta[3:6] on gate qubit 1), the commuting
    XX/YY/ZZ entangler (theta[12:15]), then a second pair of Z-Y-Z rotations
    (theta[6:9], theta[9:12]). Every parameter enters as exp(-i*theta/2*P).
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N_PQC_PARAMS,):
        raise ValueError(f"expected {N_PQC_PARAMS} angles, got shape {theta.shape}")
    first = np.kron(_euler_zyz(theta[3:6]), _euler_zyz(theta[0:3]))
    ent = (_rot(np.kron(_X, _X), theta[12])
           @ _rot(np.kron(_Y, _Y), theta[13])
           @ _rot(np.kron(_Z, _Z), theta[14]))
    second = np.kron(_euler_zyz(theta[9:12]), _euler_zyz(theta[6:9]))
    return second @ ent @ first


@dataclass
class CircuitLayout:
    """Conv/pool schedule: per layer the conv qubit pairs and the discarded half."""

    n0: int
    layers: list = field(default_factory=list)  # [(conv_pairs, pooled), ...]
    measured: list = field(default_factory=list)

    def __post_init__(self):
        active = set(range(self.n0))
        for conv_pairs, pooled in self.layers:
            for a, b in conv_pairs:
                if a not in active or b not in active or a == b:
                    raise ValueError(f"conv pair ({a}, {b}) uses inactive qubits")
            for q in pooled:
                if q not in active:
                    raise ValueError(f"pooled qubit {q} is not active")
            active -= set(pooled)
            if not active:
                raise ValueError("pooling removed every qubit")
        if not set(self.measured) <= active:
            raise ValueError("measured qubits must survive every pooling step")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def conv_gates(self) -> list[tuple[int, tuple[int, int]]]:
        """Flat list of (layer index, qubit pair) in application order."""
        return [(li, pair) for li, (pairs, _) in enumerate(self.layers) for pair in pairs]


def ring_layout(n0: int, stages: int) -> CircuitLayout:
    """Standard layout: conv on a ring of active qubits, pool away odd positions."""
    if n0 < 2 or n0 & (n0 - 1):
        raise ValueError("n0 must be a power of two >= 2")
    if not 1 <= stages <= int(np.log2(n0)):
        raise ValueError("stages must leave at least one measured qubit")
    active = list(range(n0))
    layers = []
    for _ in range(stages):
        m = len(active)
        edges = [(active[i], active[(i + 1) % m]) for i in range(m)]
        if m == 2:
            pairs = edges[:1]
        else:
            pairs = edges[0::2] + edges[1::2]
        pooled = active[1::2]
        layers.append((pairs, pooled))
        active = active[0::2]
    return CircuitLayout(n0=n0, layers=layers, measured=active)


def _theta_table(theta: np.ndarray, n_layers: int) -> np.ndarray:
    """Normalize shared (15,) or per-layer (n_layers, 15) parameters."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape == (N_PQC_PARAMS,):
        return np.tile(theta, (n_layers, 1))
    if theta.shape == (n_layers, N_PQC_PARAMS):
        return theta
    raise ValueError(f"theta shape {theta.shape} does not fit {n_layers} layers")


def qcnn_forward(state: np.ndarray, layout: CircuitLayout, theta: np.ndarray) -> np.ndarray:
    """<Z> on the measured qubits after all conv layers (pooling is deferred discard)."""
    table = _theta_table(theta, layout.n_layers)
    n = _num_qubits(state)
    if n != layout.n0:
        raise ValueError("state size does not match layout")
    for li, pair in layout.conv_gates():
        state = _apply_unchecked(state, pqc15(table[li]), pair, n)
    return np.array([expect_z(state, q) for q in layout.measured])


def qcnn_jacobian(state0: np.ndarray, layout: CircuitLayout,
                  theta: np.ndarray) -> np.ndarray:
    """Parameter-shift Jacobian d<Z_out>/d(theta).

    Shifts each gate occurrence separately and accumulates, so the result is
    exact for parameters shared across gates. Output shape is
    (n_out, 15) for shared theta and (n_out, n_layers, 15) per layer.
    """
    theta = np.asarray(theta, dtype=float)
    shared = theta.ndim == 1
    table = _theta_table(theta, layout.n_layers)
    n = _num_qubits(state0)
    gates = layout.conv_gates()
    n_out = len(layout.measured)

    # Prefix states (before each gate) under the unshifted parameters.
    prefixes = []
    state = state0
    for li, pair in gates:
        prefixes.append(state)
        state = _apply_unchecked(state, pqc15(table[li]), pair, n)

    jac = np.zeros((n_out, layout.n_layers, N_PQC_PARAMS))
    shift = np.pi / 2
    for g, (li, pair) in enumerate(gates):
        for i in range(N_PQC_PARAMS):
            vals = []
            for sign in (+shift, -shift):
                t = table[li].copy()
                t[i] += sign
                s = _apply_unchecked(prefixes[g], pqc15(t), pair, n)
                for lj, pj in gates[g + 1:]:
                    s = _apply_unchecked(s, pqc15(table[lj]), pj, n)
                vals.append(np.array([expect_z(s, q) for q in layout.measured]))
            jac[:, li, i] += (vals[0] - vals[1]) / 2.0
    return jac.sum(axis=1) if shared else jac


def embedding_jacobian(h: np.ndarray, layout: CircuitLayout,
                       theta: np.ndarray) -> np.ndarray:
    """(n_out, n) Jacobian of the measured expectations w.r.t. embedding angles.

    Each h_i enters as a Y rotation by 2*h_i, so the two-point shift rule in
    the rotation angle becomes f(h + pi/4) - f(h - pi/4) in h.
    """
    h = np.asarray(h, dtype=float)
    cols = []
    for i in range(h.shape[0]):
        plus, minus = h.copy(), h.copy()
        plus[i] += np.pi / 4
        minus[i] -= np.pi / 4
        cols.append((qcnn_forward(angle_embedding(plus), layout, theta)
                     - qcnn_forward(angle_embedding(minus), layout, theta)))
    return np.stack(cols, axis=1)


def parameter_shift_gradient(objective, theta: np.ndarray,
                             shift: float = np.pi / 2) -> np.ndarray:
    """Two-evaluation shift rule per parameter: (f(t+s) - f(t-s)) / (2 sin s).

    Exact when each parameter drives a single Pauli-word rotation; circuits
    that share a parameter across gates need the occurrence-accumulating
    qcnn_jacobian instead.
    """
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        plus, minus = theta.copy(), theta.copy()
        plus.flat[i] += shift
        minus.flat[i] -= shift
        grad.flat[i] = (objective(plus) - objective(minus)) / (2.0 * np.sin(shift))
    return grad


# ----------------------------------------------------------------------------
# Density-matrix pipeline and noise
# ----------------------------------------------------------------------------

def density_from_state(state: np.ndarray) -> np.ndarray:
    return np.outer(state, state.conj())


def apply_unitary_dm(rho: np.ndarray, u: np.ndarray, targets: list[int]) -> np.ndarray:
    """rho -> U rho U^dagger on the target qubits."""
    n = int(np.log2(rho.shape[0]))
    cols = np.stack([_apply_unchecked(rho[:, j], u, targets, n)
                     for j in range(rho.shape[1])], axis=1)
    rows = np.stack([_apply_unchecked(cols[i, :].conj(), u, targets, n).conj()
                     for i in range(cols.shape[0])], axis=0)
    return rows


def depolarize(rho: np.ndarray, p: float) -> np.ndarray:
    """Global depolarizing channel: (1-p) rho + p I/2^n."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing rate must be in [0, 1], got {p}")
    dim = rho.shape[0]
    return (1.0 - p) * rho + p * np.eye(dim, dtype=complex) / dim


def expect_z_dm(rho: np.ndarray, qubit: int) -> float:
    n = int(np.log2(rho.shape[0]))
    signs = 1.0 - 2.0 * ((np.arange(2**n) >> qubit) & 1)
    return float(np.real(np.diag(rho) @ signs))


def qcnn_forward_dm(state0: np.ndarray, layout: CircuitLayout, theta: np.ndarray,
                    noise_p: float = 0.0) -> np.ndarray:
    """Density-matrix QCNN with global depolarizing after each conv gate and pool."""
    table = _theta_table(theta, layout.n_layers)
    rho = density_from_state(state0)
    for li, (pairs, _pooled) in enumerate(layout.layers):
        for pair in pairs:
            rho = apply_unitary_dm(rho, pqc15(table[li]), pair)
            if noise_p > 0:
                rho = depolarize(rho, noise_p)
        if noise_p > 0:
            rho = depolarize(rho, noise_p)  # pooling step
    return np.array([expect_z_dm(rho, q) for q in layout.measured])


def zne_expectation(noisy_fn, scales=(1, 2, 3)) -> float:
    """Richardson extrapolation of noisy_fn(scale) to zero noise."""
    scales = list(scales)
    if len(scales) < 2:
        raise ValueError("zero-noise extrapolation needs at least 2 scales")
    ys = [noisy_fn(s) for s in scales]
    total = 0.0
    for i, (xi, yi) in enumerate(zip(scales, ys)):
        w = 1.0
        for j, xj in enumerate(scales):
            if j != i:
                w *= (0.0 - xj) / (xi - xj)
        total += w * yi
    return float(total)


def sample_shots(state: np.ndarray, qubit: int, shots: int, seed: int) -> float:
    """Empirical <Z> from `shots` Born-rule samples of one qubit."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = _num_qubits(state)
    probs = np.abs(state) ** 2
    mask = (np.arange(2**n) >> qubit) & 1
    p1 = float(probs[mask == 1].sum())
    rng = np.random.default_rng(seed)
    ones = rng.random(shots) < p1
    return float(1.0 - 2.0 * ones.mean())
