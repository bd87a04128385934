"""Hybrid quantum-classical model and the classical baselines.

All models map a normalized large-scale-fading vector to a row-stochastic
(K, tau_p) pilot-probability matrix. Classical layers use exact hand-written
backpropagation; the quantum layer uses occurrence-accumulated parameter-shift
Jacobians.
"""
from __future__ import annotations

import json

import numpy as np

from .config import SystemConfig
from .qsim import (CircuitLayout, N_PQC_PARAMS, angle_embedding, embedding_jacobian,
                   qcnn_forward, qcnn_jacobian, ring_layout)
from .throughput import soft_sum_rate_grad

PROB_CLAMP = 1e-12
CHECKPOINT_VERSION = 1


def normalize_input(beta: np.ndarray, mean: float, std: float) -> np.ndarray:
    """Flatten beta to dB and standardize with dataset statistics."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("beta entries must be positive")
    return (10.0 * np.log10(beta).reshape(-1) - mean) / std


def row_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def hard_decision(q: np.ndarray) -> np.ndarray:
    """Argmax pilot per user; ties resolve to the lowest pilot index."""
    return np.argmax(q, axis=1).astype(np.int64)


def supervised_loss(q: np.ndarray, label: np.ndarray) -> float:
    """Cross-entropy against one-hot labels, with probabilities clamped."""
    picked = np.maximum(q[np.arange(q.shape[0]), label], PROB_CLAMP)
    return float(-np.log(picked).sum())


def _supervised_loss_grad(q, label):
    picked = np.maximum(q[np.arange(q.shape[0]), label], PROB_CLAMP)
    dq = np.zeros_like(q)
    dq[np.arange(q.shape[0]), label] = -1.0 / picked
    return float(-np.log(picked).sum()), dq


def _softmax_backward(q: np.ndarray, dq: np.ndarray) -> np.ndarray:
    return q * (dq - (dq * q).sum(axis=1, keepdims=True))


class PilotModel:
    """Common per-sample loss/gradient machinery; subclasses supply the net."""

    M: int
    K: int
    tau_p: int
    input_mean: float
    input_std: float

    def params(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def _forward(self, x: np.ndarray):
        """Return (flat logits of length K*tau_p, cache)."""
        raise NotImplementedError

    def _backward(self, dlogits: np.ndarray, cache) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def forward(self, beta: np.ndarray) -> np.ndarray:
        """Pilot-probability matrix (K, tau_p) for one beta realization."""
        x = normalize_input(beta, self.input_mean, self.input_std)
        logits, _ = self._forward(x)
        return row_softmax(logits.reshape(self.K, self.tau_p))

    def predict(self, beta: np.ndarray) -> np.ndarray:
        return hard_decision(self.forward(beta))

    def loss_and_grad(self, betas: np.ndarray, labels, mode: str,
                      config: SystemConfig, entropy_weight: float = 0.0):
        """Batch-averaged loss and gradients.

        mode 'supervised' uses cross-entropy against `labels`; 'unsupervised'
        uses the negative soft sum-rate of each realization, optionally plus
        entropy_weight times the assignment entropy (a sharpening penalty:
        the soft objective alone is maximized by spread-out probabilities
        whose argmax decisions carry no information).
        """
        if mode not in ("supervised", "unsupervised"):
            raise ValueError(f"unknown training mode {mode!r}")
        if mode == "supervised" and labels is None:
            raise ValueError("supervised training needs labels")
        grads = {k: np.zeros_like(v) for k, v in self.params().items()}
        total = 0.0
        for i, beta in enumerate(betas):
            x = normalize_input(beta, self.input_mean, self.input_std)
            logits, cache = self._forward(x)
            q = row_softmax(logits.reshape(self.K, self.tau_p))
            if mode == "supervised":
                loss, dq = _supervised_loss_grad(q, np.asarray(labels[i]))
            else:
                loss, dq = soft_sum_rate_grad(beta, q, config)
                if entropy_weight:
                    logq = np.log(np.maximum(q, PROB_CLAMP))
                    loss += entropy_weight * float(-(q * logq).sum())
                    dq += entropy_weight * (-(logq + 1.0))
            dlogits = _softmax_backward(q, dq).reshape(-1)
            for k, g in self._backward(dlogits, cache).items():
                grads[k] += g
            total += loss
        b = len(betas)
        for k in grads:
            grads[k] /= b
        return total / b, grads


class HqcnnModel(PilotModel):
    """Affine pre-processing, angle embedding, shared-parameter QCNN, affine head.

    `per_layer=True` gives every conv layer its own 15 angles (the comparison
    variant); the default shares one 15-angle set across all layers.
    """

    def __init__(self, M: int, K: int, tau_p: int, n_qubits: int = 8,
                 stages: int | None = None, per_layer: bool = False, seed: int = 0,
                 input_mean: float = 0.0, input_std: float = 1.0,
                 layout: CircuitLayout | None = None):
        self.M, self.K, self.tau_p = M, K, tau_p
        if layout is None:
            if stages is None:
                stages = max(1, int(np.log2(n_qubits)) - 1)
            layout = ring_layout(n_qubits, stages)
        self.layout = layout
        self.n_qubits = layout.n0
        self.n_out = len(layout.measured)
        self.per_layer = per_layer
        self.input_mean, self.input_std = input_mean, input_std

        rng = np.random.default_rng(seed)
        d = M * K
        self.w0 = rng.normal(0.0, 1.0 / np.sqrt(d), size=(self.n_qubits, d))
        self.b0 = np.zeros(self.n_qubits)
        shape = (layout.n_layers, N_PQC_PARAMS) if per_layer else (N_PQC_PARAMS,)
        self.theta = rng.normal(0.0, 0.3, size=shape)
        self.w2 = rng.normal(0.0, 1.0 / np.sqrt(self.n_out),
                             size=(K * tau_p, self.n_out))
        self.b2 = np.zeros(K * tau_p)

    def params(self):
        return {"w0": self.w0, "b0": self.b0, "theta": self.theta,
                "w2": self.w2, "b2": self.b2}

    def _forward(self, x):
        h = self.w0 @ x + self.b0
        z1 = qcnn_forward(angle_embedding(h), self.layout, self.theta)
        logits = self.w2 @ z1 + self.b2
        return logits, (x, h, z1)

    def _backward(self, dlogits, cache):
        x, h, z1 = cache
        dw2 = np.outer(dlogits, z1)
        db2 = dlogits
        dz1 = self.w2.T @ dlogits
        jac_theta = qcnn_jacobian(angle_embedding(h), self.layout, self.theta)
        dtheta = np.tensordot(dz1, jac_theta, axes=(0, 0))
        dh = embedding_jacobian(h, self.layout, self.theta).T @ dz1
        return {"w0": np.outer(dh, x), "b0": dh, "theta": dtheta,
                "w2": dw2, "b2": db2}

    def forward_noisy(self, beta: np.ndarray, noise_p: float, zne: bool = False,
                      scales=(1, 2, 3)) -> np.ndarray:
        """Pilot probabilities under the depolarizing density-matrix pipeline.

        With zne=True each measured expectation is Richardson-extrapolated to
        zero noise from evaluations at `scales` times the base rate.
        """
        from .qsim import qcnn_forward_dm, zne_expectation
        x = normalize_input(beta, self.input_mean, self.input_std)
        h = self.w0 @ x + self.b0
        state = angle_embedding(h)
        if zne and noise_p > 0:
            per_scale = {s: qcnn_forward_dm(state, self.layout, self.theta,
                                            min(noise_p * s, 1.0))
                         for s in scales}
            z1 = np.array([zne_expectation(lambda s, i=i: per_scale[s][i], scales)
                           for i in range(self.n_out)])
        else:
            z1 = qcnn_forward_dm(state, self.layout, self.theta, noise_p)
        logits = self.w2 @ z1 + self.b2
        return row_softmax(logits.reshape(self.K, self.tau_p))


class MlpModel(PilotModel):
    """Two-hidden-layer perceptron of width n with tanh activations."""

    def __init__(self, M: int, K: int, tau_p: int, hidden: int = 8, seed: int = 0,
                 input_mean: float = 0.0, input_std: float = 1.0):
        self.M, self.K, self.tau_p = M, K, tau_p
        self.hidden = hidden
        self.input_mean, self.input_std = input_mean, input_std
        rng = np.random.default_rng(seed)
        d = M * K
        self.w1 = rng.normal(0.0, 1.0 / np.sqrt(d), size=(hidden, d))
        self.b1 = np.zeros(hidden)
        self.w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, hidden))
        self.b2 = np.zeros(hidden)
        self.w3 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(K * tau_p, hidden))
        self.b3 = np.zeros(K * tau_p)

    def params(self):
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2,
                "w3": self.w3, "b3": self.b3}

    def _forward(self, x):
        a1 = np.tanh(self.w1 @ x + self.b1)
        a2 = np.tanh(self.w2 @ a1 + self.b2)
        logits = self.w3 @ a2 + self.b3
        return logits, (x, a1, a2)

    def _backward(self, dlogits, cache):
        x, a1, a2 = cache
        dw3 = np.outer(dlogits, a2)
        da2 = (self.w3.T @ dlogits) * (1.0 - a2**2)
        dw2 = np.outer(da2, a1)
        da1 = (self.w2.T @ da2) * (1.0 - a1**2)
        dw1 = np.outer(da1, x)
        return {"w1": dw1, "b1": da1, "w2": dw2, "b2": da2,
                "w3": dw3, "b3": dlogits}


def _conv2d(x, w, b):
    """'same'-padded 3x3 correlation; x (Cin, H, W), w (Cout, Cin, 3, 3)."""
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    patches = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    return np.einsum("chwij,ocij->ohw", patches, w) + b[:, None, None], patches


def _conv2d_backward(patches, w, dy, in_shape):
    dw = np.einsum("chwij,ohw->ocij", patches, dy)
    db = dy.sum(axis=(1, 2))
    cin, H, W = in_shape
    dxp = np.zeros((cin, H + 2, W + 2))
    for i in range(3):
        for j in range(3):
            dxp[:, i:i + H, j:j + W] += np.einsum("oc,ohw->chw", w[:, :, i, j], dy)
    return dw, db, dxp[:, 1:H + 1, 1:W + 1]


class CnnModel(PilotModel):
    """Two 3x3 conv layers over the (M, K) fading image, then a dense head."""

    CHANNELS = {"light": (8, 16), "heavy": (32, 64)}

    def __init__(self, M: int, K: int, tau_p: int, variant: str = "light",
                 seed: int = 0, input_mean: float = 0.0, input_std: float = 1.0):
        if variant not in self.CHANNELS:
            raise ValueError(f"variant must be one of {sorted(self.CHANNELS)}")
        self.M, self.K, self.tau_p = M, K, tau_p
        self.variant = variant
        self.input_mean, self.input_std = input_mean, input_std
        c1, c2 = self.CHANNELS[variant]
        rng = np.random.default_rng(seed)
        self.k1 = rng.normal(0.0, 1.0 / 3.0, size=(c1, 1, 3, 3))
        self.cb1 = np.zeros(c1)
        self.k2 = rng.normal(0.0, 1.0 / np.sqrt(9 * c1), size=(c2, c1, 3, 3))
        self.cb2 = np.zeros(c2)
        d = c2 * M * K
        self.wd = rng.normal(0.0, 1.0 / np.sqrt(d), size=(K * tau_p, d))
        self.bd = np.zeros(K * tau_p)

    def params(self):
        return {"k1": self.k1, "cb1": self.cb1, "k2": self.k2, "cb2": self.cb2,
                "wd": self.wd, "bd": self.bd}

    def _forward(self, x):
        img = x.reshape(1, self.M, self.K)
        y1, p1 = _conv2d(img, self.k1, self.cb1)
        a1 = np.tanh(y1)
        y2, p2 = _conv2d(a1, self.k2, self.cb2)
        a2 = np.tanh(y2)
        logits = self.wd @ a2.reshape(-1) + self.bd
        return logits, (img, p1, a1, p2, a2)

    def _backward(self, dlogits, cache):
        img, p1, a1, p2, a2 = cache
        dwd = np.outer(dlogits, a2.reshape(-1))
        da2 = (self.wd.T @ dlogits).reshape(a2.shape) * (1.0 - a2**2)
        dk2, dcb2, da1 = _conv2d_backward(p2, self.k2, da2, a1.shape)
        da1 *= (1.0 - a1**2)
        dk1, dcb1, _ = _conv2d_backward(p1, self.k1, da1, img.shape)
        return {"k1": dk1, "cb1": dcb1, "k2": dk2, "cb2": dcb2,
                "wd": dwd, "bd": dlogits}


def count_parameters(model: PilotModel) -> int:
    """Exact count of trainable scalars."""
    return int(sum(v.size for v in model.params().values()))


def build_model(kind: str, config: SystemConfig, seed: int = 0,
                n_qubits: int = 8, stages: int | None = None,
                input_mean: float = 0.0, input_std: float = 1.0) -> PilotModel:
    M, K, tau_p = config.M, config.K, config.tau_p
    common = dict(seed=seed, input_mean=input_mean, input_std=input_std)
    if kind == "hqcnn":
        return HqcnnModel(M, K, tau_p, n_qubits=n_qubits, stages=stages, **common)
    if kind == "hqcnn-hur":
        return HqcnnModel(M, K, tau_p, n_qubits=n_qubits, stages=stages,
                          per_layer=True, **common)
    if kind == "mlp":
        return MlpModel(M, K, tau_p, hidden=n_qubits, **common)
    if kind in ("cnn-light", "cnn-heavy"):
        return CnnModel(M, K, tau_p, variant=kind.split("-")[1], **common)
    raise ValueError(f"unknown model kind {kind!r}")


MODEL_KINDS = ("hqcnn", "hqcnn-hur", "mlp", "cnn-light", "cnn-heavy")


def save_checkpoint(path, model: PilotModel, kind: str, config: SystemConfig,
                    extra: dict | None = None) -> None:
    """Self-describing checkpoint: parameter arrays plus a JSON meta record."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "M": model.M, "K": model.K, "tau_p": model.tau_p,
        "input_mean": model.input_mean, "input_std": model.input_std,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
    }
    if isinstance(model, HqcnnModel):
        meta["n_qubits"] = model.n_qubits
        meta["stages"] = model.layout.n_layers
        meta["per_layer"] = model.per_layer
    if isinstance(model, MlpModel):
        meta["hidden"] = model.hidden
    if extra:
        meta.update(extra)
    arrays = {k: v.astype("<f8") for k, v in model.params().items()}
    np.savez(path, meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(),
                                      dtype=np.uint8), **arrays)


def load_checkpoint(path) -> tuple[PilotModel, dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        config = SystemConfig.from_dict(meta["config"])
        model = build_model(meta["kind"], config,
                            n_qubits=meta.get("n_qubits", meta.get("hidden", 8)),
                            stages=meta.get("stages"),
                            input_mean=meta["input_mean"],
                            input_std=meta["input_std"])
        for k, v in model.params().items():
            np.copyto(v, data[k])
    return model, meta
