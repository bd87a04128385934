"""Mini-batch training loop with SGD/Adam and convergence bookkeeping."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig
from .models import PilotModel


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainingConfig:
    mode: str = "unsupervised"          # supervised | unsupervised
    learning_rate: float | None = None  # default depends on mode
    epochs: int = 20
    batch_size: int = 16
    optimizer: str = "sgd"              # sgd | adam
    entropy_weight: float = 0.0         # sharpening penalty (unsupervised)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("supervised", "unsupervised"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.entropy_weight < 0:
            raise ValueError("entropy_weight must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate is None:
            self.learning_rate = 0.05 if self.mode == "supervised" else 0.01
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class TrainingHistory:
    initial_loss: float
    losses: list = field(default_factory=list)        # full-set loss per epoch
    proportions: list = field(default_factory=list)   # (L0 - L_e) / |L0|
    epoch_seconds: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"initial_loss": self.initial_loss, "losses": self.losses,
                "proportions": self.proportions, "epoch_seconds": self.epoch_seconds}


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g**2
            mhat = self.m[k] / (1 - self.b1**self.t)
            vhat = self.v[k] / (1 - self.b2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def dataset_loss(model: PilotModel, betas, labels, mode: str,
                 config: SystemConfig, entropy_weight: float = 0.0) -> float:
    from .models import PROB_CLAMP, supervised_loss
    from .throughput import soft_sum_rate
    total = 0.0
    for i, beta in enumerate(betas):
        q = model.forward(beta)
        if mode == "supervised":
            total += supervised_loss(q, np.asarray(labels[i]))
        else:
            total += soft_sum_rate(beta, q, config)[1]
            if entropy_weight:
                logq = np.log(np.maximum(q, PROB_CLAMP))
                total += entropy_weight * float(-(q * logq).sum())
    return total / len(betas)


def train(model: PilotModel, betas, labels, tconfig: TrainingConfig,
          config: SystemConfig) -> TrainingHistory:
    """Deterministic mini-batch gradient descent on one model.

    betas: (N, M, K) fading realizations (linear scale); labels: (N, K) pilot
    indices, required for supervised mode. Raises TrainingDiverged on a
    non-finite loss, leaving the last finite parameters in place.
    """
    betas = np.asarray(betas, dtype=float)
    n = betas.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(tconfig.seed)
    opt = (_Adam(model.params(), tconfig.learning_rate)
           if tconfig.optimizer == "adam" else None)

    ew = tconfig.entropy_weight if tconfig.mode == "unsupervised" else 0.0
    l0 = dataset_loss(model, betas, labels, tconfig.mode, config, ew)
    history = TrainingHistory(initial_loss=l0)
    backup = {k: v.copy() for k, v in model.params().items()}
    for _ in range(tconfig.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        for start in range(0, n, tconfig.batch_size):
            idx = order[start:start + tconfig.batch_size]
            batch_labels = None if labels is None else [labels[i] for i in idx]
            loss, grads = model.loss_and_grad(betas[idx], batch_labels,
                                              tconfig.mode, config,
                                              entropy_weight=ew)
            if not np.isfinite(loss):
                for k, v in model.params().items():
                    np.copyto(v, backup[k])
                raise TrainingDiverged(f"non-finite loss {loss}")
            backup = {k: v.copy() for k, v in model.params().items()}
            if opt is not None:
                opt.step(model.params(), grads)
            else:
                for k, p in model.params().items():
                    p -= tconfig.learning_rate * grads[k]
        epoch_loss = dataset_loss(model, betas, labels, tconfig.mode, config, ew)
        history.losses.append(epoch_loss)
        denom = abs(l0) if l0 != 0 else 1.0
        history.proportions.append((l0 - epoch_loss) / denom)
        history.epoch_seconds.append(time.perf_counter() - t0)
    return history
