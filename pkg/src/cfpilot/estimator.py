"""scikit-learn style estimators wrapping the learned pilot assigners."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .config import SystemConfig
from .models import build_model, count_parameters
from .throughput import sum_rate
from .training import TrainingConfig, train


def _check_betas(X, config: SystemConfig) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != (config.M, config.K):
        raise ValueError(
            f"X must be (n_samples, {config.M}, {config.K}) fading matrices")
    if np.any(X <= 0) or not np.all(np.isfinite(X)):
        raise ValueError("fading coefficients must be positive and finite")
    return X


class LearnedPilotAssigner(BaseEstimator):
    """Trains a pilot-probability model on fading realizations.

    X is an (n_samples, M, K) stack of large-scale fading matrices in linear
    scale; y (supervised mode only) is an (n_samples, K) matrix of pilot
    indices. predict returns hard pilot assignments.
    """

    def __init__(self, config: SystemConfig | None = None, kind: str = "hqcnn",
                 mode: str = "unsupervised", n_qubits: int = 8,
                 stages: int | None = None, learning_rate: float | None = None,
                 epochs: int = 20, batch_size: int = 16, optimizer: str = "sgd",
                 entropy_weight: float = 0.0, seed: int = 0):
        self.config = config
        self.kind = kind
        self.mode = mode
        self.n_qubits = n_qubits
        self.stages = stages
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.entropy_weight = entropy_weight
        self.seed = seed

    def fit(self, X, y=None):
        if self.config is None:
            raise ValueError("a SystemConfig is required")
        X = _check_betas(X, self.config)
        db = 10.0 * np.log10(X)
        mean, std = float(db.mean()), float(db.std())
        if std == 0.0:
            std = 1.0
        self.model_ = build_model(self.kind, self.config, seed=self.seed,
                                  n_qubits=self.n_qubits, stages=self.stages,
                                  input_mean=mean, input_std=std)
        tconf = TrainingConfig(mode=self.mode, learning_rate=self.learning_rate,
                               epochs=self.epochs, batch_size=self.batch_size,
                               optimizer=self.optimizer,
                               entropy_weight=self.entropy_weight,
                               seed=self.seed)
        labels = None
        if self.mode == "supervised":
            if y is None:
                raise ValueError("supervised mode needs pilot labels y")
            labels = [np.asarray(row, dtype=np.int64) for row in y]
        self.history_ = train(self.model_, X, labels, tconf, self.config)
        self.n_parameters_ = count_parameters(self.model_)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = _check_betas(X, self.config)
        return np.stack([self.model_.forward(beta) for beta in X])

    def predict(self, X) -> np.ndarray:
        X = _check_betas(X, self.config)
        return np.stack([self.model_.predict(beta) for beta in X])

    def score(self, X, y=None) -> float:
        """Mean achieved sum-rate (Mbps) of the hard decisions over X."""
        X = _check_betas(X, self.config)
        rates = [sum_rate(beta, self.model_.predict(beta), self.config).sum_mbps
                 for beta in X]
        return float(np.mean(rates))
