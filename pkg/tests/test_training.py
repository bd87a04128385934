import numpy as np
import pytest

from cfpilot.config import SystemConfig
from cfpilot.dataset import generate_dataset, label_dataset
from cfpilot.models import build_model
from cfpilot.training import (TrainingConfig, TrainingDiverged, dataset_loss,
                              train)

CFG = SystemConfig()


def _dataset(n=24, seed=0):
    ds = generate_dataset(CFG, n, seed)
    label_dataset(ds)
    return ds


def _mlp(ds, seed=0):
    return build_model("mlp", CFG, seed=seed, n_qubits=8,
                       input_mean=ds.mean, input_std=ds.std)


def test_training_config_defaults_and_validation():
    sup = TrainingConfig(mode="supervised")
    unsup = TrainingConfig(mode="unsupervised")
    assert sup.learning_rate == 0.05 and unsup.learning_rate == 0.01
    for bad in (dict(mode="semi"), dict(optimizer="lbfgs"),
                dict(learning_rate=0.0), dict(epochs=0), dict(batch_size=0)):
        with pytest.raises(ValueError):
            TrainingConfig(**bad)


def test_supervised_training_reduces_loss():
    ds = _dataset()
    model = _mlp(ds)
    tconf = TrainingConfig(mode="supervised", epochs=5, batch_size=8, seed=0)
    hist = train(model, ds.beta_array(), ds.labels, tconf, CFG)
    assert len(hist.losses) == 5
    assert hist.losses[-1] < hist.initial_loss
    assert hist.proportions[-1] > 0
    assert all(s > 0 for s in hist.epoch_seconds)


def test_training_is_deterministic_per_seed():
    ds = _dataset()
    runs = []
    for _ in range(2):
        model = _mlp(ds, seed=3)
        tconf = TrainingConfig(mode="supervised", epochs=3, batch_size=8, seed=3)
        hist = train(model, ds.beta_array(), ds.labels, tconf, CFG)
        runs.append((hist.losses, {k: v.copy() for k, v in model.params().items()}))
    assert runs[0][0] == runs[1][0]
    for k in runs[0][1]:
        np.testing.assert_array_equal(runs[0][1][k], runs[1][1][k])


def test_tiny_learning_rate_is_nearly_flat():
    ds = _dataset()
    model = _mlp(ds)
    tconf = TrainingConfig(mode="supervised", learning_rate=1e-12, epochs=2,
                           batch_size=8)
    hist = train(model, ds.beta_array(), ds.labels, tconf, CFG)
    assert hist.losses[-1] == pytest.approx(hist.initial_loss, rel=1e-6)


def test_unsupervised_loss_is_negative_soft_sum_rate():
    ds = _dataset(8)
    model = _mlp(ds)
    from cfpilot.throughput import soft_sum_rate
    expected = np.mean([soft_sum_rate(b, model.forward(b), CFG)[1]
                        for b in ds.betas])
    assert dataset_loss(model, ds.betas, None, "unsupervised", CFG) == \
        pytest.approx(expected, rel=1e-12)


def test_dataset_loss_matches_loss_and_grad():
    ds = _dataset(8)
    model = _mlp(ds)
    for mode in ("supervised", "unsupervised"):
        via_grad, _ = model.loss_and_grad(ds.beta_array(), ds.labels, mode, CFG)
        assert dataset_loss(model, ds.betas, ds.labels, mode, CFG) == \
            pytest.approx(via_grad, rel=1e-12)


def test_entropy_penalty_value_and_gradient():
    # The entropy-augmented unsupervised loss and its gradient agree with a
    # direct evaluation and with finite differences on a classical model.
    ds = _dataset(4)
    model = _mlp(ds)
    ew = 3.0
    loss, grads = model.loss_and_grad(ds.beta_array(), None, "unsupervised",
                                      CFG, entropy_weight=ew)
    from cfpilot.throughput import soft_sum_rate
    expected = 0.0
    for beta in ds.betas:
        q = model.forward(beta)
        expected += soft_sum_rate(beta, q, CFG)[1] + ew * float(
            -(q * np.log(q)).sum())
    assert loss == pytest.approx(expected / len(ds), rel=1e-12)
    assert loss == pytest.approx(
        dataset_loss(model, ds.betas, None, "unsupervised", CFG, ew), rel=1e-12)

    step = 1e-6
    flat = model.w3.reshape(-1)
    for i in range(5):
        saved = flat[i]
        flat[i] = saved + step
        lp = dataset_loss(model, ds.betas, None, "unsupervised", CFG, ew)
        flat[i] = saved - step
        lm = dataset_loss(model, ds.betas, None, "unsupervised", CFG, ew)
        flat[i] = saved
        assert grads["w3"].reshape(-1)[i] == pytest.approx(
            (lp - lm) / (2 * step), rel=1e-4, abs=1e-6)


def test_entropy_penalty_sharpens_assignments():
    ds = _dataset(16)
    entropies = []
    for ew in (0.0, 10.0):
        model = _mlp(ds, seed=2)
        tconf = TrainingConfig(mode="unsupervised", epochs=4, batch_size=8,
                               entropy_weight=ew, seed=2)
        train(model, ds.beta_array(), None, tconf, CFG)
        qs = np.stack([model.forward(b) for b in ds.betas])
        entropies.append(float(-(qs * np.log(qs + 1e-15)).sum(axis=2).mean()))
    assert entropies[1] < entropies[0]


def test_adam_also_reduces_loss():
    ds = _dataset()
    model = _mlp(ds)
    tconf = TrainingConfig(mode="supervised", epochs=5, batch_size=8,
                           optimizer="adam", learning_rate=0.01)
    hist = train(model, ds.beta_array(), ds.labels, tconf, CFG)
    assert hist.losses[-1] < hist.initial_loss


def test_divergence_restores_last_finite_parameters():
    ds = _dataset(8)

    class Exploding:
        """Stub model that returns a NaN loss on the second batch."""

        def __init__(self):
            self.calls = 0
            self.w = np.array([1.0])

        def params(self):
            return {"w": self.w}

        def forward(self, beta):
            return np.full((CFG.K, CFG.tau_p), 1.0 / CFG.tau_p)

        def loss_and_grad(self, betas, labels, mode, config, **kwargs):
            self.calls += 1
            if self.calls >= 2:
                return float("nan"), {"w": np.array([0.0])}
            return 1.0, {"w": np.array([1.0])}

    model = Exploding()
    tconf = TrainingConfig(mode="unsupervised", epochs=3, batch_size=4,
                           learning_rate=0.5)
    with pytest.raises(TrainingDiverged):
        train(model, ds.beta_array(), None, tconf, CFG)
    # rolled back to the last parameters that produced a finite loss: the NaN
    # was evaluated at w = 0.5, so the pre-update w = 1.0 is restored
    assert model.w[0] == pytest.approx(1.0)


def test_empty_training_set_rejected():
    model = _mlp(_dataset(4))
    with pytest.raises(ValueError):
        train(model, np.empty((0, CFG.M, CFG.K)), None,
              TrainingConfig(mode="unsupervised"), CFG)
