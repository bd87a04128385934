"""Dataset generation, labeling, and the JSON file format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .baselines import master_ap_assignment
from .config import SystemConfig
from .scenario import generate_topology, lsf_matrix

DATASET_VERSION = 1


@dataclass
class Dataset:
    config: SystemConfig
    sample_seeds: list = field(default_factory=list)
    betas: list = field(default_factory=list)      # (M, K) arrays, linear scale
    labels: list | None = None                     # (K,) int arrays or None
    mean: float | None = None                      # stats of 10*log10(beta)
    std: float | None = None

    def __len__(self) -> int:
        return len(self.betas)

    @property
    def has_stats(self) -> bool:
        return self.mean is not None and self.std is not None

    def beta_array(self) -> np.ndarray:
        return np.stack(self.betas) if self.betas else np.empty(
            (0, self.config.M, self.config.K))


def sample_seed(base_seed: int, index: int) -> int:
    # Distinct, deterministic per-sample streams.
    return base_seed * 1_000_003 + index


def generate_sample(config: SystemConfig, seed: int,
                    ap_positions: np.ndarray | None = None):
    topology = generate_topology(config, seed, ap_positions=ap_positions)
    beta = lsf_matrix(topology, config, seed + 1)
    return topology, beta


def generate_dataset(config: SystemConfig, n_samples: int, seed: int,
                     fixed_aps: bool = False) -> Dataset:
    """Draw `n_samples` independent realizations; deterministic per (seed, n)."""
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    ap_positions = None
    if fixed_aps and n_samples > 0:
        ap_positions = generate_topology(config, sample_seed(seed, 0)).ap_positions
    ds = Dataset(config=config)
    for i in range(n_samples):
        s = sample_seed(seed, i)
        _, beta = generate_sample(config, s, ap_positions=ap_positions)
        ds.sample_seeds.append(s)
        ds.betas.append(beta)
    if n_samples > 0:
        db = 10.0 * np.log10(np.stack(ds.betas))
        ds.mean = float(db.mean())
        ds.std = float(db.std())
    return ds


def label_dataset(ds: Dataset) -> Dataset:
    """Attach per-sample labels from the master-AP assigner."""
    ds.labels = [master_ap_assignment(beta, ds.config.tau_p) for beta in ds.betas]
    return ds


def save_dataset(ds: Dataset, path) -> None:
    doc = {
        "version": DATASET_VERSION,
        "config": ds.config.to_dict(),
        "config_hash": ds.config.config_hash(),
        "stats": ({"mean": ds.mean, "std": ds.std} if ds.has_stats else None),
        "samples": [
            {
                "seed": int(ds.sample_seeds[i]),
                "beta": ds.betas[i].tolist(),
                "label": (None if ds.labels is None
                          else [int(t) for t in ds.labels[i]]),
            }
            for i in range(len(ds))
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != DATASET_VERSION:
        raise ValueError(f"unsupported dataset version {doc.get('version')}")
    config = SystemConfig.from_dict(doc["config"])
    ds = Dataset(config=config)
    if doc["stats"] is not None:
        ds.mean = doc["stats"]["mean"]
        ds.std = doc["stats"]["std"]
    labels = []
    any_label = False
    for rec in doc["samples"]:
        beta = np.asarray(rec["beta"], dtype=float)
        if beta.shape != (config.M, config.K):
            raise ValueError("sample dimensions disagree with the config")
        ds.sample_seeds.append(rec["seed"])
        ds.betas.append(beta)
        if rec["label"] is not None:
            any_label = True
            labels.append(np.asarray(rec["label"], dtype=np.int64))
        else:
            labels.append(None)
    if any_label:
        if any(l is None for l in labels):
            raise ValueError("dataset mixes labeled and unlabeled samples")
        ds.labels = labels
    return ds
