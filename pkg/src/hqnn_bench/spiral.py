"""Three-arm spiral classification data with a tunable number of features.

The first two columns are the spiral coordinates. Every further column is a
fixed non-linear transform of the noise-free coordinates with its own seeded
coefficients, and every column (including the first two) gets independent
Gaussian noise whose scale grows with the feature count.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

TURNS = 0.75
FEATURE_SIZES = tuple(range(10, 111, 10))
TRANSFORMS = ("sin_sum", "cos_diff", "product", "square", "tanh_sum")
COEF_RANGE = (-2.5, 2.5)
RADIUS = 1.5


def noise_for(n_features: int) -> float:
    """Noise standard deviation for a complexity level: ``0.1 + 0.003 * F``."""
    return 0.1 + 0.003 * n_features


@dataclass(frozen=True)
class SpiralConfig:
    n_features: int = 10
    n_points: int = 1500
    n_classes: int = 3
    seed: int = 0
    val_fraction: float = 0.2
    noise_sigma: float | None = None  # None -> noise_for(n_features)

    def __post_init__(self):
        if self.n_points <= 0:
            raise ValueError(f"n_points must be positive, got {self.n_points}")
        if self.n_features < 2:
            raise ValueError(f"n_features must be >= 2, got {self.n_features}")
        if self.n_classes < 2 or self.n_points % self.n_classes:
            raise ValueError(f"n_points ({self.n_points}) must split evenly into {self.n_classes} classes")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    @property
    def sigma(self) -> float:
        return noise_for(self.n_features) if self.noise_sigma is None else self.noise_sigma


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    config: SpiralConfig

    def __post_init__(self):
        for arr in (self.features, self.labels, self.train_idx, self.val_idx):
            arr.flags.writeable = False

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def train_xy(self):
        return self.features[self.train_idx], self.labels[self.train_idx]

    def val_xy(self):
        return self.features[self.val_idx], self.labels[self.val_idx]


def spiral_angle(t, k, n_classes: int = 3):
    return 2 * np.pi * (t * TURNS + k / n_classes)


def _transform(kind: str, a: float, b: float, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    if kind == "sin_sum":
        return np.sin(a * x1 + b * x2)
    if kind == "cos_diff":
        return np.cos(a * x1 - b * x2)
    if kind == "product":
        return x1 * x2
    if kind == "square":
        return x1 ** 2
    return np.tanh(a * x1 + b * x2)


def stratified_split(labels: np.ndarray, val_fraction: float, rng: np.random.Generator):
    train, val = [], []
    for k in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == k))
        n_val = int(round(val_fraction * len(idx)))
        val.append(idx[:n_val])
        train.append(idx[n_val:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def generate(config: SpiralConfig) -> Dataset:
    """Build the dataset described by ``config``; equal configs give identical arrays."""
    rng = np.random.default_rng(config.seed)
    per_class = config.n_points // config.n_classes
    labels = np.repeat(np.arange(config.n_classes), per_class)
    t = rng.random(config.n_points)
    theta = spiral_angle(t, labels, config.n_classes)
    x1, x2 = RADIUS * t * np.cos(theta), RADIUS * t * np.sin(theta)

    n_extra = config.n_features - 2
    coefs = rng.uniform(*COEF_RANGE, size=(n_extra, 2))
    sigma = config.sigma
    noise = rng.normal(0.0, sigma, size=(config.n_points, config.n_features)) if sigma > 0 else 0.0
    base = np.column_stack([x1, x2]) + (noise[:, :2] if sigma > 0 else 0.0)
    columns = [base[:, 0], base[:, 1]]
    for j in range(n_extra):
        a, b = coefs[j]
        columns.append(_transform(TRANSFORMS[j % len(TRANSFORMS)], a, b, x1, x2))
    features = np.column_stack(columns)
    if sigma > 0:
        features[:, 2:] += noise[:, 2:]

    order = rng.permutation(config.n_points)
    features, labels = features[order], labels[order]
    train_idx, val_idx = stratified_split(labels, config.val_fraction, rng)
    return Dataset(features, labels, train_idx, val_idx, config)


def standardize(dataset: Dataset) -> Dataset:
    """Z-score every column with train-split statistics.

    Zero-variance columns are only centred (scale 1).
    """
    x_tr = dataset.features[dataset.train_idx]
    mean = x_tr.mean(axis=0)
    std = x_tr.std(axis=0)
    std[std == 0] = 1.0
    return replace(dataset, features=(dataset.features - mean) / std)


# --- persistence -----------------------------------------------------------

def save_dataset(dataset: Dataset, csv_path: str | Path) -> Path:
    """Write ``f1,...,fF,label`` rows plus a JSON sidecar with config and split."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i + 1}" for i in range(dataset.n_features)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    sidecar = csv_path.with_suffix(".json")
    meta = {"config": asdict(dataset.config), "val_idx": dataset.val_idx.tolist()}
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    return sidecar


def load_dataset(csv_path: str | Path) -> Dataset:
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    raw = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    features, labels = raw[:, :-1], raw[:, -1].astype(np.int64)
    val_idx = np.array(meta["val_idx"], dtype=np.int64)
    train_idx = np.setdiff1d(np.arange(len(labels)), val_idx)
    return Dataset(features, labels, train_idx, val_idx, SpiralConfig(**meta["config"]))
