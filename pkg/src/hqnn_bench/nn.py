"""Small dense networks trained with mini-batch Adam.

All trainable values of a model live in one flat ``params`` vector; layers
hold views into it. The optimizer and the training loop only ever touch the
flat vector, so any model exposing ``params``, ``init_params``, ``forward``
and ``loss_and_grads`` (see :mod:`hqnn_bench.hybrid`) trains with the same
loop.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NEURON_OPTIONS = (2, 4, 6, 8, 10)
MAX_HIDDEN_LAYERS = 3
ACTIVATIONS = ("relu", "softmax", "identity", "tanh")


@dataclass(frozen=True)
class ClassicalArch:
    input_dim: int
    hidden: tuple[int, ...] = ()
    output_dim: int = 3

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if len(self.hidden) > MAX_HIDDEN_LAYERS:
            raise ValueError(f"at most {MAX_HIDDEN_LAYERS} hidden layers, got {len(self.hidden)}")
        if any(h < 1 for h in self.hidden):
            raise ValueError(f"hidden widths must be positive: {self.hidden}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)

    @property
    def param_count(self) -> int:
        sizes = self.layer_sizes
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))

    def label(self) -> str:
        return "-".join(map(str, self.hidden)) if self.hidden else "-"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 8
    learning_rate: float = 0.001
    optimizer: str = "adam"
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs must be >= 0, batch_size >= 1, learning_rate > 0")
        if self.optimizer != "adam":
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class TrainOutcome:
    best_train_acc: float
    best_val_acc: float
    train_acc: tuple[float, ...] = field(repr=False)
    val_acc: tuple[float, ...] = field(repr=False)
    loss: tuple[float, ...] = field(repr=False)
    diverged: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.train_acc) - 1


class DenseLayer:
    """``activation(x @ weights + bias)`` with ``weights`` shaped ``[in, out]``."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray, activation: str = "relu"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weights = weights
        self.bias = bias
        self.activation = activation

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @property
    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def linear(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights + self.bias


def dense_views(flat: np.ndarray, sizes, activations) -> list[DenseLayer]:
    """Carve consecutive ``[in, out]`` weight/bias views out of ``flat``.

    Layout per layer: weights row-major, then bias.
    """
    layers, pos = [], 0
    for (n_in, n_out), act in zip(zip(sizes[:-1], sizes[1:]), activations):
        w = flat[pos:pos + n_in * n_out].reshape(n_in, n_out)
        pos += n_in * n_out
        b = flat[pos:pos + n_out]
        pos += n_out
        layers.append(DenseLayer(w, b, act))
    if pos != flat.size:
        raise ValueError(f"flat buffer has {flat.size} values, layers need {pos}")
    return layers


def glorot_uniform(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy and its gradient w.r.t. the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    n = len(labels)
    loss = -float(log_probs[np.arange(n), labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(dout: np.ndarray, z: np.ndarray, a: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return dout * (z > 0)
    if activation == "tanh":
        return dout * (1.0 - a * a)
    return dout


def _check_batch(x: np.ndarray, input_dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise ValueError(f"batch must have shape (n, {input_dim}), got {x.shape}")
    return x


def _check_labels(labels, n: int, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    return labels.astype(np.intp)


class MLP:
    """ReLU hidden layers, softmax output trained on cross-entropy."""

    def __init__(self, arch: ClassicalArch, params: np.ndarray | None = None):
        self.arch = arch
        self.params = np.zeros(arch.param_count) if params is None else np.array(params, dtype=float)
        if self.params.shape != (arch.param_count,):
            raise ValueError(f"expected {arch.param_count} parameters, got {self.params.shape}")
        acts = ["relu"] * len(arch.hidden) + ["softmax"]
        self.layers = dense_views(self.params, arch.layer_sizes, acts)

    @property
    def input_dim(self) -> int:
        return self.arch.input_dim

    def init_params(self, rng: np.random.Generator) -> None:
        """Glorot-uniform weights, zero biases (in place)."""
        for layer in self.layers:
            layer.weights[...] = glorot_uniform(rng, *layer.shape)
            layer.bias[...] = 0.0

    def logits(self, x: np.ndarray) -> np.ndarray:
        a = _check_batch(x, self.arch.input_dim)
        for layer in self.layers[:-1]:
            a = _activate(layer.linear(a), layer.activation)
        return self.layers[-1].linear(a)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def loss_and_grads(self, x: np.ndarray, labels) -> tuple[float, np.ndarray]:
        a = _check_batch(x, self.arch.input_dim)
        labels = _check_labels(labels, len(a), self.arch.output_dim)
        cache = []
        for layer in self.layers[:-1]:
            z = layer.linear(a)
            out = _activate(z, layer.activation)
            cache.append((a, z, out))
            a = out
        loss, dz = cross_entropy(self.layers[-1].linear(a), labels)

        grad = np.empty_like(self.params)
        g_layers = dense_views(grad, self.arch.layer_sizes,
                               [layer.activation for layer in self.layers])
        g_layers[-1].weights[...] = a.T @ dz
        g_layers[-1].bias[...] = dz.sum(axis=0)
        for i in range(len(self.layers) - 2, -1, -1):
            a_in, z, out = cache[i]
            dz = _activation_grad(dz @ self.layers[i + 1].weights.T, z, out, self.layers[i].activation)
            g_layers[i].weights[...] = a_in.T @ dz
            g_layers[i].bias[...] = dz.sum(axis=0)
        return loss, grad


class Adam:
    def __init__(self, size: int, learning_rate: float = 0.001, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = learning_rate
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        self.m *= self.beta1
        self.m += (1 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def accuracy(model, x: np.ndarray, labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    return float(np.mean(np.argmax(model.forward(x), axis=1) == labels))


def _evaluate(model, x_tr, y_tr, x_va, y_va):
    p_tr = model.forward(x_tr)
    n = len(y_tr)
    loss = -float(np.mean(np.log(np.clip(p_tr[np.arange(n), y_tr], 1e-300, None))))
    train_acc = float(np.mean(np.argmax(p_tr, axis=1) == y_tr))
    val_acc = accuracy(model, x_va, y_va)
    return train_acc, val_acc, loss


def train(model, dataset, config: TrainConfig, init: bool = True) -> TrainOutcome:
    """Mini-batch Adam for ``config.epochs`` epochs; accuracies are recorded on
    the full train and validation splits after every epoch (entry 0 is the
    untrained model).

    Weight initialization and shuffling both derive from ``config.seed``. A
    non-finite mini-batch loss stops the run and sets ``diverged``.
    """
    if model.input_dim != dataset.n_features:
        raise ValueError(f"model expects {model.input_dim} features, dataset has {dataset.n_features}")
    init_seq, shuffle_seq = np.random.SeedSequence(config.seed).spawn(2)
    if init:
        model.init_params(np.random.default_rng(init_seq))
    rng = np.random.default_rng(shuffle_seq)
    x_tr, y_tr = dataset.train_xy()
    x_va, y_va = dataset.val_xy()
    opt = Adam(model.params.size, config.learning_rate, config.adam_betas, config.adam_eps)

    train_acc, val_acc, losses = [], [], []

    def record():
        a, b, c = _evaluate(model, x_tr, y_tr, x_va, y_va)
        train_acc.append(a)
        val_acc.append(b)
        losses.append(c)

    record()
    diverged = False
    n, bs = len(y_tr), config.batch_size
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grad = model.loss_and_grads(x_tr[idx], y_tr[idx])
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                diverged = True
                break
            opt.step(model.params, grad)
        if diverged:
            break
        record()

    return TrainOutcome(
        best_train_acc=max(train_acc),
        best_val_acc=max(val_acc),
        train_acc=tuple(train_acc),
        val_acc=tuple(val_acc),
        loss=tuple(losses),
        diverged=diverged,
    )


def write_trace_csv(outcome: TrainOutcome, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_acc", "val_acc", "loss"])
        for epoch, row in enumerate(zip(outcome.train_acc, outcome.val_acc, outcome.loss)):
            w.writerow([epoch, *(repr(v) for v in row)])
