"""Dense(F->q, tanh) -> angle encoding -> entangling layer -> <Z> -> Dense(q->3, softmax).

Flat parameter layout (also used by the JSON model files)::

    pre weights [F, q] row-major | pre bias [q] | quantum params (param_shape, C order)
    | post weights [q, 3] row-major | post bias [3]
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import qsim
from .nn import _check_batch, _check_labels, cross_entropy, dense_views, glorot_uniform, softmax
from .qsim import QuantumLayerSpec


@dataclass(frozen=True)
class HybridArch:
    input_dim: int
    layer_spec: QuantumLayerSpec
    output_dim: int = 3

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")

    @property
    def qubits(self) -> int:
        return self.layer_spec.qubits

    @property
    def param_count(self) -> int:
        q = self.qubits
        return (self.input_dim * q + q) + self.layer_spec.param_count + (q * self.output_dim + self.output_dim)

    def label(self) -> str:
        return self.layer_spec.label()


class HybridModel:
    def __init__(self, arch: HybridArch, params: np.ndarray | None = None):
        self.arch = arch
        self.params = np.zeros(arch.param_count) if params is None else np.array(params, dtype=float)
        if self.params.shape != (arch.param_count,):
            raise ValueError(f"expected {arch.param_count} parameters, got {self.params.shape}")
        f, q, c = arch.input_dim, arch.qubits, arch.output_dim
        n_pre = f * q + q
        n_q = arch.layer_spec.param_count
        self.pre = dense_views(self.params[:n_pre], (f, q), ["tanh"])[0]
        self.theta = self.params[n_pre:n_pre + n_q].reshape(arch.layer_spec.param_shape)
        self.post = dense_views(self.params[n_pre + n_q:], (q, c), ["softmax"])[0]
        self._slices = (n_pre, n_pre + n_q)

    @property
    def input_dim(self) -> int:
        return self.arch.input_dim

    @property
    def spec(self) -> QuantumLayerSpec:
        return self.arch.layer_spec

    def init_params(self, rng: np.random.Generator) -> None:
        """Glorot-uniform dense weights, zero biases, quantum angles uniform in [0, 2pi)."""
        self.pre.weights[...] = glorot_uniform(rng, *self.pre.shape)
        self.pre.bias[...] = 0.0
        self.theta[...] = rng.uniform(0.0, 2 * np.pi, size=self.theta.shape)
        self.post.weights[...] = glorot_uniform(rng, *self.post.shape)
        self.post.bias[...] = 0.0

    def encoder_inputs(self, x: np.ndarray) -> np.ndarray:
        x = _check_batch(x, self.arch.input_dim)
        return np.tanh(self.pre.linear(x))

    def quantum_outputs(self, x: np.ndarray) -> np.ndarray:
        return qsim.circuit_expvals(self.spec, self.theta, self.encoder_inputs(x))

    def forward(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.post.linear(self.quantum_outputs(x)))

    def loss_and_grads(self, x: np.ndarray, labels) -> tuple[float, np.ndarray]:
        """Mean cross-entropy and exact gradients for every parameter.

        The quantum layer's Jacobians (w.r.t. its angles and its encoded
        inputs) come from the parameter-shift rule; everything else is
        ordinary backpropagation.
        """
        x = _check_batch(x, self.arch.input_dim)
        labels = _check_labels(labels, len(x), self.arch.output_dim)
        h = np.tanh(self.pre.linear(x))
        expv, d_theta, d_h = qsim.shifted_expvals(self.spec, self.theta, h)
        loss, dz = cross_entropy(self.post.linear(expv), labels)

        grad = np.empty_like(self.params)
        lo, hi = self._slices
        g_post = dense_views(grad[hi:], self.post.shape, ["softmax"])[0]
        g_post.weights[...] = expv.T @ dz
        g_post.bias[...] = dz.sum(axis=0)

        d_expv = dz @ self.post.weights.T
        grad[lo:hi] = np.einsum("bi,bip->p", d_expv, d_theta)
        d_pre = np.einsum("bi,bij->bj", d_expv, d_h) * (1.0 - h * h)
        g_pre = dense_views(grad[:lo], self.pre.shape, ["tanh"])[0]
        g_pre.weights[...] = x.T @ d_pre
        g_pre.bias[...] = d_pre.sum(axis=0)
        return loss, grad


def hybrid_forward(arch: HybridArch, params: np.ndarray, batch: np.ndarray) -> np.ndarray:
    return HybridModel(arch, params).forward(batch)


def hybrid_backward(arch: HybridArch, params: np.ndarray, batch: np.ndarray, labels) -> np.ndarray:
    return HybridModel(arch, params).loss_and_grads(batch, labels)[1]


def save_model(model: HybridModel, path: str | Path) -> None:
    spec = model.spec
    doc = {
        "input_dim": model.arch.input_dim,
        "output_dim": model.arch.output_dim,
        "qubits": spec.qubits,
        "depth": spec.depth,
        "kind": spec.kind,
        "params": [float(v) for v in model.params],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_model(path: str | Path) -> HybridModel:
    doc = json.loads(Path(path).read_text())
    spec = QuantumLayerSpec(doc["qubits"], doc["depth"], doc["kind"])
    arch = HybridArch(doc["input_dim"], spec, doc["output_dim"])
    return HybridModel(arch, np.array(doc["params"]))
