"""Statevector simulation of the parameterized quantum layers.

States are plain complex ``numpy`` arrays whose last axis holds the ``2**q``
amplitudes; any leading axes are batch axes. Qubit 0 is the least-significant
bit of the basis-state index, so ``|0...01>`` (index 1) has qubit 0 set.

Gate matrices may carry their own leading batch axes as long as they broadcast
against the state's batch axes. This is what lets a single call evaluate every
parameter-shifted copy of a circuit for every sample of a mini-batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_QUBITS = 12
LAYER_KINDS = ("BEL", "SEL")
SHIFT = np.pi / 2

StateVector = np.ndarray


def _qubits_of(n_amplitudes: int) -> int:
    q = n_amplitudes.bit_length() - 1
    if n_amplitudes < 2 or (1 << q) != n_amplitudes:
        raise ValueError(f"state length {n_amplitudes} is not a power of two >= 2")
    return q


def zero_state(n_qubits: int, batch_shape: tuple[int, ...] = ()) -> StateVector:
    """Return ``|0...0>`` on ``n_qubits`` qubits, optionally batched."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    state = np.zeros(tuple(batch_shape) + (1 << n_qubits,), dtype=complex)
    state[..., 0] = 1.0
    return state


# --- gate matrices ---------------------------------------------------------

def rx(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    out[..., 1, 1] = c
    return out


def ry(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rz(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def rot(alpha, beta, gamma) -> np.ndarray:
    """General rotation ``RZ(alpha) @ RY(beta) @ RZ(gamma)`` (``gamma`` acts first)."""
    return rz(alpha) @ ry(beta) @ rz(gamma)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def is_unitary(gate: np.ndarray, atol: float = 1e-12) -> bool:
    gate = np.asarray(gate)
    if gate.shape[-2:] != (2, 2):
        return False
    prod = np.conj(np.swapaxes(gate, -1, -2)) @ gate
    return bool(np.allclose(prod, np.eye(2), rtol=0.0, atol=atol))


# --- gate application ------------------------------------------------------

def apply_single_qubit_gate(state: StateVector, gate: np.ndarray, target: int,
                            validate: bool = False) -> StateVector:
    """Apply a 2x2 unitary to ``target`` and return the new state.

    The input array is not modified. ``validate=True`` rejects non-unitary
    matrices (tolerance 1e-12).
    """
    state = np.asarray(state)
    gate = np.asarray(gate)
    n = state.shape[-1]
    q = _qubits_of(n)
    if not 0 <= target < q:
        raise ValueError(f"target {target} out of range for {q} qubits")
    if validate and not is_unitary(gate):
        raise ValueError("gate is not unitary")
    low = 1 << target
    s = state.reshape(state.shape[:-1] + (n // (2 * low), 2, low))
    a0, a1 = s[..., 0, :], s[..., 1, :]
    g = gate[..., None, None]
    new0 = g[..., 0, 0, :, :] * a0 + g[..., 0, 1, :, :] * a1
    new1 = g[..., 1, 0, :, :] * a0 + g[..., 1, 1, :, :] * a1
    out = np.stack([new0, new1], axis=-2)
    return out.reshape(out.shape[:-3] + (n,))


@lru_cache(maxsize=None)
def _cnot_perm(q: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << q)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """Flip ``target`` on every basis state whose ``control`` bit is 1."""
    state = np.asarray(state)
    q = _qubits_of(state.shape[-1])
    if control == target:
        raise ValueError("control and target must differ")
    if not (0 <= control < q and 0 <= target < q):
        raise ValueError(f"qubit index out of range for {q} qubits")
    return state[..., _cnot_perm(q, control, target)]


def angle_encode(x) -> StateVector:
    """Product state ``RX(x_{q-1})|0> (x) ... (x) RX(x_0)|0>``.

    ``x`` has shape ``(..., q)``; leading axes become batch axes.
    """
    x = np.asarray(x, dtype=float)
    q = x.shape[-1]
    if not 1 <= q <= MAX_QUBITS:
        raise ValueError(f"need between 1 and {MAX_QUBITS} encoded features, got {q}")
    amp0 = np.cos(x / 2).astype(complex)
    amp1 = -1j * np.sin(x / 2)
    state = np.stack([amp0[..., q - 1], amp1[..., q - 1]], axis=-1)
    for i in range(q - 2, -1, -1):
        v = np.stack([amp0[..., i], amp1[..., i]], axis=-1)
        state = (state[..., :, None] * v[..., None, :]).reshape(x.shape[:-1] + (-1,))
    return state


# --- templates -------------------------------------------------------------

@dataclass(frozen=True)
class QuantumLayerSpec:
    """Shape of a trainable entangling layer: ``depth`` repetitions on ``qubits`` wires."""

    qubits: int
    depth: int
    kind: str = "SEL"

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"kind must be one of {LAYER_KINDS}, got {self.kind!r}")
        if not 1 <= self.qubits <= MAX_QUBITS:
            raise ValueError(f"qubits must be in [1, {MAX_QUBITS}], got {self.qubits}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")

    @property
    def param_shape(self) -> tuple[int, ...]:
        if self.kind == "BEL":
            return (self.depth, self.qubits)
        return (self.depth, self.qubits, 3)

    @property
    def param_count(self) -> int:
        return int(np.prod(self.param_shape))

    @property
    def rotation_count(self) -> int:
        """Single-qubit rotations in the layer, counting each Rot as three."""
        return self.param_count

    def entangler_range(self, layer: int) -> int:
        if self.kind == "BEL":
            return 1
        return (layer % (self.qubits - 1)) + 1 if self.qubits > 1 else 0

    def cnot_pairs(self, layer: int) -> list[tuple[int, int]]:
        q = self.qubits
        if q == 1:
            return []
        if self.kind == "BEL" and q == 2:
            return [(0, 1)]
        r = self.entangler_range(layer)
        return [(i, (i + r) % q) for i in range(q)]

    def label(self) -> str:
        return f"({self.qubits},{self.depth})"


@lru_cache(maxsize=None)
def _ring_perm(spec: QuantumLayerSpec, layer: int) -> np.ndarray:
    # composite permutation of one layer's CNOT sequence
    perm = np.arange(1 << spec.qubits)
    for c, t in spec.cnot_pairs(layer):
        perm = perm[_cnot_perm(spec.qubits, c, t)]
    return perm


def _check_params(spec: QuantumLayerSpec, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    k = len(spec.param_shape)
    if params.shape[params.ndim - k:] != spec.param_shape:
        raise ValueError(f"params shape {params.shape} does not end with {spec.param_shape}")
    return params


def run_layer(spec: QuantumLayerSpec, params, state: StateVector) -> StateVector:
    """Apply ``spec.depth`` template layers to ``state``.

    BEL: ``RX(theta[l, i])`` on every qubit, then the CNOT ring ``i -> i+1``.
    SEL: ``Rot(*theta[l, i])`` on every qubit, then CNOTs ``i -> i+r`` with
    ``r = (l mod (q-1)) + 1``. Leading axes of ``params`` broadcast against the
    state's batch axes.
    """
    params = _check_params(spec, params)
    state = np.asarray(state)
    if state.shape[-1] != 1 << spec.qubits:
        raise ValueError(f"state has {state.shape[-1]} amplitudes, expected {1 << spec.qubits}")
    for layer in range(spec.depth):
        if spec.kind == "BEL":
            gates = rx(params[..., layer, :])
        else:
            p = params[..., layer, :, :]
            gates = rot(p[..., 0], p[..., 1], p[..., 2])
        for i in range(spec.qubits):
            state = apply_single_qubit_gate(state, gates[..., i, :, :], i)
        if spec.qubits > 1:
            state = state[..., _ring_perm(spec, layer)]
    return state


# --- readout ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _z_signs(q: int) -> np.ndarray:
    idx = np.arange(1 << q)[:, None]
    return 1.0 - 2.0 * ((idx >> np.arange(q)[None, :]) & 1)


def expval_z(state: StateVector, qubit: int):
    state = np.asarray(state)
    q = _qubits_of(state.shape[-1])
    if not 0 <= qubit < q:
        raise ValueError(f"qubit {qubit} out of range for {q} qubits")
    probs = np.abs(state) ** 2
    return probs @ _z_signs(q)[:, qubit]


def expval_z_all(state: StateVector) -> np.ndarray:
    """``<Z_i>`` for every qubit; output shape ``(..., q)``."""
    state = np.asarray(state)
    q = _qubits_of(state.shape[-1])
    return (np.abs(state) ** 2) @ _z_signs(q)


def circuit_expvals(spec: QuantumLayerSpec, params, x) -> np.ndarray:
    """Encode ``x`` (shape ``(..., q)``), run the layer and read ``<Z>`` on all qubits."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.qubits:
        raise ValueError(f"expected {spec.qubits} encoded features, got {x.shape[-1]}")
    return expval_z_all(run_layer(spec, params, angle_encode(x)))


# --- gradients -------------------------------------------------------------

def shifted_expvals(spec: QuantumLayerSpec, params, x):
    """Expectations and their parameter-shift Jacobians for a batch of inputs.

    ``x`` has shape ``(B, q)``. Returns ``(E, dE_dparams, dE_dx)`` with shapes
    ``(B, q)``, ``(B, q, P)`` and ``(B, q, q)``; ``dE_dx[b, i, j]`` is
    ``d<Z_i>/dx_j``. Every shifted circuit is evaluated in one batched pass.
    """
    params = _check_params(spec, params)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.qubits:
        raise ValueError(f"x must have shape (B, {spec.qubits}), got {x.shape}")
    P, q = spec.param_count, spec.qubits
    flat = params.reshape(P)
    eye_p = SHIFT * np.eye(P)
    param_rows = np.concatenate([flat[None], flat + eye_p, flat - eye_p,
                                 np.broadcast_to(flat, (2 * q, P))])
    eye_q = SHIFT * np.eye(q)
    x_rows = np.concatenate([
        np.broadcast_to(x, (1 + 2 * P,) + x.shape),
        x[None] + eye_q[:, None, :],
        x[None] - eye_q[:, None, :],
    ])
    rows = param_rows.reshape((len(param_rows), 1) + spec.param_shape)
    E = expval_z_all(run_layer(spec, rows, angle_encode(x_rows)))
    d_params = 0.5 * (E[1:1 + P] - E[1 + P:1 + 2 * P])
    d_x = 0.5 * (E[1 + 2 * P:1 + 2 * P + q] - E[1 + 2 * P + q:])
    return E[0], d_params.transpose(1, 2, 0), d_x.transpose(1, 2, 0)


def parameter_shift_grads(spec: QuantumLayerSpec, params, x):
    """Jacobians of ``<Z_i>`` for a single input vector ``x``.

    Returns ``(d_params, d_x)`` shaped ``(q,) + spec.param_shape`` and ``(q, q)``,
    each entry ``[f(v + pi/2) - f(v - pi/2)] / 2``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.qubits,):
        raise ValueError(f"x must have shape ({spec.qubits},), got {x.shape}")
    _, d_params, d_x = shifted_expvals(spec, params, x[None])
    return d_params[0].reshape((spec.qubits,) + spec.param_shape), d_x[0]
