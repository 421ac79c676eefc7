import numpy as np
import pytest

import oracles
from hqnn_bench import hybrid, nn, qsim
from hqnn_bench.hybrid import HybridArch, HybridModel
from hqnn_bench.qsim import QuantumLayerSpec

ALL_SPECS = [(q, d, kind) for kind in qsim.LAYER_KINDS for q in (3, 4, 5) for d in range(1, 11)]


def random_model(rng, F, q, d, kind, scale=0.5):
    arch = HybridArch(F, QuantumLayerSpec(q, d, kind))
    model = HybridModel(arch)
    model.init_params(rng)
    model.pre.weights[...] = rng.normal(scale=scale, size=model.pre.shape)
    model.pre.bias[...] = rng.normal(scale=0.2, size=q)
    model.post.bias[...] = rng.normal(scale=0.2, size=3)
    return model


def test_param_count_sel_32():
    assert HybridArch(10, QuantumLayerSpec(3, 2, "SEL")).param_count == 63


def test_zero_model_reads_all_ones():
    arch = HybridArch(10, QuantumLayerSpec(3, 2, "BEL"))
    model = HybridModel(arch)
    model.post.weights[...] = np.random.default_rng(0).normal(size=(3, 3))
    x = np.random.default_rng(1).normal(size=(4, 10))
    np.testing.assert_allclose(model.quantum_outputs(x), 1.0, atol=1e-14)
    expected = nn.softmax(np.ones((1, 3)) @ model.post.weights + model.post.bias)
    np.testing.assert_allclose(model.forward(x), np.repeat(expected, 4, axis=0), atol=1e-14)


@pytest.mark.parametrize("kind", qsim.LAYER_KINDS)
def test_probabilities_sum_to_one(kind):
    rng = np.random.default_rng(2)
    model = random_model(rng, 20, 4, 3, kind)
    p = hybrid.hybrid_forward(model.arch, model.params, rng.normal(size=(16, 20)))
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(p >= 0)


def forward_loss(arch, params, x, y):
    p = HybridModel(arch, params).forward(x)
    return -np.mean(np.log(p[np.arange(len(y)), y]))


def dense_forward(model, x, ring_start=0):
    """Reference forward pass through the dense-matrix oracle."""
    q, spec = model.arch.qubits, model.spec
    h = np.tanh(x @ model.pre.weights + model.pre.bias)
    outs = []
    for row in h:
        psi = oracles.encode_state(row)
        for layer in range(spec.depth):
            for i in range(q):
                if spec.kind == "BEL":
                    gate = oracles.rx_m(model.theta[layer, i])
                else:
                    a, b, g = model.theta[layer, i]
                    gate = oracles.rz_m(a) @ oracles.ry_m(b) @ oracles.rz_m(g)
                psi = oracles.embed(gate, i, q) @ psi
            r = 1 if spec.kind == "BEL" else layer % (q - 1) + 1
            for k in range(q):
                c = (ring_start + k) % q
                psi = oracles.cnot_m(c, (c + r) % q, q) @ psi
        outs.append(oracles.expvals(psi))
    return nn.softmax(np.array(outs) @ model.post.weights + model.post.bias)


@pytest.mark.parametrize("q,d,kind", [(3, 2, "SEL"), (4, 3, "BEL"), (5, 1, "SEL")])
def test_forward_matches_dense_oracle(q, d, kind):
    rng = np.random.default_rng(q + d)
    model = random_model(rng, 10, q, d, kind)
    x = rng.normal(size=(3, 10))
    np.testing.assert_allclose(model.forward(x), dense_forward(model, x), atol=1e-12)


@pytest.mark.parametrize("q,d,kind", ALL_SPECS)
def test_end_to_end_gradients(q, d, kind):
    rng = np.random.default_rng([q, d, qsim.LAYER_KINDS.index(kind)])
    model = random_model(rng, 10, q, d, kind)
    x = rng.normal(size=(4, 10))
    y = rng.integers(0, 3, size=4)
    grad = hybrid.hybrid_backward(model.arch, model.params, x, y)

    fd = oracles.central_diff(lambda p: forward_loss(model.arch, p, x, y), model.params, 1e-5)
    assert np.all(np.abs(grad - fd) <= np.maximum(1e-5, 1e-4 * np.abs(grad)))


def test_duplicated_sample_gives_single_sample_gradient():
    rng = np.random.default_rng(3)
    model = random_model(rng, 10, 3, 2, "SEL")
    x = rng.normal(size=(1, 10))
    _, g1 = model.loss_and_grads(x, [2])
    _, g8 = model.loss_and_grads(np.repeat(x, 8, axis=0), [2] * 8)
    np.testing.assert_allclose(g8, g1, atol=1e-12)


def test_bel_zero_angles_still_train_theta():
    rng = np.random.default_rng(4)
    model = random_model(rng, 10, 3, 2, "BEL")
    model.theta[...] = 0.0
    x = rng.normal(size=(6, 10))
    y = rng.integers(0, 3, size=6)
    _, grad = model.loss_and_grads(x, y)
    lo, hi = model._slices
    assert np.any(np.abs(grad[lo:hi]) > 1e-6)
    fd = oracles.central_diff(lambda p: forward_loss(model.arch, p, x, y), model.params, 1e-5)
    np.testing.assert_allclose(grad[lo:hi], fd[lo:hi], atol=1e-5)


@pytest.mark.parametrize("q,d,kind", [(3, 2, "BEL"), (4, 2, "BEL"), (3, 3, "SEL"), (5, 2, "SEL")])
def test_rotating_qubit_labels_rotates_ring_start(q, d, kind):
    # Relabel wire j -> j+1 everywhere. The ring's edge set is preserved, but
    # its CNOTs are applied in sequence, so the relabelled model equals the
    # original circuit with the ring started one wire earlier.
    rng = np.random.default_rng(q * d)
    model = random_model(rng, 6, q, d, kind)
    perm = np.roll(np.arange(q), 1)
    moved = HybridModel(model.arch, model.params.copy())
    moved.pre.weights[...] = model.pre.weights[:, perm]
    moved.pre.bias[...] = model.pre.bias[perm]
    moved.theta[...] = model.theta[:, perm]
    moved.post.weights[...] = model.post.weights[perm, :]
    x = rng.normal(size=(3, 6))
    np.testing.assert_allclose(moved.forward(x), dense_forward(model, x, ring_start=q - 1), atol=1e-10)
    np.testing.assert_allclose(dense_forward(moved, x), moved.forward(x), atol=1e-10)


def test_wrong_feature_width_rejected():
    model = HybridModel(HybridArch(10, QuantumLayerSpec(3, 1, "SEL")))
    with pytest.raises(ValueError):
        model.forward(np.zeros((2, 9)))


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    model = random_model(rng, 12, 4, 2, "SEL")
    hybrid.save_model(model, tmp_path / "m.json")
    loaded = hybrid.load_model(tmp_path / "m.json")
    assert loaded.arch == model.arch
    np.testing.assert_array_equal(loaded.params, model.params)
    x = rng.normal(size=(3, 12))
    np.testing.assert_array_equal(loaded.forward(x), model.forward(x))
