import math
import os
from pathlib import Path

import numpy as np
import pytest

import hqfnn

DATA_DIR = Path(os.environ.get("HQFNN_DATA_DIR", "data/mnist5k"))


def tiny_config():
    c = hqfnn.ModelConfig()
    c.d, c.m, c.layers, c.q, c.hidden, c.n_classes, c.image_size = 2, 2, 1, 3, 4, 3, 8
    return c


def test_forward_shape_and_determinism():
    params = hqfnn.init_params(hqfnn.ModelConfig(), 3)
    images = np.random.default_rng(0).normal(size=(2, 1, 28, 28))
    logits = hqfnn.forward(params, images)
    assert logits.shape == (2, 10)
    assert np.array_equal(logits, hqfnn.forward(params, images))
    assert params.parameter_count() == sum(t.size for t in params.tensors().values())


def test_loss_and_grad():
    params = hqfnn.init_params(tiny_config(), 1)
    images = np.random.default_rng(1).normal(size=(2, 1, 8, 8))
    loss, grads = hqfnn.loss_and_grad(params, images, [0, 2])
    assert loss > 0
    tensors = params.tensors()
    assert grads.keys() == tensors.keys()
    for name, g in grads.items():
        assert g.shape == tensors[name].shape
        assert np.all(np.isfinite(g))


def test_qmf_membership_matches_single_qubit_algebra():
    # only the Ry encoding acts once the other two encodings are cancelled by biases
    x = 0.7
    mu = hqfnn.qmf_membership(x, [-x, 0.0, -x], [0.0, 0.0, 0.0])
    assert mu == pytest.approx((math.cos(x) + 1) / 2, abs=1e-12)
    assert hqfnn.qmf_membership(0.0, [0.0] * 3, [0.0] * 3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        hqfnn.qmf_membership(0.0, [0.0] * 3, [0.0] * 6)


def test_checkpoint_round_trip(tmp_path):
    params = hqfnn.init_params(tiny_config(), 4)
    path = tmp_path / "ck.bin"
    hqfnn.save_checkpoint(path, params)
    back = hqfnn.load_checkpoint(path)
    for name, t in params.tensors().items():
        assert np.array_equal(t, back.tensors()[name])
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(ValueError):
        hqfnn.load_checkpoint(path)


def test_meyer_wallach_states():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    w = np.zeros(8, dtype=complex)
    w[[1, 2, 4]] = 1 / math.sqrt(3)
    assert hqfnn.meyer_wallach(bell) == pytest.approx(1.0, abs=1e-12)
    assert hqfnn.meyer_wallach(w) == pytest.approx(8 / 9, abs=1e-12)
    assert hqfnn.meyer_wallach(np.kron([1, 0], [0.6, 0.8])) == pytest.approx(0.0, abs=1e-12)


def test_analysis_entry_points():
    sweep = hqfnn.noise_sweep("DP", [0.0, 0.05], n_inputs=10)
    assert sweep[0]["mean_fidelity"] == 1.0
    assert sweep[1]["mean_fidelity"] == pytest.approx(np.mean(sweep[1]["fidelities"]), abs=1e-12)

    masses = hqfnn.haar_bin_masses(1, 10)
    assert np.allclose(masses, 0.1)
    assert hqfnn.kl_divergence(masses, masses) == pytest.approx(0.0, abs=1e-15)

    expr, ent = hqfnn.expr_ent(layers=1, q=3, n_pairs=1000, n_bins=20, n_samples=100)
    assert expr >= 0
    assert 0 <= ent <= 1

    c = hqfnn.ModelConfig()
    c.layers, c.m, c.d = 4, 3, 16
    counts = hqfnn.gate_counts(c)
    assert counts["qmf_single_qubit_gates"] == 1152
    assert counts["qd_wraparound_cnots"] == 1


def test_cli_and_idx():
    rc, out, _ = hqfnn.run_cli(["gates"])
    assert rc == 0 and "1152" in out
    assert hqfnn.run_cli([])[0] == 2
    images = DATA_DIR / "t10k-images-idx3-ubyte"
    if not images.exists():
        pytest.skip("dataset not generated")
    x, labels, mean, std = hqfnn.load_idx(images, DATA_DIR / "t10k-labels-idx1-ubyte")
    assert x.shape == (len(labels), 1, 28, 28)
    assert abs(x.mean()) < 1e-6 and abs(x.std() - 1) < 1e-6
    assert std > 0 and 0 < mean < 1
