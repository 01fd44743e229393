"""End-to-end smoke tests for the Python bindings."""

import itertools
import json

import numpy as np
import pytest

import mfng


def test_generic_model_energy_matches_numpy():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 0.5
    w[1, 2] = w[2, 1] = -0.25
    b = np.array([0.1, -0.2, 0.3])
    bm = mfng.GenericBm(w, b, np.zeros(3))
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.integers(0, 2, size=3).astype(float)
        expected = -0.5 * x @ w @ x - b @ x
        assert bm.energy(x) == pytest.approx(expected, abs=1e-12)


def test_exact_log_z_matches_numpy_enumeration():
    rng = np.random.default_rng(1)
    w = rng.normal(scale=0.5, size=(4, 4))
    w = np.triu(w, 1)
    w = w + w.T
    b = rng.normal(size=4)
    bm = mfng.GenericBm(w, b, np.zeros(4))
    energies = []
    for bits in itertools.product([0.0, 1.0], repeat=4):
        x = np.array(bits)
        energies.append(-0.5 * x @ w @ x - b @ x)
    expected = np.logaddexp.reduce([-e for e in energies])
    assert mfng.exact_log_z_generic(bm) == pytest.approx(expected, abs=1e-12)


def test_metric_operator_matches_dense():
    model = mfng.DbmModel([4, 3], np.full(7, 0.5))
    rng = np.random.default_rng(2)
    theta = rng.normal(scale=0.3, size=model.num_params)
    model.set_params(theta)
    pool = mfng.ChainPool(model, 16, 7)
    mfng.sample_negative(model, pool, 5)
    sm = mfng.build_sample_matrix(model, pool)
    op = mfng.MetricOperator(sm, 0.1)
    dense = op.dense()
    y = rng.normal(size=model.num_params)
    assert np.allclose(op.apply(y), dense @ y, atol=1e-12)
    assert np.allclose(dense, dense.T)


def test_minres_matches_numpy_solve():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(12, 12))
    a = m @ m.T / 12 + 0.2 * np.eye(12)
    b = rng.normal(size=12)
    config = mfng.SolverConfig()
    config.tolerance = 1e-12
    config.max_iterations = 500
    result = mfng.minres_dense(a, b, np.zeros(12), config)
    assert result.termination == mfng.Termination.converged
    assert np.allclose(result.x, np.linalg.solve(a, b), atol=1e-8)


def test_natural_gradient_solves_damped_system():
    model = mfng.DbmModel([3, 2], np.zeros(5))
    rng = np.random.default_rng(4)
    model.set_params(rng.normal(scale=0.4, size=model.num_params))
    data = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    delta = mfng.exact_natural_gradient(model, data, 0.1)
    fim = mfng.exact_fim(model, mfng.FimForm.covariance)
    assert np.all(np.linalg.eigvalsh(fim) > -1e-10)
    assert delta.shape == (model.num_params,)


def test_training_improves_likelihood():
    data = mfng.bars_stripes_patterns(2, 2)
    model = mfng.DbmModel([4, 3], np.zeros(7))
    rng = np.random.default_rng(5)
    model.set_params(rng.normal(scale=0.05, size=model.num_params))
    before = mfng.exact_loglik(model, data)
    config = mfng.TrainConfig()
    config.batch_size = data.shape[0]
    config.epochs = 200
    config.learning_rate = 0.05
    config.seed = 1
    pool = mfng.ChainPool(model, 32, config.seed)
    mfng.train(model, data, config, pool)
    assert mfng.exact_loglik(model, data) > before


def test_ais_estimates_small_model():
    model = mfng.DbmModel([4, 3], np.zeros(7))
    rng = np.random.default_rng(6)
    model.set_params(rng.normal(scale=0.1, size=model.num_params))
    config = mfng.AisConfig()
    config.n_particles = 100
    config.betas = mfng.linear_betas(300)
    config.seed = 2
    result = mfng.ais_log_z(model, np.zeros(4), config)
    assert result.log_z == pytest.approx(mfng.exact_log_z(model), abs=0.05)


def test_checkpoint_roundtrip(tmp_path):
    model = mfng.DbmModel([3, 2], np.full(5, 0.25))
    rng = np.random.default_rng(7)
    model.set_params(rng.normal(size=model.num_params))
    path = str(tmp_path / "model.ckpt")
    mfng.save_checkpoint(path, model)
    back = mfng.load_checkpoint(path)
    assert np.array_equal(back.params(), model.params())
    assert np.array_equal(back.unit_offset(), model.unit_offset())


def test_run_experiment_writes_metrics(tmp_path):
    config = {
        "model": {"layer_sizes": [6, 4]},
        "train": {
            "algorithm": "mfng",
            "batch_size": 8,
            "epochs": 2,
            "seed": 3,
            "chains": 16,
        },
        "data": {"source": "bars_stripes", "rows": 2, "cols": 3, "size": 32},
        "eval": {"every": 1},
        "output_dir": str(tmp_path / "run"),
    }
    assert mfng.run_experiment(json.dumps(config)) == 0
    metrics = (tmp_path / "run" / "metrics.csv").read_text().strip().splitlines()
    assert metrics[0].startswith("epoch,cpu_seconds,updates,train_loglik")
    assert len(metrics) == 4  # header + epochs 0..2
