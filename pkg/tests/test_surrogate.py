import json
import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from qrwsearch import surrogate
from qrwsearch.errors import FormatError, TrainingError, ValidationError
from qrwsearch.surrogate import (
    MlpModel,
    TrainConfig,
    TrainReport,
    forward,
    grid_search,
    init_model,
    load_model,
    loss_and_gradient,
    predict,
    predict_p,
    prediction_grid,
    save_grid,
    save_history,
    save_model,
    save_prediction_grid,
    scale_inputs,
    selu,
    train,
)
from qrwsearch.sweep import Dataset, DatasetMeta, SweepRecord, generate


def _dataset(n, angles, p):
    k_eq1 = {1: 3, 2: 5, 3: 18}[n]
    records = [SweepRecord(phi, zeta, n, p, k_eq1) for phi, zeta in angles]
    return Dataset(records, DatasetMeta(n=n, samples=len(records)))


@pytest.fixture(scope="module")
def constant_dataset():
    rng = np.random.default_rng(0)
    return _dataset(1, rng.uniform(0, 2 * math.pi, (1000, 2)), 0.3)


@pytest.fixture(scope="module")
def small_sweep():
    return generate(1, 300, seed=3)


@pytest.fixture
def random_inputs():
    rng = np.random.default_rng(9)
    return rng.uniform(0, 2 * math.pi, (100, 2))


class TestModel(object):
    def test_parameter_count(self):
        model = init_model(2, 7, 15, seed=1)
        assert model.parameter_count() == 1501
        assert model.shapes()[0] == (2, 15)
        assert model.shapes()[-1] == (15, 1)

    def test_same_seed_same_weights(self):
        first, second = init_model(3, 2, 4, seed=5), init_model(3, 2, 4, seed=5)
        for a, b in zip(first.weights, second.weights):
            assert_array_equal(a, b)

    @pytest.mark.parametrize("args", [(1, 2, 4), (4, 2, 4), (2, 0, 4), (2, 2, 0)])
    def test_rejects_bad_shape(self, args):
        with pytest.raises(ValidationError) as excinfo:
            init_model(*args, seed=0)
        assert excinfo.value.kind == "shape"

    def test_selu_constants(self):
        assert selu(np.array([1.0]))[0] == pytest.approx(1.0507009873554805)
        assert selu(np.array([-50.0]))[0] == pytest.approx(
            -1.0507009873554805 * 1.6732632423543772
        )

    def test_zero_model_predicts_half(self):
        model = init_model(2, 3, 4, seed=0)
        for w in model.weights:
            w[:] = 0.0
        assert forward(model, [1.0, 2.0]) == 0.5

    def test_inputs_are_scaled(self):
        model = init_model(3, 1, 2, seed=0)
        scaled = scale_inputs(model, [[2 * math.pi, math.pi, 4.0]])
        assert_allclose(scaled, [[1.0, 0.5, 0.5]])

    def test_wrong_input_width(self):
        model = init_model(2, 1, 2, seed=0)
        with pytest.raises(ValidationError):
            forward(model, [1.0, 2.0, 3.0])
        with pytest.raises(ValidationError):
            forward(model, [[1.0, 2.0]])

    def test_continuous(self):
        model = init_model(2, 3, 8, seed=4)
        x = np.array([1.3, 4.2])
        h = 1e-6
        slope = abs(forward(model, x + [h, 0]) - forward(model, x - [h, 0])) / (2 * h)
        change = abs(forward(model, x) - forward(model, x + [h, 0]))
        assert change <= 2 * slope * h + 1e-12

    def test_outputs_in_unit_interval(self, random_inputs):
        p = predict(init_model(2, 4, 6, seed=2), random_inputs)
        assert p.shape == (100,)
        assert np.all((p > 0) & (p < 1))

    @pytest.mark.parametrize("logit", [-1000.0, 1000.0])
    def test_saturated_output_stays_inside_unit_interval(self, logit):
        model = init_model(2, 2, 3, seed=0)
        model.biases[-1][:] = logit
        p = forward(model, [1.0, 2.0])
        assert 0.0 < p < 1.0
        assert min(p, 1.0 - p) == pytest.approx(surrogate.OUTPUT_MARGIN, rel=1e-3)


class TestGradient(object):
    def test_matches_central_differences(self):
        rng = np.random.default_rng(21)
        model = init_model(2, 2, 5, seed=21)
        for b in model.biases:
            b[:] = rng.normal(0, 0.1, b.shape)
        scaled = scale_inputs(model, rng.uniform(0, 2 * math.pi, (20, 2)))
        targets = rng.uniform(0, 1, 20)

        _, grad_w, grad_b = loss_and_gradient(model, scaled, targets)
        analytic, numeric = [], []
        h = 1e-6
        for param, grad in zip(model.weights + model.biases, grad_w + grad_b):
            for index in np.ndindex(param.shape):
                original = param[index]
                param[index] = original + h
                plus, _, _ = loss_and_gradient(model, scaled, targets)
                param[index] = original - h
                minus, _, _ = loss_and_gradient(model, scaled, targets)
                param[index] = original
                analytic.append(grad[index])
                numeric.append((plus - minus) / (2 * h))

        analytic, numeric = np.array(analytic), np.array(numeric)
        error = np.max(np.abs(analytic - numeric)) / np.max(np.abs(analytic))
        assert error <= 1e-5


class TestTrainConfig(object):
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"train_fraction": 1.0},
            {"train_fraction": 0.0},
            {"batch_size": 0},
            {"epochs": 0},
            {"patience": 0},
            {"learning_rate": 0.0},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError) as excinfo:
            TrainConfig(**kwargs)
        assert excinfo.value.kind == "config"


class TestTrain(object):
    def test_fits_constant(self, constant_dataset):
        config = TrainConfig(
            epochs=200, batch_size=100, learning_rate=5e-3, patience=200, seed=1
        )
        model, report = train(constant_dataset, 2, 1, 5, config)
        assert report.best_val_loss <= 1e-6
        assert forward(model, [1.0, 5.0]) == pytest.approx(0.3, abs=1e-2)

    def test_keeps_best_epoch(self, small_sweep):
        config = TrainConfig(epochs=15, batch_size=32, learning_rate=1e-2, seed=2)
        model, report = train(small_sweep, 2, 2, 6, config)
        assert len(report.train_loss) == len(report.val_loss) == 15
        assert report.best_epoch == int(np.argmin(report.val_loss))
        assert model.metadata["best_epoch"] == report.best_epoch
        assert model.metadata["best_val_loss"] == report.best_val_loss
        assert model.metadata["n"] == [1]
        assert model.metadata["seed"] == 2

    def test_deterministic(self, small_sweep):
        config = TrainConfig(epochs=3, batch_size=64, seed=8)
        first, first_report = train(small_sweep, 2, 2, 4, config)
        second, second_report = train(small_sweep, 2, 2, 4, config)
        assert first_report.val_loss == second_report.val_loss
        for a, b in zip(first.weights, second.weights):
            assert_array_equal(a, b)

    def test_early_stopping(self, constant_dataset):
        config = TrainConfig(
            epochs=500, batch_size=500, learning_rate=0.5, patience=1, seed=0
        )
        _, report = train(constant_dataset, 2, 1, 3, config)
        assert len(report.val_loss) < 500
        assert len(report.val_loss) - 1 - report.best_epoch == 1

    def test_non_finite_targets(self):
        dataset = _dataset(1, [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)], float("nan"))
        with pytest.raises(TrainingError) as excinfo:
            train(dataset, 2, 1, 2, TrainConfig(epochs=2, batch_size=2))
        assert excinfo.value.kind == "nonfinite"

    def test_two_inputs_reject_mixed_qubits(self, small_sweep):
        other = _dataset(2, [(1.0, 1.0), (2.0, 2.0)], 0.2)
        with pytest.raises(ValidationError):
            train([small_sweep, other], 2, 1, 2, TrainConfig(epochs=1))

    def test_three_inputs_take_several_qubits(self, small_sweep):
        other = _dataset(2, [(1.0, 1.0), (2.0, 2.0), (3.0, 1.5)], 0.2)
        model, _ = train([small_sweep, other], 3, 1, 3, TrainConfig(epochs=2))
        assert model.input_dim == 3
        assert model.metadata["n"] == [1, 2]

    def test_too_little_data(self):
        with pytest.raises(ValidationError):
            train(_dataset(1, [(1.0, 1.0)], 0.2), 2, 1, 2)


class TestGridSearch(object):
    def test_shape(self, small_sweep):
        losses = grid_search(small_sweep, [1, 2], [2, 3, 4], TrainConfig(epochs=2))
        assert losses.shape == (2, 3)
        assert np.all(np.isfinite(losses))

    def test_failed_cell_is_nan(self, small_sweep, monkeypatch, caplog):
        real_train = surrogate.train

        def flaky(datasets, input_dim, layers, neurons, config):
            if neurons == 3:
                raise TrainingError("diverged", module="surrogate")
            return real_train(datasets, input_dim, layers, neurons, config)

        monkeypatch.setattr(surrogate, "train", flaky)
        with caplog.at_level(logging.WARNING):
            losses = grid_search(small_sweep, [1], [2, 3], TrainConfig(epochs=1))
        assert np.isfinite(losses[0, 0])
        assert np.isnan(losses[0, 1])
        assert "L=1 N=3 failed" in caplog.text

    def test_empty_range(self, small_sweep):
        with pytest.raises(ValidationError):
            grid_search(small_sweep, [], [2])

    def test_grid_csv(self, tmp_path):
        path = tmp_path / "grid.csv"
        save_grid(np.array([[0.5, np.nan]]), [3], [4, 5], path)
        assert path.read_text().splitlines() == ["L,N,val_loss", "3,4,0.5", "3,5,"]


class TestPredict(object):
    def test_two_input_model_takes_no_n(self):
        model = init_model(2, 1, 3, seed=0)
        assert 0 < predict_p(model, 1.0, 2.0) < 1
        with pytest.raises(ValidationError) as excinfo:
            predict_p(model, 1.0, 2.0, 2)
        assert excinfo.value.kind == "input"

    def test_three_input_model_needs_n(self):
        model = init_model(3, 1, 3, seed=0)
        with pytest.raises(ValidationError):
            predict_p(model, 1.0, 2.0)
        assert predict_p(model, 1.0, 2.0, 2) == forward(model, [1.0, 2.0, 2.0])

    def test_extrapolation_warns(self, caplog):
        model = init_model(3, 1, 3, seed=0)
        with caplog.at_level(logging.WARNING):
            predict_p(model, 1.0, 2.0, 4)
        assert "outside the training data" in caplog.text

    def test_prediction_grid(self, tmp_path):
        model = init_model(3, 1, 3, seed=0)
        phis, zetas, p = prediction_grid(model, 5, n=2)
        assert phis.shape == zetas.shape == p.shape == (25,)
        assert zetas[5] == pytest.approx(math.pi / 2)
        assert p[7] == pytest.approx(predict_p(model, phis[7], zetas[7], 2))

        path = tmp_path / "pred.csv"
        save_prediction_grid(phis, zetas, p, 2, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "phi,zeta,n,p"
        assert len(lines) == 26


class TestModelFile(object):
    def test_round_trip_is_exact(self, tmp_path, random_inputs):
        model = init_model(2, 3, 7, seed=12)
        model.metadata.update({"n": [2], "best_val_loss": 1.5e-5})
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        expected = predict(model, random_inputs)
        assert_array_equal(predict(loaded, random_inputs), expected)
        assert loaded.metadata == model.metadata
        assert (loaded.hidden_layers, loaded.neurons) == (3, 7)

    def test_self_describing(self, tmp_path):
        path = tmp_path / "model.json"
        save_model(init_model(3, 1, 2, seed=0), path)
        document = json.loads(path.read_text())
        assert document["activations"] == {"hidden": "selu", "output": "sigmoid"}
        assert document["input_scaling"] == [2 * math.pi, 2 * math.pi, 8.0]
        assert len(document["layers"]) == 2

    def test_truncated(self, tmp_path):
        path = tmp_path / "model.json"
        save_model(init_model(2, 1, 2, seed=0), path)
        path.write_text(path.read_text()[:40])
        with pytest.raises(FormatError):
            load_model(path)

    def test_wrong_version(self, tmp_path):
        path = tmp_path / "model.json"
        save_model(init_model(2, 1, 2, seed=0), path)
        document = json.loads(path.read_text())
        document["version"] = 99
        path.write_text(json.dumps(document))
        with pytest.raises(FormatError) as excinfo:
            load_model(path)
        assert excinfo.value.kind == "version"

    def test_shape_mismatch(self, tmp_path):
        path = tmp_path / "model.json"
        save_model(init_model(2, 1, 2, seed=0), path)
        document = json.loads(path.read_text())
        document["neurons"] = 3
        path.write_text(json.dumps(document))
        with pytest.raises(FormatError) as excinfo:
            load_model(path)
        assert excinfo.value.kind == "shape"

    def test_history_csv(self, tmp_path):
        path = tmp_path / "history.csv"
        save_history(TrainReport([0.5, 0.25], [0.75, 0.125], 1), path)
        assert path.read_text().splitlines() == [
            "epoch,train_loss,val_loss",
            "0,0.5,0.75",
            "1,0.25,0.125",
        ]


def test_model_is_plain_data():
    model = init_model(2, 1, 2, seed=0)
    clone = model.copy()
    clone.weights[0][0, 0] += 1.0
    assert isinstance(clone, MlpModel)
    assert model.weights[0][0, 0] != clone.weights[0][0, 0]


@pytest.mark.slow
class TestReferenceTraining(object):
    def test_two_qubit_surrogate(self):
        dataset = generate(2, 300000, seed=2024, workers=4)
        model, report = train(dataset, 2, 9, 13, TrainConfig(seed=0))
        assert report.best_val_loss <= 1e-4
        assert predict_p(model, math.pi, math.pi) == pytest.approx(0.390625, abs=0.02)

    def test_larger_network_fits_better(self):
        dataset = generate(2, 20000, seed=11)
        config = TrainConfig(epochs=100, seed=0)
        losses = grid_search(dataset, [1, 9], [5, 13], config)
        assert losses[1, 1] < losses[0, 0]

    def test_combined_model(self):
        datasets = [generate(n, 100000, seed=2024 + n, workers=4) for n in (1, 2, 3)]
        model, _ = train(datasets, 3, 7, 24, TrainConfig(seed=0))
        assert predict_p(model, math.pi, math.pi, 3) == pytest.approx(0.4345, abs=0.03)
        assert predict_p(model, 0.0, 0.0, 2) == pytest.approx(0.0625, abs=0.05)
        assert 0.0 < predict_p(model, math.pi, math.pi, 4) < 1.0

    def test_three_qubit_grid_search(self):
        dataset = generate(3, 20000, seed=5, workers=4)
        config = TrainConfig(epochs=100, seed=0)
        losses = grid_search(dataset, [1, 7], [5, 22], config)
        chosen = losses[1, 1]
        assert chosen <= 2 * np.nanmin(losses)
        assert losses[0, 0] >= chosen
