import csv
import logging
import math
import pickle

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qrwsearch import api
from qrwsearch.api import (
    ModelEvaluator,
    SimulatorEvaluator,
    fit_ridge,
    reproduce_tables,
)
from qrwsearch.errors import QrwsError, ValidationError
from qrwsearch.optimize import DEConfig, SobolConfig
from qrwsearch.surrogate import init_model
from qrwsearch.walk import run


QUICK_DE = DEConfig(population=8, generations=5)
QUICK_SOBOL = SobolConfig(samples=8, top_k=1)


def read_rows(path):
    with open(path, newline="") as stream:
        return list(csv.DictReader(stream))


class TestSimulatorEvaluator(object):
    def test_matches_run(self):
        evaluator = SimulatorEvaluator(2, marked=(5,))
        assert evaluator(1.0, 2.0) == run(2, 1.0, 2.0, {5}).probability
        assert evaluator.steps == 5
        assert not evaluator.surrogate

    def test_many_matches_single(self):
        evaluator = SimulatorEvaluator(2)
        phis, zetas = np.array([0.5, math.pi]), np.array([1.5, math.pi])
        expected = [evaluator(phi, zeta) for phi, zeta in zip(phis, zetas)]
        assert_allclose(evaluator.many(phis, zetas), expected, atol=1e-12)

    def test_capacity(self):
        with pytest.raises(ValidationError):
            SimulatorEvaluator(3, max_qubits=2)

    def test_picklable(self):
        evaluator = pickle.loads(pickle.dumps(SimulatorEvaluator(1)))
        assert evaluator(math.pi, math.pi) == pytest.approx(0.25, abs=1e-3)


class TestModelEvaluator(object):
    def test_two_input_model(self):
        model = init_model(2, 1, 3, seed=0)
        model.metadata["n"] = [2]
        evaluator = ModelEvaluator(model, 2)
        assert evaluator.surrogate
        values = evaluator.many([1.0, 2.0], [3.0, 4.0])
        assert values[1] == pytest.approx(evaluator(2.0, 4.0))

    def test_two_input_model_refuses_other_n(self):
        model = init_model(2, 1, 3, seed=0)
        model.metadata["n"] = [2]
        with pytest.raises(ValidationError) as excinfo:
            ModelEvaluator(model, 3)
        assert excinfo.value.kind == "input"

    def test_three_input_model_feeds_n(self):
        model = init_model(3, 1, 3, seed=0)
        model.metadata["n"] = [1, 2, 3]
        two, three = ModelEvaluator(model, 2), ModelEvaluator(model, 3)
        assert two(1.0, 1.0) != three(1.0, 1.0)

    def test_extrapolation_warns(self, caplog):
        model = init_model(3, 1, 3, seed=0)
        with caplog.at_level(logging.WARNING):
            ModelEvaluator(model, 4)
        assert "outside its training range" in caplog.text


class TestFitRidge(object):
    def test_two_qubits(self):
        fit, ridge = fit_ridge(SimulatorEvaluator(2), grid_size=41)
        assert len(ridge) == 41
        assert 3 <= fit.points < 41
        assert fit.alpha < 0

    def test_one_qubit_band_skips_sawtooth(self):
        fit, _ = fit_ridge(SimulatorEvaluator(1), grid_size=41)
        assert -0.65 <= fit.alpha <= -0.40
        assert fit.rms_residual <= 0.05


class TestReproduceTables(object):
    def test_small_run(self, tmp_path):
        optima, alphas = reproduce_tables(
            tmp_path / "tables",
            qubits=[1, 2],
            de_config=QUICK_DE,
            sobol_config=QUICK_SOBOL,
            grid_size=41,
        )
        rows = read_rows(optima)
        assert [(row["method"], row["n"]) for row in rows] == [
            ("sobol", "1"),
            ("de", "1"),
            ("theoretical", "1"),
            ("grover", "1"),
            ("sobol", "2"),
            ("de", "2"),
            ("grover", "2"),
        ]
        assert rows[2]["p"] == "0.5"
        assert rows[2]["phi"] == "NA"
        assert float(rows[6]["p"]) == pytest.approx(0.390625, abs=1e-9)

        fits = read_rows(alphas)
        assert [row["n"] for row in fits] == ["1", "2"]
        assert all(row["alpha_dnn"] == "NA" for row in fits)
        assert float(fits[1]["alpha_mc"]) < 0

    def test_model_rows_report_simulated_p(self, tmp_path):
        model = init_model(2, 1, 3, seed=0)
        model.metadata["n"] = [1]
        optima, alphas = reproduce_tables(
            tmp_path,
            models={1: model},
            qubits=[1],
            de_config=QUICK_DE,
            sobol_config=QUICK_SOBOL,
            grid_size=17,
        )
        de_row = [row for row in read_rows(optima) if row["method"] == "de"][0]
        p = run(1, float(de_row["phi"]), float(de_row["zeta"]), {0}).probability
        assert float(de_row["p"]) == pytest.approx(p, abs=1e-15)
        assert read_rows(alphas)[0]["alpha_dnn"] != ""

    def test_failed_cells_are_missing(self, tmp_path, monkeypatch):
        def broken(*args, **kwargs):
            raise QrwsError("no convergence", module="optimize")

        monkeypatch.setattr(api, "maximize_probability", broken)
        optima, _ = reproduce_tables(
            tmp_path, qubits=[1], de_config=QUICK_DE, grid_size=17
        )
        rows = read_rows(optima)
        assert rows[0] == {
            "method": "sobol",
            "n": "1",
            "phi": "NA",
            "zeta": "NA",
            "p": "NA",
        }
        assert rows[-1]["method"] == "grover"

    def test_unavailable_qubits(self, tmp_path):
        with pytest.raises(ValidationError):
            reproduce_tables(tmp_path, qubits=[4], grid_size=17)
