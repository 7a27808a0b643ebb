import csv
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from qrwsearch.errors import QrwsError, ValidationError
from qrwsearch.optimize import (
    DE_METHOD,
    SOBOL_METHOD,
    DEConfig,
    SobolConfig,
    maximize_probability,
)
from qrwsearch.ridge import (
    DEFAULT_BAND,
    DEFAULT_GRID,
    AlphaFit,
    RidgePoint,
    extract_ridge,
    fit_alpha,
    high_probability_band,
)
from qrwsearch.surrogate import TRAINED_QUBITS, MlpModel, predict
from qrwsearch.walk import (
    DEFAULT_MAX_QUBITS,
    check_qubits,
    k_iterations,
    run,
    run_batch,
)


MISSING = "NA"
OPTIMA_HEADER = ["method", "n", "phi", "zeta", "p"]
ALPHA_HEADER = ["n", "alpha_mc", "alpha_dnn"]
# ridge fits against the simulator get too expensive beyond this
SIMULATED_FIT_MAX_QUBITS = 3
GROVER_METHOD = "grover"
THEORETICAL_METHOD = "theoretical"


logger = logging.getLogger(__name__)


class SimulatorEvaluator(object):
    """Success probability ``(phi, zeta) -> p`` by direct simulation

    Args:
        n: Number of coin qubits
        marked (optional): Marked nodes
        max_qubits (optional): Largest ``n`` allowed (memory cap)
    """

    surrogate = False

    def __init__(
        self,
        n: int,
        marked: Iterable[int] = (0,),
        max_qubits: int = DEFAULT_MAX_QUBITS,
    ):
        check_qubits(n, max_qubits)
        self.n = n
        self.marked = tuple(sorted(marked))
        self.max_qubits = max_qubits
        self.steps = k_iterations(n)

    def __call__(self, phi: float, zeta: float) -> float:
        result = run(
            self.n, phi, zeta, self.marked, steps=self.steps, max_qubits=self.max_qubits
        )
        return result.probability

    def many(self, phis: Sequence[float], zetas: Sequence[float]) -> np.ndarray:
        return run_batch(
            self.n,
            phis,
            zetas,
            self.marked,
            steps=self.steps,
            max_qubits=self.max_qubits,
        )


class ModelEvaluator(object):
    """Success probability ``(phi, zeta) -> p`` predicted by a surrogate model

    Args:
        model: A trained network
        n: Number of coin qubits; fed to three-input models, checked against the
            training data of two-input models
    """

    surrogate = True

    def __init__(self, model: MlpModel, n: int):
        trained = list(model.metadata.get("n", []))
        if model.input_dim == 2 and trained and n not in trained:
            raise ValidationError(
                f"Model was trained for n={trained}, not n={n}",
                module="surrogate",
                kind="input",
            )
        if model.input_dim == 3 and n not in (trained or TRAINED_QUBITS):
            logger.warning(
                f"Evaluating the combined model at n={n}, outside its training "
                f"range {trained or list(TRAINED_QUBITS)}; predictions are advisory"
            )
        self.model = model
        self.n = n

    def _inputs(self, phis: np.ndarray, zetas: np.ndarray) -> np.ndarray:
        columns = [phis, zetas]
        if self.model.input_dim == 3:
            columns.append(np.full(phis.shape, float(self.n)))
        return np.column_stack(columns)

    def __call__(self, phi: float, zeta: float) -> float:
        inputs = self._inputs(
            np.array([phi], dtype=float), np.array([zeta], dtype=float)
        )
        return float(predict(self.model, inputs)[0])

    def many(self, phis: Sequence[float], zetas: Sequence[float]) -> np.ndarray:
        phis = np.asarray(phis, dtype=float).reshape(-1)
        zetas = np.asarray(zetas, dtype=float).reshape(-1)
        return predict(self.model, self._inputs(phis, zetas))


Evaluator = Union[SimulatorEvaluator, ModelEvaluator]


def fit_ridge(
    evaluator: Evaluator,
    grid_size: int = DEFAULT_GRID,
    band: float = DEFAULT_BAND,
) -> Tuple[AlphaFit, List[RidgePoint]]:
    """Extract the ridge of ``evaluator`` and fit alpha to its high-probability band

    Returns:
        The fit and the full (unfiltered) ridge
    """
    ridge = extract_ridge(evaluator, evaluator.n, grid_size)
    selected = high_probability_band(ridge, evaluator.n, band)
    logger.debug(f"Fitting alpha to {len(selected)} of {len(ridge)} ridge points")
    return fit_alpha(selected), ridge


def _format(value: Optional[float]) -> str:
    return MISSING if value is None else f"{value:.17g}"


def _optimum_rows(
    n: int,
    evaluator: Evaluator,
    de_config: Optional[DEConfig],
    sobol_config: Optional[SobolConfig],
) -> List[List[Union[str, int]]]:
    rows: List[List[Union[str, int]]] = []
    for method, config in ((SOBOL_METHOD, sobol_config), (DE_METHOD, de_config)):
        try:
            result = maximize_probability(evaluator, n, method, config)
        except QrwsError as error:
            logger.warning(f"Optimum cell ({method}, n={n}) failed: {error}")
            rows.append([method, n, MISSING, MISSING, MISSING])
            continue
        p = result.value if result.simulated is None else result.simulated
        phi, zeta = result.point
        rows.append([method, n, _format(phi), _format(zeta), _format(p)])

    if n == 1:
        rows.append([THEORETICAL_METHOD, n, MISSING, MISSING, _format(0.5)])
    grover = run(n, math.pi, math.pi, (0,), steps=k_iterations(n)).probability
    rows.append([GROVER_METHOD, n, _format(math.pi), _format(math.pi), _format(grover)])
    return rows


def _fitted_alpha(evaluator: Evaluator, grid_size: int, band: float) -> Optional[float]:
    try:
        fit, _ = fit_ridge(evaluator, grid_size, band)
    except QrwsError as error:
        logger.warning(f"Alpha fit for n={evaluator.n} failed: {error}")
        return None
    return fit.alpha


def _write_table(path: Path, header: List[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {path}")


def reproduce_tables(
    out_dir: Path,
    models: Optional[Mapping[int, MlpModel]] = None,
    qubits: Sequence[int] = TRAINED_QUBITS,
    de_config: Optional[DEConfig] = None,
    sobol_config: Optional[SobolConfig] = None,
    grid_size: int = DEFAULT_GRID,
    band: float = DEFAULT_BAND,
) -> Tuple[Path, Path]:
    """Write the optimum table ``table1.csv`` and the alpha table ``table2.csv``

    The optimum table lists, per ``n``, the Sobol multistart and differential evolution
    optima (found on the surrogate for ``n`` when ``models`` holds one, on the
    simulator otherwise; ``p`` is always the simulated probability), the Grover
    coin and, for ``n = 1``, the theoretical maximum 0.5. The alpha table lists alpha
    fitted to simulator ridges (``n <= 3``) and to surrogate ridges. Cells that
    cannot be computed are written as ``NA``.

    Args:
        out_dir: Directory receiving the two CSV files
        models (optional): Surrogate per ``n``
        qubits (optional): Coin sizes to tabulate
        de_config (optional): Differential evolution settings
        sobol_config (optional): Sobol multistart settings
        grid_size (optional): Ridge grid for the alpha fits
        band (optional): High-probability band used for the alpha fits

    Returns:
        Paths of ``table1.csv`` and ``table2.csv``
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    models = dict(models or {})

    def evaluators(n: int) -> Dict[str, Optional[Evaluator]]:
        simulated = SimulatorEvaluator(n) if n <= SIMULATED_FIT_MAX_QUBITS else None
        modelled = ModelEvaluator(models[n], n) if n in models else None
        return {"simulator": simulated, "model": modelled}

    optima = []
    for n in qubits:
        check_qubits(n)
        sources = evaluators(n)
        evaluator = sources["model"] or sources["simulator"]
        if evaluator is None:
            raise ValidationError(
                f"No evaluator available for n={n}", module="api", kind="n"
            )
        optima.extend(_optimum_rows(n, evaluator, de_config, sobol_config))

    alphas = []
    for n in sorted(set(qubits) | set(models)):
        sources = evaluators(n)
        fitted = [
            None if source is None else _fitted_alpha(source, grid_size, band)
            for source in (sources["simulator"], sources["model"])
        ]
        alphas.append([n] + [_format(alpha) for alpha in fitted])

    optima_path = out_dir / "table1.csv"
    alphas_path = out_dir / "table2.csv"
    _write_table(optima_path, OPTIMA_HEADER, optima)
    _write_table(alphas_path, ALPHA_HEADER, alphas)
    return optima_path, alphas_path
