"""Derivative-free global maximization of the success probability over (phi, zeta)

Both strategies wrap scipy: differential evolution runs
``scipy.optimize.differential_evolution`` with the rand/1/bin strategy, the
multistart strategy evaluates a scrambled Sobol point set from
``scipy.stats.qmc`` and polishes the best seeds with bounded Nelder-Mead.
Objectives are maximized; scipy minimizes the negated value.
"""
import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from qrwsearch.errors import ValidationError
from qrwsearch.walk import k_iterations, run


DE_METHOD = "de"
SOBOL_METHOD = "sobol"
METHOD_ALIASES = {
    "de": DE_METHOD,
    "differential_evolution": DE_METHOD,
    "differential-evolution": DE_METHOD,
    "sobol": SOBOL_METHOD,
    "sobol_multistart": SOBOL_METHOD,
    "sobol-multistart": SOBOL_METHOD,
}
RESULT_HEADER = ["method", "n", "phi", "zeta", "value", "evals"]
TWO_PI = 2.0 * math.pi


logger = logging.getLogger(__name__)


Objective = Callable[..., float]


@dataclass(frozen=True)
class Bounds:
    """Closed box ``[lower[i], upper[i]]`` per dimension"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValidationError(
                f"Bounds need matching non-empty limits, got {self.lower} and "
                f"{self.upper}",
                module="optimize",
                kind="bounds",
            )
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValidationError(
                    f"Lower bound {lo} is not below upper bound {hi}",
                    module="optimize",
                    kind="bounds",
                )

    @classmethod
    def phases(cls) -> "Bounds":
        """``[0, 2pi]^2``"""
        return cls((0.0, 0.0), (TWO_PI, TWO_PI))

    @property
    def dim(self) -> int:
        return len(self.lower)

    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.lower, self.upper))


@dataclass(frozen=True)
class OptResult:
    """Outcome of a maximization

    Attributes:
        point: The argmax
        value: The objective re-evaluated at ``point``
        evaluations: Objective calls, the re-evaluation included
        method: ``de`` or ``sobol``
        simulated: Direct-simulation probability at ``point`` when the objective
            was a surrogate model
    """

    point: Tuple[float, ...]
    value: float
    evaluations: int
    method: str
    simulated: Optional[float] = None


@dataclass(frozen=True)
class DEConfig:
    population: int = 30
    generations: int = 200
    mutation: float = 0.8
    recombination: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.population < 4 or self.generations < 1:
            raise ValidationError(
                f"Need population >= 4 and generations >= 1, got "
                f"{self.population} and {self.generations}",
                module="optimize",
                kind="config",
            )
        if not (0.0 < self.mutation <= 2.0 and 0.0 <= self.recombination <= 1.0):
            raise ValidationError(
                f"Mutation must lie in (0, 2] and recombination in [0, 1], got "
                f"{self.mutation} and {self.recombination}",
                module="optimize",
                kind="config",
            )


@dataclass(frozen=True)
class SobolConfig:
    samples: int = 256
    top_k: int = 4
    seed: int = 0

    def __post_init__(self):
        if not self.samples >= self.top_k >= 1:
            raise ValidationError(
                f"Need samples >= top_k >= 1, got samples={self.samples}, "
                f"top_k={self.top_k}",
                module="optimize",
                kind="config",
            )


class _Negated(object):
    """Counts calls and turns a maximization objective into a minimization one"""

    def __init__(self, objective: Objective):
        self.objective = objective
        self.calls = 0

    def value(self, point: Sequence[float]) -> float:
        self.calls += 1
        return float(self.objective(*point))

    def __call__(self, point: np.ndarray) -> float:
        value = self.value(point)
        # rejected candidates: never selected by the minimizer
        return -value if math.isfinite(value) else math.inf


def _finish(negated: _Negated, point: np.ndarray, method: str) -> OptResult:
    point = tuple(float(x) for x in point)
    value = negated.value(point)
    logger.info(
        f"{method}: best value {value:.6f} at {point} after {negated.calls} "
        f"evaluations"
    )
    return OptResult(point, value, negated.calls, method)


def differential_evolution(
    objective: Objective, bounds: Bounds, config: Optional[DEConfig] = None
) -> OptResult:
    """Maximize ``objective(*point)`` over ``bounds`` by differential evolution

    Args:
        objective: Called with one positional argument per dimension
        bounds: Search box
        config (optional): Population, generations, mutation ``F``,
            recombination ``CR`` and seed

    Returns:
        The best member of the final population; deterministic per seed
    """
    config = config or DEConfig()
    negated = _Negated(objective)
    result = optimize.differential_evolution(
        negated,
        bounds.pairs(),
        strategy="rand1bin",
        popsize=math.ceil(config.population / bounds.dim),
        maxiter=config.generations,
        mutation=config.mutation,
        recombination=config.recombination,
        seed=config.seed,
        polish=False,
        tol=0.0,
        atol=0.0,
    )
    logger.debug(f"differential evolution stopped: {result.message}")
    return _finish(negated, result.x, DE_METHOD)


def sobol_points(bounds: Bounds, samples: int, seed: int) -> np.ndarray:
    """The first ``samples`` points of a scrambled Sobol sequence scaled to the box"""
    sampler = qmc.Sobol(d=bounds.dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # sample counts need not be powers of two here
        warnings.simplefilter("ignore", UserWarning)
        unit = sampler.random(samples)
    return qmc.scale(unit, bounds.lower, bounds.upper)


def sobol_multistart(
    objective: Objective, bounds: Bounds, config: Optional[SobolConfig] = None
) -> OptResult:
    """Maximize by Sobol sampling followed by simplex refinement of the best seeds

    The ``top_k`` best Sobol points (ties broken by sequence order) each start a
    bounded Nelder-Mead search; the best refined point wins.
    """
    config = config or SobolConfig()
    negated = _Negated(objective)

    points = sobol_points(bounds, config.samples, config.seed)
    scores = np.array([negated(point) for point in points])
    starts = np.argsort(scores, kind="stable")[: config.top_k]
    logger.debug(f"Sobol seeds {starts.tolist()}, values {(-scores[starts]).tolist()}")

    best_point, best_score = points[starts[0]], scores[starts[0]]
    for start in starts:
        local = optimize.minimize(
            negated,
            points[start],
            method="Nelder-Mead",
            bounds=bounds.pairs(),
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 2000},
        )
        if local.fun < best_score:
            best_point, best_score = local.x, local.fun

    return _finish(negated, best_point, SOBOL_METHOD)


def resolve_method(method: str) -> str:
    try:
        return METHOD_ALIASES[method.lower()]
    except KeyError:
        raise ValidationError(
            f"Unknown method {method!r}; choose from {sorted(METHOD_ALIASES)}",
            module="optimize",
            kind="method",
        )


def maximize_probability(
    evaluator: Objective,
    n: int,
    method: str = DE_METHOD,
    config: Optional[Union[DEConfig, SobolConfig]] = None,
) -> OptResult:
    """Search ``[0, 2pi]^2`` for the coin phases with the highest success probability

    Args:
        evaluator: ``(phi, zeta) -> p``, either the simulator or a surrogate
        n: Number of coin qubits the evaluator describes
        method: ``de`` or ``sobol``
        config (optional): Settings of the chosen method

    Returns:
        The optimum; for a surrogate evaluator ``simulated`` holds the
        direct-simulation probability at the argmax
    """
    method = resolve_method(method)
    bounds = Bounds.phases()
    if method == DE_METHOD:
        if config is not None and not isinstance(config, DEConfig):
            raise ValidationError(
                "Differential evolution needs a DEConfig",
                module="optimize",
                kind="config",
            )
        result = differential_evolution(evaluator, bounds, config)
    else:
        if config is not None and not isinstance(config, SobolConfig):
            raise ValidationError(
                "Sobol multistart needs a SobolConfig", module="optimize", kind="config"
            )
        result = sobol_multistart(evaluator, bounds, config)

    if getattr(evaluator, "surrogate", False):
        phi, zeta = result.point
        simulated = run(n, phi, zeta, (0,), steps=k_iterations(n)).probability
        logger.info(
            f"Simulated p={simulated:.6f} at the surrogate optimum "
            f"(gap {result.value - simulated:+.2e})"
        )
        result = OptResult(
            result.point, result.value, result.evaluations, result.method, simulated
        )
    return result


def save_result(result: OptResult, n: int, path: Path):
    """Write the single-row ``method,n,phi,zeta,value,evals`` CSV"""
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(RESULT_HEADER)
        writer.writerow(
            [
                result.method,
                n,
                f"{result.point[0]:.17g}",
                f"{result.point[1]:.17g}",
                f"{result.value:.17g}",
                result.evaluations,
            ]
        )
