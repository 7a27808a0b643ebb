"""Ridge of maximal success probability in the (phi, zeta) plane

The ridge is followed on the central branch ``zeta = -2 phi + 3 pi`` (the line
through the Grover point ``(pi, pi)``) and approximated by the sine-corrected
curve ``zeta = -2 phi + 3 pi + alpha sin(2 phi)``. This module extracts ridge
points from any evaluator, fits ``alpha``, evaluates probability profiles along
reference curves and measures how wide the high-probability band is in ``phi``.
"""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from qrwsearch.errors import FormatError, ValidationError


TWO_PI = 2.0 * math.pi
CENTRAL_OFFSET = 3.0 * math.pi
SCAN_POINTS = 256
SCAN_HALF_WIDTH = math.pi / 2.0
REFINE_TOLERANCE = 1e-4
DEFAULT_GRID = 201
MIN_RIDGE_GRID = 8
# share of the rise above the no-walk floor a ridge point needs to enter a fit
DEFAULT_BAND = 0.9
# sin(2 phi) below this carries no information about alpha
DEGENERATE_SINE = 1e-6

LINE32 = "line32"
LINE33 = "line33"
LINE34 = "line34"
SINE = "sine"
CURVE_KINDS = (LINE32, LINE33, LINE34, SINE)

# fitted alpha per coin size: (simulation data, network model)
REFERENCE_ALPHAS = {
    1: (-0.467, -0.535),
    2: (-0.149, -0.145),
    3: (-0.202, -0.204),
    4: (None, -0.248),
}


logger = logging.getLogger(__name__)


ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class CurveSpec:
    """A curve ``zeta(phi)`` in the phase plane

    Attributes:
        kind: ``line32`` (``-2 phi + pi + 2 k pi``), ``line33`` (``phi/2 + pi/2``),
            ``line34`` (``pi``) or ``sine`` (``-2 phi + 3 pi + alpha sin 2 phi``)
        k: Branch index of ``line32``
        alpha: Sine amplitude of ``sine``
    """

    kind: str
    k: int = 1
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValidationError(
                f"Unknown curve {self.kind!r}; choose from {CURVE_KINDS}",
                module="ridge",
                kind="curve",
            )
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)):
            raise ValidationError(
                f"Branch index must be an integer, got {self.k!r}",
                module="ridge",
                kind="curve",
            )
        if not math.isfinite(self.alpha):
            raise ValidationError(
                f"alpha must be finite, got {self.alpha}", module="ridge", kind="curve"
            )

    @classmethod
    def line32(cls, k: int = 1) -> "CurveSpec":
        return cls(LINE32, k=k)

    @classmethod
    def line33(cls) -> "CurveSpec":
        return cls(LINE33)

    @classmethod
    def line34(cls) -> "CurveSpec":
        return cls(LINE34)

    @classmethod
    def sine(cls, alpha: float) -> "CurveSpec":
        return cls(SINE, alpha=float(alpha))

    @property
    def label(self) -> str:
        if self.kind == LINE32:
            return f"{LINE32}:{self.k}"
        if self.kind == SINE:
            return f"{SINE}:{self.alpha:.6g}"
        return self.kind

    def unwrapped(self, phi: ArrayLike) -> ArrayLike:
        """``zeta`` before reduction modulo ``2 pi``"""
        if self.kind == LINE32:
            return -2.0 * phi + math.pi + 2.0 * self.k * math.pi
        if self.kind == LINE33:
            return phi / 2.0 + math.pi / 2.0
        if self.kind == LINE34:
            return math.pi + 0.0 * phi
        return -2.0 * phi + CENTRAL_OFFSET + self.alpha * np.sin(2.0 * phi)


@dataclass(frozen=True)
class RidgePoint:
    phi: float
    zeta_unwrapped: float
    p: float


@dataclass(frozen=True)
class AlphaFit:
    alpha: float
    rms_residual: float
    points: int


@dataclass
class Profile:
    """Probability along a curve, sampled on a uniform ``phi`` grid over ``[0, 2pi]``"""

    curve: CurveSpec
    phi: np.ndarray
    zeta: np.ndarray
    p: np.ndarray

    def __len__(self) -> int:
        return len(self.phi)


def wrap(zeta: ArrayLike) -> ArrayLike:
    """Reduce into ``[0, 2pi)``"""
    wrapped = np.mod(zeta, TWO_PI)
    # np.mod of a tiny negative number rounds up to exactly 2 pi
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def curve_zeta(spec: CurveSpec, phi: ArrayLike) -> ArrayLike:
    return wrap(spec.unwrapped(np.asarray(phi, dtype=float)))


def central_branch(phi: ArrayLike) -> ArrayLike:
    return -2.0 * phi + CENTRAL_OFFSET


def evaluate_many(
    evaluator: Callable[[float, float], float], phis: np.ndarray, zetas: np.ndarray
) -> np.ndarray:
    """Evaluate ``p`` pointwise, using the evaluator's vectorized path if it has one"""
    many = getattr(evaluator, "many", None)
    if many is not None:
        return np.asarray(many(phis, zetas), dtype=float)
    return np.array([evaluator(phi, zeta) for phi, zeta in zip(phis, zetas)])


def _check_evaluator(evaluator, n: int):
    bound = getattr(evaluator, "n", n)
    if bound != n:
        raise ValidationError(
            f"Evaluator describes n={bound}, asked for n={n}", module="ridge", kind="n"
        )


def phase_grid(grid_size: int) -> np.ndarray:
    return np.linspace(0.0, TWO_PI, grid_size)


def extract_ridge(
    evaluator: Callable[[float, float], float], n: int, grid_size: int = DEFAULT_GRID
) -> List[RidgePoint]:
    """Locate the maximum of ``p`` over ``zeta`` for every ``phi`` on a uniform grid

    The search is restricted to within ``pi/2`` of the central branch: a coarse
    scan of 256 points is refined by a bounded scalar search to ``1e-4`` rad.

    Args:
        evaluator: ``(phi, zeta) -> p``; may expose a vectorized ``many``
        n: Number of coin qubits the evaluator describes
        grid_size (optional): Number of ``phi`` values on ``[0, 2pi]``

    Returns:
        One ridge point per ``phi``, with ``zeta`` unwrapped onto the central branch
    """
    if grid_size < MIN_RIDGE_GRID:
        raise ValidationError(
            f"Ridge grid needs >= {MIN_RIDGE_GRID} points, got {grid_size}",
            module="ridge",
            kind="grid",
        )
    _check_evaluator(evaluator, n)

    phis = phase_grid(grid_size)
    offsets = np.linspace(-SCAN_HALF_WIDTH, SCAN_HALF_WIDTH, SCAN_POINTS)
    centers = central_branch(phis)
    scan_zetas = centers[:, np.newaxis] + offsets[np.newaxis, :]
    scan_phis = np.broadcast_to(phis[:, np.newaxis], scan_zetas.shape)
    scan = evaluate_many(
        evaluator, scan_phis.reshape(-1), wrap(scan_zetas.reshape(-1))
    ).reshape(scan_zetas.shape)

    ridge = []
    for row, (phi, center) in enumerate(zip(phis, centers)):
        best = int(np.argmax(scan[row]))
        offset, p = offsets[best], scan[row, best]
        lo = offsets[max(best - 1, 0)]
        hi = offsets[min(best + 1, SCAN_POINTS - 1)]

        refined = minimize_scalar(
            lambda d: -evaluator(phi, wrap(center + d)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": REFINE_TOLERANCE},
        )
        if -refined.fun > p:
            offset, p = float(refined.x), -float(refined.fun)
        ridge.append(RidgePoint(float(phi), float(center + offset), float(p)))

    logger.info(f"Extracted {len(ridge)} ridge points for n={n}")
    return ridge


def high_probability_band(
    ridge: Sequence[RidgePoint], n: int, fraction: float = DEFAULT_BAND
) -> List[RidgePoint]:
    """Ridge points whose ``p`` climbs at least ``fraction`` of the way from the
    no-walk floor ``2^-(2^n)`` to the ridge maximum

    Where ``p`` barely leaves the floor the location of the maximum over ``zeta``
    is arbitrary, so those points are left out of fits.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValidationError(
            f"Band fraction must lie in [0, 1), got {fraction}",
            module="ridge",
            kind="fraction",
        )
    if not ridge:
        return []
    floor = 2.0 ** -(2 ** n)
    peak = max(point.p for point in ridge)
    level = floor + fraction * (peak - floor)
    return [point for point in ridge if point.p >= level]


def fit_alpha(ridge: Sequence[RidgePoint]) -> AlphaFit:
    """Least-squares ``alpha`` of the sine-corrected curve through the ridge

    ``alpha = sum(r s) / sum(s^2)`` with ``r`` the ridge offset from the central
    branch and ``s = sin(2 phi)``.
    """
    if len(ridge) < 3:
        raise ValidationError(
            f"Fitting needs >= 3 ridge points, got {len(ridge)}",
            module="ridge",
            kind="points",
        )

    phi = np.array([point.phi for point in ridge])
    residual = np.array([point.zeta_unwrapped for point in ridge]) - central_branch(phi)
    sine = np.sin(2.0 * phi)
    informative = np.abs(sine) >= DEGENERATE_SINE
    if not informative.any():
        raise ValidationError(
            "Every ridge point has phi at a multiple of pi/2; alpha is undetermined",
            module="ridge",
            kind="degenerate",
        )

    s = sine[informative]
    alpha = float(np.dot(residual[informative], s) / np.dot(s, s))
    rms = float(np.sqrt(np.mean((residual - alpha * sine) ** 2)))
    logger.info(f"Fitted alpha={alpha:.6f} (rms residual {rms:.3e} rad)")
    return AlphaFit(alpha, rms, len(ridge))


def profile(
    evaluator: Callable[[float, float], float],
    spec: CurveSpec,
    n: int,
    grid_size: int = DEFAULT_GRID,
) -> Profile:
    if grid_size < 2:
        raise ValidationError(
            f"Profile grid needs >= 2 points, got {grid_size}",
            module="ridge",
            kind="grid",
        )
    _check_evaluator(evaluator, n)

    phis = phase_grid(grid_size)
    zetas = curve_zeta(spec, phis)
    p = np.clip(evaluate_many(evaluator, phis, zetas), 0.0, 1.0)
    logger.debug(f"Profile {spec.label} for n={n}: max p {p.max():.6f}")
    return Profile(spec, phis, zetas, p)


def _crossing(x0: float, p0: float, x1: float, p1: float, level: float) -> float:
    return x0 + (level - p0) / (p1 - p0) * (x1 - x0)


def stability_width(profile: Profile, fraction: float) -> float:
    """Length of the ``phi`` interval around the profile maximum where
    ``p >= fraction * p_max``

    The interval is contiguous and ends are linearly interpolated between grid
    samples. It does not wrap around ``phi = 0``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValidationError(
            f"fraction must lie in (0, 1), got {fraction}",
            module="ridge",
            kind="fraction",
        )

    phi, p = profile.phi, profile.p
    peak = int(np.argmax(p))
    level = fraction * p[peak]

    left = peak
    while left > 0 and p[left - 1] >= level:
        left -= 1
    start = phi[0] if left == 0 else _crossing(
        phi[left - 1], p[left - 1], phi[left], p[left], level
    )

    right = peak
    while right < len(p) - 1 and p[right + 1] >= level:
        right += 1
    stop = phi[-1] if right == len(p) - 1 else _crossing(
        phi[right], p[right], phi[right + 1], p[right + 1], level
    )

    return float(stop - start)


def named_curves(n: int) -> Dict[str, CurveSpec]:
    """Reference curves compared in probability profiles for an ``n``-qubit coin"""
    curves = {
        "alpha=0": CurveSpec.sine(0.0),
        "alpha=-1/(2pi)": CurveSpec.sine(-1.0 / (2.0 * math.pi)),
        "alpha=-1/(3pi)": CurveSpec.sine(-1.0 / (3.0 * math.pi)),
        "alpha=-2/pi": CurveSpec.sine(-2.0 / math.pi),
    }
    simulated, modelled = REFERENCE_ALPHAS.get(n, (None, None))
    if simulated is not None:
        curves["alpha_mc"] = CurveSpec.sine(simulated)
    if modelled is not None:
        curves["alpha_dnn"] = CurveSpec.sine(modelled)
    curves[LINE33] = CurveSpec.line33()
    curves[LINE34] = CurveSpec.line34()
    return curves


def _write_rows(path: Path, header: List[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def save_profile(profile: Profile, path: Path):
    _write_rows(
        path,
        ["phi", "zeta", "p"],
        (
            [f"{phi:.17g}", f"{zeta:.17g}", f"{p:.17g}"]
            for phi, zeta, p in zip(profile.phi, profile.zeta, profile.p)
        ),
    )


def save_ridge(ridge: Sequence[RidgePoint], path: Path):
    _write_rows(
        path,
        ["phi", "zeta_unwrapped", "p"],
        (
            [f"{pt.phi:.17g}", f"{pt.zeta_unwrapped:.17g}", f"{pt.p:.17g}"]
            for pt in ridge
        ),
    )


def save_fit(fit: AlphaFit, n: int, source: str, path: Path):
    _write_rows(
        path,
        ["alpha", "rms_residual", "n", "source"],
        [[f"{fit.alpha:.17g}", f"{fit.rms_residual:.17g}", n, source]],
    )


def load_ridge(path: Path) -> List[RidgePoint]:
    """Read a ridge CSV written by :func:`save_ridge`"""
    with open(path, newline="", encoding="utf-8") as stream:
        rows = list(csv.reader(stream))
    if not rows or rows[0] != ["phi", "zeta_unwrapped", "p"]:
        raise FormatError(
            f"{path}: missing ridge header", module="ridge", kind="header"
        )

    ridge = []
    for line, row in enumerate(rows[1:], start=2):
        try:
            phi, zeta, p = (float(value) for value in row)
        except ValueError as error:
            raise FormatError(f"{path} line {line}: {error}", module="ridge")
        ridge.append(RidgePoint(phi, zeta, p))
    return ridge

