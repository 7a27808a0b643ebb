"""Walk coins built from one generalized Householder reflection and a global phase

The traversing coin is ``e^{i zeta} (I - (1 - e^{i phi}) |chi><chi|)`` with
``|chi>`` the equal-weight superposition of the ``m`` coin directions. Its
matrix has one value ``a'`` on the diagonal and one value ``b'`` everywhere
else.

Matrix-element phases follow the negative-exponent convention
``a = |a| exp(-i phase_a)``.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from qrwsearch.errors import ValidationError


UNITARY_TOLERANCE = 1e-12
# |b'| at or below this is treated as zero (phi a multiple of 2 pi)
DEGENERATE_TOLERANCE = 1e-15


logger = logging.getLogger(__name__)


def _check_dimension(m: int, minimum: int = 2):
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
        raise ValidationError(
            f"Coin dimension must be an integer, got {type(m).__name__}",
            module="coin",
            kind="dimension",
        )
    if m < minimum or m & (m - 1):
        raise ValidationError(
            f"Coin dimension m={m} invalid; must be a power of two >= {minimum}",
            module="coin",
            kind="dimension",
        )


@dataclass(frozen=True)
class CoinSpec:
    """Parameters of a Householder walk coin

    Attributes:
        phi: Householder reflection phase (radians)
        zeta: Global phase multiplier (radians)
        m: Coin dimension, ``2**n`` for an ``n``-qubit coin register
    """

    phi: float
    zeta: float
    m: int

    def __post_init__(self):
        _check_dimension(self.m)
        if not (math.isfinite(self.phi) and math.isfinite(self.zeta)):
            raise ValidationError(
                f"Coin phases must be finite, got phi={self.phi}, zeta={self.zeta}",
                module="coin",
                kind="phase",
            )

    @classmethod
    def for_qubits(cls, phi: float, zeta: float, n: int) -> "CoinSpec":
        return cls(float(phi), float(zeta), 2 ** n)


@dataclass(frozen=True)
class CoinMatrix:
    """A realized ``m x m`` coin

    Attributes:
        entries: Complex ``(m, m)`` array; treat as read-only
    """

    entries: np.ndarray

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> complex:
        return complex(self.entries[0, 0])

    @property
    def off_diagonal(self) -> complex:
        return complex(self.entries[0, 1]) if self.m > 1 else 0j


@dataclass(frozen=True)
class CoinElements:
    """Polar form of the two distinct coin entries

    Attributes:
        a_mod: ``|a'|``
        a_phase: ``phase_a`` with ``a' = a_mod * exp(-i a_phase)``
        b_mod: ``|b'|``
        b_phase: ``phase_b`` with ``b' = b_mod * exp(-i b_phase)``; 0 when
            ``degenerate``
        delta: ``a_phase - b_phase``
        degenerate: ``b' == 0`` so ``b_phase`` carries no information
    """

    a_mod: float
    a_phase: float
    b_mod: float
    b_phase: float
    delta: float
    degenerate: bool = False


def _circulant(m: int, diagonal: complex, off_diagonal: complex) -> CoinMatrix:
    entries = np.full((m, m), off_diagonal, dtype=np.complex128)
    np.fill_diagonal(entries, diagonal)
    return CoinMatrix(entries)


def householder_elements(phi: float, zeta: float, m: int) -> Tuple[complex, complex]:
    """Diagonal and off-diagonal entries ``(a', b')`` of the Householder coin"""
    global_phase = np.exp(1j * zeta)
    b = global_phase * (np.exp(1j * phi) - 1.0) / m
    a = global_phase + b
    return complex(a), complex(b)


def build_householder_coin(spec: CoinSpec) -> CoinMatrix:
    """Build ``e^{i zeta} M(phi, chi)`` for the equal-weight state ``chi``

    Args:
        spec: Coin phases and dimension

    Returns:
        The coin with diagonal ``e^{i zeta}(1 + (e^{i phi} - 1)/m)`` and
        off-diagonal ``e^{i zeta}(e^{i phi} - 1)/m``
    """
    a, b = householder_elements(spec.phi, spec.zeta, spec.m)
    return _circulant(spec.m, a, b)


def grover_coin(m: int) -> CoinMatrix:
    """The real Grover coin, ``-1 + 2/m`` on the diagonal and ``2/m`` elsewhere"""
    _check_dimension(m)
    return _circulant(m, -1.0 + 2.0 / m, 2.0 / m)


def marking_coin(m: int) -> CoinMatrix:
    """The marking coin ``-I``"""
    _check_dimension(m)
    return CoinMatrix(-np.eye(m, dtype=np.complex128))


def coin_elements_analytic(spec: CoinSpec) -> CoinElements:
    """Moduli and phases of the coin entries from the closed-form expressions

    The moduli come from ``|a'| = sqrt(2 + (m-2)m + 2(m-1)cos phi) / m`` and
    ``|b'| = sqrt(2(1 - cos phi)) / m``. The phases use a quadrant-aware
    arctangent of the trigonometric form of ``a'`` and ``b'`` so that
    ``mod * exp(-i phase)`` reproduces :func:`build_householder_coin` exactly.

    When ``phi`` is a multiple of ``2 pi`` the off-diagonal entry vanishes;
    ``b_phase`` is then reported as 0 and ``degenerate`` is set.
    """
    phi, zeta, m = spec.phi, spec.zeta, spec.m

    radicand = 2.0 + (m - 2) * m + 2.0 * (m - 1) * math.cos(phi)
    a_mod = math.sqrt(max(radicand, 0.0)) / m
    # 2|sin(phi/2)| == sqrt(2(1 - cos phi)) without the cancellation near phi = 0
    b_mod = 2.0 * abs(math.sin(phi / 2.0)) / m

    a_re = ((m - 1) * math.cos(zeta) + math.cos(phi + zeta)) / m
    a_im = ((m - 1) * math.sin(zeta) + math.sin(phi + zeta)) / m
    a_phase = -math.atan2(a_im, a_re)

    degenerate = b_mod <= DEGENERATE_TOLERANCE
    if degenerate:
        b_mod = 0.0
        b_phase = 0.0
    else:
        b_re = (math.cos(phi + zeta) - math.cos(zeta)) / m
        b_im = (math.sin(phi + zeta) - math.sin(zeta)) / m
        b_phase = -math.atan2(b_im, b_re)

    return CoinElements(
        a_mod=a_mod,
        a_phase=a_phase,
        b_mod=b_mod,
        b_phase=b_phase,
        delta=a_phase - b_phase,
        degenerate=degenerate,
    )


def moduli_from_delta(m: int, delta: float) -> Tuple[float, float]:
    """Moduli ``(|a|, |b|)`` of a unitary circulant coin with phase difference delta

    Only defined for ``m > 2`` and ``cos(delta) <= 0``.
    """
    _check_dimension(m, minimum=4)
    c = math.cos(delta)
    if c > UNITARY_TOLERANCE:
        raise ValidationError(
            f"cos(delta)={c:.6g} > 0 would force a negative |b|",
            module="coin",
            kind="domain",
        )

    radicand = 2.0 + (m - 2) * m + 2.0 * (m - 1) * math.cos(2 * delta)
    a_mod = (m - 2) / math.sqrt(radicand)
    b_mod = -2.0 * c / math.sqrt((m - 2) ** 2 + 4.0 * (m - 1) * c ** 2)
    return a_mod, max(b_mod, 0.0)


def delta_from_moduli(m: int, a_mod: float, b_mod: float) -> float:
    """Phase difference in ``[pi/2, pi]`` from ``2|a||b|cos D + (m-2)|b|^2 = 0``"""

    _check_dimension(m)
    if a_mod <= 0 or b_mod < 0:
        raise ValidationError(
            f"Moduli must satisfy |a| > 0 and |b| >= 0, got ({a_mod}, {b_mod})",
            module="coin",
            kind="domain",
        )

    cos_delta = -(m - 2) * b_mod / (2.0 * a_mod)
    if cos_delta < -1.0 - UNITARY_TOLERANCE:
        raise ValidationError(
            f"(m-2)|b| = {(m - 2) * b_mod:.6g} exceeds 2|a| = {2 * a_mod:.6g}",
            module="coin",
            kind="domain",
        )

    return math.acos(max(cos_delta, -1.0))


def verify_unitary(matrix: Union[CoinMatrix, np.ndarray]) -> float:
    """Largest entrywise deviation of ``C C^dagger`` from the identity"""
    entries = np.asarray(getattr(matrix, "entries", matrix))
    product = entries @ entries.conj().T
    return float(np.max(np.abs(product - np.eye(entries.shape[0]))))
