"""State-vector simulation of quantum random walk search on the hypercube

An ``n``-qubit coin register has ``m = 2**n`` directions and the node register
holds the ``2**m`` vertices of the ``m``-dimensional hypercube. Amplitudes are
stored as a ``(m, 2**m)`` complex array; the flat index of direction ``i`` and
node ``x`` is ``i * 2**m + x``. Direction ``i`` flips bit ``i`` of the node index
(bit 0 is the least significant).

One iteration applies the traversing coin ``c0`` on unmarked nodes and the
marking coin ``c1`` on marked nodes, then the shift. The two oracle calls that
surround the coin in the circuit are folded into that conditional.
"""
import functools
import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Union

import numpy as np

from qrwsearch.coin import (
    CoinMatrix,
    CoinSpec,
    build_householder_coin,
    householder_elements,
    marking_coin,
)
from qrwsearch.errors import CapacityError, ValidationError


DEFAULT_MAX_QUBITS = 4
FULL_OPERATOR_MAX_QUBITS = 2
# values this close below an integer are not bumped by the ceiling
CEILING_GUARD = 1e-9
# larger coins give step counts beyond the float range
COUNT_MAX_QUBITS = 10
# complex amplitudes held at once by one run_batch chunk
BATCH_AMPLITUDES = 2 ** 22


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkState:
    """Amplitudes of the joint coin and node registers

    Attributes:
        n: Number of coin qubits
        amplitudes: Complex ``(m, 2**m)`` array; treat as read-only
        marked: The solution set (node indices)
    """

    n: int
    amplitudes: np.ndarray
    marked: FrozenSet[int]

    @property
    def m(self) -> int:
        return 2 ** self.n

    @property
    def node_count(self) -> int:
        return 2 ** self.m

    @property
    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def _evolve(self, amplitudes: np.ndarray) -> "WalkState":
        return WalkState(self.n, amplitudes, self.marked)


@dataclass(frozen=True)
class RunResult:
    """Outcome of one simulated search

    Attributes:
        probability: Probability of measuring a marked node after ``steps``
        steps: Number of iterations applied
        history: Probabilities after 0, 1, ..., ``steps`` iterations, if recorded
        state: The final walk state
    """

    probability: float
    steps: int
    history: Optional[np.ndarray] = None
    state: Optional[WalkState] = None


def check_qubits(n: int, max_qubits: Optional[int] = DEFAULT_MAX_QUBITS):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(
            f"Coin qubit count must be a positive integer, got {n!r}",
            module="walk",
            kind="qubits",
        )
    if max_qubits is not None and n > max_qubits:
        m = 2 ** n
        raise CapacityError(
            f"n={n} needs {m * 2 ** m} amplitudes; cap is n <= {max_qubits}",
            module="walk",
        )


def _check_marked(marked: Iterable[int], node_count: int) -> FrozenSet[int]:
    nodes = frozenset(int(x) for x in marked)
    if not nodes:
        raise ValidationError(
            "The marked set must not be empty", module="walk", kind="marked"
        )
    out_of_range = sorted(x for x in nodes if not 0 <= x < node_count)
    if out_of_range:
        raise ValidationError(
            f"Marked nodes {out_of_range} outside [0, {node_count})",
            module="walk",
            kind="marked",
        )
    return nodes


@functools.lru_cache(maxsize=None)
def _shift_index(m: int) -> np.ndarray:
    node_count = 2 ** m
    nodes = np.arange(node_count)
    index = np.concatenate(
        [i * node_count + (nodes ^ (1 << i)) for i in range(m)]
    )
    index.flags.writeable = False
    return index


def init_uniform(
    n: int, marked: Iterable[int], max_qubits: int = DEFAULT_MAX_QUBITS
) -> WalkState:
    """Equal-weight superposition of every (direction, node) pair

    Args:
        n: Number of coin qubits
        marked: Solution node indices
        max_qubits (optional): Largest ``n`` allowed (memory cap)

    Returns:
        A state whose ``m * 2**m`` amplitudes are all ``1/sqrt(m * 2**m)``
    """
    check_qubits(n, max_qubits)
    m = 2 ** n
    nodes = _check_marked(marked, 2 ** m)
    size = m * 2 ** m
    amplitudes = np.full((m, 2 ** m), 1.0 / math.sqrt(size), dtype=np.complex128)
    return WalkState(n, amplitudes, nodes)


def _root_count(n: int, factor: float) -> int:
    """``ceil(factor * sqrt(2**(m-1)))`` without forming ``2**(m-1)`` as a float"""
    check_qubits(n, max_qubits=None)
    if n > COUNT_MAX_QUBITS:
        raise CapacityError(
            f"Step counts for n={n} overflow a float; cap is n <= {COUNT_MAX_QUBITS}",
            module="walk",
        )
    half, odd = divmod(2 ** n - 1, 2)
    return math.ceil(factor * math.ldexp(math.sqrt(2.0 ** odd), half) - CEILING_GUARD)


def k_iterations(n: int) -> int:
    """Iteration count ``ceil(pi/2 * sqrt(2**(m-1)))`` for ``m = 2**n``"""
    return _root_count(n, math.pi / 2)


def period_steps(n: int) -> int:
    """Steps ``ceil(pi * sqrt(2**(m-1)))`` in one period of the success probability"""
    return _root_count(n, math.pi)


def is_marked(state: WalkState, x: int) -> bool:
    if not 0 <= x < state.node_count:
        raise ValidationError(
            f"Node {x} outside [0, {state.node_count})", module="walk", kind="node"
        )
    return x in state.marked


def apply_conditional_coin(
    state: WalkState, c0: CoinMatrix, c1: CoinMatrix
) -> WalkState:
    """Apply ``c1`` to the direction vector of marked nodes and ``c0`` elsewhere"""
    if c0.m != state.m or c1.m != state.m:
        raise ValidationError(
            f"Coins of dimension ({c0.m}, {c1.m}) do not fit m={state.m}",
            module="walk",
            kind="dimension",
        )

    amplitudes = c0.entries @ state.amplitudes
    marked = sorted(state.marked)
    amplitudes[:, marked] = c1.entries @ state.amplitudes[:, marked]
    return state._evolve(amplitudes)


def apply_shift(state: WalkState) -> WalkState:
    """Move the amplitude at ``(i, x)`` to ``(i, x XOR 2**i)``"""
    shifted = state.flat[_shift_index(state.m)]
    return state._evolve(shifted.reshape(state.amplitudes.shape))


def step(state: WalkState, c0: CoinMatrix, c1: CoinMatrix) -> WalkState:
    return apply_shift(apply_conditional_coin(state, c0, c1))


def success_probability(state: WalkState) -> float:
    marked = sorted(state.marked)
    return float(np.sum(np.abs(state.amplitudes[:, marked]) ** 2))


def node_distribution(state: WalkState) -> np.ndarray:
    """Probability of measuring each node of the node register"""
    return np.sum(np.abs(state.amplitudes) ** 2, axis=0)


def _coins(n: int, phi: float, zeta: float):
    m = 2 ** n
    c0 = build_householder_coin(CoinSpec(float(phi), float(zeta), m))
    return c0, marking_coin(m)


def run(
    n: int,
    phi: float,
    zeta: float,
    marked: Iterable[int],
    steps: Optional[int] = None,
    history: bool = False,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> RunResult:
    """Simulate the search with the Householder coin ``(phi, zeta)``

    Args:
        n: Number of coin qubits
        phi: Householder phase (radians)
        zeta: Global phase (radians)
        marked: Solution node indices
        steps (optional): Iterations to apply; defaults to :func:`k_iterations`
        history (optional): Also record the probability after every iteration
        max_qubits (optional): Largest ``n`` allowed (memory cap)

    Returns:
        The success probability after ``steps`` iterations
    """
    state = init_uniform(n, marked, max_qubits)
    steps = k_iterations(n) if steps is None else int(steps)
    if steps < 0:
        raise ValidationError(
            f"Step count must be >= 0, got {steps}", module="walk", kind="steps"
        )

    c0, c1 = _coins(n, phi, zeta)
    probabilities = [success_probability(state)] if history else None
    for _ in range(steps):
        state = step(state, c0, c1)
        if probabilities is not None:
            probabilities.append(success_probability(state))

    return RunResult(
        probability=success_probability(state),
        steps=steps,
        history=None if probabilities is None else np.array(probabilities),
        state=state,
    )


def scan_iterations(
    n: int,
    phi: float,
    zeta: float,
    marked: Iterable[int],
    k_max: int,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> np.ndarray:
    """Success probability after 0, 1, ..., ``k_max`` iterations"""
    if k_max < 1:
        raise ValidationError(
            f"k_max must be >= 1, got {k_max}", module="walk", kind="steps"
        )
    result = run(n, phi, zeta, marked, k_max, history=True, max_qubits=max_qubits)
    return result.history


def build_full_operator(
    n: int, phi: float, zeta: float, marked: Iterable[int]
) -> np.ndarray:
    """Dense matrix of one iteration, for brute-force cross-checks at n <= 2"""
    check_qubits(n, FULL_OPERATOR_MAX_QUBITS)
    m = 2 ** n
    node_count = 2 ** m
    nodes = _check_marked(marked, node_count)
    c0, c1 = _coins(n, phi, zeta)

    size = m * node_count
    coin = np.zeros((size, size), dtype=np.complex128)
    for x in range(node_count):
        local = c1.entries if x in nodes else c0.entries
        rows = np.arange(m) * node_count + x
        coin[np.ix_(rows, rows)] = local

    shift = np.zeros((size, size))
    shift[np.arange(size), _shift_index(m)] = 1.0
    return shift @ coin


def run_batch(
    n: int,
    phis: Union[Sequence[float], np.ndarray],
    zetas: Union[Sequence[float], np.ndarray],
    marked: Iterable[int] = (0,),
    steps: Optional[int] = None,
    history: bool = False,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> np.ndarray:
    """Success probabilities for many coin phase pairs at once

    The Householder coin acts as ``e^{i zeta}(psi + (e^{i phi} - 1)/m * sum_i psi_i)``
    on each node, so no coin matrix is formed. Pairs are processed in chunks of
    fixed size, which keeps the result independent of how callers split work.

    Args:
        n: Number of coin qubits
        phis: Householder phases
        zetas: Global phases, same length as ``phis``
        marked (optional): Solution node indices
        steps (optional): Iterations; defaults to :func:`k_iterations`
        history (optional): Return every step instead of only the last
        max_qubits (optional): Largest ``n`` allowed (memory cap)

    Returns:
        Shape ``(B,)`` probabilities, or ``(B, steps + 1)`` with ``history``
    """
    check_qubits(n, max_qubits)
    m = 2 ** n
    node_count = 2 ** m
    nodes = sorted(_check_marked(marked, node_count))
    phis = np.asarray(phis, dtype=float).reshape(-1)
    zetas = np.asarray(zetas, dtype=float).reshape(-1)
    if phis.shape != zetas.shape:
        raise ValidationError(
            f"Got {phis.size} phi values but {zetas.size} zeta values",
            module="walk",
            kind="shape",
        )
    if not (np.all(np.isfinite(phis)) and np.all(np.isfinite(zetas))):
        raise ValidationError(
            "Coin phases must be finite", module="walk", kind="phase"
        )
    steps = k_iterations(n) if steps is None else int(steps)

    chunk = max(1, BATCH_AMPLITUDES // (m * node_count))
    index = _shift_index(m)
    out = np.empty((phis.size, steps + 1) if history else (phis.size,))

    for start in range(0, phis.size, chunk):
        stop = min(start + chunk, phis.size)
        size = stop - start
        elements = np.array(
            [
                householder_elements(phi, zeta, m)
                for phi, zeta in zip(phis[start:stop], zetas[start:stop])
            ]
        )
        diagonal = (elements[:, 0] - elements[:, 1]).reshape(size, 1, 1)
        off_diagonal = elements[:, 1].reshape(size, 1, 1)

        psi = np.full(
            (size, m, node_count), 1.0 / math.sqrt(m * node_count), dtype=np.complex128
        )
        if history:
            out[start:stop, 0] = np.sum(np.abs(psi[:, :, nodes]) ** 2, axis=(1, 2))
        for k in range(1, steps + 1):
            coined = diagonal * psi + off_diagonal * psi.sum(axis=1, keepdims=True)
            coined[:, :, nodes] = -psi[:, :, nodes]
            psi = coined.reshape(size, -1)[:, index].reshape(size, m, node_count)
            if history:
                out[start:stop, k] = np.sum(np.abs(psi[:, :, nodes]) ** 2, axis=(1, 2))
        if not history:
            out[start:stop] = np.sum(np.abs(psi[:, :, nodes]) ** 2, axis=(1, 2))

        logger.debug(f"Simulated coin pairs {start}..{stop - 1} for n={n}")

    return out
