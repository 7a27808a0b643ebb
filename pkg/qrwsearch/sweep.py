"""Monte Carlo and regular-grid sweeps of the success probability over (phi, zeta)

Sample ``j`` of a Monte Carlo sweep draws its angles from a Philox stream keyed
by the sweep seed with counter ``j``, so any sample can be reproduced on its own
and the dataset does not depend on how the work is split between processes.
"""
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np

from qrwsearch.errors import FormatError, ValidationError
from qrwsearch.walk import (
    DEFAULT_MAX_QUBITS,
    check_qubits,
    k_iterations,
    period_steps,
    run_batch,
)


CSV_HEADER = ["phi", "zeta", "n", "p", "k_eq1", "k_best"]
GENERATOR_VERSION = "philox-v1"
# records per work unit; fixed so results never depend on the worker count
CHUNK_SIZE = 512
# success probability does not depend on which node is marked
SWEEP_MARKED = (0,)
TWO_PI = 2.0 * math.pi


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepRecord:
    """One evaluation of the search

    Attributes:
        phi: Householder phase (radians)
        zeta: Global phase (radians)
        n: Number of coin qubits
        p: Success probability after ``k_eq1`` iterations
        k_eq1: The standard iteration count for ``n``
        k_best: Iteration with the highest probability within one period, if computed
    """

    phi: float
    zeta: float
    n: int
    p: float
    k_eq1: int
    k_best: Optional[int] = None

    def validate(self):
        problems = []
        if not (0.0 <= self.phi <= TWO_PI and 0.0 <= self.zeta <= TWO_PI):
            problems.append(f"angles ({self.phi}, {self.zeta}) outside [0, 2pi]")
        if not 0.0 <= self.p <= 1.0:
            problems.append(f"p={self.p} outside [0, 1]")
        if self.k_eq1 != k_iterations(self.n):
            problems.append(f"k_eq1={self.k_eq1} does not match n={self.n}")
        if self.k_best is not None and not 0 <= self.k_best <= period_steps(self.n):
            problems.append(f"k_best={self.k_best} outside one period")
        if problems:
            raise ValidationError("; ".join(problems), module="sweep", kind="record")


@dataclass(frozen=True)
class DatasetMeta:
    n: int
    samples: int
    seed: Optional[int] = None
    generator: str = GENERATOR_VERSION


@dataclass
class Dataset:
    """An ordered collection of sweep records sharing one ``n``"""

    records: List[SweepRecord]
    meta: DatasetMeta = field(compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[SweepRecord]:
        return iter(self.records)

    @property
    def n(self) -> int:
        return self.meta.n

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(phi, zeta, p)`` as float arrays"""
        phi = np.array([r.phi for r in self.records], dtype=float)
        zeta = np.array([r.zeta for r in self.records], dtype=float)
        p = np.array([r.p for r in self.records], dtype=float)
        return phi, zeta, p


def sample_angles(seed: int, index: int) -> Tuple[float, float]:
    """The ``(phi, zeta)`` pair of sample ``index`` in the sweep keyed by ``seed``"""
    generator = np.random.Generator(np.random.Philox(key=seed, counter=index))
    phi, zeta = np.mod(TWO_PI * generator.random(2), TWO_PI)
    return float(phi), float(zeta)


def _evaluate(
    n: int,
    phis: np.ndarray,
    zetas: np.ndarray,
    with_best: bool,
    max_qubits: int,
) -> List[SweepRecord]:
    k_eq1 = k_iterations(n)
    if with_best:
        history = run_batch(
            n,
            phis,
            zetas,
            SWEEP_MARKED,
            steps=period_steps(n),
            history=True,
            max_qubits=max_qubits,
        )
        probabilities = history[:, k_eq1]
        best = np.argmax(history, axis=1)
    else:
        probabilities = run_batch(
            n, phis, zetas, SWEEP_MARKED, steps=k_eq1, max_qubits=max_qubits
        )
        best = [None] * len(phis)

    return [
        SweepRecord(
            phi=float(phi),
            zeta=float(zeta),
            n=n,
            p=float(min(max(p, 0.0), 1.0)),
            k_eq1=k_eq1,
            k_best=None if k is None else int(k),
        )
        for phi, zeta, p, k in zip(phis, zetas, probabilities, best)
    ]


def _sample_chunk(task) -> List[SweepRecord]:
    n, seed, start, stop, with_best, max_qubits = task
    angles = np.array([sample_angles(seed, j) for j in range(start, stop)])
    records = _evaluate(n, angles[:, 0], angles[:, 1], with_best, max_qubits)
    logger.debug(f"Sampled records {start}..{stop - 1} for n={n}")
    return records


def _grid_chunk(task) -> List[SweepRecord]:
    n, phis, zetas, with_best, max_qubits = task
    return _evaluate(n, phis, zetas, with_best, max_qubits)


def _map_chunks(function, tasks, workers: int) -> List[SweepRecord]:
    if workers == 1 or len(tasks) == 1:
        chunks = map(function, tasks)
        return [record for chunk in chunks for record in chunk]

    with ProcessPoolExecutor(max_workers=workers) as executor:
        chunks = executor.map(function, tasks)
        return [record for chunk in chunks for record in chunk]


def _check_workers(workers: int):
    if workers < 1:
        raise ValidationError(
            f"Worker count must be >= 1, got {workers}",
            module="sweep",
            kind="workers",
        )


def generate(
    n: int,
    samples: int,
    seed: int,
    workers: int = 1,
    with_best: bool = False,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> Dataset:
    """Monte Carlo sweep over uniformly random ``(phi, zeta)`` in ``[0, 2pi)^2``

    Args:
        n: Number of coin qubits
        samples: Number of records
        seed: Non-negative key of the random stream
        workers (optional): Number of processes; does not affect the result
        with_best (optional): Also find the best iteration within one period
        max_qubits (optional): Largest ``n`` allowed (memory cap)

    Returns:
        A dataset whose record ``j`` depends only on ``(seed, j, n)``
    """
    if samples < 1:
        raise ValidationError(
            f"Sample count must be >= 1, got {samples}",
            module="sweep",
            kind="samples",
        )
    if seed < 0:
        raise ValidationError(
            f"Seed must be >= 0, got {seed}", module="sweep", kind="seed"
        )
    _check_workers(workers)
    check_qubits(n, max_qubits)

    tasks = [
        (n, seed, start, min(start + CHUNK_SIZE, samples), with_best, max_qubits)
        for start in range(0, samples, CHUNK_SIZE)
    ]
    records = _map_chunks(_sample_chunk, tasks, workers)

    logger.info(f"Generated {len(records)} records for n={n} with seed {seed}")
    return Dataset(records, DatasetMeta(n=n, samples=samples, seed=seed))


def grid_axis(resolution: int) -> np.ndarray:
    """``resolution`` evenly spaced angles from 0 to 2pi inclusive"""
    return TWO_PI * np.arange(resolution) / (resolution - 1)


def grid(
    n: int,
    resolution: int,
    workers: int = 1,
    with_best: bool = False,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> Dataset:
    """Regular ``resolution x resolution`` grid, zeta in the outer loop"""
    if resolution < 2:
        raise ValidationError(
            f"Grid resolution must be >= 2, got {resolution}",
            module="sweep",
            kind="resolution",
        )
    _check_workers(workers)
    check_qubits(n, max_qubits)

    axis = grid_axis(resolution)
    zeta_mesh, phi_mesh = np.meshgrid(axis, axis, indexing="ij")
    phis, zetas = phi_mesh.reshape(-1), zeta_mesh.reshape(-1)
    tasks = [
        (n, phis[s : s + CHUNK_SIZE], zetas[s : s + CHUNK_SIZE], with_best, max_qubits)
        for s in range(0, phis.size, CHUNK_SIZE)
    ]
    records = _map_chunks(_grid_chunk, tasks, workers)

    logger.info(f"Evaluated a {resolution}x{resolution} grid for n={n}")
    return Dataset(records, DatasetMeta(n=n, samples=len(records)))


def _format(value: float) -> str:
    return f"{value:.17g}"


def save_csv(dataset: Dataset, path: Path):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in dataset.records:
            writer.writerow(
                [
                    _format(record.phi),
                    _format(record.zeta),
                    record.n,
                    _format(record.p),
                    record.k_eq1,
                    "" if record.k_best is None else record.k_best,
                ]
            )

    logger.info(f"Wrote {len(dataset)} records to {path}")


def _parse_row(row: List[str], line: int) -> SweepRecord:
    if len(row) != len(CSV_HEADER):
        raise FormatError(
            f"line {line}: expected {len(CSV_HEADER)} fields, got {len(row)}",
            module="sweep",
        )
    try:
        record = SweepRecord(
            phi=float(row[0]),
            zeta=float(row[1]),
            n=int(row[2]),
            p=float(row[3]),
            k_eq1=int(row[4]),
            k_best=int(row[5]) if row[5] else None,
        )
        record.validate()
    except ValueError as error:
        raise FormatError(f"line {line}: {error}", module="sweep") from error
    return record


def load_csv(path: Path) -> Dataset:
    """Read a dataset written by :func:`save_csv`, validating every record"""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as stream:
        rows = list(csv.reader(stream))

    if not rows:
        raise FormatError(f"{path} is empty", module="sweep", kind="empty")
    if rows[0] != CSV_HEADER:
        raise FormatError(
            f"{path}: missing header {','.join(CSV_HEADER)}",
            module="sweep",
            kind="header",
        )

    records = [_parse_row(row, line) for line, row in enumerate(rows[1:], start=2)]
    if not records:
        raise FormatError(f"{path} holds no records", module="sweep", kind="empty")

    n_values = sorted({record.n for record in records})
    if len(n_values) != 1:
        raise FormatError(
            f"{path} mixes coin sizes n={n_values}", module="sweep", kind="mixed"
        )

    logger.debug(f"Read {len(records)} records from {path}")
    return Dataset(records, DatasetMeta(n=n_values[0], samples=len(records)))
