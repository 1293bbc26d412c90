"""Reproducible data generation with prescribed covariance and entry law.

Every random draw in the package comes from an :class:`RngStream`, a
``(master_seed, stream_id)`` pair mapped to a counter-based Philox generator.
Replicate ``b`` always uses stream ``b``, so results do not depend on how
replicates are scheduled across worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np
from numpy.typing import NDArray

from .linalg import CovarianceModel

__all__ = [
    "Gaussian",
    "Rademacher",
    "UniformStd",
    "StudentTStd",
    "RowMixture",
    "EntryDistribution",
    "RngStream",
    "derive_stream",
    "sub_seed",
    "draw_entries",
    "gaussian_data",
    "general_data",
    "distribution_from_name",
    "resolve_threads",
    "parallel_map",
]

T = TypeVar("T")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Gaussian:
    name = "gauss"


@dataclass(frozen=True)
class Rademacher:
    name = "rademacher"


@dataclass(frozen=True)
class UniformStd:
    """Uniform on [-1, 1] scaled by sqrt(3) to unit variance."""

    name = "unif"


@dataclass(frozen=True)
class StudentTStd:
    """Student t with ``df`` degrees of freedom scaled to unit variance."""

    df: int = 12

    def __post_init__(self) -> None:
        if self.df <= 4:
            raise ValueError(f"StudentTStd needs df > 4 for bounded low moments, got {self.df}")

    @property
    def name(self) -> str:
        return f"t{self.df}"


@dataclass(frozen=True)
class RowMixture:
    """``first`` law on rows ``0 .. n//2 - 1``, ``second`` on the remaining rows."""

    first: "EntryDistribution"
    second: "EntryDistribution"

    @property
    def name(self) -> str:
        return f"{self.first.name}_{self.second.name}"


EntryDistribution = Gaussian | Rademacher | UniformStd | StudentTStd | RowMixture


_NAMED = {
    "gauss": Gaussian(),
    "rademacher": Rademacher(),
    "unif": UniformStd(),
    "t12": StudentTStd(12),
    "unif_t": RowMixture(UniformStd(), StudentTStd(12)),
    "gauss_unif": RowMixture(Gaussian(), UniformStd()),
    "gauss_t": RowMixture(Gaussian(), StudentTStd(12)),
}


def distribution_from_name(name: str) -> EntryDistribution:
    try:
        return _NAMED[name]
    except KeyError:
        raise ValueError(f"unknown distribution {name!r}; choose from {sorted(_NAMED)}") from None


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed & _MASK64, spawn_key=(self.stream_id & _MASK64,))
        return np.random.Generator(np.random.Philox(ss))


def derive_stream(master_seed: int, replicate_index: int) -> RngStream:
    return RngStream(int(master_seed), int(replicate_index))


def sub_seed(master_seed: int, *keys: int) -> int:
    """Hash ``master_seed`` and integer ``keys`` into a fresh 64-bit seed."""
    ss = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=tuple(int(k) & _MASK64 for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def draw_entries(rng: np.random.Generator, shape: tuple[int, int], dist: EntryDistribution) -> NDArray[np.float64]:
    """Draw a matrix of independent standardized entries."""
    n, p = shape
    if isinstance(dist, Gaussian):
        return rng.standard_normal((n, p))
    if isinstance(dist, Rademacher):
        return rng.integers(0, 2, size=(n, p)).astype(np.float64) * 2.0 - 1.0
    if isinstance(dist, UniformStd):
        return rng.uniform(-1.0, 1.0, size=(n, p)) * np.sqrt(3.0)
    if isinstance(dist, StudentTStd):
        return rng.standard_t(dist.df, size=(n, p)) * np.sqrt((dist.df - 2) / dist.df)
    if isinstance(dist, RowMixture):
        half = n // 2
        top = draw_entries(rng, (half, p), dist.first)
        bottom = draw_entries(rng, (n - half, p), dist.second)
        return np.vstack([top, bottom])
    raise TypeError(f"unsupported distribution {dist!r}")


def gaussian_data(n: int, cov: CovarianceModel, stream: RngStream) -> NDArray[np.float64]:
    """``Z @ cov^{1/2}`` with i.i.d. standard normal ``Z`` of shape ``(n, p)``."""
    return general_data(n, cov, Gaussian(), stream)


def general_data(n: int, cov: CovarianceModel, dist: EntryDistribution, stream: RngStream) -> NDArray[np.float64]:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    z = draw_entries(stream.generator(), (n, cov.dim), dist)
    return z @ cov.sqrt


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``COVSPEC_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("COVSPEC_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def parallel_map(fn: Callable[[int], T], indices: Sequence[int], threads: int | None = None) -> list[T]:
    """Apply ``fn`` to each index; results are returned in index order.

    numpy's BLAS/LAPACK calls release the GIL, so a thread pool is enough to
    overlap the per-replicate eigendecompositions.
    """
    k = resolve_threads(threads)
    if k == 1 or len(indices) <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, indices))
