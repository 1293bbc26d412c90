"""Simultaneous confidence intervals for linear functionals of a covariance.

One bootstrap quantile ``q`` of ``||Sigma_hat - Sigma||_op`` covers every
functional at once: ``<A, Sigma>`` lies in ``<A, Sigma_hat> +- q ||A||_S1`` and
``c1^T Sigma c2`` in ``c1^T Sigma_hat c2 +- q |c1| |c2|``. Gaussian draws are
rotation invariant, so ``q`` depends on ``Sigma`` only through its spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .bootstrap import BootstrapConfig, bootstrap_distribution
from .linalg import BadMatrixShape, CovarianceModel, sample_covariance, schatten1, sym_eigen

__all__ = [
    "SpectrumEstimate",
    "Interval",
    "CiReport",
    "spectrum_oracle",
    "spectrum_naive",
    "spectrum_external",
    "simultaneous_q",
    "ci_inner_product",
    "ci_bilinear",
]

SPECTRUM_METHODS = ("oracle", "naive_sample", "external")


@dataclass(frozen=True)
class SpectrumEstimate:
    """Nonnegative eigenvalues, stored in descending order."""

    eigenvalues: NDArray[np.float64]
    method: str

    def __post_init__(self) -> None:
        v = np.asarray(self.eigenvalues, dtype=np.float64).ravel()
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ValueError("spectrum must be a non-empty finite vector")
        if np.any(v < 0):
            raise ValueError("spectrum must be nonnegative")
        if self.method not in SPECTRUM_METHODS:
            raise ValueError(f"unknown spectrum method {self.method!r}")
        object.__setattr__(self, "eigenvalues", np.sort(v)[::-1].copy())

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class Interval:
    center: float
    half_width: float

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {"center": self.center, "half_width": self.half_width, "lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class CiReport:
    q: float
    alpha: float
    B: int
    master_seed: int
    spectrum_method: str
    intervals: list[Interval] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "alpha": self.alpha,
            "B": self.B,
            "master_seed": self.master_seed,
            "spectrum_method": self.spectrum_method,
            "intervals": [iv.to_dict() for iv in self.intervals],
        }


def spectrum_oracle(sigma: CovarianceModel | ArrayLike) -> SpectrumEstimate:
    c = sigma if isinstance(sigma, CovarianceModel) else CovarianceModel(np.asarray(sigma, dtype=np.float64))
    return SpectrumEstimate(np.clip(c.eig.values, 0.0, None), "oracle")


def spectrum_naive(x: ArrayLike, centering: str = "none", labels=None) -> SpectrumEstimate:
    """Eigenvalues of the sample covariance. Biased when ``p`` is comparable to ``n``."""
    s = sample_covariance(x, centering, labels)
    return SpectrumEstimate(np.clip(sym_eigen(s).values, 0.0, None), "naive_sample")


def spectrum_external(values: ArrayLike) -> SpectrumEstimate:
    return SpectrumEstimate(np.asarray(values, dtype=np.float64), "external")


def simultaneous_q(
    spectrum: SpectrumEstimate,
    n: int,
    *,
    B: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    threads: int | None = None,
) -> float:
    """Bootstrap quantile of ``T`` with ``Sigma = Sigma0 = diag(spectrum)``."""
    d = np.diag(spectrum.eigenvalues)
    config = BootstrapConfig(n=n, B=B, alpha=alpha, master_seed=seed, threads=threads)
    return bootstrap_distribution(CovarianceModel(d), "opn", config, sigma0=d).quantile()


def ci_inner_product(sigma_hat: ArrayLike, a: ArrayLike, q: float) -> Interval:
    s = np.asarray(sigma_hat, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if a.shape != s.shape:
        raise BadMatrixShape(f"A has shape {a.shape}, Sigma_hat has {s.shape}")
    if np.array_equal(a, a.T):
        s1 = schatten1(a)
    else:
        s1 = float(np.sum(np.linalg.svd(a, compute_uv=False)))
    return Interval(float(np.sum(a * s)), float(q) * s1)


def ci_bilinear(sigma_hat: ArrayLike, c1: ArrayLike, c2: ArrayLike, q: float) -> Interval:
    s = np.asarray(sigma_hat, dtype=np.float64)
    c1 = np.asarray(c1, dtype=np.float64).ravel()
    c2 = np.asarray(c2, dtype=np.float64).ravel()
    p = s.shape[0]
    if c1.size != p or c2.size != p:
        raise BadMatrixShape(f"vectors of length {c1.size}, {c2.size} do not match p={p}")
    return Interval(float(c1 @ s @ c2), float(q) * float(np.linalg.norm(c1)) * float(np.linalg.norm(c2)))
