"""Operator-norm test statistics for ``H0: Sigma = Sigma0``.

All statistics here are functions of the sample covariance alone, which is
what lets the bootstrap engine evaluate them on Gaussian surrogates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .linalg import (
    BadMatrixShape,
    CovarianceModel,
    LinalgError,
    operator_norm,
    top_singular_values_sym,
)

__all__ = [
    "ExsBlock",
    "ExsSpec",
    "Statistic",
    "stat_T",
    "stat_roy",
    "stat_com",
    "stat_exs",
    "com_spec",
    "make_statistic",
    "STATISTIC_KINDS",
]

STATISTIC_KINDS = ("opn", "roy", "com")


def _check_dims(a: NDArray, b: NDArray) -> None:
    if a.shape != b.shape:
        raise BadMatrixShape(f"dimension mismatch: {a.shape} vs {b.shape}")


def _as_model(c: CovarianceModel | ArrayLike) -> CovarianceModel:
    return c if isinstance(c, CovarianceModel) else CovarianceModel(np.asarray(c, dtype=np.float64))


def _as_array(c: CovarianceModel | ArrayLike) -> NDArray[np.float64]:
    return c.matrix if isinstance(c, CovarianceModel) else np.asarray(c, dtype=np.float64)


def stat_T(sigma_hat: ArrayLike, sigma0: CovarianceModel | ArrayLike) -> float:
    """``||sigma_hat - sigma0||_op``."""
    s = np.asarray(sigma_hat, dtype=np.float64)
    s0 = _as_array(sigma0)
    _check_dims(s, s0)
    return operator_norm(s - s0)


def _whitened_deviation(s: NDArray, w: NDArray) -> NDArray:
    m = w @ s @ w
    m = 0.5 * (m + m.T)
    m[np.diag_indices_from(m)] -= 1.0
    return m


def stat_roy(sigma_hat: ArrayLike, sigma0: CovarianceModel | ArrayLike) -> float:
    """Roy's largest root ``||Sigma0^{-1/2} sigma_hat Sigma0^{-1/2} - I||_op``."""
    s = np.asarray(sigma_hat, dtype=np.float64)
    c = _as_model(sigma0)
    _check_dims(s, c.matrix)
    return operator_norm(_whitened_deviation(s, c.inv_sqrt()))


def stat_com(sigma_hat: ArrayLike, sigma0: CovarianceModel | ArrayLike) -> float:
    """``T^2 / tr(Sigma0) + Roy^2``."""
    c = _as_model(sigma0)
    tr = c.trace
    if tr <= 0:
        raise LinalgError("combined statistic needs tr(Sigma0) > 0")
    t = stat_T(sigma_hat, c)
    r = stat_roy(sigma_hat, c)
    return t * t / tr + r * r


@dataclass(frozen=True, eq=False)
class ExsBlock:
    """One ``(Sigma1, Sigma2, k)`` triple; ``Sigma2^{-1/2}`` is cached on construction."""

    center: NDArray[np.float64]
    scale: CovarianceModel
    k: int = 1
    _whitener: NDArray[np.float64] | None = field(init=False, repr=False, default=None)

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=np.float64)
        scale = _as_model(self.scale)
        if center.shape != scale.matrix.shape:
            raise BadMatrixShape(f"block center {center.shape} vs scale {scale.matrix.shape}")
        if not 1 <= self.k <= center.shape[0]:
            raise ValueError(f"k must lie in [1, {center.shape[0]}], got {self.k}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "scale", scale)
        # identity scale is skipped so an ExS reduction to T is bit-identical to T
        if not np.array_equal(scale.matrix, np.eye(center.shape[0])):
            object.__setattr__(self, "_whitener", scale.inv_sqrt())

    def singular_values(self, sigma_hat: NDArray) -> NDArray[np.float64]:
        d = sigma_hat - self.center
        if self._whitener is not None:
            d = self._whitener @ d @ self._whitener
            d = 0.5 * (d + d.T)
        return top_singular_values_sym(d, self.k)


@dataclass(frozen=True, eq=False)
class ExsSpec:
    """A general extreme-singular-value statistic.

    ``combiner`` receives the concatenated top-``k`` singular values of every
    block, in block order. It must be deterministic and stateless.
    """

    blocks: tuple[ExsBlock, ...]
    combiner: Callable[[NDArray[np.float64]], float]

    def __post_init__(self) -> None:
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("ExsSpec needs at least one block")
        p = blocks[0].center.shape[0]
        if any(b.center.shape[0] != p for b in blocks):
            raise BadMatrixShape("all ExS blocks must share one dimension")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return self.blocks[0].center.shape[0]

    @classmethod
    def from_triples(
        cls,
        triples: Sequence[tuple[ArrayLike, CovarianceModel | ArrayLike, int]],
        combiner: Callable[[NDArray[np.float64]], float],
    ) -> "ExsSpec":
        return cls(tuple(ExsBlock(np.asarray(c, dtype=np.float64), _as_model(s), k) for c, s, k in triples), combiner)


def stat_exs(sigma_hat: ArrayLike, spec: ExsSpec) -> float:
    s = np.asarray(sigma_hat, dtype=np.float64)
    if s.shape != (spec.dim, spec.dim):
        raise BadMatrixShape(f"dimension mismatch: {s.shape} vs spec dim {spec.dim}")
    values = np.concatenate([b.singular_values(s) for b in spec.blocks])
    out = float(spec.combiner(values))
    if not np.isfinite(out):
        raise LinalgError(f"ExS combiner returned non-finite value {out}")
    return out


def com_spec(sigma0: CovarianceModel | ArrayLike) -> ExsSpec:
    """The combined statistic expressed as a two-block ExS spec."""
    c = _as_model(sigma0)
    p = c.dim
    tr = c.trace
    if tr <= 0:
        raise LinalgError("combined statistic needs tr(Sigma0) > 0")
    return ExsSpec(
        (ExsBlock(c.matrix, CovarianceModel(np.eye(p)), 1), ExsBlock(c.matrix, c, 1)),
        lambda v: v[0] ** 2 / tr + v[1] ** 2,
    )


@dataclass(frozen=True)
class Statistic:
    """A named statistic of the sample covariance with its null factors precomputed."""

    name: str
    fn: Callable[[NDArray[np.float64]], float] = field(repr=False)
    dim: int

    def __call__(self, sigma_hat: NDArray[np.float64]) -> float:
        return self.fn(sigma_hat)


def make_statistic(kind: str | ExsSpec, sigma0: CovarianceModel | ArrayLike | None = None) -> Statistic:
    """Build a reusable statistic; ``Sigma0^{-1/2}`` is computed here, once."""
    if isinstance(kind, ExsSpec):
        spec = kind
        return Statistic("exs", lambda s: stat_exs(s, spec), spec.dim)
    if sigma0 is None:
        raise ValueError(f"statistic {kind!r} needs sigma0")
    c = _as_model(sigma0)
    m0 = c.matrix
    if kind == "opn":
        return Statistic("opn", lambda s: operator_norm(s - m0), c.dim)
    if kind in ("roy", "com"):
        w = c.inv_sqrt()
        if kind == "roy":
            return Statistic("roy", lambda s: operator_norm(_whitened_deviation(s, w)), c.dim)
        tr = c.trace
        if tr <= 0:
            raise LinalgError("combined statistic needs tr(Sigma0) > 0")

        def com(s: NDArray) -> float:
            t = operator_norm(s - m0)
            r = operator_norm(_whitened_deviation(s, w))
            return t * t / tr + r * r

        return Statistic("com", com, c.dim)
    raise ValueError(f"unknown statistic {kind!r}; choose from {STATISTIC_KINDS}")
