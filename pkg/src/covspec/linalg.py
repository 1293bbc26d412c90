"""Dense symmetric spectral primitives shared by every other module."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "SYMMETRY_RTOL",
    "PSD_CLAMP",
    "LinalgError",
    "BadMatrixShape",
    "AsymmetricMatrix",
    "NotPSD",
    "SingularCovariance",
    "EigenDecomposition",
    "CovarianceModel",
    "as_symmetric",
    "sym_eigen",
    "operator_norm",
    "top_singular_values_sym",
    "inv_sqrt",
    "schatten1",
    "center_rows",
    "sample_covariance",
]

SYMMETRY_RTOL = 1e-6
PSD_CLAMP = 1e-8


class LinalgError(ValueError):
    """Invalid matrix input or failed decomposition."""

    code = "LinalgError"


class BadMatrixShape(LinalgError):
    code = "BadMatrixShape"


class AsymmetricMatrix(LinalgError):
    code = "AsymmetricMatrix"


class NotPSD(LinalgError):
    code = "NotPSD"


class SingularCovariance(LinalgError):
    """Raised when a covariance is too close to singular to be inverted."""

    code = "SingularCovariance"


def as_symmetric(a: ArrayLike, rtol: float = SYMMETRY_RTOL) -> NDArray[np.float64]:
    """Return ``(a + a.T) / 2`` after checking shape, finiteness and symmetry.

    Asymmetry larger than ``rtol`` relative to the largest entry is treated as
    corrupted input rather than silently repaired.
    """
    s = np.asarray(a, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
        raise BadMatrixShape(f"expected a non-empty square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise LinalgError("matrix has non-finite entries")
    scale = max(float(np.max(np.abs(s))), 1.0)
    asym = float(np.max(np.abs(s - s.T)))
    if asym > rtol * scale:
        raise AsymmetricMatrix(f"matrix asymmetry {asym:.3g} exceeds {rtol:g} relative")
    return 0.5 * (s + s.T)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order with matching eigenvector columns."""

    values: NDArray[np.float64]
    vectors: NDArray[np.float64]

    def reconstruct(self) -> NDArray[np.float64]:
        return (self.vectors * self.values) @ self.vectors.T


def sym_eigen(s: ArrayLike) -> EigenDecomposition:
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise LinalgError("matrix has non-finite entries")
    try:
        w, v = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        fro = float(np.linalg.norm(s))
        raise LinalgError(
            f"eigensolver failed to converge (p={s.shape[0]}, frobenius={fro:.3g}, "
            f"max|entry|={float(np.max(np.abs(s))):.3g})"
        ) from exc
    return EigenDecomposition(values=w[::-1].copy(), vectors=v[:, ::-1].copy())


def _extreme_abs_eigs(s: NDArray[np.float64]) -> NDArray[np.float64]:
    try:
        return np.linalg.eigvalsh(s)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"eigensolver failed to converge (p={s.shape[0]})") from exc


def operator_norm(s: ArrayLike) -> float:
    """Largest absolute eigenvalue of a symmetric matrix."""
    w = _extreme_abs_eigs(np.asarray(s, dtype=np.float64))
    return float(max(abs(w[0]), abs(w[-1])))


def top_singular_values_sym(s: ArrayLike, k: int) -> NDArray[np.float64]:
    s = np.asarray(s, dtype=np.float64)
    p = s.shape[0]
    if not 1 <= k <= p:
        raise ValueError(f"k must lie in [1, {p}], got {k}")
    a = np.abs(_extreme_abs_eigs(s))
    return np.sort(a)[::-1][:k]


def schatten1(s: ArrayLike) -> float:
    """Sum of singular values (nuclear norm) of a symmetric matrix."""
    return float(np.sum(np.abs(_extreme_abs_eigs(np.asarray(s, dtype=np.float64)))))


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """A PSD matrix with its eigendecomposition computed once and cached.

    Negative eigenvalues down to ``-PSD_CLAMP * ||C||_op`` are clamped to zero
    when forming square roots; anything more negative is rejected.
    """

    matrix: NDArray[np.float64]
    eig: EigenDecomposition = field(init=False, repr=False)

    def __post_init__(self) -> None:
        m = as_symmetric(self.matrix)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        eig = sym_eigen(m)
        norm = float(max(abs(eig.values[0]), abs(eig.values[-1])))
        if eig.values[-1] < -PSD_CLAMP * max(norm, 1e-300):
            raise NotPSD(
                f"smallest eigenvalue {eig.values[-1]:.3g} is below the PSD band "
                f"-{PSD_CLAMP:g}*||C||_op"
            )
        object.__setattr__(self, "eig", eig)

    @classmethod
    def identity(cls, p: int) -> "CovarianceModel":
        return cls(np.eye(p))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def psd_floor(self) -> float:
        return float(self.eig.values[-1])

    @property
    def op_norm(self) -> float:
        return float(max(abs(self.eig.values[0]), abs(self.eig.values[-1])))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @cached_property
    def sqrt(self) -> NDArray[np.float64]:
        w = np.clip(self.eig.values, 0.0, None)
        v = self.eig.vectors
        out = (v * np.sqrt(w)) @ v.T
        out = 0.5 * (out + out.T)
        out.setflags(write=False)
        return out

    def inv_sqrt(self, rel_tol: float = 1e-10) -> NDArray[np.float64]:
        return inv_sqrt(self, rel_tol)


def inv_sqrt(c: CovarianceModel, rel_tol: float = 1e-10) -> NDArray[np.float64]:
    """Symmetric inverse square root; raises SingularCovariance near singularity."""
    w = c.eig.values
    cutoff = rel_tol * c.op_norm
    if w[-1] <= cutoff:
        raise SingularCovariance(
            f"smallest eigenvalue {w[-1]:.3g} <= {rel_tol:g}*||C||_op; covariance is not invertible"
        )
    v = c.eig.vectors
    out = (v / np.sqrt(w)) @ v.T
    return 0.5 * (out + out.T)


def center_rows(x: ArrayLike, centering: str = "none", labels: ArrayLike | None = None) -> NDArray[np.float64]:
    """Remove the global or per-group column means; ``"none"`` returns ``x`` as is."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise BadMatrixShape(f"data must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if centering == "none":
        return x
    if centering == "global":
        return x - x.mean(axis=0, keepdims=True)
    if centering == "groups":
        if labels is None:
            raise ValueError("group centering requires labels")
        lab = np.asarray(labels)
        if lab.shape != (n,):
            raise ValueError(f"labels length {lab.shape} does not match n={n}")
        xc = np.empty_like(x)
        for g in np.unique(lab):
            idx = lab == g
            if idx.sum() < 2:
                raise ValueError(f"group {g!r} has fewer than 2 rows")
            xc[idx] = x[idx] - x[idx].mean(axis=0, keepdims=True)
        return xc
    raise ValueError(f"unknown centering {centering!r}")


def sample_covariance(x: ArrayLike, centering: str = "none", labels: ArrayLike | None = None) -> NDArray[np.float64]:
    """``X^T X / n`` with optional global or per-group mean removal.

    The divisor stays ``n`` in every mode. ``centering`` is one of ``"none"``,
    ``"global"`` or ``"groups"``; the last requires ``labels`` of length ``n``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise BadMatrixShape(f"data must be 2-D, got shape {x.shape}")
    n, p = x.shape
    if n < 2 or p < 1:
        raise BadMatrixShape(f"need n >= 2 and p >= 1, got {x.shape}")
    xc = center_rows(x, centering, labels)
    s = xc.T @ xc / n
    return 0.5 * (s + s.T)
