"""Entrywise and Frobenius-type comparison tests.

Neither statistic is a function of the sample covariance alone, so their
Monte-Carlo calibration resamples whole Gaussian data matrices under the null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .bootstrap import BootstrapConfig, TestReport, bootstrap_p_value, empirical_upper_quantile
from .linalg import BadMatrixShape, CovarianceModel, LinalgError, center_rows, sample_covariance
from .sampling import derive_stream, gaussian_data, parallel_map

__all__ = [
    "BASELINE_KINDS",
    "BaselineReport",
    "DegenerateVariance",
    "stat_supn",
    "stat_ufn",
    "baseline_statistic",
    "supn_asymptotic_quantile",
    "supn_asymptotic_pvalue",
    "null_distribution_mc",
    "calibrate_mc",
    "baseline_test",
]

BASELINE_KINDS = ("supn", "ufn")


class DegenerateVariance(LinalgError):
    code = "DegenerateVariance"


@dataclass(frozen=True)
class BaselineReport(TestReport):
    calibration: str = "monte_carlo"

    __test__ = False


def _as_model(c: CovarianceModel | ArrayLike) -> CovarianceModel:
    return c if isinstance(c, CovarianceModel) else CovarianceModel(np.asarray(c, dtype=np.float64))


def _check_data(x: ArrayLike, p: int) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != p:
        raise BadMatrixShape(f"data shape {x.shape} does not match p={p}")
    if x.shape[0] < 2:
        raise BadMatrixShape("need at least 2 observations")
    return x


def stat_supn(x: ArrayLike, sigma0: CovarianceModel | ArrayLike) -> float:
    """``max_{i<=j} n (s_ij - s0_ij)^2 / theta_ij``.

    ``theta_ij = n^{-1} sum_k (x_ki x_kj - s_ij)^2`` is the plug-in variance of
    the entry ``s_ij`` of the (uncentered) sample covariance.
    """
    s0 = sigma0.matrix if isinstance(sigma0, CovarianceModel) else np.asarray(sigma0, dtype=np.float64)
    x = _check_data(x, s0.shape[0])
    n = x.shape[0]
    s = sample_covariance(x)
    x2 = x * x
    theta = x2.T @ x2 / n - s * s
    iu = np.triu_indices(s.shape[0])
    th = theta[iu]
    if np.any(th <= 1e-12):
        i, j = iu[0][np.argmin(th)], iu[1][np.argmin(th)]
        raise DegenerateVariance(f"entry ({i}, {j}) has plug-in variance {th.min():.3g} <= 1e-12")
    return float(np.max(n * (s[iu] - s0[iu]) ** 2 / th))


def stat_ufn(x: ArrayLike, sigma0: CovarianceModel | ArrayLike) -> float:
    """Unbiased estimate of ``||Sigma0^{-1/2} Sigma Sigma0^{-1/2} - I||_F^2``.

    With ``y_i = Sigma0^{-1/2} x_i`` and ``G = Y Y^T``:
    ``U2 = sum_{i != j} G_ij^2 / (n(n-1))``, ``U1 = tr(G)/n`` and the statistic
    is ``U2 - 2 U1 + p``.
    """
    c = _as_model(sigma0)
    x = _check_data(x, c.dim)
    return _ufn_whitened(x @ c.inv_sqrt())


def _ufn_whitened(y: NDArray[np.float64]) -> float:
    # O(n^2 p) through the n x n Gram matrix
    n, p = y.shape
    g = y @ y.T
    diag = np.diag(g)
    u2 = (float(np.sum(g * g)) - float(np.sum(diag * diag))) / (n * (n - 1))
    u1 = float(np.sum(diag)) / n
    return u2 - 2.0 * u1 + p


def baseline_statistic(kind: str, sigma0: CovarianceModel | ArrayLike):
    """A closure ``x -> statistic`` with ``Sigma0^{-1/2}`` factored once."""
    c = _as_model(sigma0)
    if kind == "supn":
        m0 = c.matrix
        return lambda x: stat_supn(x, m0)
    if kind == "ufn":
        w = c.inv_sqrt()
        p = c.dim

        return lambda x: _ufn_whitened(_check_data(x, p) @ w)
    raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINE_KINDS}")


def _supn_shift(p: int) -> float:
    if p < 2:
        raise ValueError("asymptotic Supn calibration needs p >= 2")
    return 4.0 * math.log(p) - math.log(math.log(p))


def supn_asymptotic_quantile(p: int, alpha: float) -> float:
    """Upper ``alpha`` point of the Gumbel-type limit of ``M - 4 log p + log log p``, shifted back."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    t = -math.log(8.0 * math.pi) - 2.0 * math.log(math.log(1.0 / (1.0 - alpha)))
    return _supn_shift(p) + t


def supn_asymptotic_pvalue(m: float, p: int) -> float:
    t = m - _supn_shift(p)
    return float(1.0 - math.exp(-((8.0 * math.pi) ** -0.5) * math.exp(-t / 2.0)))


def null_distribution_mc(kind: str, sigma0: CovarianceModel | ArrayLike, config: BootstrapConfig) -> NDArray[np.float64]:
    """``B`` draws of the statistic on Gaussian data sets ``X = Z Sigma0^{1/2}``."""
    c = _as_model(sigma0)
    stat = baseline_statistic(kind, c)

    def one(b: int) -> float:
        return float(stat(gaussian_data(config.n, c, derive_stream(config.master_seed, b))))

    return np.array(parallel_map(one, range(config.B), config.threads), dtype=np.float64)


def calibrate_mc(kind: str, sigma0: CovarianceModel | ArrayLike, n: int, config: BootstrapConfig) -> float:
    """Monte-Carlo upper quantile; ``config.n`` is overridden by ``n``."""
    cfg = BootstrapConfig(n=n, B=config.B, alpha=config.alpha, master_seed=config.master_seed, threads=config.threads)
    return empirical_upper_quantile(null_distribution_mc(kind, sigma0, cfg), cfg.alpha)


def baseline_test(
    x: ArrayLike,
    sigma0: CovarianceModel | ArrayLike,
    kind: str = "supn",
    *,
    B: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    calibration: str = "monte_carlo",
    centering: str = "none",
    labels=None,
    threads: int | None = None,
) -> BaselineReport:
    """Run a baseline test; ``calibration`` is ``"monte_carlo"`` or, for Supn, ``"asymptotic"``."""
    c = _as_model(sigma0)
    x = _check_data(x, c.dim)
    n, p = x.shape
    x = center_rows(x, centering, labels)
    observed = float(baseline_statistic(kind, c)(x))
    if calibration == "asymptotic":
        if kind != "supn":
            raise ValueError("asymptotic calibration is only available for supn")
        q = supn_asymptotic_quantile(p, alpha)
        pv = supn_asymptotic_pvalue(observed, p)
        b_used = 0
    elif calibration == "monte_carlo":
        cfg = BootstrapConfig(n=n, B=B, alpha=alpha, master_seed=seed, threads=threads)
        null = null_distribution_mc(kind, c, cfg)
        q = empirical_upper_quantile(null, alpha)
        pv = bootstrap_p_value(null, observed)
        b_used = B
    else:
        raise ValueError(f"unknown calibration {calibration!r}")
    return BaselineReport(
        statistic_name=kind,
        observed=observed,
        quantile=float(q),
        p_value=float(pv),
        reject=bool(observed > q),
        B=b_used,
        alpha=alpha,
        master_seed=seed,
        n=n,
        p=p,
        extra={"centering": centering},
        calibration=calibration,
    )
