"""Spectral tests for high-dimensional covariance matrices.

The universal bootstrap calibrates operator-norm statistics of the sample
covariance by recomputing them on Gaussian data with the null covariance.
The package also ships a deformed Marchenko-Pastur solver for support edges
and spike thresholds, entrywise and Frobenius baselines, simultaneous
confidence intervals and a Monte-Carlo experiment harness.
"""

__version__ = "0.1.0"

from .bootstrap import (  # noqa: E402
    BootstrapConfig,
    BootstrapSample,
    TestReport,
    bootstrap_distribution,
    bootstrap_many,
    empirical_upper_quantile,
    test_covariance,
    test_exs,
)
from .linalg import CovarianceModel, operator_norm, sample_covariance, schatten1  # noqa: E402
from .rmt import SpectralEnsemble, SpikeModel, bbp_kappa, solve_mtilde, support_edges  # noqa: E402
from .sampling import RngStream, general_data, gaussian_data  # noqa: E402
from .stats import ExsBlock, ExsSpec, make_statistic, stat_com, stat_roy, stat_T  # noqa: E402

__all__ = [
    "__version__",
    "BootstrapConfig",
    "BootstrapSample",
    "TestReport",
    "bootstrap_distribution",
    "bootstrap_many",
    "empirical_upper_quantile",
    "test_covariance",
    "test_exs",
    "CovarianceModel",
    "operator_norm",
    "sample_covariance",
    "schatten1",
    "SpectralEnsemble",
    "SpikeModel",
    "bbp_kappa",
    "solve_mtilde",
    "support_edges",
    "RngStream",
    "general_data",
    "gaussian_data",
    "ExsBlock",
    "ExsSpec",
    "make_statistic",
    "stat_T",
    "stat_roy",
    "stat_com",
]
