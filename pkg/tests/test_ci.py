import numpy as np
import pytest

from conftest import exp_decay
from covspec.bootstrap import BootstrapConfig, bootstrap_distribution
from covspec.ci import (
    Interval,
    SpectrumEstimate,
    ci_bilinear,
    ci_inner_product,
    simultaneous_q,
    spectrum_external,
    spectrum_naive,
    spectrum_oracle,
)
from covspec.linalg import CovarianceModel, sample_covariance, schatten1
from covspec.sampling import derive_stream, gaussian_data


def test_naive_spectrum_zero_data():
    assert np.all(spectrum_naive(np.zeros((5, 3))).eigenvalues == 0)


def test_naive_spectrum_low_dimension():
    c = CovarianceModel(np.diag([5.0, 4, 3, 2, 1]))
    est = spectrum_naive(gaussian_data(5000, c, derive_stream(1, 0)))
    np.testing.assert_allclose(est.eigenvalues, [5, 4, 3, 2, 1], rtol=0.05)


def test_naive_spectrum_overshoots_at_p_equal_n():
    est = spectrum_naive(gaussian_data(200, CovarianceModel.identity(200), derive_stream(2, 0)))
    assert est.eigenvalues[0] > 1.5


def test_spectrum_validation():
    with pytest.raises(ValueError):
        spectrum_external([1.0, -0.5])
    with pytest.raises(ValueError):
        SpectrumEstimate(np.array([1.0]), "shrinkage")
    assert list(spectrum_external([1.0, 3.0, 2.0]).eigenvalues) == [3.0, 2.0, 1.0]


def test_q_zero_spectrum():
    assert simultaneous_q(spectrum_external(np.zeros(4)), 10, B=20) == 0.0


def test_q_permutation_invariant():
    v = np.array([3.0, 0.5, 2.0, 1.0])
    a = simultaneous_q(spectrum_external(v), 30, B=100, seed=4)
    b = simultaneous_q(spectrum_external(v[::-1]), 30, B=100, seed=4)
    assert a == b


def test_q_matches_full_identity_path():
    n = p = 100
    q_diag = simultaneous_q(spectrum_oracle(np.eye(p)), n, B=1000, alpha=0.05, seed=10)
    boot = bootstrap_distribution(CovarianceModel.identity(p), "opn", BootstrapConfig(n=n, B=1000, master_seed=11), sigma0=np.eye(p))
    # batch standard error of the quantile
    batches = [np.quantile(v, 0.95) for v in np.split(boot.values, 10)]
    se = np.std(batches, ddof=1) / np.sqrt(10)
    assert abs(q_diag - boot.quantile()) <= 3 * max(se, 1e-12) * np.sqrt(2)


def test_q_scale_equivariance():
    v = np.linspace(0.5, 2.0, 30)
    q1 = simultaneous_q(spectrum_external(v), 60, B=400, seed=5)
    q3 = simultaneous_q(spectrum_external(3 * v), 60, B=400, seed=5)
    # same seed: Gaussian draws scale exactly
    assert q3 == pytest.approx(3 * q1, rel=1e-10)


def test_inner_product_intervals():
    s = np.array([[2.0, 0.3], [0.3, 1.0]])
    iv = ci_inner_product(s, np.zeros((2, 2)), 0.7)
    assert iv.lower == iv.upper == 0.0
    iv = ci_inner_product(s, np.diag([1.0, 0.0]), 0.7)
    assert iv.center == 2.0 and iv.half_width == 0.7


def test_bilinear_intervals(rng):
    s = np.array([[2.0, 0.3], [0.3, 1.0]])
    iv = ci_bilinear(s, [1.0, 0.0], [0.0, 0.0], 0.7)
    assert iv == Interval(0.0, 0.0)
    e1 = np.array([1.0, 0.0])
    assert ci_bilinear(s, e1, e1, 0.7) == ci_inner_product(s, np.outer(e1, e1), 0.7)


def test_bilinear_half_width_vs_symmetrized(rng):
    # the symmetrized outer product has eigenvalues (c1.c2 +- |c1||c2|)/2,
    # so its Schatten-1 norm is exactly |c1||c2|
    s = np.eye(9)
    for _ in range(200):
        p = int(rng.integers(2, 10))
        c1, c2 = rng.standard_normal(p), rng.standard_normal(p)
        a = (np.outer(c1, c2) + np.outer(c2, c1)) / 2
        q = float(rng.uniform(0.1, 3))
        bil = ci_bilinear(s[:p, :p], c1, c2, q)
        sym = ci_inner_product(s[:p, :p], a, q)
        assert bil.half_width <= sym.half_width + 1e-9
        assert bil.half_width == pytest.approx(sym.half_width, rel=1e-9)
        assert bil.center == pytest.approx(sym.center, abs=1e-12)


def _coverage(alpha, reps, seed, pairs=50):
    p = n = 40
    sigma = exp_decay(p)
    c = CovarianceModel(sigma)
    q = simultaneous_q(spectrum_oracle(c), n, B=300, alpha=alpha, seed=seed)
    rng = np.random.default_rng(seed)
    covered = 0
    for r in range(reps):
        s = sample_covariance(gaussian_data(n, c, derive_stream(seed + 1, r)))
        a = rng.standard_normal((p, p))
        a = (a + a.T) / 2
        covered += ci_inner_product(s, a, q).contains(float(np.sum(a * sigma)))
    return covered / reps, q


def test_inner_product_coverage():
    cov, _ = _coverage(0.1, 500, 7)
    assert cov >= 1 - 0.1 - 0.03


def test_coverage_monotone_in_alpha():
    # intervals share data and draws across alpha, so coverage can only rise as alpha falls
    p = n = 40
    sigma = exp_decay(p)
    c = CovarianceModel(sigma)
    qs = [simultaneous_q(spectrum_oracle(c), n, B=300, alpha=a, seed=3) for a in (0.3, 0.1, 0.02)]
    assert qs[0] <= qs[1] <= qs[2]
    devs = [np.linalg.norm(sample_covariance(gaussian_data(n, c, derive_stream(4, r))) - sigma, 2) for r in range(300)]
    cover = [np.mean(np.array(devs) <= q) for q in qs]
    assert cover[0] <= cover[1] <= cover[2]
