"""Property-based checks of the invariants each module promises."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from covspec.bootstrap import (
    BootstrapConfig,
    bootstrap_distribution,
    bootstrap_p_value,
    empirical_upper_quantile,
    test_covariance as run_test,
)
from covspec.ci import spectrum_external
from covspec.harness import BlockDiagonal, ExpDecay, SignedSubExp, Spike
from covspec.linalg import CovarianceModel, operator_norm, sample_covariance, sym_eigen, top_singular_values_sym
from covspec.matrix_io import read_matrix, write_matrix
from covspec.rmt import SpectralEnsemble, solve_mtilde, spectral_density
from covspec.sampling import derive_stream, gaussian_data
from covspec.stats import stat_T

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
samples = st.lists(finite, min_size=1, max_size=200)
alphas = st.floats(0.001, 0.999)
FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def sym_matrices(max_p=12):
    return st.integers(1, max_p).flatmap(
        lambda p: arrays(np.float64, (p, p), elements=st.floats(-100, 100)).map(lambda a: (a + a.T) / 2)
    )


@FAST
@given(samples, alphas, alphas)
def test_quantile_monotone(values, a1, a2):
    lo, hi = sorted((a1, a2))
    assert empirical_upper_quantile(values, lo) >= empirical_upper_quantile(values, hi)


@FAST
@given(samples, alphas)
def test_quantile_matches_oracle(values, alpha):
    assert empirical_upper_quantile(values, alpha) == oracles.upper_quantile(values, alpha)


@FAST
@given(samples, finite)
def test_p_value_range(values, observed):
    pv = bootstrap_p_value(values, observed)
    assert 1 / (len(values) + 1) <= pv <= 1
    assert pv == oracles.p_value(values, observed)


@FAST
@given(sym_matrices())
def test_eigen_reconstruction(s):
    e = sym_eigen(s)
    scale = max(1.0, float(np.abs(s).max()))
    assert np.abs(e.reconstruct() - s).max() <= 1e-10 * scale * s.shape[0]
    assert np.all(np.diff(e.values) <= 0)


@FAST
@given(sym_matrices())
def test_operator_norm_is_top_singular(s):
    assert operator_norm(s) == pytest.approx(top_singular_values_sym(s, 1)[0], rel=1e-12, abs=1e-12)


@FAST
@given(st.integers(2, 30), st.integers(1, 20), st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_sample_covariance_psd(n, p, seed, scale):
    x = np.random.default_rng(seed).standard_normal((n, p)) * scale
    s = sample_covariance(x)
    assert np.linalg.eigvalsh(s)[0] >= -1e-10 * max(operator_norm(s), 1e-300)


@FAST
@given(sym_matrices(8), sym_matrices(8), st.floats(0.01, 100))
def test_T_scale_law(a, b, c):
    if a.shape != b.shape:
        return
    assert stat_T(c * a, c * b) == pytest.approx(c * stat_T(a, b), rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([ExpDecay(), BlockDiagonal(), SignedSubExp()]), st.integers(1, 150))
def test_models_psd(model, p):
    assert np.linalg.eigvalsh(model.matrix(p))[0] > -1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 40), st.floats(0, 10), st.integers(0, 2**32 - 1))
def test_spike_trace_and_rank(p, sigma, seed):
    d = Spike().delta(sigma, ExpDecay().model(p), np.random.default_rng(seed))
    assert np.trace(d) == pytest.approx(0.75 * sigma, abs=1e-12)
    assert np.linalg.matrix_rank(d, tol=1e-9 * max(sigma, 1)) <= 2


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0.05, 3), st.floats(0, 2)), min_size=1, max_size=5),
    st.floats(0.1, 5),
    st.floats(-3, 10),
    st.floats(1e-3, 5),
)
def test_stieltjes_positivity(pairs, phi, x, eta):
    sig, r = map(np.array, zip(*pairs))
    m = solve_mtilde(complex(x, eta), SpectralEnsemble(sig, r, phi))
    assert m.imag >= 0


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0.05, 3), st.floats(-2, 2)), min_size=1, max_size=5),
    st.floats(0.1, 5),
    st.floats(1e-3, 1),
)
def test_pxp_density_nonnegative(pairs, phi, eta):
    sig, r = map(np.array, zip(*pairs))
    dens = spectral_density(np.linspace(-8, 12, 25), SpectralEnsemble(sig, r, phi), eta)
    assert np.all(dens >= -1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 50), min_size=1, max_size=20))
def test_spectrum_sorted_descending(values):
    v = spectrum_external(values).eigenvalues
    assert np.all(np.diff(v) <= 0)
    assert sorted(v.tolist()) == sorted(values)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_matrix_roundtrip(tmp_path_factory, m):
    path = tmp_path_factory.mktemp("m") / "m.csv"
    write_matrix(path, m)
    assert np.array_equal(read_matrix(path), m)


@pytest.mark.slow
def test_p_value_super_uniform():
    n = p = 50
    B = 49
    c = CovarianceModel(np.diag(np.linspace(0.5, 2.0, p)))
    pv = np.array([
        run_test(gaussian_data(n, c, derive_stream(777, r)), c, "opn", B=B, seed=100_000 + r).p_value
        for r in range(2000)
    ])
    for u in np.arange(0.01, 1.0, 0.01):
        assert np.mean(pv <= u) <= u + 1 / (B + 1) + 0.02, u


@pytest.mark.slow
def test_quantile_B_stability():
    c = CovarianceModel(np.diag(np.linspace(0.5, 2.0, 30)))
    small = bootstrap_distribution(c, "opn", BootstrapConfig(n=60, B=1000, master_seed=1), sigma0=c).quantile()
    big = bootstrap_distribution(c, "opn", BootstrapConfig(n=60, B=8000, master_seed=2), sigma0=c)
    batches = [empirical_upper_quantile(v, 0.05) for v in np.split(big.values, 8)]
    se = float(np.std(batches, ddof=1))  # spread of a B=1000 quantile
    assert abs(small - big.quantile()) <= 3 * se
