"""Monte-Carlo experiments: empirical size, power curves and universality checks.

Every replicate draws from its own ``(seed, index)`` stream, so a run is a
pure function of its integer seeds whatever the thread count. Null
thresholds are computed once per cell and reused across replicates and
signal levels, since they depend on ``Sigma0``, ``n`` and ``p`` only.
"""

from __future__ import annotations

import csv
import io
import json
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import stats as sps

from .baselines import BASELINE_KINDS, baseline_statistic, calibrate_mc
from .bootstrap import BootstrapConfig, bootstrap_many
from .linalg import CovarianceModel, NotPSD, sample_covariance
from .rmt import corollary1_normalize
from .sampling import (
    EntryDistribution,
    Gaussian,
    RngStream,
    draw_entries,
    general_data,
    parallel_map,
    sub_seed,
)
from .stats import STATISTIC_KINDS, make_statistic

__all__ = [
    "ExpDecay",
    "BlockDiagonal",
    "SignedSubExp",
    "Spike",
    "WhiteNoise",
    "ExperimentResult",
    "UniversalityResult",
    "ALL_STATISTICS",
    "model_from_name",
    "alternative_from_name",
    "run_size",
    "run_power",
    "run_bbp",
    "run_universality",
    "run_tracy_widom_check",
]

ALL_STATISTICS = STATISTIC_KINDS + BASELINE_KINDS

PSD_FLOOR = -1e-10


def _key(name: str) -> int:
    return zlib.crc32(name.encode())


def _checked(matrix: NDArray[np.float64], what: str) -> CovarianceModel:
    c = CovarianceModel(matrix)
    if c.psd_floor < PSD_FLOOR:
        raise NotPSD(f"{what}: smallest eigenvalue {c.psd_floor:.3g} < {PSD_FLOOR:g}")
    return c


@dataclass(frozen=True)
class ExpDecay:
    rho: float = 0.6
    name = "expdecay"

    def matrix(self, p: int) -> NDArray[np.float64]:
        idx = np.arange(p)
        return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)

    def model(self, p: int) -> CovarianceModel:
        return _checked(self.matrix(p), f"{self.name}(p={p})")


@dataclass(frozen=True)
class BlockDiagonal:
    """``floor(p / block)`` equicorrelated blocks; leftover coordinates are independent."""

    block: int = 10
    off: float = 0.55
    name = "block"

    def matrix(self, p: int) -> NDArray[np.float64]:
        m = np.eye(p)
        for k in range(p // self.block):
            sl = slice(k * self.block, (k + 1) * self.block)
            m[sl, sl] = self.off
        np.fill_diagonal(m, 1.0)
        return m

    def model(self, p: int) -> CovarianceModel:
        return _checked(self.matrix(p), f"{self.name}(p={p})")


@dataclass(frozen=True)
class SignedSubExp:
    base: float = 0.4
    power: float = 0.5
    name = "signedsubexp"

    def matrix(self, p: int) -> NDArray[np.float64]:
        idx = np.arange(p)
        gap = np.abs(idx[:, None] - idx[None, :]).astype(np.float64)
        sign = np.where((idx[:, None] + idx[None, :]) % 2 == 0, 1.0, -1.0)
        return sign * self.base ** (gap ** self.power)

    def model(self, p: int) -> CovarianceModel:
        return _checked(self.matrix(p), f"{self.name}(p={p})")


CovModelKind = ExpDecay | BlockDiagonal | SignedSubExp

_MODELS = {"expdecay": ExpDecay(), "block": BlockDiagonal(), "signedsubexp": SignedSubExp()}


def model_from_name(name: str) -> CovModelKind:
    try:
        return _MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(_MODELS)}") from None


def _fifth_eigenvector(sigma0: CovarianceModel) -> NDArray[np.float64]:
    if sigma0.dim < 5:
        raise ValueError("the spike direction needs p >= 5")
    u = sigma0.eig.vectors[:, 4].copy()
    lead = u[np.flatnonzero(np.abs(u) > 1e-12)[0]]
    return u if lead > 0 else -u


@dataclass(frozen=True)
class Spike:
    """``sigma u u^T / 2 + sigma v v^T / 4``; ``u`` is the fifth eigenvector of ``Sigma0``, ``v`` is uniform on the sphere."""

    name = "spike"

    def delta(self, sigma: float, sigma0: CovarianceModel, rng: np.random.Generator) -> NDArray[np.float64]:
        if sigma < 0:
            raise ValueError(f"signal level must be nonnegative, got {sigma}")
        u = _fifth_eigenvector(sigma0)
        v = rng.standard_normal(sigma0.dim)
        v /= np.linalg.norm(v)
        return sigma * np.outer(u, u) / 2.0 + sigma * np.outer(v, v) / 4.0


@dataclass(frozen=True)
class WhiteNoise:
    name = "whitenoise"

    def delta(self, sigma: float, sigma0: CovarianceModel, rng: np.random.Generator) -> NDArray[np.float64]:
        if sigma < 0:
            raise ValueError(f"signal level must be nonnegative, got {sigma}")
        return sigma * np.eye(sigma0.dim)


AlternativeKind = Spike | WhiteNoise

_ALTERNATIVES = {"spike": Spike(), "whitenoise": WhiteNoise()}


def alternative_from_name(name: str) -> AlternativeKind:
    try:
        return _ALTERNATIVES[name]
    except KeyError:
        raise ValueError(f"unknown alternative {name!r}; choose from {sorted(_ALTERNATIVES)}") from None


CSV_COLUMNS = (
    "experiment",
    "statistic",
    "model",
    "distribution",
    "alternative",
    "n",
    "p",
    "sigma",
    "rejection_rate",
    "mc_se",
    "reps",
    "B",
    "alpha",
    "seed",
    "threshold",
)


@dataclass(frozen=True)
class ExperimentResult:
    """Long-format rows, one per (statistic, model, distribution, n, p, sigma) cell."""

    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    def rate(self, **where) -> float:
        hits = [r for r in self.rows if all(r[k] == v for k, v in where.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {where}")
        return hits[0]["rejection_rate"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata, "rows": self.rows}, indent=2, sort_keys=True)

    def write(self, path: str) -> None:
        text = self.to_json() if str(path).endswith(".json") else self.to_csv()
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _row(experiment, stat, model, dist, alt, n, p, sigma, hits, reps, B, alpha, seed, thr) -> dict:
    r = hits / reps
    return {
        "experiment": experiment,
        "statistic": stat,
        "model": model,
        "distribution": dist,
        "alternative": alt,
        "n": n,
        "p": p,
        "sigma": float(sigma),
        "rejection_rate": float(r),
        "mc_se": float(np.sqrt(r * (1.0 - r) / reps)),
        "reps": reps,
        "B": B,
        "alpha": float(alpha),
        "seed": seed,
        "threshold": float(thr),
    }


def _validate(statistics: Sequence[str], reps: int) -> None:
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    bad = [s for s in statistics if s not in ALL_STATISTICS]
    if bad or not statistics:
        raise ValueError(f"unknown statistics {bad}; choose from {ALL_STATISTICS}")


def _thresholds(sigma0: CovarianceModel, statistics, n, B, alpha, seed, threads) -> dict[str, float]:
    """Null critical values: universal bootstrap for spectral statistics, Gaussian MC for baselines."""
    out: dict[str, float] = {}
    spectral = [s for s in statistics if s in STATISTIC_KINDS]
    if spectral:
        cfg = BootstrapConfig(n=n, B=B, alpha=alpha, master_seed=sub_seed(seed, 1), threads=threads)
        boots = bootstrap_many(sigma0, [make_statistic(s, sigma0) for s in spectral], cfg)
        out.update({s: boots[s].quantile() for s in spectral})
    for s in statistics:
        if s in BASELINE_KINDS:
            cfg = BootstrapConfig(n=n, B=B, alpha=alpha, master_seed=sub_seed(seed, 2, _key(s)), threads=threads)
            out[s] = calibrate_mc(s, sigma0, n, cfg)
    return out


def _evaluators(sigma0: CovarianceModel, statistics):
    ev = {}
    for s in statistics:
        if s in STATISTIC_KINDS:
            st = make_statistic(s, sigma0)
            ev[s] = (True, st)
        else:
            ev[s] = (False, baseline_statistic(s, sigma0))
    return ev


def _evaluate(ev, statistics, x) -> list[float]:
    s_hat = sample_covariance(x) if any(ev[s][0] for s in statistics) else None
    return [float(ev[s][1](s_hat if ev[s][0] else x)) for s in statistics]


def run_size(
    models: Sequence[CovModelKind],
    distributions: Sequence[EntryDistribution],
    statistics: Sequence[str],
    n: int,
    p: int,
    reps: int = 500,
    *,
    B: int = 500,
    alpha: float = 0.05,
    seed: int = 0,
    threads: int | None = None,
) -> ExperimentResult:
    """Empirical size: data simulated under ``Sigma = Sigma0`` for every (model, distribution) cell."""
    _validate(statistics, reps)
    rows = []
    for model in models:
        sigma0 = model.model(p)
        cell_seed = sub_seed(seed, _key(model.name), n, p)
        thr = _thresholds(sigma0, statistics, n, B, alpha, cell_seed, threads)
        ev = _evaluators(sigma0, statistics)
        for dist in distributions:
            data_seed = sub_seed(cell_seed, 3, _key(dist.name))

            def one(b: int, dist=dist, data_seed=data_seed) -> list[float]:
                x = general_data(n, sigma0, dist, RngStream(data_seed, b))
                return _evaluate(ev, statistics, x)

            try:
                vals = np.array(parallel_map(one, range(reps), threads))
            except Exception as exc:
                raise RuntimeError(f"size cell (model={model.name}, dist={dist.name}, n={n}, p={p}): {exc}") from exc
            for j, s in enumerate(statistics):
                hits = int(np.count_nonzero(vals[:, j] > thr[s]))
                rows.append(_row("size", s, model.name, dist.name, "none", n, p, 0.0, hits, reps, B, alpha, seed, thr[s]))
    return ExperimentResult(rows, {"experiment": "size", "seed": seed, "B": B, "alpha": alpha, "reps": reps})


def run_power(
    model: CovModelKind,
    alternative: AlternativeKind,
    sigma_grid: Sequence[float],
    statistics: Sequence[str],
    n: int,
    p: int,
    reps: int = 500,
    *,
    dist: EntryDistribution = Gaussian(),
    B: int = 500,
    alpha: float = 0.05,
    seed: int = 0,
    threads: int | None = None,
) -> ExperimentResult:
    """Rejection rates under ``Sigma = Sigma0 + Delta(sigma)`` with thresholds calibrated under ``Sigma0``.

    Replicate ``b`` reuses the same entry and direction streams at every
    ``sigma``, so the curves are built from common random numbers.
    """
    _validate(statistics, reps)
    grid = [float(s) for s in sigma_grid]
    if not grid or any(s < 0 for s in grid):
        raise ValueError(f"sigma grid must be non-empty and nonnegative, got {grid}")
    sigma0 = model.model(p)
    cell_seed = sub_seed(seed, _key(model.name), n, p)
    thr = _thresholds(sigma0, statistics, n, B, alpha, cell_seed, threads)
    ev = _evaluators(sigma0, statistics)
    data_seed = sub_seed(cell_seed, 3, _key(dist.name))
    dir_seed = sub_seed(cell_seed, 4, _key(alternative.name))
    rows = []
    for sg in grid:

        def one(b: int) -> list[float]:
            delta = alternative.delta(sg, sigma0, RngStream(dir_seed, b).generator())
            sigma = sigma0 if sg == 0 else _checked(sigma0.matrix + delta, f"Sigma0 + Delta({sg})")
            x = general_data(n, sigma, dist, RngStream(data_seed, b))
            return _evaluate(ev, statistics, x)

        vals = np.array(parallel_map(one, range(reps), threads))
        for j, s in enumerate(statistics):
            hits = int(np.count_nonzero(vals[:, j] > thr[s]))
            rows.append(_row("power", s, model.name, dist.name, alternative.name, n, p, sg, hits, reps, B, alpha, seed, thr[s]))
    meta = {
        "experiment": "power",
        "seed": seed,
        "B": B,
        "alpha": alpha,
        "reps": reps,
        "spike_direction_v": "resampled per replicate" if isinstance(alternative, Spike) else "n/a",
    }
    return ExperimentResult(rows, meta)


def run_bbp(
    d_grid: Sequence[float],
    n: int,
    p: int,
    reps: int = 300,
    *,
    statistic: str = "opn",
    B: int = 500,
    alpha: float = 0.05,
    seed: int = 0,
    threads: int | None = None,
) -> ExperimentResult:
    """Power against a single spike ``Sigma = diag(d, 1, ..., 1)`` over an identity null."""
    _validate([statistic], reps)
    sigma0 = CovarianceModel.identity(p)
    thr = _thresholds(sigma0, [statistic], n, B, alpha, sub_seed(seed, 5, n, p), threads)[statistic]
    ev = _evaluators(sigma0, [statistic])
    data_seed = sub_seed(seed, 6, n, p)
    rows = []
    for d in d_grid:
        root = np.ones(p)
        root[0] = np.sqrt(d)

        def one(b: int) -> float:
            z = RngStream(data_seed, b).generator().standard_normal((n, p))
            return _evaluate(ev, [statistic], z * root)[0]

        vals = np.array(parallel_map(one, range(reps), threads))
        hits = int(np.count_nonzero(vals > thr))
        rows.append(_row("bbp", statistic, "identity", "gauss", "single_spike", n, p, d, hits, reps, B, alpha, seed, thr))
    return ExperimentResult(rows, {"experiment": "bbp", "seed": seed, "B": B, "alpha": alpha, "reps": reps})


@dataclass(frozen=True)
class UniversalityResult:
    ks_distance: float
    pvalue: float
    reps: int
    samples: NDArray[np.float64] = field(repr=False)
    reference: NDArray[np.float64] = field(repr=False)


def _ks(a: NDArray, b: NDArray, reps: int) -> UniversalityResult:
    res = sps.ks_2samp(a, b)
    return UniversalityResult(float(res.statistic), float(res.pvalue), reps, a, b)


def run_universality(
    sigma: CovarianceModel,
    sigma0: CovarianceModel,
    dist: EntryDistribution,
    n: int,
    reps: int = 1000,
    *,
    statistic: str = "opn",
    seed: int = 0,
    threads: int | None = None,
) -> UniversalityResult:
    """Two-sample KS distance between the statistic under ``dist`` entries and under Gaussian entries."""
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")
    st = make_statistic(statistic, sigma0)
    seed_dist = sub_seed(seed, 7, _key(dist.name))
    seed_gauss = sub_seed(seed, 8)

    def draw(d: EntryDistribution, s: int):
        def one(b: int) -> float:
            return float(st(sample_covariance(general_data(n, sigma, d, RngStream(s, b)))))

        return np.array(parallel_map(one, range(reps), threads))

    return _ks(draw(dist, seed_dist), draw(Gaussian(), seed_gauss), reps)


def run_tracy_widom_check(
    n: int,
    p: int,
    dist: EntryDistribution,
    reps: int = 500,
    *,
    seed: int = 0,
    threads: int | None = None,
) -> UniversalityResult:
    """Normalized ``lambda_1(Z^T Z)`` under ``dist`` against the Gaussian-entry ensemble.

    The largest eigenvalue is read from the ``n x n`` Gram matrix ``Z Z^T``,
    which has the same nonzero spectrum.
    """
    if p < 10 * n:
        raise ValueError(f"ultra-high-dimensional check needs p >= 10 n, got n={n}, p={p}")
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")

    def draw(d: EntryDistribution, s: int):
        def one(b: int) -> float:
            z = draw_entries(RngStream(s, b).generator(), (n, p), d)
            return float(np.linalg.eigvalsh(z @ z.T)[-1])

        lam = np.array(parallel_map(one, range(reps), threads))
        return corollary1_normalize(lam, n, p)

    return _ks(draw(dist, sub_seed(seed, 9, _key(dist.name))), draw(Gaussian(), sub_seed(seed, 10)), reps)
