"""Deformed Marchenko-Pastur solver, support edges and spike thresholds.

The object of study is ``phi^{-1/2} (Sigma_hat + R)`` with ``Sigma`` and ``R``
commuting, ``phi = p / n``. Its limiting law is described through ``m(z)``,
the fixed point of

    1/m = -z + phi^{1/2} * mean_i s_i(z) / (1 + phi^{-1/2} m s_i(z)),
    s_i(z) = z sigma_i / (z - phi^{-1/2} r_i),

with ``sigma_i, r_i`` the joint eigenvalues. Edges and spectral arguments are
expressed in the units of the scaled matrix unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "RmtError",
    "NonConvergence",
    "PoleHit",
    "DegenerateSupport",
    "NonCommuting",
    "ZeroDenominator",
    "SpectralEnsemble",
    "MPSolution",
    "SpikeModel",
    "AdmissibilityReport",
    "KappaResult",
    "Corollary2",
    "solve_mtilde",
    "stieltjes_grid",
    "spectral_density",
    "support_edges",
    "admissible_check",
    "bbp_kappa",
    "corollary2_thresholds",
    "corollary1_normalize",
]


class RmtError(RuntimeError):
    code = "RmtError"


class NonConvergence(RmtError):
    code = "NonConvergence"

    def __init__(self, msg: str, residual: float = float("nan")):
        super().__init__(msg)
        self.residual = residual


class PoleHit(RmtError):
    code = "PoleHit"


class DegenerateSupport(RmtError):
    code = "DegenerateSupport"


class NonCommuting(RmtError):
    code = "NonCommuting"


class ZeroDenominator(RmtError):
    code = "ZeroDenominator"


# irrational mixing weight for joint diagonalization of commuting pairs
_MIX = 0.7548776662466927


@dataclass(frozen=True, eq=False)
class SpectralEnsemble:
    """Joint eigenvalues of a commuting pair ``(Sigma, R)`` plus ``phi = p/n``."""

    sigma_eigs: NDArray[np.float64]
    r_eigs: NDArray[np.float64]
    phi: float
    commutativity_residual: float = 0.0
    _atoms: tuple = field(init=False, repr=False, default=())

    def __post_init__(self) -> None:
        s = np.asarray(self.sigma_eigs, dtype=np.float64).ravel()
        r = np.asarray(self.r_eigs, dtype=np.float64).ravel()
        if s.shape != r.shape or s.size == 0:
            raise ValueError(f"sigma_eigs and r_eigs must be equal non-empty length, got {s.size}, {r.size}")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(r))):
            raise ValueError("ensemble eigenvalues must be finite")
        if np.any(s < -1e-12 * max(1.0, float(np.max(np.abs(s))))):
            raise ValueError("sigma_eigs must be nonnegative")
        if not self.phi > 0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        s = np.clip(s, 0.0, None)
        object.__setattr__(self, "sigma_eigs", s)
        object.__setattr__(self, "r_eigs", r)
        object.__setattr__(self, "phi", float(self.phi))
        pairs, counts = np.unique(np.column_stack([s, r]), axis=0, return_counts=True)
        object.__setattr__(self, "_atoms", (pairs[:, 0].copy(), pairs[:, 1].copy(), counts / s.size))

    @property
    def p(self) -> int:
        return self.sigma_eigs.size

    @property
    def c(self) -> float:
        """``phi^{-1/2}``."""
        return self.phi ** -0.5

    @property
    def poles(self) -> NDArray[np.float64]:
        sig, r, _ = self._atoms
        return np.unique(self.c * r[(sig > 0) & (r != 0)])

    @classmethod
    def from_matrices(cls, sigma: ArrayLike, r: ArrayLike, n: int, tol: float = 1e-8) -> "SpectralEnsemble":
        """Jointly diagonalize a commuting pair; raises NonCommuting otherwise."""
        sigma = np.asarray(sigma, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        if sigma.shape != r.shape or sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError(f"shape mismatch: {sigma.shape} vs {r.shape}")
        p = sigma.shape[0]
        resid = float(np.linalg.norm(sigma @ r - r @ sigma, 2))
        scale = max(1.0, float(np.linalg.norm(sigma, 2)) * float(np.linalg.norm(r, 2)))
        if resid > tol * scale:
            raise NonCommuting(f"||Sigma R - R Sigma||_op = {resid:.3g} exceeds {tol:g}")
        _, v = np.linalg.eigh(0.5 * (sigma + sigma.T) + _MIX * 0.5 * (r + r.T))
        ds = v.T @ sigma @ v
        dr = v.T @ r @ v
        return cls(np.diag(ds).copy(), np.diag(dr).copy(), p / n, commutativity_residual=resid)

    @classmethod
    def null_pair(cls, sigma: ArrayLike, sigma0: ArrayLike, n: int, tol: float = 1e-8) -> "SpectralEnsemble":
        """The ``(Sigma, -Sigma0)`` ensemble governing ``Sigma_hat - Sigma0``."""
        return cls.from_matrices(sigma, -np.asarray(sigma0, dtype=np.float64), n, tol)


def _s_of_z(z, sig, r, c):
    z = np.asarray(z)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = z * sig / (z - c * r)
    return np.where(sig == 0, 0.0, s)


def _fixed_map(m, z, ens: SpectralEnsemble):
    sig, r, w = ens._atoms
    c = ens.c
    s = _s_of_z(z, sig, r, c)
    inner = np.sum(w * s / (1.0 + c * np.asarray(m)[..., None] * s), axis=-1)
    return 1.0 / (-np.asarray(z) + ens.phi ** 0.5 * inner)


def _residual_and_slope(m, z, ens: SpectralEnsemble):
    """``G(m) = 1/m + z - phi^{1/2} mean s/(1+c m s)`` and ``dG/dm``."""
    sig, r, w = ens._atoms
    c = ens.c
    s = _s_of_z(z, sig, r, c)
    den = 1.0 + c * np.asarray(m)[..., None] * s
    g = 1.0 / m + z - ens.phi ** 0.5 * np.sum(w * s / den, axis=-1)
    gm = -1.0 / m ** 2 + np.sum(w * s * s / den ** 2, axis=-1)
    return g, gm


def _check_pole(z: complex, ens: SpectralEnsemble) -> None:
    sig, r, _ = ens._atoms
    live = (sig > 0) & (r != 0)
    if np.any(live):
        if z == 0:
            raise PoleHit("z = 0 is excluded when R has nonzero eigenvalues")
        gap = np.min(np.abs(z - ens.c * r[live]))
        if gap <= 1e-13 * (1.0 + abs(z)):
            raise PoleHit(f"z = {z} collides with a pole phi^(-1/2) r_i")
    if z == 0:
        raise PoleHit("z = 0 is not a valid spectral argument")


def _delta_map(delta, u, ens: SpectralEnsemble):
    """``f(delta) = phi * mean sigma / (sigma/(1+delta) + r - u)`` and ``f'(delta)``.

    ``delta`` is the normalized trace ``n^{-1} tr(Sigma Q)`` of the resolvent
    of the unscaled matrix at ``u = phi^{1/2} z``. For ``Im u > 0`` the map
    sends the upper half-plane into itself, so its fixed point there is unique.
    """
    sig, r, w = ens._atoms
    t = 1.0 + np.asarray(delta)[..., None]
    with np.errstate(all="ignore"):
        d = sig / t + r - np.asarray(u)[..., None]
        f = ens.phi * np.sum(w * sig / d, axis=-1)
        fp = ens.phi * np.sum(w * sig * sig / (t * t * d * d), axis=-1)
    return f, fp, d


def _newton_delta(delta, u, ens: SpectralEnsemble, steps: int, damping: float = 0.5):
    """Vectorized Newton on ``delta - f(delta)``; falls back to a damped
    fixed-point step wherever Newton would leave the upper half-plane."""
    for _ in range(steps):
        f, fp, _ = _delta_map(delta, u, ens)
        with np.errstate(all="ignore"):
            cand = delta - (delta - f) / (1.0 - fp)
        ok = np.isfinite(cand) & (cand.imag >= 0)
        fp_step = (1.0 - damping) * delta + damping * f
        new = np.where(ok, cand, np.where(np.isfinite(fp_step), fp_step, delta))
        moved = np.abs(new - delta)
        delta = new
        if np.all(ok) and np.all(moved <= 1e-14 * np.maximum(1.0, np.abs(delta))):
            break
    return delta


def _delta_residual(delta, u, ens: SpectralEnsemble):
    f, _, _ = _delta_map(delta, u, ens)
    return np.abs(delta - f) / np.maximum(1.0, np.abs(delta))


def _solve_delta(z, ens: SpectralEnsemble, tol: float = 1e-13, delta0=None, damping: float = 0.5):
    """``delta`` at (an array of) scaled spectral arguments ``z``.

    Starts high in the upper half-plane, where ``delta ~ 0``, and follows the
    branch down to ``Im z`` by continuation. Real ``z`` is reached as the
    limit from above followed by a Newton polish on the real axis.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    sq = ens.phi ** 0.5
    sig, r, _ = ens._atoms
    scale = max(1.0, float(np.max(np.abs(z))), ens.c * float(np.max(np.abs(r))), float(np.max(sig)))
    target = z.imag
    floor = 1e-12 * scale
    top = 10.0 * scale
    eta_min = max(float(np.min(np.maximum(target, floor))), floor)
    n_levels = max(2, int(np.ceil(np.log10(top / eta_min) * 2)) + 1)
    levels = np.geomspace(top, eta_min, n_levels)

    if delta0 is not None:
        d0 = np.broadcast_to(np.asarray(delta0, dtype=np.complex128), z.shape).copy()
        d = _newton_delta(d0, sq * z, ens, 30, damping)
        good = (_delta_residual(d, sq * z, ens) <= tol) & ((d.imag > 0) | (target == 0))
        if np.all(good):
            return d
    delta = np.zeros_like(z)
    for e in levels:
        zz = z.real + 1j * np.maximum(target, e)
        delta = _newton_delta(delta, sq * zz, ens, 20, damping)
    zz = z.real + 1j * np.maximum(target, eta_min)
    delta = _newton_delta(delta, sq * zz, ens, 40, damping)
    real = target == 0
    if np.any(real):
        # polish on the axis; keep the polished value only where it converged
        dr = delta[real].copy()
        ur = sq * z[real]
        for _ in range(40):
            f, fp, _ = _delta_map(dr, ur, ens)
            with np.errstate(all="ignore"):
                dr = dr - (dr - f) / (1.0 - fp)
        ok = np.isfinite(dr) & (_delta_residual(dr, ur, ens) <= tol)
        sub = delta[real]
        sub[ok] = dr[ok]
        delta[real] = sub
    return delta


def _m_from_delta(delta, z):
    with np.errstate(all="ignore"):
        return -1.0 / (np.asarray(z) * (1.0 + delta))


def solve_mtilde(
    z: complex,
    ens: SpectralEnsemble,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    m0: complex | None = None,
    damping: float = 0.5,
) -> complex:
    """Solve the deformed Marchenko-Pastur fixed point at ``z``.

    The root returned is the physical branch, ``m = -1/(z (1 + delta))`` with
    ``delta`` the resolvent trace, found by continuation from far up the
    upper half-plane and polished by Newton on the scalar residual. When the
    support of the law lies in ``[0, inf)`` (for instance ``R >= 0``) this
    branch has ``Im m >= 0`` for ``Im z > 0``. When ``R`` has negative
    eigenvalues ``Im m`` can be negative over the negative part of the
    support; the density is then read from :func:`spectral_density`.
    """
    z = complex(z)
    if z.imag < 0:
        raise ValueError("solve_mtilde needs Im z >= 0")
    _check_pole(z, ens)
    d0 = None
    if m0 is not None and np.isfinite(m0) and m0 != 0:
        d0 = -1.0 / (z * complex(m0)) - 1.0
    delta = _solve_delta(np.array([z]), ens, tol=min(tol, 1e-13), delta0=d0, damping=damping)[0]
    m = complex(_m_from_delta(delta, z))

    def resid(mm: complex) -> float:
        return abs(mm - complex(_fixed_map(mm, z, ens)))

    if not np.isfinite(m):
        raise NonConvergence(f"fixed point at z={z} is not finite", float("nan"))
    best, best_r = m, resid(m)
    mn = m
    it = 0
    while best_r > tol and it < min(max_iter, 50):
        g, gm = _residual_and_slope(mn, z, ens)
        g, gm = complex(g), complex(gm)
        if gm == 0 or not np.isfinite(g):
            break
        mn = mn - g / gm
        it += 1
        # a polish step must not hop to another root of the equation
        if not np.isfinite(mn) or abs(mn - m) > 1e-6 * max(1.0, abs(m)):
            break
        rn = resid(mn)
        if rn < best_r:
            best, best_r = mn, rn
    if best_r > tol:
        raise NonConvergence(f"fixed point at z={z} did not reach residual {tol:g}", best_r)
    return best


def stieltjes_grid(x: ArrayLike, ens: SpectralEnsemble, eta: float = 1e-4) -> NDArray[np.complex128]:
    """``m(x + i eta)`` on a real grid, physical branch, vectorized."""
    x = np.asarray(x, dtype=np.float64)
    z = x + 1j * eta
    delta = _solve_delta(z, ens)
    m = _m_from_delta(delta, z)
    return np.where(np.isfinite(m), m, np.nan + 0j)


def spectral_density(x: ArrayLike, ens: SpectralEnsemble, eta: float = 1e-4) -> NDArray[np.float64]:
    """Smoothed eigenvalue density of ``phi^{-1/2}(Sigma_hat + R)`` at ``x + i eta``.

    This is ``pi^{-1} Im`` of the ``p x p`` Stieltjes transform. Unlike
    ``Im m``, it is nonnegative for every ensemble and carries no atom at the
    origin coming from the ``n - p`` zero eigenvalues of the ``n x n`` side.
    """
    x = np.asarray(x, dtype=np.float64)
    z = x + 1j * eta
    delta = _solve_delta(z, ens)
    _, _, d = _delta_map(delta, ens.phi ** 0.5 * z, ens)
    _, _, w = ens._atoms
    with np.errstate(all="ignore"):
        mp = ens.phi ** 0.5 * np.sum(w / d, axis=-1)
    dens = mp.imag / np.pi
    return np.where(np.isfinite(dens), dens, np.nan)


@dataclass(frozen=True)
class MPSolution:
    E_minus: float
    E_plus: float
    m_minus: float
    m_plus: float
    margin_minus: float
    margin_plus: float
    density_grid: NDArray[np.float64] = field(repr=False)
    refinement: tuple[str, str] = ("bisection", "bisection")
    phi: float = 1.0

    @property
    def edges(self) -> tuple[float, float]:
        return (self.E_minus, self.E_plus)

    @property
    def m_at_edges(self) -> tuple[float, float]:
        return (self.m_minus, self.m_plus)


def _polish_edge(z0: float, m0: float, ens: SpectralEnsemble) -> tuple[float, float] | None:
    """Solve ``G = 0, dG/dm = 0`` jointly for a real edge near ``z0``."""
    sig, r, w = ens._atoms
    c = ens.c
    sq = ens.phi ** 0.5
    z, m = float(z0), float(m0)
    if not (np.isfinite(m) and m != 0):
        return None
    for _ in range(100):
        with np.errstate(all="ignore"):
            d = z - c * r
            s = np.where(sig == 0, 0.0, z * sig / d)
            ds = np.where(sig == 0, 0.0, -sig * c * r / d ** 2)
            den = 1.0 + c * m * s
            g = 1.0 / m + z - sq * np.sum(w * s / den)
            gm = -1.0 / m ** 2 + np.sum(w * s * s / den ** 2)
            gz = 1.0 - sq * np.sum(w * ds / den ** 2)
            gmm = 2.0 / m ** 3 - 2.0 * c * np.sum(w * s ** 3 / den ** 3)
            gmz = 2.0 * np.sum(w * s * ds / den ** 3)
        jac = np.array([[gm, gz], [gmm, gmz]])
        rhs = np.array([g, gm])
        if not (np.all(np.isfinite(jac)) and np.all(np.isfinite(rhs))):
            return None
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            return None
        m -= step[0]
        z -= step[1]
        if not (np.isfinite(m) and np.isfinite(z)) or m == 0:
            return None
        if abs(step[1]) <= 1e-14 * max(1.0, abs(z)) and abs(step[0]) <= 1e-12 * max(1.0, abs(m)):
            break
    else:
        return None
    g, gm = _residual_and_slope(m, z, ens)
    if abs(g) > 1e-9 * max(1.0, abs(1.0 / m)) or abs(gm) > 1e-7 * max(1.0, 1.0 / m ** 2):
        return None
    if ens.poles.size and np.min(np.abs(z - ens.poles)) < 1e-8:
        return None
    return z, m


def _edge_margin(e: float, m: float, ens: SpectralEnsemble) -> float:
    sig, r, _ = ens._atoms
    s = _s_of_z(e, sig, r, ens.c)
    with np.errstate(all="ignore"):
        vals = np.abs(1.0 + ens.c * m * s)
    vals = vals[np.isfinite(vals)]
    return float(np.min(vals)) if vals.size else float("inf")


def _density_at(xv: float, ens: SpectralEnsemble, eta: float, delta0=None) -> tuple[float, complex]:
    """Density and ``delta`` at one point, warm-started when possible."""
    z = np.array([complex(xv, eta)])
    delta = _solve_delta(z, ens, delta0=delta0)
    _, _, d = _delta_map(delta, ens.phi ** 0.5 * z, ens)
    _, _, w = ens._atoms
    with np.errstate(all="ignore"):
        dens = float((ens.phi ** 0.5 * np.sum(w / d, axis=-1)).imag[0] / np.pi)
    return dens, complex(delta[0])


def _components(mask: NDArray[np.bool_]) -> list[tuple[int, int]]:
    """Inclusive index ranges of the runs of True in ``mask``."""
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), stops.tolist()))


def _is_atom(a: float, b: float, ens: SpectralEnsemble, eta: float, threshold: float) -> bool:
    """A component whose extent collapses as ``eta`` shrinks is a point mass."""
    x = np.linspace(a, b, 401)
    dens = np.nan_to_num(spectral_density(x, ens, eta * 1e-2), nan=0.0)
    inside = x[dens > threshold]
    if inside.size == 0:
        return True
    return (inside[-1] - inside[0]) < 0.3 * (b - a)


def support_edges(
    ens: SpectralEnsemble,
    eta: float = 1e-4,
    grid_points: int = 2000,
    density_threshold: float = 1e-3,
    bisection_tol: float = 1e-6,
) -> MPSolution:
    """Locate the extreme edges of the continuous part of the limiting law.

    A grid scan of the smoothed density at ``x + i eta`` finds the runs above
    ``density_threshold``. Runs that shrink when ``eta`` is cut a hundredfold
    are point masses and are dropped. Bisection on the indicator narrows the
    outermost remaining runs to ``bisection_tol``, and a joint Newton solve of
    ``G = dG/dm = 0`` removes the smoothing bias when it converges nearby.
    """
    sig, r, _ = ens._atoms
    smax = float(np.max(sig))
    if smax <= 0:
        raise DegenerateSupport("Sigma is zero: the law is a point mass at phi^(-1/2) R")
    c = ens.c
    margin = 2.0 * max(1.0, c) * (1.0 + ens.phi ** 0.5) ** 2 * smax
    lo, hi = float(np.min(c * r)) - margin, float(np.max(c * r)) + margin

    for _ in range(4):
        x = np.linspace(lo, hi, grid_points)
        dens = spectral_density(x, ens, eta)
        inside = np.nan_to_num(dens, nan=0.0) > density_threshold
        if inside[0] or inside[-1]:
            width = hi - lo
            lo, hi = lo - width, hi + width
            continue
        step = x[1] - x[0]
        comps = [
            (i, j) for i, j in _components(inside)
            if not _is_atom(x[i] - step, x[j] + step, ens, eta, density_threshold)
        ]
        if not comps:
            raise DegenerateSupport(f"no continuous density above {density_threshold:g} on [{lo:.3g}, {hi:.3g}]")
        break
    else:
        raise DegenerateSupport("support reaches the scan window boundary")
    i_lo, i_hi = comps[0][0], comps[-1][1]
    # interior anchors stay inside the support at every smaller eta
    mid_lo = x[(comps[0][0] + comps[0][1]) // 2]
    mid_hi = x[(comps[-1][0] + comps[-1][1]) // 2]
    delta_grid = _solve_delta(x[[i_lo, i_hi]] + 1j * eta, ens)

    def bisect(a_out: float, b_in: float, d_guess: complex, level_eta: float) -> tuple[float, complex]:
        d_keep = d_guess
        while abs(b_in - a_out) > bisection_tol:
            mid = 0.5 * (a_out + b_in)
            dens_mid, dd = _density_at(mid, ens, level_eta, delta0=d_keep)
            if dens_mid > density_threshold:
                b_in, d_keep = mid, dd
            else:
                a_out = mid
        return 0.5 * (a_out + b_in), d_keep

    refinement = []
    results = []
    for out_i, in_i, anchor, dg in (
        (i_lo - 1, i_lo, mid_lo, delta_grid[0]),
        (i_hi + 1, i_hi, mid_hi, delta_grid[1]),
    ):
        e, de = bisect(x[out_i], x[in_i], dg, eta)
        pol = None
        # the smoothed indicator is biased outward near steep or hard edges;
        # re-bisect at smaller eta from an interior anchor and retry Newton
        for level in (eta, eta * 1e-2, eta * 1e-4):
            if level != eta:
                e, de = bisect(x[out_i], anchor, de, level)
            cand = _polish_edge(e, float(np.real(_m_from_delta(de, e))), ens)
            if cand is not None and abs(cand[0] - e) < 1e-2:
                pol = cand
                break
        if pol is not None:
            results.append(pol)
            refinement.append("newton")
            continue
        results.append((e, float(np.real(_m_from_delta(de, e)))))
        refinement.append("bisection")
    (em, m_m), (ep, m_p) = results
    return MPSolution(
        E_minus=float(em),
        E_plus=float(ep),
        m_minus=float(m_m),
        m_plus=float(m_p),
        margin_minus=_edge_margin(em, m_m, ens),
        margin_plus=_edge_margin(ep, m_p, ens),
        density_grid=np.column_stack([x, np.nan_to_num(np.clip(dens, 0.0, None))]),
        refinement=tuple(refinement),
        phi=ens.phi,
    )


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    which_edge_checked: str
    margin: float
    margin_plus: float
    margin_minus: float
    tau: float
    E_minus: float
    E_plus: float
    commutativity_residual: float


def admissible_check(ens: SpectralEnsemble, tau: float, solution: MPSolution | None = None) -> AdmissibilityReport:
    """Edge-margin condition at the edge(s) of larger modulus."""
    sol = solution if solution is not None else support_edges(ens)
    ap, am = abs(sol.E_plus), abs(sol.E_minus)
    if np.isclose(ap, am, rtol=0, atol=1e-9 * max(1.0, ap)):
        which, margin = "both", min(sol.margin_plus, sol.margin_minus)
    elif ap > am:
        which, margin = "plus", sol.margin_plus
    else:
        which, margin = "minus", sol.margin_minus
    return AdmissibilityReport(
        admissible=bool(margin >= tau),
        which_edge_checked=which,
        margin=float(margin),
        margin_plus=sol.margin_plus,
        margin_minus=sol.margin_minus,
        tau=float(tau),
        E_minus=sol.E_minus,
        E_plus=sol.E_plus,
        commutativity_residual=ens.commutativity_residual,
    )


@dataclass(frozen=True)
class SpikeModel:
    """Diagonal spike structure: ``k`` spikes over a ``p - k`` bulk.

    ``Sigma`` carries ``d`` on the spike coordinates and ``v2`` on the bulk,
    ``Sigma0`` carries ``v1`` and ``v2``, and the normalizer ``Sigma1`` carries
    ``r1`` and ``r2``.
    """

    d: NDArray[np.float64]
    v1: NDArray[np.float64]
    r1: NDArray[np.float64]
    v2: NDArray[np.float64]
    r2: NDArray[np.float64]
    phi: float

    def __post_init__(self) -> None:
        for name in ("d", "v1", "r1", "v2", "r2"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64)))
        k = self.d.size
        if self.v1.size != k or self.r1.size != k:
            raise ValueError("d, v1, r1 must have the same length")
        if self.v2.size != self.r2.size:
            raise ValueError("v2 and r2 must have the same length")
        if np.any(self.r1 <= 0) or np.any(self.r2 <= 0):
            raise ValueError("r1 and r2 must be positive")

    @property
    def d_prime(self) -> NDArray[np.float64]:
        return self.d / self.r1

    @property
    def v1_prime(self) -> NDArray[np.float64]:
        return self.v1 / self.r1

    @property
    def v2_prime(self) -> NDArray[np.float64]:
        return self.v2 / self.r2

    def bulk_ensemble(self) -> SpectralEnsemble:
        v = self.v2_prime
        return SpectralEnsemble(v, -v, self.phi)


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    d_prime: float
    v_prime: float
    detectable: bool
    E_plus: float
    m_at_edge: float
    scaling: str


def _edge_and_m(ens: SpectralEnsemble, solution: MPSolution | None) -> tuple[float, float]:
    sol = solution if solution is not None else support_edges(ens)
    return sol.E_plus, sol.m_plus


def bbp_kappa(
    model: SpikeModel,
    i: int = 0,
    ens_ref: SpectralEnsemble | None = None,
    scaling: str = "edge",
    solution: MPSolution | None = None,
) -> KappaResult:
    """Phase-transition point for spike ``i``; the spike is detectable iff ``d'_i > kappa``.

    With ``e`` the upper edge of the bulk in scaled units and ``m_e = m(e)``:

    * ``scaling="edge"`` (default): the outer ``E_+`` is the unscaled edge
      ``phi^{1/2} e``, so ``kappa = -phi^{1/2}/m_e - v'/(e m_e)``.
    * ``scaling="printed"``: ``m`` is evaluated at ``phi^{-1/2} e`` and the
      outer ``E_+`` is ``e`` itself.

    Both coincide at ``phi = 1``; only the first reproduces the classical
    threshold ``1 + sqrt(phi)`` for an identity bulk.
    """
    ens = ens_ref if ens_ref is not None else model.bulk_ensemble()
    e, m_e = _edge_and_m(ens, solution)
    sq = ens.phi ** 0.5
    v = float(model.v1_prime[i])
    d = float(model.d_prime[i])
    if scaling == "edge":
        m_eval, e_outer = m_e, sq * e
    elif scaling == "printed":
        m_eval = solve_mtilde(ens.c * e, ens).real
        e_outer = e
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    if m_eval == 0 or e_outer == 0:
        raise ZeroDenominator("m or E_+ vanishes at the evaluation point")
    kappa = -sq / m_eval - sq * v / (e_outer * m_eval)
    return KappaResult(float(kappa), d, v, bool(d > kappa), float(e), float(m_eval), scaling)


@dataclass(frozen=True)
class Corollary2:
    threshold_T: float
    threshold_Roy: float
    gap: float
    detectable_T: bool
    detectable_Roy: bool


def corollary2_thresholds(d_i: float, v_i: float, phi: float, solution: MPSolution) -> Corollary2:
    """Detection thresholds on ``d_i - v_i`` for the unnormalized and Roy statistics.

    ``solution`` must come from the T-null bulk ensemble ``(V2, -V2)``.
    """
    e, m_e = solution.E_plus, solution.m_plus
    if m_e == 0 or e == 0:
        raise ZeroDenominator("m or E_+ vanishes at the bulk edge")
    sq = phi ** 0.5
    thr_t = -sq / m_e - v_i * (1.0 + 1.0 / (e * m_e))
    thr_r = sq * v_i
    gap = d_i - v_i
    return Corollary2(float(thr_t), float(thr_r), float(gap), bool(gap > thr_t), bool(gap > thr_r))


def corollary1_normalize(lambda1: ArrayLike, n: int, p: int) -> NDArray[np.float64] | float:
    """``(lambda1 - p) / (p^{1/2} n^{-1/6})`` for the largest eigenvalue of ``Z^T Z``."""
    if not p > n:
        raise ValueError(f"normalization needs p > n, got n={n}, p={p}")
    out = (np.asarray(lambda1, dtype=np.float64) - p) / (p ** 0.5 * n ** (-1.0 / 6.0))
    return float(out) if out.ndim == 0 else out
