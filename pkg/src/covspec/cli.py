"""``covspec`` command line: test, simulate, edges, kappa, ci.

Every command prints one JSON document on stdout. Exit status is 0 when the
computation succeeded, whatever the statistical decision, and 1 on any
error, in which case the JSON carries an ``error`` code and a message.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .baselines import BASELINE_KINDS, baseline_test
from .bootstrap import test_covariance
from .ci import (
    CiReport,
    ci_bilinear,
    ci_inner_product,
    simultaneous_q,
    spectrum_external,
    spectrum_naive,
)
from .harness import ALL_STATISTICS, alternative_from_name, model_from_name, run_power, run_size
from .linalg import center_rows, sample_covariance
from .matrix_io import read_labels, read_matrix, read_symmetric, read_vector
from .rmt import (
    SpectralEnsemble,
    SpikeModel,
    admissible_check,
    bbp_kappa,
    corollary2_thresholds,
    support_edges,
)
from .sampling import distribution_from_name
from .stats import STATISTIC_KINDS

__all__ = ["main", "build_parser", "CliError"]

CLI_DISTRIBUTIONS = ("gauss", "unif_t", "gauss_unif", "gauss_t", "rademacher")


class CliError(Exception):
    code = "UsageError"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2; usage errors are ordinary errors here
        raise CliError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _centering(text: str) -> tuple[str, str | None]:
    if text in ("none", "global"):
        return text, None
    if text.startswith("groups:") and len(text) > len("groups:"):
        return "groups", text[len("groups:"):]
    raise argparse.ArgumentTypeError(f"--center must be none, global or groups:FILE, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="covspec", description="Spectral covariance tests with the universal bootstrap.")
    p.add_argument("--version", action="version", version=f"covspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--header", action="store_true", help="skip the first row of every input CSV")

    t = sub.add_parser("test", parents=[common], help="test H0: Sigma = Sigma0 on a data matrix")
    t.add_argument("--data", required=True)
    t.add_argument("--sigma0", required=True)
    t.add_argument("--stat", choices=ALL_STATISTICS, default="opn")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--B", type=int, default=1000)
    t.add_argument("--center", type=_centering, default=("none", None))
    t.add_argument("--calibration", choices=("monte_carlo", "asymptotic"), default="monte_carlo")

    s = sub.add_parser("simulate", parents=[common], help="size or power simulation to CSV")
    s.add_argument("mode", choices=("size", "power"))
    s.add_argument("--model", required=True, choices=("expdecay", "block", "signedsubexp"))
    s.add_argument("--dist", default="gauss", choices=CLI_DISTRIBUTIONS)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--reps", type=int, default=500)
    s.add_argument("--B", type=int, default=500)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--stats", default=",".join(STATISTIC_KINDS))
    s.add_argument("--sigma-grid", type=_floats, default=None)
    s.add_argument("--alt", choices=("spike", "whitenoise"), default="spike")
    s.add_argument("--out", required=True)

    e = sub.add_parser("edges", parents=[common], help="support edges and admissibility of a commuting ensemble")
    e.add_argument("--sigma-eigs")
    e.add_argument("--r-eigs")
    e.add_argument("--phi", type=float)
    e.add_argument("--sigma")
    e.add_argument("--sigma0")
    e.add_argument("--n", type=int)
    e.add_argument("--tau", type=float, default=0.0)
    e.add_argument("--eta", type=float, default=1e-4)
    e.add_argument("--spike", type=_floats, default=None, help="d,v1,r1 of one spike over this bulk")

    k = sub.add_parser("kappa", parents=[common], help="phase-transition point of one spike")
    k.add_argument("--spike", type=_floats, required=True, help="d,v1,r1")
    k.add_argument("--phi", type=float, required=True)
    k.add_argument("--bulk-eigs", default=None, help="bulk eigenvalues v2' (default: a single 1, identity bulk)")

    c = sub.add_parser("ci", parents=[common], help="simultaneous confidence intervals")
    c.add_argument("--data", required=True)
    c.add_argument("--spectrum", default="naive")
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--B", type=int, default=1000)
    c.add_argument("--center", type=_centering, default=("none", None))
    c.add_argument("--A", dest="a_matrix")
    c.add_argument("--c1")
    c.add_argument("--c2")
    return p


def _labels(center, header):
    mode, path = center
    return mode, (read_labels(path, header) if path else None)


def cmd_test(a) -> dict:
    x = read_matrix(a.data, a.header)
    s0 = read_symmetric(a.sigma0, a.header)
    mode, labels = _labels(a.center, a.header)
    if a.stat in BASELINE_KINDS:
        rep = baseline_test(
            x, s0, a.stat, B=a.B, alpha=a.alpha, seed=a.seed, calibration=a.calibration,
            centering=mode, labels=labels, threads=a.threads,
        )
    else:
        if a.calibration != "monte_carlo":
            raise CliError("--calibration asymptotic applies to --stat supn only")
        rep = test_covariance(
            x, s0, a.stat, B=a.B, alpha=a.alpha, seed=a.seed, centering=mode, labels=labels, threads=a.threads
        )
    return rep.to_dict()


def cmd_simulate(a) -> dict:
    stats = [t.strip() for t in a.stats.split(",") if t.strip()]
    model = model_from_name(a.model)
    dist = distribution_from_name(a.dist)
    if a.mode == "size":
        res = run_size([model], [dist], stats, a.n, a.p, a.reps, B=a.B, alpha=a.alpha, seed=a.seed, threads=a.threads)
    else:
        if not a.sigma_grid:
            raise CliError("power mode needs --sigma-grid")
        res = run_power(
            model, alternative_from_name(a.alt), a.sigma_grid, stats, a.n, a.p, a.reps,
            dist=dist, B=a.B, alpha=a.alpha, seed=a.seed, threads=a.threads,
        )
    res.write(a.out)
    return {"command": "simulate", "mode": a.mode, "out": a.out, "rows": len(res.rows), "seed": a.seed}


def _ensemble(a) -> SpectralEnsemble:
    if a.sigma_eigs:
        if a.phi is None:
            raise CliError("--sigma-eigs needs --phi")
        sig = read_vector(a.sigma_eigs, a.header)
        r = read_vector(a.r_eigs, a.header) if a.r_eigs else np.zeros_like(sig)
        return SpectralEnsemble(sig, r, a.phi)
    if a.sigma and a.sigma0:
        if a.n is None:
            raise CliError("--sigma/--sigma0 need --n")
        return SpectralEnsemble.null_pair(read_symmetric(a.sigma, a.header), read_symmetric(a.sigma0, a.header), a.n)
    raise CliError("edges needs --sigma-eigs/--phi or --sigma/--sigma0/--n")


def _spike_triple(values) -> tuple[float, float, float]:
    if values is None or len(values) != 3:
        raise CliError("--spike expects d,v1,r1")
    return values[0], values[1], values[2]


def _kappa_block(d, v1, r1, ens: SpectralEnsemble, sol) -> dict:
    bulk = ens.sigma_eigs
    model = SpikeModel([d], [v1], [r1], bulk, np.ones_like(bulk), ens.phi)
    edge = bbp_kappa(model, ens_ref=ens, solution=sol, scaling="edge")
    printed = bbp_kappa(model, ens_ref=ens, solution=sol, scaling="printed")
    return {
        "d_prime": edge.d_prime,
        "v_prime": edge.v_prime,
        "kappa": edge.kappa,
        "detectable": edge.detectable,
        "scaling": edge.scaling,
        "kappa_printed_scaling": printed.kappa,
    }


def cmd_edges(a) -> dict:
    ens = _ensemble(a)
    sol = support_edges(ens, eta=a.eta)
    adm = admissible_check(ens, a.tau, sol)
    out = {
        "command": "edges",
        "seed": a.seed,
        "phi": ens.phi,
        "p": ens.p,
        "E_minus": sol.E_minus,
        "E_plus": sol.E_plus,
        "m_minus": sol.m_minus,
        "m_plus": sol.m_plus,
        "margin_minus": sol.margin_minus,
        "margin_plus": sol.margin_plus,
        "refinement": list(sol.refinement),
        "which_edge_checked": adm.which_edge_checked,
        "margin": adm.margin,
        "tau": adm.tau,
        "admissible": adm.admissible,
        "commutativity_residual": ens.commutativity_residual,
    }
    if a.spike is not None:
        out["kappa"] = _kappa_block(*_spike_triple(a.spike), ens, sol)
    return out


def cmd_kappa(a) -> dict:
    d, v1, r1 = _spike_triple(a.spike)
    bulk = read_vector(a.bulk_eigs, a.header) if a.bulk_eigs else np.ones(1)
    ens = SpectralEnsemble(bulk, -bulk, a.phi)
    sol = support_edges(ens)
    out = {"command": "kappa", "seed": a.seed, "phi": a.phi, "E_plus": sol.E_plus, "m_plus": sol.m_plus}
    out.update(_kappa_block(d, v1, r1, ens, sol))
    c2 = corollary2_thresholds(d / r1, v1 / r1, a.phi, sol)
    out["corollary2"] = {
        "threshold_T": c2.threshold_T,
        "threshold_Roy": c2.threshold_Roy,
        "gap": c2.gap,
        "detectable_T": c2.detectable_T,
        "detectable_Roy": c2.detectable_Roy,
    }
    return out


def cmd_ci(a) -> dict:
    x = read_matrix(a.data, a.header)
    mode, labels = _labels(a.center, a.header)
    x = center_rows(x, mode, labels)
    n, p = x.shape
    s_hat = sample_covariance(x)
    if a.spectrum == "naive":
        spec = spectrum_naive(x)
    elif a.spectrum.startswith("file:"):
        spec = spectrum_external(read_vector(a.spectrum[len("file:"):], a.header))
    else:
        raise CliError(f"--spectrum must be naive or file:PATH, got {a.spectrum!r}")
    if spec.dim != p:
        raise CliError(f"spectrum has {spec.dim} values, data has p={p}")
    q = simultaneous_q(spec, n, B=a.B, alpha=a.alpha, seed=a.seed, threads=a.threads)
    if a.a_matrix:
        if a.c1 or a.c2:
            raise CliError("give either --A or --c1/--c2, not both")
        intervals = [ci_inner_product(s_hat, read_matrix(a.a_matrix, a.header), q)]
    elif a.c1 and a.c2:
        intervals = [ci_bilinear(s_hat, read_vector(a.c1, a.header), read_vector(a.c2, a.header), q)]
    else:
        raise CliError("ci needs --A or both --c1 and --c2")
    rep = CiReport(q=q, alpha=a.alpha, B=a.B, master_seed=a.seed, spectrum_method=spec.method, intervals=intervals)
    out = {"command": "ci", "n": n, "p": p}
    out.update(rep.to_dict())
    return out


_COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "edges": cmd_edges, "kappa": cmd_kappa, "ci": cmd_ci}


def _error_code(exc: BaseException) -> str:
    code = getattr(exc, "code", None)
    if isinstance(code, str):
        return code
    if isinstance(exc, OSError):
        return "IOError"
    return type(exc).__name__


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = _COMMANDS[args.command](args)
        if args.command == "test":
            out = {"command": "test", **out}
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - every failure becomes structured JSON
        print(json.dumps({"error": _error_code(exc), "message": str(exc)}))
        return 1
    print(json.dumps(out, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
