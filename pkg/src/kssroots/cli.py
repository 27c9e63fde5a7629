"""Command-line front end.

    kssroots sigma2   [--method direct|mehler] [--terms L] [--tol TOL]
    kssroots rice     --degree D [--tol TOL]
    kssroots simulate --degree D --samples N --seed S [--grid-step H] [--workers W]
    kssroots clt      --degree D --samples N --seed S --z-out PATH [...]
    kssroots kernel   --degree D --tmax T --step H

Common flags: ``--format csv|json`` (default csv) and ``--out PATH``
(default standard output).  Files are written to a temporary name and
renamed only on success.  Exit status: 0 success, 1 usage error, 2 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import __version__, asymptotics, kernels, montecarlo, rice
from .errors import DomainError, NumericalError
from .output import atomic_writer, csv_text, json_rows_text, json_text
from .rootcount import DEFAULT_ROUNDS, DEFAULT_STEP, count_rows_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class Subcommand(str, Enum):
    SIGMA2 = "sigma2"
    RICE = "rice"
    SIMULATE = "simulate"
    CLT = "clt"
    KERNEL = "kernel"


class OutFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class RunConfig:
    subcommand: Subcommand
    degree: int = 0
    samples: int = 0
    seed: int = 0
    tol: float = 1e-9
    grid_step: float = DEFAULT_STEP
    workers: int = 1
    out_format: OutFormat = OutFormat.CSV
    out_path: Optional[str] = None
    method: str = "direct"
    terms: int = 64
    tmax: float = 0.0
    step: float = 0.0
    z_out: Optional[str] = None
    counts_out: Optional[str] = None


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--format", dest="out_format", choices=[f.value for f in OutFormat],
                        default="csv")
    common.add_argument("--out", dest="out_path", default=None)

    parser = _Parser(prog="kssroots", description="Real-root statistics of KSS polynomials.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("sigma2", parents=[common], help="asymptotic variance constant")
    p.add_argument("--method", choices=["direct", "mehler"], default="direct")
    p.add_argument("--terms", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("rice", parents=[common], help="exact finite-degree variance")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)

    for name, text in (("simulate", "Monte Carlo root-count summary"),
                       ("clt", "summary plus standardized counts")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--degree", type=int, required=True)
        p.add_argument("--samples", type=int, required=True)
        p.add_argument("--seed", type=_seed, required=True)
        p.add_argument("--grid-step", type=float, default=DEFAULT_STEP)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--counts-out", default=None,
                       help="CSV file with one row per sample")
        if name == "clt":
            p.add_argument("--z-out", required=True,
                           help="CSV file for the standardized counts (column z)")

    p = sub.add_parser("kernel", parents=[common], help="kernel and Rice quantities table")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(list(argv)))
    ns["subcommand"] = Subcommand(ns["subcommand"])
    ns["out_format"] = OutFormat(ns["out_format"])
    return RunConfig(**ns)


# ------------------------------------------------------------------ commands

def _sigma2(cfg, files):
    if cfg.method == "direct":
        res = asymptotics.sigma2_direct(tol=cfg.tol)
    else:
        res = asymptotics.sigma2_mehler(L=cfg.terms, tol=cfg.tol)
    return [{
        "sigma2": res.value,
        "abs_error_estimate": res.quadrature.abs_error_estimate,
        "method": res.method.value,
        "n_evals": res.quadrature.n_evals,
        "series_terms_used": res.series_terms_used,
    }]


def _rice(cfg, files):
    sfm = rice.second_factorial_moment(cfg.degree, tol=cfg.tol)
    if not sfm.converged:
        raise NumericalError(f"Rice quadrature did not converge for d={cfg.degree}")
    var = rice.variance_exact(cfg.degree, tol=cfg.tol)
    return [{
        "d": cfg.degree,
        "second_factorial_moment": sfm.value,
        "abs_error_estimate": sfm.abs_error_estimate,
        "variance": var,
        "variance_over_sqrt_d": var / math.sqrt(cfg.degree),
    }]


def _counted(cfg, files):
    counted = montecarlo.count_samples(cfg.degree, cfg.samples, cfg.seed, cfg.workers,
                                       cfg.grid_step, DEFAULT_ROUNDS)
    if cfg.counts_out:
        keep = ~counted.failed
        files.append((cfg.counts_out, count_rows_csv(
            np.flatnonzero(keep), counted.counts[keep],
            counted.grid_step_used[keep], counted.flagged_tangencies[keep])))
    return counted


def _simulate(cfg, files):
    return [montecarlo.summarize(_counted(cfg, files)).to_record()]


def _clt(cfg, files):
    counted = _counted(cfg, files)
    summary = montecarlo.summarize(counted)
    z = montecarlo.standardize(counted.kept(), counted.d)
    files.append((cfg.z_out, csv_text(["z"], ([v] for v in z))))
    return [summary.to_record()]


def _kernel(cfg, files):
    d = cfg.degree
    if d < 2:
        raise DomainError("kernel table needs degree >= 2")
    upper = math.sqrt(d) * math.pi / 2
    if not 0 < cfg.tmax <= upper:
        raise DomainError(f"tmax must lie in (0, {upper:.17g}]")
    if not cfg.step > 0:
        raise DomainError("step must be positive")
    n = int(math.floor(cfg.tmax / cfg.step * (1 + 1e-12)))
    if n < 1:
        raise DomainError("step exceeds tmax")
    t = np.minimum(cfg.step * np.arange(1, n + 1), upper)
    cols = {
        "t": t,
        "r": kernels.covariance(d, t),
        "r1": kernels.covariance_d1(d, t),
        "r2": kernels.covariance_d2(d, t),
        "v": rice.conditional_variance(d, t),
        "p": rice.joint_density(d, t),
        "rho": rice.conditional_correlation(d, t),
        "g": rice.two_point_factor(d, t),
    }
    return [{k: float(v[i]) for k, v in cols.items()} for i in range(n)]


_COMMANDS = {
    Subcommand.SIGMA2: _sigma2,
    Subcommand.RICE: _rice,
    Subcommand.SIMULATE: _simulate,
    Subcommand.CLT: _clt,
    Subcommand.KERNEL: _kernel,
}


def _render(rows, cfg):
    if cfg.out_format is OutFormat.JSON:
        if cfg.subcommand is Subcommand.KERNEL:
            return json_rows_text(rows)
        return json_text(rows[0])
    header = list(rows[0])
    return csv_text(header, ([r[k] for k in header] for r in rows))


def dispatch(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    files = []  # side outputs, written only once everything has succeeded
    try:
        text = _render(_COMMANDS[cfg.subcommand](cfg, files), cfg)
    except DomainError as exc:
        print(f"kssroots: {exc}", file=stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"kssroots: {exc}", file=stderr)
        return EXIT_NUMERICAL
    for path, body in files:
        with atomic_writer(path) as handle:
            handle.write(body)
    if cfg.out_path:
        with atomic_writer(cfg.out_path) as handle:
            handle.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE
    return dispatch(cfg, stdout, stderr)


if __name__ == "__main__":
    sys.exit(main())
