"""Command-line front end: ``dirichlet-lab <command> [flags]``.

Every command accepts ``--config file.json``; flags given on the command line
override values from the file. Tables go to ``--out`` (CSV or JSON) or to
stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .acceptance import SUITES, run_suite
from .covering import cover_sweep, fitted_K, slope_fit
from .exceptions import DirichletLabError
from .io import write_table
from .psi import (
    Mode, SeriesSpec, ZProfile, dimension_predict, exponent_dimension, parse_psi, series_classify,
)
from .scan import ScanConfig, dani_check, direct_check, transference_witness, uniform_exponent
from .ubiquity import (
    UbiquityConfig, census_m1, constant_summand, mean_variance, omega_sequence,
)

log = logging.getLogger("dirichlet_lab")

DEFAULTS = {
    "psi": "powerlog:1,0",
    "m": 1,
    "n": 1,
    "format": "csv",
    "workers": 1,
    "seed": 0,
    "T_window": "10,10000",
    "T_samples": 16,
    "C0": 1.0,
    "t_list": "4,5,6,7,8,9",
    "sampler": "centers",
    "mode": "singly",
    "variant": "singly",
    "samples": 10_000,
    "x_budget": 100_000,
    "T_max": 1e6,
    "tol": 1e-3,
    "w_bracket": "0,2",
    "N": "8",
}


def floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(v) for v in str(text).split(",") if v.strip()]


def ints(text):
    return [int(v) for v in floats(text)]


def _common(p):
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--psi", help="powerlog:a,e[,T0] or table:<file.json | T/psi;T/psi;...>")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def _pair_flags(p):
    p.add_argument("--A", dest="A_vec", help="entries of A, row-major, comma separated")
    p.add_argument("--b-vec", dest="b_vec", help="entries of b, comma separated")


def build_parser():
    parser = argparse.ArgumentParser(prog="dirichlet-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zsolve", help="solve the z profile at flow times")
    _common(p)
    p.add_argument("--t", dest="t_list", help="flow time(s), comma separated")

    p = sub.add_parser("series", help="classify convergence of the dimension series")
    _common(p)
    p.add_argument("--s", type=float, required=False)
    p.add_argument("--variant", choices=["singly", "doubly", "jarnik"])

    for name, text in (("scan", "exhaustive Dirichlet check"), ("dani", "flowed-grid Dirichlet check")):
        p = sub.add_parser(name, help=text)
        _common(p)
        _pair_flags(p)
        p.add_argument("--T-window", dest="T_window", help="T_min,T_max")
        p.add_argument("--T-samples", dest="T_samples", type=int)
        if name == "scan":
            p.add_argument("--strict", action="store_true", default=None, help="exclude q = 0")
        else:
            p.add_argument("--C0", type=float)

    p = sub.add_parser("transfer", help="transference witnesses")
    _common(p)
    _pair_flags(p)
    p.add_argument("--S-list", dest="S_list", required=False)
    p.add_argument("--x-budget", dest="x_budget", type=int)

    p = sub.add_parser("exponent", help="window-truncated uniform exponent")
    _common(p)
    _pair_flags(p)
    p.add_argument("--T-max", dest="T_max", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--w-bracket", dest="w_bracket")

    p = sub.add_parser("cover", help="cube-cover counts over a list of flow times")
    _common(p)
    p.add_argument("--t-list", dest="t_list")
    p.add_argument("--C0", type=float)
    p.add_argument("--sampler", choices=["centers", "corners"])

    p = sub.add_parser("ubiquity", help="rational point census (m=1) or mean/variance (m>=2)")
    _common(p)
    p.add_argument("--b-vec", dest="b_vec")
    p.add_argument("--N", help="dyadic level(s), comma separated")
    p.add_argument("--box", help="l1,u1,l2,u2,... (m = 1)")
    p.add_argument("--c", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("dim", help="predicted Hausdorff dimension")
    _common(p)
    p.add_argument("--a", type=float)
    p.add_argument("--w", type=float)
    p.add_argument("--mode", choices=["singly", "doubly"])

    p = sub.add_parser("acceptance", help="run an acceptance suite")
    p.add_argument("suite", help=f"one of {sorted(SUITES)}")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def resolve(args):
    """Merge built-in defaults, the JSON config file and explicit flags (flags win)."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg.update(json.load(fh))
    for key, value in vars(args).items():
        if value is not None and key != "config":
            cfg[key] = value
    return cfg


def _emit(rows, columns, cfg):
    text = write_table(rows, columns, cfg, cfg.get("out"), cfg.get("format", "csv"))
    if not cfg.get("out"):
        sys.stdout.write(text)


def _pair(cfg):
    m, n = cfg["m"], cfg["n"]
    if "A_vec" not in cfg or "b_vec" not in cfg:
        raise DirichletLabError("--A and --b-vec are required")
    A = np.array(floats(cfg["A_vec"])).reshape(m, n)
    b = np.array(floats(cfg["b_vec"]))
    return A, b


def _scan_rows(A, b, verdict):
    rows = []
    for w in verdict.witnesses:
        status = "Boundary" if w.boundary else ("Solvable" if w.solvable else "FailsAt")
        rows.append({"A": A.ravel(), "b": b, "T": w.T, "status": status,
                     "residual": w.residual, "p": w.p, "q": w.q})
    return rows


def cmd_zsolve(cfg):
    psi = parse_psi(cfg["psi"])
    zp = ZProfile(psi, cfg["m"], cfg["n"])
    ts = floats(cfg.get("t_list", zp.t0))
    zs = np.atleast_1d(zp(np.array(ts)))
    if not cfg.get("out") and len(ts) == 1:
        print(repr(float(zs[0])))
        return 0
    _emit([{"t": t, "z": z} for t, z in zip(ts, zs)], ["t", "z"], cfg)
    return 0


def cmd_series(cfg):
    psi = parse_psi(cfg["psi"])
    if cfg.get("s") is None:
        raise DirichletLabError("--s is required")
    v = series_classify(SeriesSpec(psi, cfg["m"], cfg["n"], cfg["s"], cfg["variant"]))
    row = {"status": v.status.value, "method": v.method, "exponent": v.exponent,
           "log_exponent": v.log_exponent, "ratio": v.ratio}
    if cfg.get("out"):
        _emit([row], list(row), cfg)
    else:
        print(v.status.value)
    return 0


def _scan_config(cfg):
    T_min, T_max = floats(cfg["T_window"])
    return ScanConfig(parse_psi(cfg["psi"]), cfg["m"], cfg["n"], (T_min, T_max), cfg["T_samples"])


def cmd_scan(cfg):
    A, b = _pair(cfg)
    verdict = direct_check(A, b, _scan_config(cfg), strict=bool(cfg.get("strict")))
    log.info("verdict %s", verdict.status.value)
    _emit(_scan_rows(A, b, verdict), ["A", "b", "T", "status", "residual", "p", "q"], cfg)
    return 0


def cmd_dani(cfg):
    A, b = _pair(cfg)
    verdict = dani_check(A, b, _scan_config(cfg), C0=cfg["C0"])
    rows = _scan_rows(A, b, verdict)
    for r, delta, z in zip(rows, verdict.deltas, verdict.z_values):
        r["delta"], r["z"] = delta, z
    _emit(rows, ["A", "b", "T", "status", "delta", "z", "residual", "p", "q"], cfg)
    return 0


def cmd_transfer(cfg):
    A, b = _pair(cfg)
    if "S_list" not in cfg:
        raise DirichletLabError("--S-list is required")
    psi = parse_psi(cfg["psi"])
    hits = transference_witness(A, b, psi, floats(cfg["S_list"]), cfg["x_budget"], cfg["m"], cfg["n"])
    _emit([{"S": S, "x": x} for S, x in hits], ["S", "x"], cfg)
    return 0


def cmd_exponent(cfg):
    A, b = _pair(cfg)
    est = uniform_exponent(A, b, floats(cfg["w_bracket"]), float(cfg["T_max"]), float(cfg["tol"]),
                           cfg["m"], cfg["n"])
    row = {"w_hat": est.value, "tol": est.tol, "T_lo": est.window[0], "T_hi": est.window[1],
           "truncated": est.truncated}
    if cfg.get("out"):
        _emit([row], list(row), cfg)
    else:
        print(repr(est.value))
    return 0


def cmd_cover(cfg):
    psi = parse_psi(cfg["psi"])
    reps = cover_sweep(cfg["m"], cfg["n"], psi, floats(cfg["t_list"]), cfg["C0"], cfg["sampler"])
    K, _ = fitted_K(reps)
    rows = [{"t": r.t, "side": r.cube_side, "count": r.count, "bound_exponent": r.bound_exponent,
             "K_emp": K} for r in reps]
    _emit(rows, ["t", "side", "count", "bound_exponent", "K_emp"], cfg)
    if len(reps) >= 4:
        fit = slope_fit(reps)
        log.info("slope %.4f intercept %.4f r2 %.4f", fit.slope, fit.intercept, fit.r2)
    return 0


def cmd_ubiquity(cfg):
    m, n = cfg["m"], cfg["n"]
    if "b_vec" not in cfg:
        raise DirichletLabError("--b-vec is required")
    b = floats(cfg["b_vec"])
    box = None
    if cfg.get("box"):
        vals = floats(cfg["box"])
        box = tuple(zip(vals[::2], vals[1::2]))
    rows = []
    for N in ints(cfg["N"]):
        if m == 1:
            r = census_m1(UbiquityConfig(b=b, m=m, n=n, N=N, box=box, c=cfg.get("c")))
            rows.append({"N": N, "countT": r.countT, "countG": r.countG, "c": r.c, "rho": r.rho})
        else:
            omega = omega_sequence(constant_summand, max(4 * N, 16), n=n)
            r = mean_variance(UbiquityConfig(b=b, m=m, n=n, N=N, c=cfg.get("c"), mc_samples=cfg["samples"],
                                             rng_seed=cfg["seed"], omega=omega), workers=cfg["workers"])
            rows.append({"N": N, "sizeI": r.sizeI, "mu_exact": r.mu_exact, "mu_hat": r.mu_hat,
                         "se_mu": r.se_mu, "sigma2_hat": r.sigma2_hat, "se_excess": r.se_excess,
                         "z_empty_fraction": r.z_empty_fraction})
    _emit(rows, list(rows[0]) if rows else ["N"], cfg)
    return 0


def cmd_dim(cfg):
    if cfg.get("a") is not None:
        val = dimension_predict(cfg["m"], cfg["n"], cfg["a"], Mode(cfg["mode"]))
    elif cfg.get("w") is not None:
        val = exponent_dimension(cfg["m"], cfg["n"], cfg["w"], Mode(cfg["mode"]))
    else:
        raise DirichletLabError("dim needs --a or --w")
    if cfg.get("out"):
        _emit([{"dimension": val}], ["dimension"], cfg)
    else:
        print(repr(val))
    return 0


def cmd_acceptance(cfg):
    results = run_suite(cfg["suite"], workers=cfg["workers"])
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
             "seconds": round(r.elapsed, 3), "limit": r.limit} for r in results]
    if cfg.get("out"):
        write_table(rows, list(rows[0]), {"suite": cfg["suite"], "workers": cfg["workers"]},
                    cfg["out"], cfg.get("format", "csv"))
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "zsolve": cmd_zsolve, "series": cmd_series, "scan": cmd_scan, "dani": cmd_dani,
    "transfer": cmd_transfer, "exponent": cmd_exponent, "cover": cmd_cover,
    "ubiquity": cmd_ubiquity, "dim": cmd_dim, "acceptance": cmd_acceptance,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = resolve(args)
    try:
        return COMMANDS[args.command](cfg)
    except (DirichletLabError, ValueError, OSError) as exc:
        print(f"dirichlet-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2
