"""Command-line entry point ``clruin``.

Every subcommand writes CSV (17 significant digits, LF endings) or JSON with
sorted keys, to stdout or into ``--out DIR``.  Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 certification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bounds, expansion
from .claims import ClaimDistribution, GammaTwo, from_dict
from .cramer_lundberg import ModelParams, pk_table, psi_closed_form, solve_volterra, write_xy_csv
from .errors import ClruinError, ConfigError, UnsupportedDistribution
from .montecarlo import SimConfig, simulate_ruin
from .scaling import ScaledModel, psi_n, psi_n_function

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CERT = 0, 2, 3, 4

_METHOD_NAMES = {"closed": "closed_form", "volterra": "volterra", "pk": "pk"}

# per-command defaults for flags that are shared but mean different things
_DEFAULTS: dict[str, dict[str, Any]] = {
    "psi": {"x_max": 20.0, "h": 0.01},
    "psin": {"x_max": 20.0, "h": 0.01, "n": [1.0]},
    "bounds": {"x_max": 20.0, "h": 0.1},
    "converge": {"n": [4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0]},
    "expand": {"x_max": 50.0, "h": 0.05, "n": [1e2, 1e3, 1e4, 1e5, 1e6]},
    "diverge": {"dist": "gamma2", "n": [10.0**k for k in range(9)]},
    "simulate": {"x": 0.0, "n": [1.0]},
    "fn-eval": {"x_max": 5.0, "h": 0.5, "n": [100.0]},
}


def _parent_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model")
    g.add_argument("--dist", help="exp | gamma2 | discrete")
    g.add_argument("--beta", type=float, default=1.0, help="claim rate parameter")
    g.add_argument("--support", type=float, nargs="+", help="atoms of a discrete claim law")
    g.add_argument("--probs", type=float, nargs="+", help="probabilities of the atoms")
    g.add_argument("--theta", type=float, default=0.1, help="safety loading")
    g.add_argument("--lam", type=float, default=1.0, help="claim arrival rate")
    g.add_argument("--n", type=float, nargs="+", help="scaling index or list of them")
    g = p.add_argument_group("grid")
    g.add_argument("--x", type=float, help="single surplus level")
    g.add_argument("--x-max", type=float)
    g.add_argument("--h", type=float, help="grid step")
    g.add_argument("--mesh", type=float, default=1e-3, help="lattice mesh of the pk method")
    g.add_argument("--method", choices=sorted(_METHOD_NAMES), default="closed")
    g = p.add_argument_group("bounds and expansions")
    g.add_argument("--epsilon", type=float, default=0.01)
    g.add_argument("--alpha-margin", type=float, default=0.1)
    g.add_argument("--certificates", type=Path, help="JSON certificates to validate instead of computing")
    g.add_argument("--k", type=int, default=1, help="expansion order")
    g = p.add_argument_group("simulation")
    g.add_argument("--paths", type=int, default=100_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--kappa", type=float, default=23.0)
    g.add_argument("--max-claims", type=int, default=10_000_000)
    g = p.add_argument_group("io")
    g.add_argument("--config", type=Path, help="JSON file whose keys override flags")
    g.add_argument("--out", type=Path, help="directory for output files")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clruin", description="Ruin probabilities and their diffusion limit.")
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _parent_parser()
    helps = {
        "psi": "ruin probability of the base model (CSV x,psi)",
        "psin": "ruin probability of the n-scaled model (CSV x,psi_n)",
        "bounds": "certify bound constants and tabulate the sandwich",
        "converge": "sup-norm distance to the diffusion limit and its rate",
        "expand": "higher-order expansion residuals (exponential claims)",
        "diverge": "breakdown of the Gamma(2) second-order term at x = 0",
        "simulate": "Monte Carlo estimate of psi_n(x)",
        "fn-eval": "operator F_n applied to the diffusion approximation",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[parent], help=text, description=text)
    return parser


# ------------------------------------------------------------------ config


def _apply_config(args: argparse.Namespace) -> None:
    if args.config is None:
        return
    try:
        data = json.loads(args.config.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            raise ConfigError(f"unknown config key {key!r}")
        if dest == "n" and not isinstance(value, list):
            value = [value]
        if dest in ("out", "certificates") and value is not None:
            value = Path(value)
        setattr(args, dest, value)


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    _apply_config(args)
    for key, value in _DEFAULTS.get(args.command, {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.n is not None and any(not (v > 0 and math.isfinite(v)) for v in args.n):
        raise ConfigError("every n must be positive")
    return args


def _distribution(args: argparse.Namespace) -> ClaimDistribution:
    kind = args.dist if args.dist is not None else "exp"
    if isinstance(kind, dict):
        return from_dict(kind)
    kind = str(kind).lower()
    if kind == "discrete":
        if not args.support or not args.probs:
            raise ConfigError("discrete claims need --support and --probs")
        return from_dict({"kind": "discrete", "support": args.support, "probs": args.probs})
    return from_dict({"kind": kind, "beta": args.beta})


def _model(args: argparse.Namespace) -> ModelParams:
    return ModelParams(args.theta, args.lam, _distribution(args))


def _grid(args: argparse.Namespace) -> np.ndarray:
    if args.x is not None:
        return np.array([args.x], dtype=float)
    if args.x_max < 0 or not args.h > 0:
        raise ConfigError("need x-max >= 0 and h > 0")
    steps = int(round(args.x_max / args.h))
    if not math.isclose(steps * args.h, args.x_max, rel_tol=1e-9, abs_tol=1e-12):
        raise ConfigError("x-max must be a multiple of h")
    return args.h * np.arange(steps + 1)


def _single_n(args: argparse.Namespace) -> float:
    if len(args.n) != 1:
        raise ConfigError(f"{args.command} takes a single n")
    return float(args.n[0])


# ---------------------------------------------------------------- outputs


def _emit(args: argparse.Namespace, name: str, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / name
    with open(path, "w", newline="\n") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")
    print(path)


# --------------------------------------------------------------- commands


def _psi_values(params: ModelParams, xs: np.ndarray, method: str, h: float, mesh: float) -> np.ndarray:
    if method == "closed_form":
        return np.asarray(psi_closed_form(params, xs), dtype=float)
    top = float(xs.max())
    if method == "volterra":
        steps = max(1, math.ceil(top / h - 1e-9))
        return np.asarray(solve_volterra(params, steps * h, h)(xs))
    lattice, values, _ = pk_table(params, top + mesh, mesh)
    return np.interp(xs, lattice, values)


def cmd_psi(args) -> int:
    params = _model(args)
    xs = _grid(args)
    psi = _psi_values(params, xs, _METHOD_NAMES[args.method], args.h, args.mesh)
    _emit(args, "psi.csv", write_xy_csv(xs, psi, ("x", "psi")))
    return EXIT_OK


def cmd_psin(args) -> int:
    model = ScaledModel(_model(args), _single_n(args))
    xs = _grid(args)
    method = _METHOD_NAMES[args.method]
    if method == "closed_form":
        values = psi_n(model, xs, "closed_form")
    else:
        values = psi_n_function(model, float(xs.max()), method, h=args.h, mesh=args.mesh)(xs)
    _emit(args, "psin.csv", write_xy_csv(xs, values, ("x", "psi_n")))
    return EXIT_OK


def cmd_bounds(args) -> int:
    base = _model(args)
    dist = base.dist
    if args.certificates is not None:
        try:
            cert = bounds.BoundCertificates.from_json(args.certificates.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load certificates: {exc}") from None
    else:
        cert = bounds.certify(dist, base.theta, args.epsilon, args.alpha_margin)
    verdict = bounds.verify_certificates(dist, base.theta, cert)
    _emit(args, "certificates.json", cert.to_json())
    if not verdict.ok:
        failed = [k for k, v in vars(verdict).items() if not v]
        print(f"certificate check failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CERT
    if args.n is None:
        top = math.ceil(cert.n_min)
        ns = [top + 1, 4 * top, 16 * top, 64 * top]
    else:
        ns = args.n
    report = bounds.sandwich_report(base, cert, ns, _grid(args))
    _emit(args, "sandwich.csv", report.to_csv())
    if not report.ok:
        print(f"{len(report.violations)} sandwich violations", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def cmd_converge(args) -> int:
    base = _model(args)
    grid = None if args.x_max is None and args.h is None else _grid(_with_grid_defaults(args))
    report = bounds.rate_fit(base, args.n, grid)
    _emit(args, "converge.csv", report.to_csv())
    fit = json.dumps({"slope": report.slope, "C": report.C, "x_max": report.x_max, "step": report.step},
                     sort_keys=True)
    if args.out is None:
        print(f"# fit {fit}")
    else:
        _emit(args, "converge_fit.json", fit)
    return EXIT_OK


def _with_grid_defaults(args):
    ns = argparse.Namespace(**vars(args))
    ns.x_max = 20.0 if args.x_max is None else args.x_max
    ns.h = 0.01 if args.h is None else args.h
    return ns


def cmd_expand(args) -> int:
    dist = _distribution(args)
    report = expansion.residual_scaling_check(args.theta, dist, args.k, args.n, _grid(args))
    _emit(args, "expand.csv", report.to_csv())
    if not report.passed:
        print("normalized residuals drift upward", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_diverge(args) -> int:
    dist = _distribution(args)
    if not isinstance(dist, GammaTwo):
        raise UnsupportedDistribution("the divergence demonstration concerns Gamma(2) claims")
    report = expansion.gamma2_divergence_demo(args.theta, dist.beta, args.n)
    _emit(args, "diverge.csv", report.to_csv())
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = ScaledModel(_model(args), _single_n(args))
    config = SimConfig(paths=args.paths, seed=args.seed, kappa=args.kappa, max_claims=args.max_claims)
    est = simulate_ruin(model, args.x, config)
    _emit(args, "simulate.json", est.to_json())
    est.check_cap()
    return EXIT_OK


def cmd_fn_eval(args) -> int:
    model = ScaledModel(_model(args), _single_n(args))
    rows = [bounds.split_diffusion_residual(model, float(x)) for x in _grid(args)]
    lines = ["n,x,fn_value,fn_error,term1,term2"]
    for r in rows:
        lines.append(",".join(f"{v:.17g}" for v in (r.n, r.x, r.fn_value, r.fn_error, r.term1, r.term2)))
    _emit(args, "fn_eval.csv", "\n".join(lines) + "\n")
    return EXIT_OK


COMMANDS = {
    "psi": cmd_psi,
    "psin": cmd_psin,
    "bounds": cmd_bounds,
    "converge": cmd_converge,
    "expand": cmd_expand,
    "diverge": cmd_diverge,
    "simulate": cmd_simulate,
    "fn-eval": cmd_fn_eval,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _resolve(args)
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except ClruinError as exc:
        print(f"clruin: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError) as exc:
        print(f"clruin: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"clruin: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
