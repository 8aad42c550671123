"""Command line entry point: ``itkmlab <experiment> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bounds import bound_report
from .criterion import example1_closed_form, example1_dictionary, flat_two_sparse, local_max_probe
from .dictionary import dict_canonical, dict_canonical_half_hadamard, dict_perturbed_basis_3d
from .errors import BudgetExceededError, DegenerateFrameError, DomainError, InvalidInputError, NumericalError
from .experiments import (
    X_AXIS,
    ExperimentConfig,
    aggregate,
    curve_label,
    curves,
    default_config,
    loglog_slope,
    run_experiment,
)
from .output import emit_csv, emit_svg
from .signals import CoefficientSpec, SimpleSequenceSpec

log = logging.getLogger("itkmlab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_LIST_KEYS = {"dims": int, "S": int, "b": float, "rho": float, "N": int, "t": float}
_SCALAR_KEYS = {"T_extra": int, "trials": int, "iterations": int, "seed": int, "out": str, "jobs": int}


class ConfigError(InvalidInputError):
    pass


def parse_list(text: str, kind):
    try:
        return [kind(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc}") from None


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def _apply(cfg: ExperimentConfig, values: dict) -> ExperimentConfig:
    changes = {}
    for key, raw in values.items():
        if raw is None:
            continue
        if key == "pairs":
            try:
                changes["pairs"] = [tuple(int(v) for v in item.split(":")) for item in raw.replace(" ", "").split(",") if item]
            except ValueError:
                raise ConfigError(f"bad pairs {raw!r}; expected d:S,d:S,...") from None
        elif key == "rho2":
            changes["rho"] = [math.sqrt(v) for v in parse_list(raw, float)]
        elif key in _LIST_KEYS:
            changes[key] = parse_list(raw, _LIST_KEYS[key]) if isinstance(raw, str) else raw
        elif key in _SCALAR_KEYS:
            try:
                changes[key] = _SCALAR_KEYS[key](raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        elif key in ("timing",):
            changes[key] = str(raw).lower() in ("1", "true", "yes")
        elif key not in ("profile",):
            raise ConfigError(f"unknown config key {key!r}")
    if ("dims" in changes or "S" in changes) and "pairs" not in changes:
        changes["pairs"] = None  # an explicit dims/S grid replaces the default curve list
    return replace(cfg, **changes)


def _common(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--config", help="flat key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itkmlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("fig1a", "fig1b", "fig2a", "fig2b"):
        p = sub.add_parser(name, help=f"reproduce experiment {name}")
        _common(p)
        p.add_argument("--profile", choices=["full", "ci"], default=None)
        p.add_argument("--dims", help="comma separated dimensions")
        p.add_argument("--S", dest="S", help="comma separated sparsity levels")
        p.add_argument("--b", help="comma separated decay spreads")
        p.add_argument("--rho", help="comma separated noise standard deviations")
        p.add_argument("--rho2", help="comma separated noise variances (overrides --rho)")
        p.add_argument("--N", dest="N", help="comma separated sample sizes")
        p.add_argument("--t", help="comma separated basis perturbation parameters (fig1a)")
        p.add_argument("--pairs", help="comma separated d:S curves (overrides the dims x S product)")
        p.add_argument("--T-extra", dest="T_extra", type=int, help="T = S + T_EXTRA")
        p.add_argument("--timing", action="store_true", help="record wall-clock times (breaks byte-identical CSV)")

    p = sub.add_parser("bounds", help="evaluate theorem conditions and bounds")
    _common(p)
    p.add_argument("--dict", dest="dictionary", choices=["canonical", "half-hadamard", "perturbed3d"], default="half-hadamard")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--S", dest="S", type=int, default=1)
    p.add_argument("--T", dest="T", type=int)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--noise", choices=["gaussian", "bernoulli"], default="gaussian")
    p.add_argument("--eps-tilde", dest="eps_tilde", type=float, default=0.01)
    p.add_argument("--N", dest="N", default="4096,65536,1048576")
    p.add_argument("--M", dest="M", type=int, default=100_000, help="Monte Carlo draws for c-bar and C_r")

    p = sub.add_parser("probe", help="exact local-maximum probe of the asymptotic criterion")
    _common(p)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--c", default="e1", help="'e1', 'flat2' or comma separated sequence")
    p.add_argument("--S", dest="S", type=int, default=1)
    p.add_argument("--directions", type=int, default=200)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--example1", action="store_true", help="probe along the tilted-basis ascent direction instead")
    return parser


def experiment_config(args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    profile = args.profile or values.get("profile", "full")
    cfg = default_config(args.command, profile)
    cfg = _apply(cfg, values)
    flags = {k: getattr(args, k, None) for k in list(_LIST_KEYS) + list(_SCALAR_KEYS) + ["rho2", "pairs"]}
    if args.timing:
        flags["timing"] = "true"
    return _apply(cfg, flags)


def _out_dir(args, cfg_out="results") -> Path:
    out = Path(args.out or cfg_out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}") from None
    return out


def cmd_experiment(args) -> int:
    cfg = experiment_config(args)
    out = _out_dir(args, cfg.out)
    log.info("running %s: %s", cfg.experiment, cfg)
    results = run_experiment(cfg, progress=lambda r: log.debug("%s trial %d: %.3e", r.point, r.trial, r.dist_sign))
    emit_csv(results, out / f"{cfg.experiment}.csv")
    axis = X_AXIS[cfg.experiment]
    loglog = cfg.experiment == "fig1b"
    emit_svg(results, out / f"{cfg.experiment}.svg", axis, log_x=loglog, log_y=True, title=cfg.experiment)
    for key, rows in curves(aggregate(results), axis).items():
        xs = [getattr(r.point, "rho") ** 2 if axis == "rho2" else getattr(r.point, axis) for r in rows]
        ys = [r.mean_dist_sign for r in rows]
        line = f"{curve_label(key)}: " + " ".join(f"{y:.3e}" for y in ys)
        if loglog and all(y > 0 for y in ys) and len(ys) > 1:
            line += f"  slope={loglog_slope(xs, ys):+.3f}"
        print(line)
    print(f"wrote {out / (cfg.experiment + '.csv')} and {out / (cfg.experiment + '.svg')}")
    return EXIT_OK


def _bounds_dictionary(args):
    if args.dictionary == "canonical":
        return dict_canonical(args.d)
    if args.dictionary == "perturbed3d":
        return dict_perturbed_basis_3d(args.t)
    return dict_canonical_half_hadamard(args.d)


def cmd_bounds(args) -> int:
    D = _bounds_dictionary(args)
    T = args.T if args.T is not None else args.S
    spec = CoefficientSpec.make(args.S, args.b, T, args.rho, args.noise)
    rng = np.random.default_rng(args.seed or 0)
    report = bound_report(D, spec, args.eps_tilde, parse_list(args.N, int), M=args.M, rng=rng)
    out = _out_dir(args)
    with open(out / "bounds.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for name, value in report.rows():
            w.writerow([name, "" if value is None else repr(value)])
            print(f"{name:28s} {value}")
    return EXIT_OK


def cmd_probe(args) -> int:
    rng = np.random.default_rng(args.seed or 0)
    Phi = dict_canonical(args.d)
    if args.example1:
        c = flat_two_sparse(args.d)
        report = local_max_probe(Phi, c, 1, 1, args.eps, candidates=[example1_dictionary(args.d, args.eps)])
        print(f"closed form at eps={args.eps}: {example1_closed_form(args.d, args.eps):.12f}")
    else:
        if args.c == "e1":
            seq = np.eye(args.d)[0]
        elif args.c == "flat2":
            seq = flat_two_sparse(args.d).c
        else:
            seq = np.array(parse_list(args.c, float))
        report = local_max_probe(Phi, SimpleSequenceSpec(seq), args.S, args.directions, args.eps, rng)
    out = _out_dir(args)
    with open(out / "probe.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["direction", "value", "difference"])
        for i, (v, dv) in enumerate(zip(report.values, report.differences)):
            w.writerow([i, repr(float(v)), repr(float(dv))])
    print(f"value at base: {report.value_at_base:.12f}")
    print(f"max difference over {report.values.size} probes: {report.max_difference:+.3e}")
    print("consistent with local maximum" if report.consistent_with_local_max else "ascent direction found")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "bounds":
            return cmd_bounds(args)
        if args.command == "probe":
            return cmd_probe(args)
        return cmd_experiment(args)
    except (InvalidInputError, DomainError, BudgetExceededError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DegenerateFrameError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
