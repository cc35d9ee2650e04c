"""Command line entry point: ``lmetail {consistency,diagnostics,fit}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .experiment import (
    ConfigError,
    ExperimentConfig,
    emit_results,
    run_consistency,
    run_lemma_diagnostics,
)
from .gpd_lme import LmeConfig, solve_lme
from .heavy_tail import InvalidInputError
from .tail_measure import make_excess_sample

EXIT_CONFIG = 2
EXIT_RUNTIME = 1


def read_column(path) -> np.ndarray:
    """Single-column CSV of reals; a non-numeric first line is taken as a header."""
    values = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if i == 0 and not values:
                    continue
                raise InvalidInputError(f"{path}: line {i + 1} is not a number: {row[0]!r}")
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise InvalidInputError(f"{path}: no data")
    if np.isnan(data).any():
        raise InvalidInputError(f"{path}: NaN in data")
    return data


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _experiment_config(args) -> ExperimentConfig:
    d: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    innovation = dict(d.get("innovation", {}))
    for flag, key in (("gamma", "gamma"), ("pi1", "pi1"), ("pi2", "pi2"), ("x_min", "x_min")):
        if getattr(args, flag) is not None:
            innovation[key] = getattr(args, flag)
    if "pi1" in innovation and "pi2" not in innovation:
        innovation["pi2"] = 1.0 - innovation["pi1"]
    if "gamma" not in innovation:
        raise ConfigError("innovation gamma is required (--gamma or config file)")
    d["innovation"] = innovation
    arma = dict(d.get("arma", {}))
    if args.phi is not None:
        arma["phi"] = _floats(args.phi)
    if args.theta is not None:
        arma["theta"] = _floats(args.theta)
    d["arma"] = arma
    if args.n_grid is not None:
        d["n_grid"] = [int(float(v)) for v in args.n_grid.split(",")]
    if args.k_power is not None:
        d["k_rule"] = {"power": args.k_power}
    for flag in ("r", "replications"):
        if getattr(args, flag) is not None:
            d[flag] = getattr(args, flag)
    if args.seed is not None:
        d["root_seed"] = args.seed
    if args.z_grid is not None:
        d["z_grid"] = _floats(args.z_grid)
    if args.x_grid is not None:
        d["x_grid"] = _floats(args.x_grid)
    if getattr(args, "lemmas", None):
        d["diagnostics"] = {name: True for name in args.lemmas.split(",")}
    return ExperimentConfig.from_dict(d)


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON document with ExperimentConfig fields; flags override it")
    p.add_argument("--gamma", type=float, help="tail index parameter of the innovations")
    p.add_argument("--pi1", type=float, help="right-tail weight (pi2 defaults to 1 - pi1)")
    p.add_argument("--pi2", type=float, help="left-tail weight")
    p.add_argument("--x-min", dest="x_min", type=float, help="Pareto cutoff (default 1)")
    p.add_argument("--phi", help="comma-separated AR coefficients")
    p.add_argument("--theta", help="comma-separated MA coefficients")
    p.add_argument("--n-grid", help="comma-separated sample sizes, e.g. 1e4,1e5")
    p.add_argument("--k-power", type=float, help="k = floor(n**a)")
    p.add_argument("--r", type=float, help="moment exponent r (default -1)")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    p.add_argument("--z-grid", help="comma-separated z points for lemma 1/2 diagnostics")
    p.add_argument("--x-grid", help="comma-separated x points for lemma 3 diagnostics")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", required=True, help="output path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--meta", action="store_true", help="also write <out>.meta.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmetail", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("consistency", help="Monte Carlo sweep of LME and Hill estimates over n_grid")
    _add_experiment_flags(p)

    p = sub.add_parser("diagnostics", help="tail-measure and tail-array-sum limits")
    _add_experiment_flags(p)
    p.add_argument("--lemmas", help="comma-separated subset of lemma1,lemma2,lemma3 (default: config or all)")

    p = sub.add_parser("fit", help="one-shot LME fit on a single-column CSV of data")
    p.add_argument("data", help="CSV file with one column of reals (header optional)")
    p.add_argument("--k", type=int, required=True, help="number of excesses")
    p.add_argument("--r", type=float, default=-1.0)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("json",), default="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "fit":
        try:
            data = read_column(args.data)
            sample = make_excess_sample(data, args.k, full_sort=False)
            fit = solve_lme(sample.excesses, LmeConfig(r=args.r))
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except InvalidInputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (ValueError, RuntimeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        text = json.dumps(fit.to_dict(), indent=1) + "\n"
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0

    try:
        config = _experiment_config(args)
        if args.command == "diagnostics" and not config.diagnostics.any():
            config = ExperimentConfig.from_dict({**config.to_dict(), "diagnostics": {"lemma1": True, "lemma2": True, "lemma3": True}})
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "consistency":
        result = run_consistency(config, jobs=args.jobs)
    else:
        result = run_lemma_diagnostics(config, jobs=args.jobs)
    try:
        emit_results(result, args.out, args.format, meta=args.meta)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
