"""Monte Carlo experiments for the consistency of the LME fit and the tail-measure limits.

Seeding: replication ``rep`` at sample size ``n`` draws from
``SeedSequence(entropy=root_seed, spawn_key=(n, rep))`` feeding a PCG64 generator,
so every (n, rep) cell has its own stream and results do not depend on the
order in which cells are executed.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .gpd_lme import LmeConfig, hill_estimator, psi1, psi2, solve_lme, tail_array_sums
from .heavy_tail import RNG_ALGORITHM, InnovationSpec, InvalidInputError
from .linear_process import ArmaSpec, MaCoefficients, arma_to_ma, check_causality, simulate_process
from .tail_measure import excess_tail_measure, make_excess_sample, tail_empirical_measure, theoretical_scales

log = logging.getLogger(__name__)

CSV_HEADER = (
    "kind", "n", "k", "replication",
    "gamma_hat", "sigma_hat", "sigma_ratio", "hill_hat", "iterations", "converged",
    "lemma", "grid_point", "empirical", "limit", "abs_error", "mean_abs_error",
    "error",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class KRule:
    """``k = floor(n ** power)`` unless ``n`` has an explicit entry."""

    power: float | None = 0.6
    explicit: dict = field(default_factory=dict)

    def __call__(self, n: int) -> int:
        if n in self.explicit:
            return int(self.explicit[n])
        if self.power is None:
            raise ConfigError(f"no k given for n={n}")
        # tiny offset keeps exact powers (e.g. 10**6 ** 0.5) from rounding down
        return int(math.floor(n**self.power * (1 + 1e-12)))


@dataclass(frozen=True)
class Diagnostics:
    lemma1: bool = False
    lemma2: bool = False
    lemma3: bool = False

    def any(self) -> bool:
        return self.lemma1 or self.lemma2 or self.lemma3


@dataclass(frozen=True)
class ExperimentConfig:
    innovation: InnovationSpec
    arma: ArmaSpec = ArmaSpec()
    n_grid: tuple = (10_000, 100_000, 1_000_000)
    k_rule: KRule = KRule()
    r: float = -1.0
    replications: int = 100
    root_seed: int = 0
    diagnostics: Diagnostics = Diagnostics()
    z_grid: tuple = (0.5, 1.0, 2.0, 4.0)
    x_grid: tuple = (0.5, 1.0, 2.0)
    truncation_order: int | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 <= self.root_seed < 2**64:
            raise ConfigError("root_seed must be an unsigned 64-bit integer")
        if not self.n_grid:
            raise ConfigError("n_grid is empty")
        if self.k_rule.power is not None and not 0 < self.k_rule.power < 1:
            raise ConfigError("k_rule power must lie in (0, 1)")
        for n in self.n_grid:
            k = self.k_rule(n)
            if not 1 <= k < n or k / n > 0.25:
                raise ConfigError(f"(n={n}, k={k}) violates 1 <= k < n and k/n <= 0.25")
        if any(z < 0 for z in self.z_grid) or any(x <= 0 for x in self.x_grid):
            raise ConfigError("grid points must be positive")
        try:
            LmeConfig(r=self.r)
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from exc
        causal, radius = check_causality(self.arma)
        if not causal:
            raise ConfigError(f"AR part is not causal (spectral radius {radius:.6g})")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        try:
            innovation = InnovationSpec(**d.pop("innovation"))
            arma = ArmaSpec(**d.pop("arma", {}))
            k_rule = d.pop("k_rule", {"power": 0.6})
            k_rule = KRule(
                power=k_rule.get("power"),
                explicit={int(n): int(k) for n, k in k_rule.get("explicit", {}).items()},
            )
            diagnostics = Diagnostics(**d.pop("diagnostics", {}))
            for key in ("n_grid", "z_grid", "x_grid"):
                if key in d:
                    d[key] = tuple(d[key])
            return cls(innovation=innovation, arma=arma, k_rule=k_rule, diagnostics=diagnostics, **d)
        except (KeyError, TypeError, InvalidInputError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k_rule"]["explicit"] = {str(n): k for n, k in self.k_rule.explicit.items()}
        return d

    def coefficients(self) -> MaCoefficients:
        return arma_to_ma(self.arma, self.truncation_order, gamma=self.innovation.gamma)


def replication_seed(root_seed: int, n: int, replication: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=root_seed, spawn_key=(n, replication))


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def records(self) -> list[dict]:
        out = []
        for row in self.rows:
            rec = dict.fromkeys(CSV_HEADER)
            rec.update(kind="fit", **row)
            out.append(rec)
        for row in self.diagnostics:
            rec = dict.fromkeys(CSV_HEADER)
            rec.update(kind="diagnostic", **row)
            out.append(rec)
        return out


# -- consistency -------------------------------------------------------------

def _consistency_cell(config: ExperimentConfig, coeffs: MaCoefficients, n: int, rep: int) -> dict:
    k = config.k_rule(n)
    _, sigma = theoretical_scales(config.innovation, coeffs, n / k)
    row = dict(n=n, k=k, replication=rep, gamma_hat=math.nan, sigma_hat=math.nan,
               sigma_ratio=math.nan, hill_hat=math.nan, iterations=0, converged=False, error="")
    try:
        x = simulate_process(coeffs, config.innovation, n, replication_seed(config.root_seed, n, rep))
        sample = make_excess_sample(x, k, full_sort=False)
        row["hill_hat"] = hill_estimator(sample.sorted_abs, k)
        fit = solve_lme(sample.excesses, LmeConfig(r=config.r))
        row.update(gamma_hat=fit.gamma_hat, sigma_hat=fit.sigma_hat, sigma_ratio=fit.sigma_hat / sigma,
                   iterations=fit.iterations, converged=fit.converged)
    except Exception as exc:  # failures are recorded, the sweep goes on
        log.warning("n=%d rep=%d failed: %s", n, rep, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _map(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _meta(config: ExperimentConfig, coeffs: MaCoefficients) -> dict:
    return {
        "rng": RNG_ALGORITHM,
        "seed_mixing": "SeedSequence(entropy=root_seed, spawn_key=(n, replication))",
        "config": config.to_dict(),
        "truncation_order": coeffs.truncation_order,
        "tail_constant": coeffs.tail_constant,
    }


def run_consistency(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Fit LME and Hill on every (n, replication) cell; rows ordered by (n, replication)."""
    coeffs = config.coefficients()
    tasks = [(config, coeffs, n, rep) for n in config.n_grid for rep in range(config.replications)]
    rows = _map(_consistency_cell, tasks, jobs)
    return ExperimentResult(rows=rows, meta=_meta(config, coeffs))


# -- lemma diagnostics ---------------------------------------------------------

def _diagnostic_cell(config: ExperimentConfig, coeffs: MaCoefficients, n: int, rep: int) -> dict:
    """Empirical values at every grid point for one replication, keyed by (lemma, point)."""
    k = config.k_rule(n)
    gamma = config.innovation.gamma
    b, sigma = theoretical_scales(config.innovation, coeffs, n / k)
    x = simulate_process(coeffs, config.innovation, n, replication_seed(config.root_seed, n, rep))
    sample = make_excess_sample(x, k, full_sort=False)
    out = {}
    if config.diagnostics.lemma1:
        for z in config.z_grid:
            if z > 0:
                out[("lemma1", z)] = tail_empirical_measure(x, b, k, z)
    if config.diagnostics.lemma2:
        for z in config.z_grid:
            out[("lemma2", z)] = excess_tail_measure(x, sigma, k, z, threshold=sample.threshold)
    if config.diagnostics.lemma3:
        for xp in config.x_grid:
            s1, s2 = tail_array_sums(sample.excesses, gamma / sigma, xp, gamma, config.r)
            out[("lemma3_psi1", xp)] = s1
            if config.r < 0:
                out[("lemma3_psi2", xp)] = s2
    return out


def diagnostic_limit(lemma: str, point: float, gamma: float, r: float) -> float:
    if lemma == "lemma1":
        return point ** (-1.0 / gamma)
    if lemma == "lemma2":
        return (point * gamma + 1.0) ** (-1.0 / gamma)
    if lemma == "lemma3_psi1":
        return psi1(point, gamma)
    if lemma == "lemma3_psi2":
        return psi2(point, gamma, gamma, r)
    raise ValueError(f"unknown diagnostic {lemma!r}")


def run_lemma_diagnostics(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Average each tail quantity over replications and compare with its limit.

    ``abs_error`` is ``|mean empirical - limit|``; ``mean_abs_error`` averages
    the per-replication absolute errors.
    """
    if not config.diagnostics.any():
        raise ConfigError("no diagnostics selected")
    coeffs = config.coefficients()
    gamma = config.innovation.gamma
    rows = []
    for n in config.n_grid:
        k = config.k_rule(n)
        tasks = [(config, coeffs, n, rep) for rep in range(config.replications)]
        cells = _map(_diagnostic_cell, tasks, jobs)
        limits = {key: diagnostic_limit(key[0], key[1], gamma, config.r) for key in cells[0]}
        for key in sorted(cells[0], key=lambda kv: (kv[0], kv[1])):
            values = np.array([c[key] for c in cells])
            lim = limits[key]
            rows.append(dict(lemma=key[0], n=n, k=k, replication=config.replications, grid_point=key[1],
                             empirical=float(values.mean()), limit=lim,
                             abs_error=abs(float(values.mean()) - lim),
                             mean_abs_error=float(np.abs(values - lim).mean())))
    return ExperimentResult(diagnostics=rows, meta=_meta(config, coeffs))


# -- output ------------------------------------------------------------------

def _csv_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v: Any):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def emit_results(result: ExperimentResult, path, fmt: str = "csv", meta: bool = False) -> None:
    """Write the rows as CSV (fixed ``CSV_HEADER``) or as a JSON array of row objects.

    With ``meta=True`` the run metadata (RNG algorithm, seed mixing, config) goes
    to ``<path>.meta.json``.
    """
    records = result.records()
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_HEADER)
                for rec in records:
                    w.writerow([_csv_value(rec[h]) for h in CSV_HEADER])
        elif fmt == "json":
            with open(path, "w") as fh:
                json.dump([{h: _json_value(rec[h]) for h in CSV_HEADER} for rec in records], fh, indent=1)
                fh.write("\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        if meta:
            with open(f"{path}.meta.json", "w") as fh:
                json.dump(result.meta, fh, indent=1, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path, fmt: str = "csv") -> list[dict]:
    """Parse a file written by :func:`emit_results` back into typed row dicts."""
    if fmt == "json":
        with open(path) as fh:
            rows = json.load(fh)
        return [{h: (math.nan if v is None and h in _FLOAT_COLUMNS else v) for h, v in r.items()} for r in rows]
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        rec = {}
        for h in CSV_HEADER:
            v = r[h]
            if v == "":
                rec[h] = math.nan if h in _FLOAT_COLUMNS else None
            elif h in _FLOAT_COLUMNS:
                rec[h] = float(v)
            elif h in ("n", "k", "replication", "iterations"):
                rec[h] = int(v)
            elif h == "converged":
                rec[h] = v == "true"
            else:
                rec[h] = v
        out.append(rec)
    return out


_FLOAT_COLUMNS = {"gamma_hat", "sigma_hat", "sigma_ratio", "hill_hat", "grid_point",
                  "empirical", "limit", "abs_error", "mean_abs_error"}
