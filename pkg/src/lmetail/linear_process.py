"""Causal ARMA(p, q) processes as truncated MA(infinity) filters of heavy-tailed noise."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from .heavy_tail import InnovationSpec, InvalidInputError, _draw, make_rng

CAUSALITY_MARGIN = 1e-9
MAX_ORDER = 10_000
# direct convolution is exact and deterministic; switch to overlap-add beyond this filter length
_DIRECT_CONVOLVE_MAX = 512


class CausalityError(ValueError):
    """The AR polynomial has a root on or inside the unit circle."""


@dataclass(frozen=True)
class ArmaSpec:
    phi: tuple = ()
    theta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(v) for v in self.phi))
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        if not all(np.isfinite(self.phi)) or not all(np.isfinite(self.theta)):
            raise InvalidInputError("ARMA coefficients must be finite")

    @property
    def p(self) -> int:
        return len(self.phi)

    @property
    def q(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class MaCoefficients:
    c: np.ndarray
    truncation_order: int
    delta: float
    summability_value: float
    tail_constant: float
    truncation_residual: float

    def __post_init__(self):
        if not np.any(self.c != 0):
            raise InvalidInputError("at least one coefficient must be nonzero")
        if not np.isfinite(self.summability_value):
            raise InvalidInputError("coefficients are not summable")

    @classmethod
    def from_sequence(cls, c: Sequence[float], gamma: float, delta: float | None = None) -> "MaCoefficients":
        """Wrap an explicit finite filter (no truncation error)."""
        c = np.asarray(c, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise InvalidInputError("coefficients must be a nonempty 1-d sequence")
        delta = _check_delta(gamma, delta)
        return cls(
            c=c,
            truncation_order=c.size - 1,
            delta=delta,
            summability_value=float(np.sum(np.abs(c) ** delta)),
            tail_constant=_tail_sum(c, gamma),
            truncation_residual=0.0,
        )

    def scaled(self, a: float, gamma: float) -> "MaCoefficients":
        return MaCoefficients.from_sequence(a * self.c, gamma, self.delta)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "c"])
            for j, cj in enumerate(self.c):
                w.writerow([j, format(cj, ".17g")])


def default_delta(gamma: float) -> float:
    return min(1.0 / gamma, 1.0) / 2.0


def _check_delta(gamma: float, delta: float | None) -> float:
    if not gamma > 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    if delta is None:
        return default_delta(gamma)
    if not 0 < delta < min(1.0 / gamma, 1.0):
        raise InvalidInputError(f"delta must lie in (0, min(1/gamma, 1)), got {delta}")
    return float(delta)


def _tail_sum(c: np.ndarray, gamma: float) -> float:
    return float(np.sum(np.abs(c) ** (1.0 / gamma)))


def check_causality(spec: ArmaSpec) -> tuple[bool, float]:
    """Return ``(is_causal, spectral_radius)`` of the AR companion matrix."""
    if spec.p == 0:
        return True, 0.0
    companion = np.zeros((spec.p, spec.p))
    companion[0, :] = spec.phi
    companion[1:, :-1] = np.eye(spec.p - 1)
    radius = float(np.max(np.abs(np.linalg.eigvals(companion))))
    return radius < 1.0 - CAUSALITY_MARGIN, radius


def _expand(spec: ArmaSpec, m: int) -> np.ndarray:
    theta = np.zeros(m + 1)
    theta[0] = 1.0
    q = min(spec.q, m)
    theta[1 : q + 1] = spec.theta[:q]
    phi = np.asarray(spec.phi)
    c = np.empty(m + 1)
    for j in range(m + 1):
        acc = theta[j]
        for i in range(1, min(j, spec.p) + 1):
            acc += phi[i - 1] * c[j - i]
        c[j] = acc
    return c


def _remainder_estimate(c: np.ndarray, delta: float, window: int = 10) -> float:
    """Geometric extrapolation of ``sum_{j > m} |c_j|**delta``.

    The decay rate is the 10-step growth of the running max of ``|c_j|`` over the
    last two windows, which tolerates interleaved zeros (e.g. ``phi = (0, a)``).
    """
    a = np.abs(c)
    if a.size < 2 * window + 1:
        return float("inf")
    last = a[-window:].max()
    if last == 0.0:
        return 0.0
    prev = a[-2 * window : -window].max()
    if prev == 0.0:
        return float("inf")
    rho = (last / prev) ** (1.0 / window)
    if rho >= 1.0:
        return float("inf")
    rd = rho**delta
    return float(window * last**delta * rd / (1.0 - rd))


def arma_to_ma(
    spec: ArmaSpec,
    m: int | None = None,
    gamma: float = 1.0,
    delta: float | None = None,
    tol: float = 1e-10,
) -> MaCoefficients:
    """Power-series coefficients of ``theta(z) / phi(z)`` up to order ``m``.

    With ``m=None`` the order doubles from 64 until the extrapolated remainder of
    ``sum |c_j|**delta`` drops below ``tol`` times the running sum (capped at
    ``MAX_ORDER``, with a warning).
    """
    delta = _check_delta(gamma, delta)
    causal, radius = check_causality(spec)
    if not causal:
        raise CausalityError(f"AR part is not causal (spectral radius {radius:.6g})")

    if m is None:
        order = max(64, spec.q + 2 * 10)
        while True:
            c = _expand(spec, order)
            s = float(np.sum(np.abs(c) ** delta))
            resid = _remainder_estimate(c, delta)
            if resid < tol * s:
                break
            if order >= MAX_ORDER:
                warnings.warn(f"truncation capped at m={MAX_ORDER}; remainder estimate {resid:.3g}")
                break
            order = min(2 * order, MAX_ORDER)
    else:
        if m < 0:
            raise InvalidInputError(f"truncation order must be >= 0, got {m}")
        c = _expand(spec, int(m))
        s = float(np.sum(np.abs(c) ** delta))
        resid = _remainder_estimate(c, delta)
        if spec.p == 0 and m >= spec.q:
            resid = 0.0
        if resid >= tol * s:
            warnings.warn(f"truncation at m={m} leaves remainder estimate {resid:.3g}")

    return MaCoefficients(
        c=c,
        truncation_order=c.size - 1,
        delta=delta,
        summability_value=s,
        tail_constant=_tail_sum(c, gamma),
        truncation_residual=resid,
    )


def tail_constant(coeffs: MaCoefficients | Sequence[float], gamma: float) -> float:
    c = coeffs.c if isinstance(coeffs, MaCoefficients) else np.asarray(coeffs, dtype=float)
    value = _tail_sum(c, gamma)
    if not value > 0:
        raise InvalidInputError("tail constant must be positive")
    return value


def simulate_process(coeffs: MaCoefficients, spec: InnovationSpec, n: int, seed) -> np.ndarray:
    """``X_t = sum_{j<=m} c_j Z_{t-j}`` for ``t = 1..n`` with ``m`` burn-in innovations.

    ``Z_1..Z_n`` are drawn first and the burn-in ``Z_{1-m}..Z_0`` afterwards, so
    the main innovation stream does not depend on ``m``: with ``c = (1,)`` the
    output is exactly ``sample_innovations(spec, n, seed)``.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    c = np.asarray(coeffs.c, dtype=float)
    m = c.size - 1
    z = _draw(spec, rng.random((n + m, 2)))
    z = np.concatenate([z[n:], z[:n]])
    if m <= _DIRECT_CONVOLVE_MAX:
        return np.convolve(z, c, mode="valid")
    return signal.oaconvolve(z, c, mode="valid")
