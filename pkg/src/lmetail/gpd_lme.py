"""Likelihood moment estimation of the Generalized Pareto distribution.

For excesses ``Y_0..Y_{k-1}`` and a moment exponent ``r`` the estimator solves

    mean((1 + theta Y_i) ** (r / g(theta))) = 1 / (1 - r),   g(theta) = mean(log1p(theta Y_i))

for ``theta = gamma / sigma`` and then sets ``gamma_hat = g(theta_hat)`` and
``sigma_hat = gamma_hat / theta_hat``. The left-hand side minus ``1/(1-r)`` is
strictly decreasing in ``theta`` and has exactly one root for ``r < 1/2, r != 0``.

This module also holds the limit functions ``psi1``, ``psi2`` and ``psi`` of the
tail array sums that enter the equation, and the Hill estimator used as a
baseline.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .heavy_tail import InvalidInputError
from .quadrature import integrate
from .tail_measure import top_order_statistics

QUAD_ATOL = 1e-10


class DegenerateSampleError(ValueError):
    """The excesses carry no scale information (e.g. all zero or all equal)."""


class ConvergenceError(RuntimeError):
    """The root finder ran out of iterations; ``trace`` holds ``(theta, target)`` pairs."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


@dataclass(frozen=True)
class LmeConfig:
    r: float = -1.0
    newton_tol: float = 1e-10
    max_iter: int = 100
    bracket_growth: float = 4.0

    def __post_init__(self):
        if not (self.r < 0.5 and self.r != 0):
            raise InvalidInputError(f"r must satisfy r < 1/2 and r != 0, got {self.r}")
        if self.r > 0:
            warnings.warn("consistency of the estimator is only established for r < 0")
        if not self.newton_tol > 0:
            raise InvalidInputError("newton_tol must be positive")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be >= 1")
        if not self.bracket_growth > 1:
            raise InvalidInputError("bracket_growth must exceed 1")


@dataclass
class LmeFit:
    theta_hat: float
    gamma_hat: float
    sigma_hat: float
    k: int
    r: float
    iterations: int
    converged: bool
    final_residual: float
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["trace"]
        return d


def _excesses(excesses) -> np.ndarray:
    y = np.asarray(excesses, dtype=float).ravel()
    if y.size == 0 or not np.isfinite(y).all():
        raise InvalidInputError("excesses must be a nonempty sequence of finite values")
    if (y < 0).any():
        raise InvalidInputError("excesses must be nonnegative")
    if not (y > 0).any():
        raise DegenerateSampleError("all excesses are zero")
    return y


def _pieces(theta: float, y: np.ndarray, r: float):
    if not theta > 0:
        raise InvalidInputError(f"theta must be positive, got {theta}")
    logs = np.log1p(theta * y)
    gbar = logs.mean()
    if gbar == 0.0:
        raise DegenerateSampleError("mean log excess vanishes")
    terms = np.exp(r * logs / gbar)
    return logs, gbar, terms


def lme_target(theta: float, excesses, r: float = -1.0) -> float:
    y = _excesses(excesses)
    _, _, terms = _pieces(theta, y, r)
    return float(terms.mean() - 1.0 / (1.0 - r))


def lme_target_derivative(theta: float, excesses, r: float = -1.0) -> float:
    """d/dtheta of :func:`lme_target`, by the chain rule through ``g(theta)``."""
    y = _excesses(excesses)
    logs, gbar, terms = _pieces(theta, y, r)
    dlogs = y / (1.0 + theta * y)
    dgbar = dlogs.mean()
    return float(np.mean(terms * r * (dlogs * gbar - logs * dgbar)) / gbar**2)


def lme_target_at_zero(excesses, r: float = -1.0) -> float:
    """Limit of :func:`lme_target` as ``theta -> 0+``: ``mean(exp(r Y / mean(Y))) - 1/(1-r)``."""
    y = _excesses(excesses)
    return float(np.mean(np.exp(r * y / y.mean())) - 1.0 / (1.0 - r))


def _evaluate(theta, y, r):
    logs, gbar, terms = _pieces(theta, y, r)
    f = terms.mean() - 1.0 / (1.0 - r)
    dlogs = y / (1.0 + theta * y)
    d = np.mean(terms * r * (dlogs * gbar - logs * dlogs.mean())) / gbar**2
    return float(f), float(d)


def solve_lme(excesses, config: LmeConfig | None = None) -> LmeFit:
    """Safeguarded Newton-Raphson for ``theta_hat``, then back-substitution.

    A bracket with a sign change is grown geometrically from ``1 / mean(Y)``;
    Newton steps that leave the bracket (or meet a nonnegative slope) are replaced
    by geometric bisection. Every target evaluation counts as one iteration.
    """
    config = config or LmeConfig()
    r = config.r
    y = _excesses(excesses)
    k = y.size
    positive = y[y > 0]
    if k < 2 or np.unique(positive).size < 2:
        raise DegenerateSampleError("need at least two distinct positive excesses")

    trace = []
    iterations = 0

    def evaluate(theta):
        nonlocal iterations
        iterations += 1
        f, d = _evaluate(theta, y, r)
        trace.append((theta, f))
        return f, d

    theta = 1.0 / y.mean()
    f, d = evaluate(theta)
    lo = hi = theta
    f_lo = f_hi = f
    # widen both ends until the target changes sign
    tiny, huge = 1e-300 / positive.max(), 1e300 / positive.min()
    while not (f_lo > 0 and f_hi < 0):
        if f == 0.0:
            break
        if iterations >= config.max_iter or (lo < tiny and hi > huge):
            raise ConvergenceError("no sign change found while expanding the bracket", trace)
        if not f_lo > 0 and lo > tiny:
            lo /= config.bracket_growth
            f_lo, d_lo = evaluate(lo)
            if abs(f_lo) < abs(f):
                theta, f, d = lo, f_lo, d_lo
        if not f_hi < 0 and hi < huge:
            hi *= config.bracket_growth
            f_hi, d_hi = evaluate(hi)
            if abs(f_hi) < abs(f):
                theta, f, d = hi, f_hi, d_hi

    polish = 0
    while True:
        if abs(f) <= config.newton_tol:
            # a few extra steps push theta to full precision (needed for exact scale equivariance)
            step = -f / d if d < 0 else 0.0
            if f == 0.0 or abs(step) <= 4 * np.finfo(float).eps * theta or polish >= 3:
                break
            polish += 1
        if iterations >= config.max_iter:
            raise ConvergenceError(f"no convergence after {iterations} iterations (residual {f:.3g})", trace)
        if f > 0:
            lo = max(lo, theta)
        elif f < 0:
            hi = min(hi, theta)
        candidate = theta - f / d if d < 0 else math.nan
        if not lo < candidate < hi:
            candidate = math.sqrt(lo * hi)
        if candidate == theta:
            break
        theta = candidate
        f, d = evaluate(theta)

    converged = abs(f) <= config.newton_tol
    if not converged:
        raise ConvergenceError(f"bracket collapsed with residual {f:.3g}", trace)
    gamma_hat = float(np.log1p(theta * y).mean())
    return LmeFit(
        theta_hat=float(theta),
        gamma_hat=gamma_hat,
        sigma_hat=gamma_hat / theta,
        k=k,
        r=r,
        iterations=iterations,
        converged=converged,
        final_residual=float(f),
        trace=trace,
    )


def hill_estimator(series, k: int) -> float:
    """Mean log-ratio of the ``k`` largest ``|X|`` to the (k+1)-th largest."""
    a = np.abs(np.asarray(series, dtype=float))
    if not 1 <= k < a.size:
        raise InvalidInputError(f"k must satisfy 1 <= k < n={a.size}, got {k}")
    top = top_order_statistics(a, k + 1)
    if not top[k] > 0:
        raise InvalidInputError("threshold order statistic must be positive")
    return float(np.mean(np.log(top[:k] / top[k])))


# Limit functions. With u = 1/(1+z) and then u = s**(1/a), where a is the
# exponent of u at the origin, both integrals become
#     (1/a) * int_0^1 (x / (1 + (x - 1) s**(1/a)))**(1/gamma) ds
# whose integrand is bounded on [0, 1].

def _reduced_integral(x: float, a: float, gamma: float) -> float:
    inv_a = 1.0 / a
    inv_g = 1.0 / gamma

    def integrand(s):
        return (x / (1.0 + (x - 1.0) * s**inv_a)) ** inv_g

    value, _ = integrate(integrand, 0.0, 1.0, atol=QUAD_ATOL * a)
    return value / a


def psi1(x: float, gamma: float) -> float:
    """``int_0^inf dz / ((z/x + 1)**(1/gamma) (z + 1))``."""
    if not (x > 0 and gamma > 0):
        raise InvalidInputError("x and gamma must be positive")
    return _reduced_integral(x, 1.0 / gamma, gamma)


def psi2(x: float, y: float, gamma: float, r: float) -> float:
    """``(r/y) int_0^inf dz / ((z/x + 1)**(1/gamma) (z + 1)**(1 - r/y)) + 1``."""
    if not (x > 0 and y > 0 and gamma > 0):
        raise InvalidInputError("x, y and gamma must be positive")
    if not r < 0:
        raise InvalidInputError(f"r must be negative, got {r}")
    return (r / y) * _reduced_integral(x, 1.0 / gamma - r / y, gamma) + 1.0


def psi(x: float, gamma: float, r: float) -> float:
    """``psi2(x, psi1(x)) - 1/(1-r)``; zero at ``x = 1`` and strictly decreasing."""
    return psi2(x, psi1(x, gamma), gamma, r) - 1.0 / (1.0 - r)


def tail_array_sums(excesses, theta_scale: float, x: float, y: float, r: float) -> tuple[float, float]:
    """Empirical counterparts of ``psi1(x)`` and ``psi2(x, y)``.

    Returns ``mean(log1p(x theta_scale Y))`` and ``mean((1 + x theta_scale Y)**(r/y))``
    where ``theta_scale`` is ``gamma / sigma(n/k)``.
    """
    yv = np.asarray(excesses, dtype=float)
    logs = np.log1p(x * theta_scale * yv)
    return float(logs.mean()), float(np.exp((r / y) * logs).mean())
