"""Order statistics of ``|X|`` and the empirical tail measures built from them.

Exceedances are always counted with a strict inequality, so values tied with a
level or with the threshold never count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .heavy_tail import InnovationSpec, InvalidInputError
from .linear_process import MaCoefficients


def _abs_values(series) -> np.ndarray:
    a = np.abs(np.asarray(series, dtype=float)).ravel()
    if np.isnan(a).any():
        raise InvalidInputError("series contains NaN")
    return a


def _check_k(k: int, n: int) -> None:
    if not 1 <= k < n:
        raise InvalidInputError(f"k must satisfy 1 <= k < n={n}, got {k}")


def top_order_statistics(series, count: int) -> np.ndarray:
    """The ``count`` largest absolute values in descending order."""
    a = _abs_values(series)
    if count >= a.size:
        return np.sort(a)[::-1]
    top = np.partition(a, a.size - count)[a.size - count :]
    return np.sort(top)[::-1]


@dataclass(frozen=True)
class ExcessSample:
    sorted_abs: np.ndarray
    n: int
    k: int
    threshold: float
    excesses: np.ndarray


def make_excess_sample(series, k: int, full_sort: bool = True) -> ExcessSample:
    """Threshold at the (k+1)-th largest ``|X_i|`` and the ``k`` excesses above it.

    ``full_sort=False`` keeps only the top ``k + 1`` order statistics in
    ``sorted_abs``, which is all the estimators need and much cheaper for long series.
    """
    a = _abs_values(series)
    _check_k(k, a.size)
    top = np.sort(a)[::-1] if full_sort else top_order_statistics(a, k + 1)
    threshold = float(top[k])
    return ExcessSample(sorted_abs=top, n=a.size, k=k, threshold=threshold, excesses=top[:k] - threshold)


def tail_empirical_measure(series, b_scale: float, k: int, z: float) -> float:
    """``(1/k) #{i : |X_i| > b_scale * z}``."""
    if not (b_scale > 0 and z > 0):
        raise InvalidInputError("b_scale and z must be positive")
    a = _abs_values(series)
    return np.count_nonzero(a > b_scale * z) / k


def excess_tail_measure(series, sigma_scale: float, k: int, z: float, threshold: float | None = None) -> float:
    """``(1/k) #{i : |X_i| - |X|_{n,n-k} > sigma_scale * z}``."""
    if not sigma_scale > 0 or z < 0:
        raise InvalidInputError("sigma_scale must be positive and z nonnegative")
    a = _abs_values(series)
    if threshold is None:
        _check_k(k, a.size)
        threshold = float(top_order_statistics(a, k + 1)[k])
    return np.count_nonzero(a - threshold > sigma_scale * z) / k


def intermediate_order_ratio(series, k: int, s: float, b_scale: float) -> float:
    """``|X|_{n, n - ceil(k s)} / b_scale``, the (ceil(ks)+1)-th largest value rescaled."""
    if not (s > 0 and b_scale > 0):
        raise InvalidInputError("s and b_scale must be positive")
    a = _abs_values(series)
    # round first so that e.g. k=10, s=0.3 gives 3 rather than 4
    j = math.ceil(round(k * s, 9))
    if j >= a.size:
        raise InvalidInputError(f"ceil(k*s)={j} must be below n={a.size}")
    return float(top_order_statistics(a, j + 1)[j]) / b_scale


@dataclass(frozen=True)
class ScaleFunctions:
    """``b(t)`` (the 1 - 1/t quantile of |X|) and ``sigma(t) = gamma * b(t)``."""

    gamma: float
    x_min: float
    tail_constant: float

    def b_of_t(self, t):
        return self.x_min * (self.tail_constant * np.asarray(t, dtype=float)) ** self.gamma

    def sigma_of_t(self, t):
        return self.gamma * self.b_of_t(t)


def scale_functions(innov: InnovationSpec, coeffs: MaCoefficients) -> ScaleFunctions:
    return ScaleFunctions(gamma=innov.gamma, x_min=innov.x_min, tail_constant=float(np.sum(np.abs(coeffs.c) ** (1.0 / innov.gamma))))


def theoretical_scales(innov: InnovationSpec, coeffs: MaCoefficients, t: float) -> tuple[float, float]:
    """``(b(t), sigma(t))`` from ``1 - F_|X|(x) ~ ||c|| (x / x_min)**(-1/gamma)``."""
    if not t > 1:
        raise InvalidInputError(f"t must exceed 1, got {t}")
    sf = scale_functions(innov, coeffs)
    return float(sf.b_of_t(t)), float(sf.sigma_of_t(t))
