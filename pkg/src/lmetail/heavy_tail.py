"""Two-sided exact Pareto innovations.

The right and left tails are ``P(Z > z) = pi1 * (z / x_min) ** (-1 / gamma)`` and
``P(Z < -z) = pi2 * (z / x_min) ** (-1 / gamma)`` for ``z >= x_min``, i.e. a
regularly varying law whose slowly varying part is identically one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Name of the bit generator used everywhere in the package (recorded in outputs).
RNG_ALGORITHM = "numpy.random.PCG64 seeded via numpy.random.SeedSequence"


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


@dataclass(frozen=True)
class InnovationSpec:
    gamma: float
    pi1: float = 0.5
    pi2: float = 0.5
    x_min: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if self.pi1 < 0 or self.pi2 < 0:
            raise InvalidInputError("tail weights must be nonnegative")
        if abs(self.pi1 + self.pi2 - 1.0) > 1e-12:
            raise InvalidInputError(f"pi1 + pi2 must equal 1, got {self.pi1 + self.pi2}")
        if not (np.isfinite(self.x_min) and self.x_min > 0):
            raise InvalidInputError(f"x_min must be positive, got {self.x_min}")


def make_rng(seed) -> np.random.Generator:
    """Generator for a 64-bit seed or a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _draw(spec: InnovationSpec, uniforms: np.ndarray) -> np.ndarray:
    # column 0 drives the magnitude, column 1 the sign; 1 - U lies in (0, 1]
    magnitude = spec.x_min * (1.0 - uniforms[:, 0]) ** (-spec.gamma)
    return np.where(uniforms[:, 1] < spec.pi1, magnitude, -magnitude)


def sample_innovations(spec: InnovationSpec, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. innovations by inversion.

    Uniforms are consumed row by row as (magnitude, sign) pairs, so the first
    ``n`` values of a longer draw with the same seed coincide with this one.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    return _draw(spec, rng.random((n, 2)))


def sample_innovations_from(spec: InnovationSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Same as :func:`sample_innovations` but consuming an existing generator."""
    return _draw(spec, rng.random((n, 2)))


def innovation_quantile(spec: InnovationSpec, t: float) -> float:
    """The ``1 - 1/t`` quantile of ``|Z|``, i.e. ``x_min * t**gamma``."""
    if not t > 1:
        raise InvalidInputError(f"t must exceed 1, got {t}")
    return spec.x_min * t**spec.gamma


def innovation_abs_survival(spec: InnovationSpec, z):
    """``P(|Z| > z)``; equal to one below ``x_min``."""
    z = np.asarray(z, dtype=float)
    return np.where(z < spec.x_min, 1.0, (np.maximum(z, spec.x_min) / spec.x_min) ** (-1.0 / spec.gamma))
