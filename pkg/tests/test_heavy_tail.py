import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmetail.heavy_tail import (
    InnovationSpec,
    InvalidInputError,
    innovation_quantile,
    sample_innovations,
)


def binomial_se(p, n):
    return math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(gamma=0.0),
        dict(gamma=-1.0),
        dict(gamma=1.0, pi1=0.6, pi2=0.6),
        dict(gamma=1.0, pi1=-0.1, pi2=1.1),
        dict(gamma=1.0, x_min=0.0),
    ],
)
def test_invalid_spec_rejected(kwargs):
    with pytest.raises(InvalidInputError):
        InnovationSpec(**kwargs)


def test_survival_at_ten_one_sided():
    z = sample_innovations(InnovationSpec(1.0, pi1=1.0, pi2=0.0), 10**6, seed=11)
    assert (z > 0).all()
    frac = np.mean(z > 10)
    assert abs(frac - 0.1) < 3 * binomial_se(0.1, 10**6)


def test_symmetric_signs_average_to_zero():
    z = sample_innovations(InnovationSpec(1.0, 0.5, 0.5), 10**6, seed=12)
    se = 1 / math.sqrt(10**6)
    assert abs(np.mean(np.sign(z))) < 3 * se


def test_upper_quantile_gamma_half():
    z = sample_innovations(InnovationSpec(0.5, 1.0, 0.0), 10**6, seed=13)
    assert np.quantile(z, 0.99) == pytest.approx(10.0, rel=0.05)


def test_support_is_outside_x_min():
    z = sample_innovations(InnovationSpec(1.5, 0.3, 0.7, x_min=2.0), 10**5, seed=3)
    assert np.abs(z).min() >= 2.0


@pytest.mark.parametrize(
    "gamma, x_min, t, expected",
    [(1.0, 1.0, 100, 100.0), (2.0, 1.0, 10, 100.0), (0.5, 2.0, 16, 8.0)],
)
def test_innovation_quantile(gamma, x_min, t, expected):
    assert innovation_quantile(InnovationSpec(gamma, x_min=x_min), t) == pytest.approx(expected, rel=1e-14)


def test_quantile_rejects_t_at_most_one():
    with pytest.raises(InvalidInputError):
        innovation_quantile(InnovationSpec(1.0), 1.0)


@pytest.mark.parametrize("spec", [InnovationSpec(0.5, x_min=2.0), InnovationSpec(1.0), InnovationSpec(2.0, 0.8, 0.2)])
@pytest.mark.parametrize("t", [10, 100])
def test_quantile_matches_sampler(spec, t):
    z = np.abs(sample_innovations(spec, 10**7, seed=99))
    assert np.quantile(z, 1 - 1 / t) == pytest.approx(innovation_quantile(spec, t), rel=0.02)


def test_two_sided_balance():
    spec = InnovationSpec(1.0, pi1=0.7, pi2=0.3)
    z = sample_innovations(spec, 10**6, seed=21)
    level = np.quantile(np.abs(z), 0.999)
    exceed = z[np.abs(z) > level]
    frac = np.mean(exceed > 0)
    assert abs(frac - 0.7) < 3 * binomial_se(0.7, exceed.size)


def test_prefix_stable_for_longer_draws():
    spec = InnovationSpec(1.0)
    short = sample_innovations(spec, 100, seed=5)
    long = sample_innovations(spec, 1000, seed=5)
    assert np.array_equal(short, long[:100])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), gamma=st.floats(0.1, 3.0), pi1=st.floats(0.0, 1.0))
def test_same_seed_same_bits(seed, gamma, pi1):
    spec = InnovationSpec(gamma, pi1, 1.0 - pi1)
    a = sample_innovations(spec, 257, seed)
    b = sample_innovations(spec, 257, seed)
    assert a.tobytes() == b.tobytes()


def test_rejects_bad_n_and_seed():
    with pytest.raises(InvalidInputError):
        sample_innovations(InnovationSpec(1.0), 0, seed=1)
    with pytest.raises(InvalidInputError):
        sample_innovations(InnovationSpec(1.0), 5, seed=2**64)
