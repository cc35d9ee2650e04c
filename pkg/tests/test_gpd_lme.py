import contextlib
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import quad

from lmetail.gpd_lme import (
    ConvergenceError,
    DegenerateSampleError,
    LmeConfig,
    hill_estimator,
    lme_target,
    lme_target_at_zero,
    lme_target_derivative,
    psi,
    psi1,
    psi2,
    solve_lme,
    tail_array_sums,
)
from lmetail.heavy_tail import InnovationSpec, InvalidInputError, sample_innovations
from lmetail.tail_measure import make_excess_sample, theoretical_scales
from lmetail.linear_process import MaCoefficients


def gpd_grid(k, gamma=1.0, sigma=1.0):
    """Exact GPD(gamma, sigma) quantiles at survival levels (i+1)/k, i = 0..k-1."""
    p = (np.arange(k) + 1) / k
    return sigma * (p ** (-gamma) - 1) / gamma


def gpd_sample(rng, k, gamma):
    return (rng.random(k) ** (-gamma) - 1) / gamma


def pairwise_derivative(x, theta0, y, r):
    """d/dx of lme_target(x * theta0) as a double sum over pairs.

    Uses u(a) = r exp(r a / zbar) / x and v(a) = (1 - exp(-a)) / a.
    """
    z = np.log1p(x * theta0 * y)
    zbar = z.mean()
    u = r * np.exp(r * z / zbar) / x
    v = (1 - np.exp(-z)) / z
    i, j = np.triu_indices(y.size, 1)
    s = np.sum(z[i] * z[j] * (u[i] - u[j]) * (v[i] - v[j]))
    return s / zbar**2 / y.size**2


# -- target and derivative -------------------------------------------------------

@pytest.mark.parametrize("r", [-2.0, -1.0, -0.5, 0.3])
@pytest.mark.parametrize("theta", [1e-3, 1.0, 50.0])
def test_target_equal_excesses(r, theta):
    y = np.full(10, 2.5)
    assert lme_target(theta, y, r) == pytest.approx(math.exp(r) - 1 / (1 - r), abs=1e-14)
    # rounding of the mean log is amplified by 1/theta
    assert abs(lme_target_derivative(theta, y, r)) < 1e-14 / theta


def test_target_population_root_on_gpd_grid():
    assert abs(lme_target(1.0, gpd_grid(10**4), r=-1.0)) < 0.01


def test_target_small_theta_limit():
    rng = np.random.default_rng(3)
    y = gpd_sample(rng, 500, 0.8)
    limit = lme_target_at_zero(y, -1.0)
    vals = [lme_target(t / y.mean(), y, -1.0) for t in (1e-4, 1e-6, 1e-8)]
    # first-order approach: error shrinks proportionally to theta
    assert abs(vals[-1] - limit) < 1e-6
    assert abs(vals[0] - limit) > abs(vals[1] - limit) > abs(vals[2] - limit)
    # heavier than exponential excesses put the root at theta > 0
    assert limit > 0


def test_target_degenerate():
    with pytest.raises(DegenerateSampleError):
        lme_target(1.0, np.zeros(5))
    with pytest.raises(InvalidInputError):
        lme_target(-1.0, [1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(
    y=st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=40, unique=True),
    theta=st.floats(1e-3, 1e2),
    r=st.sampled_from([-2.0, -1.0, -0.5, 0.25]),
)
def test_derivative_negative(y, theta, r):
    assume(np.unique(np.round(y, 9)).size >= 2)
    assert lme_target_derivative(theta, y, r) < 0


def random_instance(rng):
    k = int(rng.integers(10, 400))
    gamma = rng.uniform(0.1, 2.0)
    y = gpd_sample(rng, k, gamma) * rng.uniform(0.1, 10)
    theta = math.exp(rng.uniform(-2, 2)) / y.mean()
    r = rng.choice([-2.0, -1.0, -0.5])
    return y, theta, r


def test_derivative_vs_central_differences():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        y, theta, r = random_instance(rng)
        h = 1e-6 * theta
        fd = (lme_target(theta + h, y, r) - lme_target(theta - h, y, r)) / (2 * h)
        d = lme_target_derivative(theta, y, r)
        assert abs(d - fd) <= 1e-6 * abs(d)


def test_derivative_vs_pairwise_form():
    rng = np.random.default_rng(5)
    for _ in range(20):
        y, theta, r = random_instance(rng)
        y = y[:120]
        for x in (0.5, 1.0, 2.0):
            expected = pairwise_derivative(x, theta, y, r)
            assert theta * lme_target_derivative(x * theta, y, r) == pytest.approx(expected, rel=1e-9)


# -- solver ------------------------------------------------------------------

def test_solve_gpd_grid():
    fit = solve_lme(gpd_grid(10**4), LmeConfig(r=-1.0))
    assert fit.converged and fit.iterations <= 30
    assert 0.99 <= fit.gamma_hat <= 1.01 and 0.99 <= fit.sigma_hat <= 1.01
    assert abs(fit.final_residual) <= 1e-10


def test_fit_invariants():
    y = gpd_sample(np.random.default_rng(9), 300, 0.6)
    fit = solve_lme(y)
    assert fit.theta_hat > 0 and fit.k == 300 and fit.r == -1.0
    assert abs(lme_target(fit.theta_hat, y)) <= 1e-10
    assert fit.gamma_hat == pytest.approx(np.mean(np.log1p(fit.theta_hat * y)), rel=1e-15)
    assert fit.sigma_hat == pytest.approx(fit.gamma_hat / fit.theta_hat, rel=1e-15)
    assert len(fit.trace) == fit.iterations


@pytest.mark.parametrize("gamma", [0.2, 1.0, 3.0])
@pytest.mark.parametrize("sigma", [1e-3, 1.0, 1e4])
def test_solve_gpd_grid_other_parameters(gamma, sigma):
    fit = solve_lme(gpd_grid(10**4, gamma, sigma))
    assert fit.gamma_hat == pytest.approx(gamma, rel=0.03)
    assert fit.sigma_hat == pytest.approx(sigma, rel=0.03)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    gamma=st.floats(0.05, 2.5),
    a=st.sampled_from([1e-3, 0.37, 1.0, 1e3]),
    r=st.sampled_from([-2.0, -1.0, -0.5]),
)
def test_scale_equivariance(seed, gamma, a, r):
    y = gpd_sample(np.random.default_rng(seed), 200, gamma)
    assume(np.unique(y[y > 0]).size >= 2)
    # near-exponential draws can be lighter than exponential: no root at theta > 0
    assume(lme_target_at_zero(y, r) > 0)
    cfg = LmeConfig(r=r)
    base = solve_lme(y, cfg)
    scaled = solve_lme(a * y, cfg)
    assert scaled.theta_hat == pytest.approx(base.theta_hat / a, rel=1e-9)
    assert scaled.gamma_hat == pytest.approx(base.gamma_hat, rel=1e-9)
    assert scaled.sigma_hat == pytest.approx(a * base.sigma_hat, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    gamma=st.floats(0.05, 2.5),
    r=st.sampled_from([-3.0, -1.0, -0.2, 0.2, 0.45]),
)
def test_single_sign_change_around_root(seed, gamma, r):
    y = gpd_sample(np.random.default_rng(seed), 150, gamma)
    with pytest.warns(UserWarning) if r > 0 else contextlib.nullcontext():
        cfg = LmeConfig(r=r)
    try:
        fit = solve_lme(y, cfg)
    except ConvergenceError:
        # positive-theta root absent: the target must then be negative near zero
        assert lme_target_at_zero(y, r) <= 0
        return
    signs = np.sign([lme_target(fit.theta_hat * 2.0**j, y, r) for j in range(-10, 11) if j != 0])
    assert np.count_nonzero(np.diff(signs)) == 1


def test_light_tailed_excesses_have_no_positive_root():
    y = np.linspace(0.01, 1.0, 200)  # uniform-like excesses, lighter than exponential
    assert lme_target_at_zero(y, -1.0) < 0
    with pytest.raises(ConvergenceError) as info:
        solve_lme(y, LmeConfig(max_iter=60))
    assert info.value.trace


@pytest.mark.parametrize("y", [np.zeros(5), np.full(5, 3.0), np.array([0.0, 0.0, 2.0])])
def test_solver_degenerate(y):
    with pytest.raises(DegenerateSampleError):
        solve_lme(y)


@pytest.mark.parametrize("kwargs", [dict(r=0.0), dict(r=0.5), dict(r=1.0), dict(newton_tol=0), dict(max_iter=0), dict(bracket_growth=1.0)])
def test_config_rejects(kwargs):
    with pytest.raises(InvalidInputError):
        LmeConfig(**kwargs)


def test_config_warns_for_positive_r():
    with pytest.warns(UserWarning, match="r < 0"):
        LmeConfig(r=0.25)


def test_fit_json_is_flat():
    fit = solve_lme(gpd_grid(100))
    d = json.loads(json.dumps(fit.to_dict()))
    assert set(d) == {"theta_hat", "gamma_hat", "sigma_hat", "k", "r", "iterations", "converged", "final_residual"}


@pytest.mark.slow
def test_median_gamma_iid_pareto():
    spec = InnovationSpec(1.0)
    gammas = []
    for seed in range(200):
        x = sample_innovations(spec, 10**5, seed=5000 + seed)
        gammas.append(solve_lme(make_excess_sample(x, 1000, full_sort=False).excesses).gamma_hat)
    assert 0.9 <= np.median(gammas) <= 1.1


# -- Hill ------------------------------------------------------------------------

def test_hill_hand_computation():
    x = [math.e**2, -math.e, 1.0, 0.5, -0.2]
    assert hill_estimator(x, 2) == pytest.approx(1.5, abs=1e-15)


def test_hill_degenerate_and_invalid():
    assert hill_estimator([2.0, 2.0, 2.0, 1.0], 2) == 0.0
    with pytest.raises(InvalidInputError):
        hill_estimator([3.0, 1.0, 0.0, 0.0], 2)
    with pytest.raises(InvalidInputError):
        hill_estimator([3.0, 1.0], 2)


@settings(max_examples=100, deadline=None)
@given(series=st.lists(st.floats(0.01, 1e6), min_size=2, max_size=50), data=st.data())
def test_hill_matches_double_loop(series, data):
    k = data.draw(st.integers(1, len(series) - 1))
    absx = [abs(v) for v in series]

    def kth(j):  # (j+1)-th largest by counting
        return next(v for v in absx if sum(w > v for w in absx) <= j < sum(w >= v for w in absx))

    thr = kth(k)
    naive = sum(math.log(kth(i) / thr) for i in range(k)) / k
    assert hill_estimator(series, k) == pytest.approx(naive, rel=1e-12, abs=1e-15)


@pytest.mark.slow
def test_hill_median_iid_pareto():
    spec = InnovationSpec(1.0)
    est = [hill_estimator(sample_innovations(spec, 10**6, seed=7000 + s), 1000) for s in range(100)]
    assert 0.9 <= np.median(est) <= 1.1


@pytest.mark.slow
def test_lme_and_hill_agree():
    x = sample_innovations(InnovationSpec(1.0), 10**6, seed=17)
    sample = make_excess_sample(x, 1000, full_sort=False)
    assert abs(solve_lme(sample.excesses).gamma_hat - hill_estimator(x, 1000)) < 0.2


# -- limit functions ---------------------------------------------------------------

GAMMAS = (0.5, 1.0, 2.0)
RS = (-2.0, -1.0, -0.5)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_psi1_at_one(gamma):
    assert abs(psi1(1.0, gamma) - gamma) < 1e-8


def test_psi1_partial_fractions():
    assert abs(psi1(2.0, 1.0) - 2 * math.log(2)) < 1e-8


def test_psi1_vanishes_at_zero():
    assert psi1(1e-10, 1.0) < 1e-8
    assert psi1(1e-6, 0.5) < psi1(1e-3, 0.5) < psi1(0.1, 0.5)


@pytest.mark.parametrize("x", [0.01, 0.25, 0.5, 2.0, 4.0, 100.0])
@pytest.mark.parametrize("gamma", [0.3, *GAMMAS, 4.0])
def test_psi1_against_scipy(x, gamma):
    ref, _ = quad(lambda z: 1 / ((z / x + 1) ** (1 / gamma) * (z + 1)), 0, np.inf, epsabs=1e-13, limit=500)
    assert psi1(x, gamma) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("gamma", GAMMAS)
@pytest.mark.parametrize("r", RS)
def test_psi2_at_one_gamma(gamma, r):
    assert abs(psi2(1.0, gamma, gamma, r) - 1 / (1 - r)) < 1e-8


def test_psi2_elementary():
    assert abs(psi2(1.0, 1.0, 1.0, -1.0) - 0.5) < 1e-12


def test_psi2_small_r():
    assert psi2(2.0, 1.0, 1.0, -1e-9) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("x, y", [(0.25, 0.7), (3.0, 1.5), (1.0, 0.3)])
@pytest.mark.parametrize("gamma", GAMMAS)
def test_psi2_against_scipy(x, y, gamma):
    r = -1.0
    ref, _ = quad(lambda z: 1 / ((z / x + 1) ** (1 / gamma) * (z + 1) ** (1 - r / y)), 0, np.inf, epsabs=1e-13, limit=500)
    assert psi2(x, y, gamma, r) == pytest.approx(r / y * ref + 1, abs=1e-9)


def test_psi2_rejects_nonnegative_r():
    with pytest.raises(InvalidInputError):
        psi2(1.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("gamma", GAMMAS)
@pytest.mark.parametrize("r", RS)
def test_psi_root_and_monotone(gamma, r):
    assert abs(psi(1.0, gamma, r)) < 1e-8
    vals = [psi(x, gamma, r) for x in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_psi_signs():
    assert psi(0.5, 1.0, -1.0) > 0
    assert psi(2.0, 1.0, -1.0) < 0


@pytest.mark.slow
def test_tail_array_sums_approach_psi1():
    spec = InnovationSpec(1.0)
    coeffs = MaCoefficients.from_sequence([1.0], 1.0)
    n, k = 10**6, 10**3
    _, sigma = theoretical_scales(spec, coeffs, n / k)
    sums = []
    for seed in range(50):
        y = make_excess_sample(sample_innovations(spec, n, seed=900 + seed), k, full_sort=False).excesses
        sums.append([tail_array_sums(y, 1.0 / sigma, x, 1.0, -1.0)[0] for x in (0.5, 1.0, 2.0)])
    mean = np.mean(sums, axis=0)
    for x, m in zip((0.5, 1.0, 2.0), mean):
        assert abs(m - psi1(x, 1.0)) < 0.1
