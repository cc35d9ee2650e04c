"""Likelihood moment estimation of GPD tails for linear processes with Pareto-type innovations."""
from .gpd_lme import (
    ConvergenceError,
    DegenerateSampleError,
    LmeConfig,
    LmeFit,
    hill_estimator,
    lme_target,
    lme_target_derivative,
    psi,
    psi1,
    psi2,
    solve_lme,
)
from .heavy_tail import InnovationSpec, InvalidInputError, innovation_quantile, sample_innovations
from .linear_process import ArmaSpec, CausalityError, MaCoefficients, arma_to_ma, check_causality, simulate_process, tail_constant
from .tail_measure import (
    ExcessSample,
    excess_tail_measure,
    intermediate_order_ratio,
    make_excess_sample,
    tail_empirical_measure,
    theoretical_scales,
)

__version__ = "0.1.0"
