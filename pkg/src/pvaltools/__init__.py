"""Exact t tests, power and expected P-value curves, and seeded simulations of
the significance filter, optional stopping and family-wise error."""

__version__ = "0.1.0"

from .distfn import (
    DistParams,
    ln_gamma,
    nct_cdf,
    nct_quantile,
    norm_cdf,
    norm_quantile,
    reg_inc_beta,
    t_cdf,
    t_quantile,
)
from .inference import SampleSummary, TestSpec, TTestResult, fit_pseudo_data, summarize, t_test
from .design import (
    CurveTable,
    DesignQuery,
    p_mean,
    p_quantile,
    power,
    power_curve,
    round_n,
    solve_n,
)
from .montecarlo import (
    PopulationSpec,
    SimConfig,
    StoppingRule,
    sim_fwer,
    sim_optional_stopping,
    sim_significance_filter,
    sim_type_m,
)
from .multiplicity import Family, bonferroni_adjust_p, bonferroni_threshold, fwer_analytic
from .evidence import DescriptorScale, default_scale, describe
