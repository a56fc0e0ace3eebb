"""Pearson reference laws, indicator Stein solutions with certified derivative
bounds, exact Malliavin G on one-dimensional Wiener chaos, and tail-comparison
certificates, with a Monte-Carlo/quadrature verification harness on top."""

from .bounds import (
    TailReport,
    asymptotic_tail_constant,
    implicit_lower_bound,
    pearson_lower,
    pearson_upper_constant,
    phi_envelope,
    tail_sandwich,
    variance_bound_check,
)
from .chaos import (
    HermiteSeries,
    PolynomialInN,
    dominance_margin,
    g_function,
    hermite_eval,
    ibp_check,
    law_of_polynomial,
    malliavin_G,
)
from .pearson import (
    CaseTag,
    PearsonCoefficients,
    PearsonLaw,
    build_law,
    classify,
    moment,
    quantile,
    sample,
    stein_kernel_and_q,
    tail,
)
from .stein import (
    IndicatorSteinSolution,
    certify_fprime,
    check_residual,
    f_eval,
    fprime_eval,
    solve_indicator,
)
from .verify import (
    Hypothesis,
    ScenarioSpec,
    empirical_tail,
    run_scenario,
    slope_estimate,
)

__all__ = [
    "CaseTag",
    "PearsonCoefficients",
    "PearsonLaw",
    "classify",
    "build_law",
    "tail",
    "quantile",
    "sample",
    "moment",
    "stein_kernel_and_q",
    "IndicatorSteinSolution",
    "solve_indicator",
    "f_eval",
    "fprime_eval",
    "check_residual",
    "certify_fprime",
    "TailReport",
    "phi_envelope",
    "implicit_lower_bound",
    "pearson_lower",
    "pearson_upper_constant",
    "asymptotic_tail_constant",
    "tail_sandwich",
    "variance_bound_check",
    "HermiteSeries",
    "PolynomialInN",
    "hermite_eval",
    "malliavin_G",
    "law_of_polynomial",
    "g_function",
    "dominance_margin",
    "ibp_check",
    "Hypothesis",
    "ScenarioSpec",
    "empirical_tail",
    "run_scenario",
    "slope_estimate",
]
