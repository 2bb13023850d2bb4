"""Diffusionlet toolkit.

Wavelet decomposition of terminal conditions, fast scale/translate
solution of scale-invariant linear parabolic equations, and propagation
of terminal-condition uncertainty through the solution map.
"""

__version__ = "0.1.0"

from .diffusionlets import DiffusionletCache, EssentialSupport, \
    build_cache, essential_support, eval_father, eval_mother, load_cache, \
    reconstruct, refinement_residual, save_cache, translation_discrepancy, \
    truncated_reconstruct
from .errors import ConvergenceError, DletError, GridTooSmallError, \
    HorizonError, IndexRangeError, LengthError, UnsupportedOrderError
from .error_structure import ErrorStructureSpec, SharpSample, \
    VarianceField, covariance_solution, draw_sharp_sample, gamma_solution, \
    gamma_terminal, ou_gamma, ou_generator, perturb_and_solve_mc, \
    proportional_weights, sharp_field, sharp_square_mean, variance_field
from .feynman_kac import McEstimate, SdeSpec, cev_preset, cir_preset, \
    mc_expectation
from .pde import GridSolution, PdeSpec, closed_form_heat, consistency_gap, \
    solve_backward, solve_discounted, theta_march, undiscount
from .presets import TerminalPreset, call_payoff, from_csv, gaussian_bump, \
    indicator, linear_payoff, parse_preset
from .validation import SUITE_NAMES, run_suite
from .wavelets import DyadicFunction, FilterPair, WaveletBasis, \
    WaveletExpansion, cascade_evaluate, daubechies_filter, \
    evaluate_expansion, filter_report, fwt_decompose, fwt_reconstruct, \
    make_basis, prefilter_weights, scaling_moments

__all__ = [
    "__version__",
    "ConvergenceError", "DletError", "GridTooSmallError", "HorizonError",
    "IndexRangeError", "LengthError", "UnsupportedOrderError",
    "DyadicFunction", "FilterPair", "WaveletBasis", "WaveletExpansion",
    "cascade_evaluate", "daubechies_filter", "evaluate_expansion",
    "filter_report", "fwt_decompose", "fwt_reconstruct", "make_basis",
    "prefilter_weights", "scaling_moments",
    "GridSolution", "PdeSpec", "closed_form_heat", "consistency_gap",
    "solve_backward", "solve_discounted", "theta_march", "undiscount",
    "McEstimate", "SdeSpec", "cev_preset", "cir_preset", "mc_expectation",
    "DiffusionletCache", "EssentialSupport", "build_cache",
    "essential_support", "eval_father", "eval_mother", "load_cache",
    "reconstruct", "refinement_residual", "save_cache",
    "translation_discrepancy", "truncated_reconstruct",
    "ErrorStructureSpec", "SharpSample", "VarianceField",
    "covariance_solution", "draw_sharp_sample", "gamma_solution",
    "gamma_terminal", "ou_gamma", "ou_generator", "perturb_and_solve_mc",
    "proportional_weights", "sharp_field", "sharp_square_mean",
    "variance_field",
    "TerminalPreset", "call_payoff", "from_csv", "gaussian_bump",
    "indicator", "linear_payoff", "parse_preset",
    "SUITE_NAMES", "run_suite",
]
