"""Certified Berry-Esseen bounds for the combinatorial central limit theorem."""
from .arraymodel import (
    ArraySpec,
    CellDistribution,
    CenteredArray,
    MomentSummary,
    cell_moments,
    center,
    prepare,
    standardize,
    summarize,
)
from .bounds import (
    BoundReport,
    ConcentrationConstants,
    SrsSpec,
    concentration_constants,
    es2_envelope,
    final_coefficient,
    srs_bound,
    theorem_bound,
    trivial_threshold,
)
from .estimator import CombinatorialCLTBound, HoeffdingCentering
from .exactoracle import (
    AtomicDistribution,
    exact_concentration_check,
    exact_ks,
    exact_s_statistics,
    exact_w_distribution,
    verify_linearity,
)
from .permsim import (
    ExchangeablePairSample,
    PermutationState,
    couple_permutation,
    exchangeable_step,
    mc_ks_distance,
    realize_w,
    sample_permutation,
)
from .steinfn import SteinSolution, normal_cdf, stein_solution

__version__ = "0.1.0"
