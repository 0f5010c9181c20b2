"""Coherence-free eigenvector estimation for spiked symmetric matrices.

A spectral estimate of a planted eigenvector degrades entrywise as the
eigenvector localizes; the refinement procedures here rebuild the large
coordinates from sign-aligned row sums of the observation, making the
entrywise error independent of that localization. The package also ships the
simulation harness used to measure both estimators and a metric-entropy
toolkit (profile quantization, lattice covers, greedy packings) for the
underlying geometry.
"""

from .entropy import (
    CoverSet,
    RowProfile,
    enumerate_cover_T,
    greedy_packing,
    quantize_profile,
    sample_profile,
    verify_cover,
)
from .errors import (
    ConvergenceError,
    InputError,
    NumericalError,
    PackingInfeasibleError,
    QuantizationError,
    SupportSelectionError,
)
from .estimators import RefinedRankOne, RefinedRankR, SpectralEigenvectors
from .experiments import (
    ExperimentConfig,
    SummaryRow,
    TrialRecord,
    bootstrap_ci,
    emit_csv,
    parse_csv,
    run_rank1,
    run_rankr,
    spot_check,
    summarize,
    trial_seed,
    write_csv,
)
from .linalg import (
    EigenPair,
    Spectrum,
    conjugate,
    haar_basis,
    haar_orthogonal,
    sign_conjugate,
    top_eigenpairs,
)
from .metrics import (
    MetricReport,
    d_2inf_signed,
    d_inf,
    frob_subspace_dist,
    metric_report,
)
from .refinement import (
    DebiasedEigenvalue,
    RefinedEstimate,
    debias_lambda,
    estimate_sigma2,
    lambda_from_support,
    refine_rank1,
    refine_rank1_conjugated,
    refine_rank_r,
)
from .signals import (
    GroundTruth,
    NoiseSpec,
    SignalSpec,
    assemble_observation,
    coherence,
    eigenvalue_ladder,
    gen_noise,
    gen_rank_r_basis,
    gen_spike_vector,
    lambda_star_default,
)
from .support import AlphaGrid, SupportSelection, alpha_grid, find_alpha, select_support

__version__ = "0.1.0"

__all__ = [
    "AlphaGrid",
    "ConvergenceError",
    "CoverSet",
    "DebiasedEigenvalue",
    "EigenPair",
    "ExperimentConfig",
    "GroundTruth",
    "InputError",
    "MetricReport",
    "NoiseSpec",
    "NumericalError",
    "PackingInfeasibleError",
    "QuantizationError",
    "RefinedEstimate",
    "RefinedRankOne",
    "RefinedRankR",
    "RowProfile",
    "SignalSpec",
    "Spectrum",
    "SpectralEigenvectors",
    "SummaryRow",
    "SupportSelection",
    "SupportSelectionError",
    "TrialRecord",
    "alpha_grid",
    "assemble_observation",
    "bootstrap_ci",
    "coherence",
    "conjugate",
    "d_2inf_signed",
    "d_inf",
    "debias_lambda",
    "eigenvalue_ladder",
    "emit_csv",
    "enumerate_cover_T",
    "estimate_sigma2",
    "find_alpha",
    "frob_subspace_dist",
    "gen_noise",
    "gen_rank_r_basis",
    "gen_spike_vector",
    "greedy_packing",
    "haar_basis",
    "haar_orthogonal",
    "lambda_from_support",
    "lambda_star_default",
    "metric_report",
    "parse_csv",
    "quantize_profile",
    "refine_rank1",
    "refine_rank1_conjugated",
    "refine_rank_r",
    "run_rank1",
    "run_rankr",
    "sample_profile",
    "select_support",
    "sign_conjugate",
    "spot_check",
    "summarize",
    "top_eigenpairs",
    "trial_seed",
    "verify_cover",
    "write_csv",
]
