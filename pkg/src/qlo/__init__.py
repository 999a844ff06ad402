"""Exact and certified tools for anti-concentration of Rademacher quadratic polynomials."""
from qlo.charfn import (
    C_IMPL,
    Partition,
    char_magnitude,
    char_magnitude_mc,
    decoupling_check,
    esseen_bound,
)
from qlo.closure import coefficient_set_closure
from qlo.phase import det_polynomial, expected_abs_det, phase_det, success_probability
from qlo.poly import (
    EnumerationCapError,
    PointMass,
    QuadraticPoly,
    evaluate,
    exact_distribution,
    max_point_probability,
    monte_carlo_distribution,
    small_ball_probability,
)
from qlo.ramsey import (
    Graph,
    coefficient_poly,
    count_full_rank_submatrices,
    count_induced_copies,
    count_strong_tuples,
    edge_statistic_distribution,
    homogeneity,
    is_c_ramsey,
    rank_after_edits,
    sample_coupling,
)
from qlo.robust import (
    best_minor,
    check_eps_independence,
    check_non_degenerate,
    verify_dependence_witness,
)
from qlo.symlowrank import (
    HypothesisFailure,
    PipelineTrace,
    symmetric_close,
    symmetric_low_rank_approx,
    verify_trace,
)

__version__ = "0.1.0"
