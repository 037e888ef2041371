"""lowform: detect and exploit few-linear-forms structure in polynomials."""

from .approx import (
    CubatureRule,
    L2Estimate,
    LiftedPolynomial,
    SpectrumSplit,
    SurrogateMinimum,
    build_cubature,
    choose_m,
    conditional_expectation_cubature,
    conditional_expectation_exact,
    hhat_eval,
    l2_error,
    solve_Q,
    split_spectrum,
)
from .detection import (
    DetectionReport,
    SparseForm,
    detect_exact,
    detect_randomized,
    extract_sparse_form,
    moment_matrix,
    verify_sparse_form,
)
from .generate import Instance, generate_instance
from .linalg import (
    LpProblem,
    LpResult,
    SymEig,
    lp_solve,
    numeric_rank,
    orthonormalize,
    psd_sqrt,
    sym_eig,
)
from .poly import (
    Polynomial,
    ball_monomial_moment,
    expectation_uniform_ball,
    substitute_linear,
)
from .polytope import (
    Cut,
    CutSet,
    Polytope,
    PolytopeReduceResult,
    box_cut_loop,
    box_support,
    cut_loop,
    separation_lp,
    simplex_projection,
    simplex_reduce,
)
from .solvers import (
    Hrep,
    SolveOptions,
    SolveResult,
    brute_force_min,
    minimize_ball,
    minimize_polytope,
    minimize_sphere,
)
from .sphere import ReducedBallProblem, lift_minimizer, reduce_sphere

__version__ = "0.1.0"
