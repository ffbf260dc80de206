"""Primal-dual gradient solvers for finite-sum composite convex optimization.

Deterministic and randomized-incremental variants with exact step-size
policies, theoretical bound curves, a worst-case lower-bound laboratory,
and reductions for non-strongly-convex, nonsmooth, and unconstrained
problems.
"""

from ._accel import NUMBA_ENABLED
from .model import (
    ALL_SPACE,
    EUCLIDEAN,
    ZERO_H,
    CompositeTerm,
    DualBlockState,
    FeasibleSet,
    NoClosedFormProxError,
    ObjectiveUnavailableError,
    ProblemInstance,
    QuadKernelData,
    TridiagKernelData,
    dual_ascent_step,
    objective_value,
    primal_prox_distance,
    primal_prox_map,
    quad_problem_from_stack,
)
from .pdg import PdgState, pd_gap_certificate, pdg_step, run_nesterov_ag, run_pdg
from .rpdg import (
    EnsembleStats,
    RpdgState,
    Sampler,
    run_rpdg,
    run_rpdg_ensemble,
    rpdg_step,
    sample_index,
)
from .schedules import (
    BoundParams,
    Schedule,
    iteration_bound,
    pdg_nsc_params,
    pdg_nsc_schedule,
    pdg_sc_params,
    rpdg_nonuniform_params,
    rpdg_uniform_params,
    theoretical_upper_curve,
    validate_pdg_conditions,
    validate_rpdg_conditions,
)
from .trace import Trace, TraceFormatError, read_trace, write_trace
from .worstcase import (
    WorstCaseSpec,
    analytic_solution,
    build_worstcase,
    lower_bound_curve,
    min_dimension,
    run_bound_sandwich,
)
from .wrappers import (
    PerturbationSpec,
    SmoothingSpec,
    perturb_solve,
    smooth_component_value_grad,
    smooth_solve,
    unconstrained_solve,
)

__version__ = "0.1.0"
