"""Parallel hybrid projection methods for common solutions of variational
inequalities, equilibrium problems and fixed-point problems in R^d."""

from .core import (
    Bifunction,
    ConvexSet,
    DimensionError,
    FixedPointMap,
    MonotoneOperator,
    NonFiniteError,
    Problem,
    as_vector,
    inner,
    norm,
    phi,
)
from .geometry import (
    Ball,
    Box,
    CustomSet,
    EmptySetError,
    HalfSpace,
    Interval,
    NestedSet,
    ProjectionError,
    phi_comparison_to_halfspace,
    project_ball,
    project_box,
    project_halfspace,
    project_interval,
    project_nested,
    project_nested_warm,
)
from .methods import (
    ParameterError,
    ParamsA,
    ParamsB,
    ParamsMann,
    SolverState,
    StopRule,
    initial_state,
    method_a,
    method_b,
    method_mann,
    solve,
    step_a,
    step_b,
    step_mann,
    validate_params,
)
from .parallel import WorkerPool, WorkerPoolConfig, argmax_distance, par_map
from .resolvent import ResolventConfig, ResolventError, check_firm_nonexpansive, resolve
from .trace import Trace, TraceRow

__version__ = "0.1.0"
