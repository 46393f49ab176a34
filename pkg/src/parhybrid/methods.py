"""Parallel hybrid projection drivers.

Each iteration fans out over the operators, the fixed-point mappings and the
equilibrium bifunctions, keeps the candidate farthest from the current
iterate in each phase, and (for the hybrid drivers) cuts the feasible set by
half-spaces before projecting the starting point onto it.

Drivers:

* ``step_a``: farthest-candidate selection in all three phases, two cuts per
  iteration.
* ``step_b``: a single convex combination in the fixed-point phase, one cut
  per iteration.
* ``step_mann``: no equilibrium phase and no cuts; the next iterate is the
  projection of the selected fixed-point candidate onto ``C``.

The ``asymptotic`` variants use ``S^n`` and a slack ``eps_n`` derived from the
asymptotic constants ``k_n``; the ``quasi`` variants use ``S`` itself and
``eps_n = 0``.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import NonFiniteError, Problem, Vector, as_vector, norm
from .geometry import (
    DEFAULT_MAX_INNER,
    DEFAULT_TOL,
    NestedSet,
    phi_comparison_to_halfspace,
    project_nested_warm,
)
from .parallel import WorkerPool, argmax_distance, par_map
from .resolvent import ResolventConfig, resolve
from .trace import CONVERGED, MAX_ITER, STOPPED, Trace, TraceRow

logger = logging.getLogger(__name__)

ASYMPTOTIC = "asymptotic"
QUASI = "quasi"

# 1/c, the 2-uniform convexity constant, is 1 in a Hilbert space.
CONVEXITY_C = 1.0

Schedule = Callable[[int], float]


def constant(value: float) -> Schedule:
    value = float(value)

    def sched(n: int) -> float:
        return value

    sched.__name__ = f"constant({value!r})"
    return sched


def _as_schedule(s) -> Callable:
    if callable(s):
        return s
    if isinstance(s, (list, tuple, np.ndarray)):
        row = np.asarray(s, dtype=np.float64)
        return lambda n: row
    return constant(s)


class ParameterError(ValueError):
    """Control parameters violate the admissibility conditions."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CapacityError(ArithmeticError):
    """The configured cap on stored half-spaces was reached."""


@dataclass(frozen=True)
class ParamsA:
    """Control sequences for the farthest-candidate hybrid driver.

    Requires ``lambda_n in [a, b]`` with ``b < alpha c^2 / 2``,
    ``0 <= alpha_n <= alpha_cap < 1`` and ``r_n >= d``. The asymptotic
    variant needs ``omega``, a bound on the norm of the solution set.
    """

    lambda_schedule: Schedule
    alpha_schedule: Schedule
    r_schedule: Schedule
    a: float
    b: float
    d: float
    alpha_cap: float
    omega: Optional[float] = None
    variant: str = QUASI
    resolvent: ResolventConfig = ResolventConfig()
    proj_tol: float = DEFAULT_TOL
    proj_max_inner: int = DEFAULT_MAX_INNER
    proj_method: str = "auto"
    proj_warm_start: bool = True
    max_halfspaces: Optional[int] = None

    def __post_init__(self):
        for name in ("lambda_schedule", "alpha_schedule", "r_schedule"):
            object.__setattr__(self, name, _as_schedule(getattr(self, name)))


@dataclass(frozen=True)
class ParamsB:
    """Control sequences for the convex-combination hybrid driver.

    ``weight_schedule(n)`` returns ``(w_0, ..., w_N)`` summing to 1;
    ``weight_floor`` is a declared lower bound on ``w_0 * w_j``.
    """

    weight_schedule: Callable[[int], Sequence[float]]
    lambda_schedule: Schedule
    r_schedule: Schedule
    a: float
    b: float
    d: float
    weight_floor: float
    omega: Optional[float] = None
    variant: str = QUASI
    resolvent: ResolventConfig = ResolventConfig()
    proj_tol: float = DEFAULT_TOL
    proj_max_inner: int = DEFAULT_MAX_INNER
    proj_method: str = "auto"
    proj_warm_start: bool = True
    max_halfspaces: Optional[int] = None

    def __post_init__(self):
        for name in ("weight_schedule", "lambda_schedule", "r_schedule"):
            object.__setattr__(self, name, _as_schedule(getattr(self, name)))


@dataclass(frozen=True)
class ParamsMann:
    """Control sequences for the Mann-type driver.

    ``alpha_vanishes`` declares that ``alpha_n -> 0``; it cannot be checked
    from finitely many samples.
    """

    lambda_schedule: Schedule
    alpha_schedule: Schedule
    a: float
    b: float
    alpha_vanishes: bool = True

    def __post_init__(self):
        for name in ("lambda_schedule", "alpha_schedule"):
            object.__setattr__(self, name, _as_schedule(getattr(self, name)))


Params = Union[ParamsA, ParamsB, ParamsMann]


@dataclass(frozen=True)
class SolverState:
    n: int
    x: Vector
    x0: Vector
    nested: Optional[NestedSet] = None
    y_bar: Optional[Vector] = None
    z_bar: Optional[Vector] = None
    u_bar: Optional[Vector] = None
    argmax_i: int = -1
    argmax_j: int = -1
    argmax_k: int = -1
    eps_n: float = 0.0
    timings: tuple = (0.0, 0.0, 0.0, 0.0)
    converged: bool = False

    @property
    def phase_gap(self) -> float:
        """Largest distance from the previous iterate to a selected intermediate."""
        prev = self.x_prev if self.x_prev is not None else self.x
        gaps = [norm(v - prev) for v in (self.y_bar, self.z_bar, self.u_bar) if v is not None]
        return max(gaps, default=0.0)

    x_prev: Optional[Vector] = None
    proj_corrections: Optional[np.ndarray] = None


def initial_state(problem: Problem, x0, hybrid: bool = True) -> SolverState:
    x0 = as_vector(x0, problem.dim)
    nested = NestedSet(problem.C) if hybrid else None
    return SolverState(n=0, x=x0, x0=x0, nested=nested)


# Validation


def _check_step_bounds(problem: Problem, params, n_check: int, out: list):
    bound = problem.ism_modulus * CONVEXITY_C**2 / 2.0
    if not params.a > 0:
        out.append(f"step-size lower bound a must be positive (a = {params.a})")
    if params.a > params.b:
        out.append(f"step-size bounds inverted: a = {params.a} > b = {params.b}")
    if not params.b < bound:
        out.append(
            f"lambda_n >= alpha c^2/2: upper step bound b = {params.b} must be below "
            f"alpha c^2 / 2 = {bound:g} (alpha = {problem.ism_modulus:g}, c = {CONVEXITY_C:g})"
        )
    for n in range(n_check):
        lam = float(params.lambda_schedule(n))
        if not (params.a <= lam <= params.b):
            out.append(f"lambda_{n} = {lam:g} outside [a, b] = [{params.a:g}, {params.b:g}]")
            break
        if not lam < bound:
            out.append(f"lambda_n >= alpha c^2/2: lambda_{n} = {lam:g} >= {bound:g}")
            break


def _check_r(params, n_check: int, out: list):
    if not params.d > 0:
        out.append(f"resolvent lower bound d must be positive (d = {params.d})")
    for n in range(n_check):
        r = float(params.r_schedule(n))
        if not r >= params.d:
            out.append(f"r_{n} = {r:g} below the lower bound d = {params.d:g}")
            break


def _check_variant(problem: Problem, params, n_check: int, out: list):
    if params.variant not in (ASYMPTOTIC, QUASI):
        out.append(f"unknown method variant {params.variant!r}")
        return
    if params.variant == ASYMPTOTIC:
        if params.omega is None or not params.omega > 0:
            out.append("the asymptotic variant needs a positive bound omega on the solution set")
        elif problem.solution is not None and norm(problem.solution) > params.omega:
            out.append(
                f"reference solution has norm {norm(problem.solution):g} > omega = {params.omega:g}"
            )
    for m in problem.maps:
        for n in range(1, n_check + 1):
            k = float(m.k_sequence(n))
            if not k >= 1.0:
                out.append(f"map {m.name or '?'}: k_{n} = {k:g} < 1")
                break


def validate_params(problem: Problem, params: Params, n_check: int = 1000) -> list[str]:
    """List every violated admissibility condition; empty when admissible.

    Declared caps and floors are checked, and so are the first ``n_check``
    values of every schedule (raise ``n_check`` to ``10**6`` for a deeper
    sweep). A schedule that cannot be evaluated is itself a violation.
    """
    out: list[str] = []
    if not isinstance(params, (ParamsA, ParamsB, ParamsMann)):
        return [f"unsupported parameter object {type(params).__name__}"]
    try:
        _validate(problem, params, n_check, out)
    except (ValueError, ArithmeticError, TypeError) as exc:
        out.append(f"schedule evaluation failed: {exc}")
    return out


def _validate(problem: Problem, params: Params, n_check: int, out: list) -> None:
    _check_step_bounds(problem, params, n_check, out)
    if isinstance(params, ParamsA):
        _check_r(params, n_check, out)
        _check_variant(problem, params, n_check, out)
        if not (0.0 <= params.alpha_cap < 1.0):
            out.append(f"declared cap on alpha_n must lie in [0, 1) (got {params.alpha_cap})")
        for n in range(n_check):
            a = float(params.alpha_schedule(n))
            if not (0.0 <= a <= 1.0):
                out.append(f"alpha_{n} = {a:g} outside [0, 1]")
                break
            if a > params.alpha_cap:
                out.append(f"alpha_{n} = {a:g} exceeds the declared cap {params.alpha_cap:g}")
                break
    elif isinstance(params, ParamsB):
        _check_r(params, n_check, out)
        _check_variant(problem, params, n_check, out)
        if not params.weight_floor > 0:
            out.append("declared floor on w_0 * w_j must be positive")
        N = len(problem.maps)
        for n in range(n_check):
            w = np.asarray(params.weight_schedule(n), dtype=np.float64)
            if w.shape != (N + 1,):
                out.append(f"weight row {n} has {w.size} entries, expected N + 1 = {N + 1}")
                break
            if np.any(w < 0) or np.any(w > 1):
                out.append(f"weight row {n} has entries outside [0, 1]: {w.tolist()}")
                break
            if abs(float(np.sum(w)) - 1.0) > 1e-12:
                out.append(f"weights must sum to 1 (row {n} sums to {float(np.sum(w)):.15g})")
                break
            if N and float(np.min(w[0] * w[1:])) < params.weight_floor:
                out.append(
                    f"w_0 * w_j = {float(np.min(w[0] * w[1:])):g} in row {n} is below the "
                    f"declared floor {params.weight_floor:g}"
                )
                break
    elif isinstance(params, ParamsMann):
        if not params.alpha_vanishes:
            out.append("the Mann-type driver requires alpha_n -> 0")
        for n in range(n_check):
            a = float(params.alpha_schedule(n))
            if not (0.0 <= a <= 1.0):
                out.append(f"alpha_{n} = {a:g} outside [0, 1]")
                break
    else:
        out.append(f"unsupported parameter object {type(params).__name__}")


# Phases


def _vi_phase(problem: Problem, x: Vector, lam: float, pool) -> tuple[int, Vector]:
    C = problem.C
    if not problem.operators:
        return -1, x
    tasks = [
        (lambda A=A: C.project(x - lam * np.asarray(A(x), dtype=np.float64)))
        for A in problem.operators
    ]
    return argmax_distance(par_map(tasks, pool), x)


def _fp_candidates(problem: Problem, x, y_bar, alpha, power, pool) -> list:
    if power == 1:
        tasks = [(lambda S=S: alpha * x + (1.0 - alpha) * np.asarray(S(y_bar))) for S in problem.maps]
    else:
        tasks = [
            (lambda S=S: alpha * x + (1.0 - alpha) * np.asarray(S.power(y_bar, power)))
            for S in problem.maps
        ]
    return par_map(tasks, pool)


def _ep_phase(problem: Problem, x, z_bar, cfg: ResolventConfig, pool) -> tuple[int, Vector]:
    if not problem.bifunctions:
        return -1, z_bar
    C = problem.C
    tasks = [(lambda f=f: resolve(f, C, z_bar, cfg)) for f in problem.bifunctions]
    return argmax_distance(par_map(tasks, pool), x)


def _power_and_eps(problem: Problem, params, state: SolverState) -> tuple[int, float]:
    if params.variant == QUASI:
        return 1, 0.0
    p = state.n + 1
    k = problem.asymptotic_k(p)
    return p, (k - 1.0) * (params.omega + norm(state.x)) ** 2


def _check_finite(*vs):
    for v in vs:
        if v is not None and not np.isfinite(v).all():
            raise NonFiniteError("iteration produced non-finite values")


def _project_cut(params, state: SolverState, nested: NestedSet):
    if params.max_halfspaces is not None and len(nested) > params.max_halfspaces:
        raise CapacityError(
            f"{len(nested)} stored half-spaces exceed the configured cap {params.max_halfspaces}"
        )
    warm = state.proj_corrections if params.proj_warm_start else None
    x_next, corr = project_nested_warm(
        state.x0, nested, warm, params.proj_tol, params.proj_max_inner, params.proj_method
    )
    return x_next, (corr if params.proj_warm_start else None)


def step_a(problem: Problem, params: ParamsA, state: SolverState, pool=None) -> SolverState:
    n, x = state.n, state.x
    lam = float(params.lambda_schedule(n))
    alpha = float(params.alpha_schedule(n))
    cfg = dataclasses.replace(params.resolvent, r=float(params.r_schedule(n)), lower_bound=params.d)
    power, eps = _power_and_eps(problem, params, state)

    t0 = time.perf_counter()
    i_n, y_bar = _vi_phase(problem, x, lam, pool)
    t1 = time.perf_counter()
    if problem.maps:
        j_n, z_bar = argmax_distance(_fp_candidates(problem, x, y_bar, alpha, power, pool), x)
    else:
        j_n, z_bar = -1, alpha * x + (1.0 - alpha) * y_bar
    t2 = time.perf_counter()
    k_n, u_bar = _ep_phase(problem, x, z_bar, cfg, pool)
    t3 = time.perf_counter()
    _check_finite(y_bar, z_bar, u_bar)
    nested = state.nested.extend(
        phi_comparison_to_halfspace(u_bar, z_bar, 0.0),
        phi_comparison_to_halfspace(z_bar, x, eps),
    )
    x_next, corr = _project_cut(params, state, nested)
    t4 = time.perf_counter()
    _check_finite(x_next)
    return SolverState(
        n=n + 1, x=x_next, x0=state.x0, nested=nested,
        y_bar=y_bar, z_bar=z_bar, u_bar=u_bar,
        argmax_i=i_n, argmax_j=j_n, argmax_k=k_n, eps_n=eps, x_prev=x,
        timings=(t1 - t0, t2 - t1, t3 - t2, t4 - t3), proj_corrections=corr,
    )


def step_b(problem: Problem, params: ParamsB, state: SolverState, pool=None) -> SolverState:
    n, x = state.n, state.x
    lam = float(params.lambda_schedule(n))
    w = np.asarray(params.weight_schedule(n), dtype=np.float64)
    cfg = dataclasses.replace(params.resolvent, r=float(params.r_schedule(n)), lower_bound=params.d)
    power, eps = _power_and_eps(problem, params, state)

    t0 = time.perf_counter()
    i_n, y_bar = _vi_phase(problem, x, lam, pool)
    t1 = time.perf_counter()
    if power == 1:
        tasks = [(lambda S=S: np.asarray(S(y_bar), dtype=np.float64)) for S in problem.maps]
    else:
        tasks = [(lambda S=S: np.asarray(S.power(y_bar, power), dtype=np.float64)) for S in problem.maps]
    images = par_map(tasks, pool)
    # Sequential sum in index order keeps the result independent of scheduling.
    z = w[0] * x
    for wj, sy in zip(w[1:], images):
        z = z + wj * sy
    t2 = time.perf_counter()
    k_n, u_bar = _ep_phase(problem, x, z, cfg, pool)
    t3 = time.perf_counter()
    _check_finite(y_bar, z, u_bar)
    nested = state.nested.extend(phi_comparison_to_halfspace(u_bar, x, eps))
    x_next, corr = _project_cut(params, state, nested)
    t4 = time.perf_counter()
    _check_finite(x_next)
    return SolverState(
        n=n + 1, x=x_next, x0=state.x0, nested=nested,
        y_bar=y_bar, z_bar=z, u_bar=u_bar,
        argmax_i=i_n, argmax_k=k_n, eps_n=eps, x_prev=x,
        timings=(t1 - t0, t2 - t1, t3 - t2, t4 - t3), proj_corrections=corr,
    )


def step_mann(problem: Problem, params: ParamsMann, state: SolverState, pool=None) -> SolverState:
    n, x = state.n, state.x
    lam = float(params.lambda_schedule(n))
    alpha = float(params.alpha_schedule(n))

    t0 = time.perf_counter()
    i_n, y_bar = _vi_phase(problem, x, lam, pool)
    t1 = time.perf_counter()
    if problem.maps:
        j_n, z_bar = argmax_distance(_fp_candidates(problem, x, y_bar, alpha, 1, pool), x)
    else:
        j_n, z_bar = -1, alpha * x + (1.0 - alpha) * y_bar
    t2 = time.perf_counter()
    x_next = problem.C.project(z_bar)
    t3 = time.perf_counter()
    _check_finite(y_bar, z_bar, x_next)
    return SolverState(
        n=n + 1, x=x_next, x0=state.x0,
        y_bar=y_bar, z_bar=z_bar,
        argmax_i=i_n, argmax_j=j_n, x_prev=x,
        timings=(t1 - t0, t2 - t1, 0.0, t3 - t2),
    )


# Driver


@dataclass(frozen=True)
class StopRule:
    tol: float = 1e-7
    max_iter: int = 1000

    def __post_init__(self):
        if self.tol < 0 or self.max_iter < 0:
            raise ValueError("tol and max_iter must be nonnegative")


def driver_for(params: Params):
    if isinstance(params, ParamsA):
        return step_a, "A" if params.variant == ASYMPTOTIC else "A-quasi"
    if isinstance(params, ParamsB):
        return step_b, "B" if params.variant == ASYMPTOTIC else "B-quasi"
    if isinstance(params, ParamsMann):
        return step_mann, "mann"
    raise TypeError(f"unsupported parameter object {type(params).__name__}")


def _row(state: SolverState, residual: float) -> TraceRow:
    nh = len(state.nested) if state.nested is not None else 0
    return TraceRow(state.n, norm(state.x), residual, state.eps_n, *state.timings, nh)


def solve(
    problem: Problem,
    params: Params,
    x0,
    stop: StopRule = StopRule(),
    pool: Optional[WorkerPool] = None,
    callback: Optional[Callable[[SolverState], Optional[bool]]] = None,
    n_check: int = 1000,
    keep_iterates: bool = True,
) -> tuple[Vector, Trace]:
    """Iterate a driver until ``||x_{n+1} - x_n|| <= tol`` or ``max_iter`` steps.

    The step test alone can fire while a slack ``eps_n`` still keeps every
    cut inactive (the iterate then stalls without being a solution), so
    convergence also requires ``state.phase_gap <= tol``.

    Parameters are validated first (:class:`ParameterError` lists every
    violation). Numerical failures propagate as ``ArithmeticError``
    subclasses; running out of iterations is reported through
    ``trace.status == "max_iter"``. ``callback`` sees every state, including
    the initial one; a truthy return value ends the run with status
    ``"stopped"`` (unless that same state converged). ``keep_iterates=False``
    records only the trace rows.
    """
    step, method = driver_for(params)
    violations = validate_params(problem, params, n_check=n_check)
    x0 = as_vector(x0, problem.dim)
    if not problem.C.contains(x0, 1e-12):
        violations.append("starting point must lie in C")
    if violations:
        raise ParameterError(violations)
    if isinstance(params, ParamsMann):
        logger.warning(
            "Mann-type driver: convergence is only guaranteed when the common solution set "
            "has nonempty interior"
        )

    state = initial_state(problem, x0, hybrid=not isinstance(params, ParamsMann))
    trace = Trace(method=method, keep_iterates=keep_iterates)
    trace.append(_row(state, float("nan")), state.x)
    if callback is not None and callback(state):
        trace.status = STOPPED
        return state.x, trace
    trace.status = MAX_ITER
    for _ in range(stop.max_iter):
        new = step(problem, params, state, pool)
        residual = norm(new.x - state.x)
        state = new
        trace.append(_row(state, residual), state.x)
        if residual <= stop.tol and state.phase_gap <= stop.tol:
            state = dataclasses.replace(state, converged=True)
            trace.status = CONVERGED
        if callback is not None and callback(state) and not state.converged:
            trace.status = STOPPED
            break
        if state.converged:
            break
    return state.x, trace


def _typed_solver(kind, name):
    def run(problem: Problem, params, x0, stop: StopRule = StopRule(), **kwargs):
        if not isinstance(params, kind):
            raise TypeError(f"{name} expects {kind.__name__}, got {type(params).__name__}")
        return solve(problem, params, x0, stop, **kwargs)

    run.__name__ = name
    run.__doc__ = f"``solve`` restricted to :class:`{kind.__name__}` parameters."
    return run


method_a = _typed_solver(ParamsA, "method_a")
method_b = _typed_solver(ParamsB, "method_b")
method_mann = _typed_solver(ParamsMann, "method_mann")
