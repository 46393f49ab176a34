"""Command-line front end: run a configured solve or benchmark worker counts.

Exit codes: 0 converged, 2 invalid parameters or configuration, 3 iteration
limit reached, 4 numerical failure, 5 traces differ across worker counts.
"""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .methods import (
    ASYMPTOTIC,
    QUASI,
    ParameterError,
    ParamsA,
    ParamsB,
    ParamsMann,
    StopRule,
    solve,
)
from .parallel import WorkerPool, workers_from_env
from .problems import (
    AffineInteriorProblem,
    Section5Problem,
    build_affine_interior,
    build_section5,
)
from .resolvent import ResolventConfig
from .schedules import parse_schedule
from .trace import Trace, write_csv

log = logging.getLogger("parhybrid")

EXIT_CONVERGED = 0
EXIT_INVALID = 2
EXIT_MAX_ITER = 3
EXIT_NUMERICAL = 4
EXIT_NONDETERMINISTIC = 5

METHODS = ("A", "B", "A-quasi", "B-quasi", "mann")


class ConfigError(ValueError):
    pass


class DeterminismError(RuntimeError):
    pass


@dataclass
class RunConfig:
    problem: dict
    method: str
    schedules: dict
    bounds: dict = field(default_factory=dict)
    omega: Optional[float] = None
    x0: Optional[list] = None
    tol: float = 1e-7
    max_iter: int = 1000
    workers: int = 1
    seed: int = 0
    resolvent: dict = field(default_factory=dict)
    projection: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)
    n_check: int = 1000

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        for key in ("problem", "method", "schedules"):
            if key not in data:
                raise ConfigError(f"missing configuration key {key!r}")
        cfg = cls(**data)
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from None
        return cls.from_mapping(data)

    def check(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if "id" not in self.problem:
            raise ConfigError("problem.id is required")
        sched = self.schedules
        needed = {"lambda"}
        if self.method in ("A", "A-quasi", "mann"):
            needed.add("alpha")
        if self.method in ("B", "B-quasi"):
            needed.add("weights")
        if self.method != "mann":
            needed.add("r")
        missing = needed - set(sched)
        if missing:
            raise ConfigError(f"method {self.method} needs schedules {sorted(missing)}")
        if self.method in ("A", "B"):
            if self.omega is None:
                raise ConfigError(f"method {self.method} (asymptotic variant) needs omega")
            if "k" not in sched:
                raise ConfigError(f"method {self.method} (asymptotic variant) needs schedule 'k'")
        self.tol = float(self.tol)
        self.max_iter = int(self.max_iter)
        self.workers = int(self.workers)


# Building problems and parameters


def build_problem(cfg: RunConfig):
    spec = dict(cfg.problem)
    pid = spec.pop("id")
    k_seq = None
    if "k" in cfg.schedules:
        k_seq = parse_schedule(cfg.schedules["k"])
    if pid in ("section5", "section5_random"):
        eval_cost = float(spec.pop("eval_cost", 0.0))
        cost_mode = spec.pop("cost_mode", "sleep")
        M, N, K = (int(spec.pop(key, 10)) for key in ("M", "N", "K"))
        if pid == "section5_random":
            s5 = Section5Problem.random(np.random.default_rng(cfg.seed), M, N, K)
        elif any(key in spec for key in ("t", "s", "xi", "eta")):
            base = Section5Problem.default(M, N, K)
            s5 = Section5Problem(
                M, N, K,
                tuple(spec.pop("t", base.t)),
                tuple(spec.pop("s", base.s)),
                tuple(spec.pop("xi", base.xi)),
                tuple(spec.pop("eta", base.eta)),
            )
        else:
            s5 = Section5Problem.default(M, N, K)
        if spec:
            raise ConfigError(f"unknown problem parameters {sorted(spec)}")
        return build_section5(s5, k_sequence=k_seq, eval_cost=eval_cost, cost_mode=cost_mode)
    if pid == "affine_interior":
        try:
            ai = AffineInteriorProblem(**spec)
        except TypeError as exc:
            raise ConfigError(f"bad affine_interior parameters: {exc}") from None
        return build_affine_interior(ai)
    raise ConfigError(f"unknown problem id {pid!r} (expected section5, section5_random, affine_interior)")


def _weights_schedule(value, N: int):
    if isinstance(value, dict):
        if set(value) != {"alpha0"}:
            raise ConfigError("weights mapping accepts only 'alpha0'")
        a0 = parse_schedule(value["alpha0"])

        def row(n):
            w0 = a0(n)
            return np.concatenate([[w0], np.full(N, (1.0 - w0) / N)])

        return row
    if isinstance(value, (list, tuple)):
        w = np.asarray([float(v) for v in value])
        return lambda n: w
    raise ConfigError("weights must be a list or a mapping with 'alpha0'")


def _sample(fn, n_check):
    return [fn(n) for n in range(n_check)]


def build_params(cfg: RunConfig, problem):
    sched = cfg.schedules
    bounds = dict(cfg.bounds)
    n = cfg.n_check
    lam = parse_schedule(sched["lambda"])
    lam_vals = _sample(lam, n)
    a = float(bounds.pop("a", min(lam_vals)))
    b = float(bounds.pop("b", max(lam_vals)))
    if cfg.method == "mann":
        alpha = parse_schedule(sched["alpha"])
        vanishes = bool(bounds.pop("alpha_vanishes", True))
        _no_leftovers(bounds)
        return ParamsMann(lam, alpha, a=a, b=b, alpha_vanishes=vanishes)

    r = parse_schedule(sched["r"])
    d = float(bounds.pop("d", min(_sample(r, n))))
    variant = ASYMPTOTIC if cfg.method in ("A", "B") else QUASI
    res = dict(cfg.resolvent)
    rcfg = ResolventConfig(
        inner_step=res.pop("inner_step", None),
        inner_tol=float(res.pop("inner_tol", 1e-10)),
        inner_max=int(res.pop("inner_max", 100_000)),
        use_closed_form=bool(res.pop("closed_form", True)),
    )
    if res:
        raise ConfigError(f"unknown resolvent settings {sorted(res)}")
    proj = dict(cfg.projection)
    common = dict(
        omega=None if cfg.omega is None else float(cfg.omega),
        variant=variant,
        resolvent=rcfg,
        proj_tol=float(proj.pop("tol", 1e-12)),
        proj_max_inner=int(proj.pop("max_inner", 10_000)),
        max_halfspaces=proj.pop("max_halfspaces", None),
    )
    if proj:
        raise ConfigError(f"unknown projection settings {sorted(proj)}")
    if cfg.method in ("A", "A-quasi"):
        alpha = parse_schedule(sched["alpha"])
        cap = float(bounds.pop("alpha_cap", max(_sample(alpha, n))))
        _no_leftovers(bounds)
        return ParamsA(lam, alpha, r, a=a, b=b, d=d, alpha_cap=cap, **common)
    weights = _weights_schedule(sched["weights"], len(problem.maps))
    if "weight_floor" in bounds:
        floor = float(bounds.pop("weight_floor"))
    else:
        rows = [np.asarray(weights(i)) for i in range(n)]
        floor = min(float(np.min(w[0] * w[1:])) if w.size > 1 else 1.0 for w in rows)
    _no_leftovers(bounds)
    return ParamsB(weights, lam, r, a=a, b=b, d=d, weight_floor=floor, **common)


def _no_leftovers(bounds: dict):
    if bounds:
        raise ConfigError(f"unknown or inapplicable bounds {sorted(bounds)}")


def default_x0(problem) -> np.ndarray:
    lo_hi = problem.C.bounds()
    if problem.name == "section5":
        return np.ones(1)
    if lo_hi is not None:
        return lo_hi[0].copy()
    return np.zeros(problem.dim)


# Commands


@dataclass
class RunResult:
    x: np.ndarray
    trace: Trace
    wall_time: float


def run_solver(cfg: RunConfig, workers: int, problem=None, params=None) -> RunResult:
    problem = build_problem(cfg) if problem is None else problem
    params = build_params(cfg, problem) if params is None else params
    x0 = default_x0(problem) if cfg.x0 is None else np.asarray(cfg.x0, dtype=np.float64)
    stop = StopRule(cfg.tol, cfg.max_iter)
    with WorkerPool(workers) as pool:
        t0 = time.perf_counter()
        x, trace = solve(problem, params, x0, stop, pool=pool, n_check=cfg.n_check)
        wall = time.perf_counter() - t0
    return RunResult(x, trace, wall)


@dataclass
class BenchRow:
    workers: int
    wall_time: float
    speedup: float


def bench(cfg: RunConfig, worker_list, repeats: int = 5) -> list[BenchRow]:
    """Median wall time per worker count and speedup over the first entry.

    Raises :class:`DeterminismError` when any run's trace differs from the
    first one in anything but timings.
    """
    problem = build_problem(cfg)
    params = build_params(cfg, problem)
    reference = None
    medians = []
    for w in worker_list:
        times = []
        for _ in range(repeats):
            res = run_solver(cfg, w, problem, params)
            fp = res.trace.fingerprint()
            if reference is None:
                reference = fp
            elif fp != reference:
                raise DeterminismError(f"trace with {w} workers differs from the reference run")
            times.append(res.wall_time)
        medians.append(statistics.median(times))
    base = medians[0]
    return [BenchRow(w, t, base / t) for w, t in zip(worker_list, medians)]


def format_bench(rows: list[BenchRow]) -> str:
    lines = [f"{'workers':>8} {'wall_time_s':>12} {'speedup':>8}"]
    for r in rows:
        lines.append(f"{r.workers:>8d} {r.wall_time:>12.4f} {r.speedup:>8.3f}")
    return "\n".join(lines)


def _parse_worker_list(text: str) -> list[int]:
    try:
        out = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad worker list {text!r}") from None
    if not out or min(out) < 1:
        raise ConfigError(f"bad worker list {text!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="parhybrid",
        description="Parallel hybrid projection solver for common solutions of variational "
        "inequalities, equilibrium problems and fixed-point problems.",
    )
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--workers", type=int, help="worker threads (overrides config and environment)")
    p.add_argument("--tol", type=float, help="stop when ||x_{n+1} - x_n|| <= tol")
    p.add_argument("--max-iter", type=int, help="iteration limit")
    p.add_argument("--trace", help="trace CSV path (default: output.trace or trace.csv)")
    p.add_argument("--bench", action="store_true", help="benchmark worker counts instead of a single run")
    p.add_argument("--bench-workers", help="comma-separated worker counts for --bench, e.g. 1,2,4")
    p.add_argument("--quiet", action="store_true", help="suppress the summary")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_CONVERGED
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    out = sys.stdout

    try:
        cfg = RunConfig.load(args.config)
        if args.tol is not None:
            cfg.tol = args.tol
        if args.max_iter is not None:
            cfg.max_iter = args.max_iter
        workers = workers_from_env(cfg.workers)
        if args.workers is not None:
            workers = args.workers
        if workers < 1:
            raise ConfigError("workers must be >= 1")

        if args.bench:
            wl = cfg.bench.get("workers", [1, 2])
            if args.bench_workers:
                wl = _parse_worker_list(args.bench_workers)
            rows = bench(cfg, [int(w) for w in wl], int(cfg.bench.get("repeats", 5)))
            if not args.quiet:
                print(format_bench(rows), file=out)
            bench_path = cfg.output.get("bench")
            if bench_path:
                with open(bench_path, "w") as fh:
                    fh.write("workers,wall_time_s,speedup\n")
                    for r in rows:
                        fh.write(f"{r.workers},{r.wall_time!r},{r.speedup!r}\n")
            return EXIT_CONVERGED

        res = run_solver(cfg, workers)
    except (ConfigError, ParameterError, ValueError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DeterminismError as exc:
        print(f"determinism violation: {exc}", file=sys.stderr)
        return EXIT_NONDETERMINISTIC
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    trace_path = args.trace or cfg.output.get("trace", "trace.csv")
    write_csv(res.trace, trace_path)
    if not args.quiet:
        last = res.trace.last_row
        print(
            f"status={res.trace.status} method={res.trace.method} iterations={res.trace.iterations} "
            f"final_residual={last.step_residual:.3e} x_norm={last.x_norm:.3e} "
            f"wall_time={res.wall_time:.3f}s trace={trace_path}",
            file=out,
        )
    return EXIT_CONVERGED if res.trace.converged else EXIT_MAX_ITER


if __name__ == "__main__":
    sys.exit(main())
