"""Built-in problem families with known solutions, plus brute-force oracles.

``section5`` is a one-dimensional family on ``C = [0, 1]`` whose common
solution set is ``{0}``:

* ``A_i(x) = x - x^(i+1) / (i+1)``, each 1/2-inverse strongly monotone;
* ``S_i(x) = 0`` on ``[0, t_i]`` and ``s_i (x - t_i)`` on ``[t_i, 1]``,
  quasi-phi-nonexpansive but not nonexpansive;
* ``f_k(x, y) = B_k(x) (y - x)`` with ``B_k(x) = (eta_k / xi_k) x`` up to
  ``xi_k`` and ``eta_k`` beyond, with an explicit resolvent.

``affine_interior`` has a common solution set with nonempty interior, which
the Mann-type driver needs.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    Bifunction,
    ConvexSet,
    FixedPointMap,
    MonotoneOperator,
    Problem,
    as_vector,
)
from .geometry import Ball, Box, HalfSpace, Interval, NestedSet, project_ball

# ---------------------------------------------------------------------------
# Artificial evaluation cost


def _cost_fn(seconds: float, mode: str = "sleep") -> Optional[Callable[[], None]]:
    if seconds <= 0:
        return None
    if mode == "sleep":
        return lambda: time.sleep(seconds)
    if mode == "spin":
        def spin():
            end = time.perf_counter() + seconds
            while time.perf_counter() < end:
                pass

        return spin
    raise ValueError(f"unknown cost mode {mode!r} (expected 'sleep' or 'spin')")


def _with_cost(fn, burn):
    if burn is None:
        return fn

    def wrapped(*args):
        burn()
        return fn(*args)

    return wrapped


# ---------------------------------------------------------------------------
# The one-dimensional example


@dataclass(frozen=True)
class Section5Problem:
    M: int
    N: int
    K: int
    t: tuple
    s: tuple
    xi: tuple
    eta: tuple

    def __post_init__(self):
        errors = section5_violations(self)
        if errors:
            raise ValueError("; ".join(errors))

    @classmethod
    def default(cls, M: int = 10, N: int = 10, K: int = 10) -> "Section5Problem":
        """``t_i = i/(N+1)``, ``s_i = 1/(1-t_i)``, ``xi_k = k/(K+1)``, ``eta_k = xi_k/2``."""
        t = tuple(i / (N + 1) for i in range(1, N + 1))
        s = tuple(1.0 / (1.0 - ti) for ti in t)
        xi = tuple(k / (K + 1) for k in range(1, K + 1))
        eta = tuple(x / 2.0 for x in xi)
        return cls(M, N, K, t, s, xi, eta)

    @classmethod
    def random(cls, rng: np.random.Generator, M=None, N=None, K=None) -> "Section5Problem":
        M = int(rng.integers(1, 6)) if M is None else M
        N = int(rng.integers(1, 6)) if N is None else N
        K = int(rng.integers(1, 6)) if K is None else K
        t = np.sort(rng.uniform(0.05, 0.95, N))
        s = 1.0 + rng.uniform(0.05, 1.0, N) * (1.0 / (1.0 - t) - 1.0)
        xi = np.sort(rng.uniform(0.05, 0.95, K))
        eta = rng.uniform(0.05, 0.95, K) * xi
        return cls(M, N, K, tuple(t), tuple(s), tuple(xi), tuple(eta))


def section5_violations(p: Section5Problem) -> list[str]:
    out = []
    if min(p.M, p.N, p.K) < 1:
        out.append("M, N and K must be positive")
    if len(p.t) != p.N or len(p.s) != p.N:
        out.append("t and s must have N entries")
    if len(p.xi) != p.K or len(p.eta) != p.K:
        out.append("xi and eta must have K entries")
    if out:
        return out
    t = list(p.t)
    if not (0 < t[0] and t[-1] < 1 and all(a < b for a, b in zip(t, t[1:]))):
        out.append("need 0 < t_1 < ... < t_N < 1")
    for i, (ti, si) in enumerate(zip(p.t, p.s), 1):
        if not (1 < si <= 1.0 / (1.0 - ti) * (1 + 1e-15)):
            out.append(f"s_{i} = {si} outside (1, 1/(1 - t_{i})]")
    xi = list(p.xi)
    if not (0 < xi[0] and xi[-1] < 1 and all(a < b for a, b in zip(xi, xi[1:]))):
        out.append("need 0 < xi_1 < ... < xi_K < 1")
    for k, (x, e) in enumerate(zip(p.xi, p.eta), 1):
        if not (0 < e < x):
            out.append(f"eta_{k} = {e} outside (0, xi_{k})")
    return out


def section5_A(i: int):
    """``A_i(x) = x - x^(i+1) / (i+1)`` (``i`` is 1-based)."""
    def A(x):
        x = np.asarray(x, dtype=np.float64)
        return x - x ** (i + 1) / (i + 1)

    return A


def section5_S(t: float, s: float):
    def S(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x <= t, 0.0, s * (x - t))

    def S_power(x, n):
        x = np.asarray(x, dtype=np.float64)
        for _ in range(n):
            if not np.count_nonzero(x):
                break  # 0 is fixed
            x = np.where(x <= t, 0.0, s * (x - t))
        return x

    return S, S_power


def section5_B(xi: float, eta: float):
    def B(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x <= xi, (eta / xi) * x, eta)

    return B


def section5_resolvent(xi: float, eta: float):
    """Explicit ``T_r`` for ``f(x, y) = B(x)(y - x)`` on ``[0, 1]``.

    The regularized problem reduces to ``u + r B(u) = x``, clipped to C.
    """
    def T(x, r):
        x = np.asarray(x, dtype=np.float64)
        knee = xi + r * eta
        u = np.where(x <= knee, xi * x / knee, x - r * eta)
        return np.minimum(np.maximum(u, 0.0), 1.0)

    return T


def build_section5(
    spec: Section5Problem | None = None,
    *,
    k_sequence: Callable[[int], float] | None = None,
    eval_cost: float = 0.0,
    cost_mode: str = "sleep",
) -> Problem:
    """Assemble the one-dimensional example as a :class:`Problem`.

    ``k_sequence`` overrides the asymptotic constants of every ``S_i`` (they
    are quasi-phi-nonexpansive, so any sequence ``>= 1`` is admissible).
    ``eval_cost`` adds an artificial delay, in seconds, to every operator,
    mapping and resolvent evaluation.
    """
    spec = Section5Problem.default() if spec is None else spec
    burn = _cost_fn(eval_cost, cost_mode)
    ops = [
        MonotoneOperator(_with_cost(section5_A(i), burn), 0.5, name=f"A{i}")
        for i in range(1, spec.M + 1)
    ]
    maps = []
    for j, (t, s) in enumerate(zip(spec.t, spec.s), 1):
        S, S_pow = section5_S(t, s)
        kw = {} if k_sequence is None else {"k_sequence": k_sequence}
        maps.append(
            FixedPointMap(_with_cost(S, burn), _with_cost(S_pow, burn), name=f"S{j}", **kw)
        )
    bifs = [
        Bifunction.from_operator(
            section5_B(xi, eta),
            lipschitz=eta / xi,
            closed_form=_with_cost(section5_resolvent(xi, eta), burn),
            name=f"f{k}",
        )
        for k, (xi, eta) in enumerate(zip(spec.xi, spec.eta), 1)
    ]
    if burn is not None:
        bifs = [
            Bifunction(
                f.eval,
                f.resolvent_closed_form,
                _with_cost(f.operator, burn),
                f.operator_lipschitz,
                f.name,
            )
            for f in bifs
        ]
    return Problem(
        C=Interval(0.0, 1.0),
        operators=ops,
        maps=maps,
        bifunctions=bifs,
        solution=np.zeros(1),
        name="section5",
        meta={"spec": spec, "eval_cost": eval_cost},
    )


def closed_form_iteration_oracle(
    spec: Section5Problem, lam: float, alpha: float, r: float, x: float
) -> tuple[float, float, float, float]:
    """One farthest-candidate iteration (quasi variant) from explicit formulas.

    Returns ``(y_bar, z_bar, u_bar, x_next)`` using
    ``y_i = (1 - lam) x + lam x^(i+1)/(i+1)``, the piecewise ``S_j``, the
    piecewise resolvent and the cut ``C_{n+1} = [0, (z_bar + u_bar)/2]``.
    Written with plain floats so it shares no code with the solver.
    """
    x = float(x)
    if x == 0.0:
        return 0.0, 0.0, 0.0, 0.0

    def farthest(values):
        best, best_d = values[0], abs(values[0] - x)
        for v in values[1:]:
            if abs(v - x) > best_d:
                best, best_d = v, abs(v - x)
        return best

    ys = [min(max((1 - lam) * x + lam * x ** (i + 1) / (i + 1), 0.0), 1.0) for i in range(1, spec.M + 1)]
    y_bar = farthest(ys)
    zs = []
    for t, s in zip(spec.t, spec.s):
        sy = 0.0 if y_bar <= t else s * (y_bar - t)
        zs.append(alpha * x + (1 - alpha) * sy)
    z_bar = farthest(zs)
    if z_bar == 0.0:
        return y_bar, 0.0, 0.0, 0.0
    us = []
    for xi, eta in zip(spec.xi, spec.eta):
        if z_bar <= xi + r * eta:
            us.append(xi / (xi + r * eta) * z_bar)
        else:
            us.append(z_bar - r * eta)
    u_bar = farthest(us)
    return y_bar, z_bar, u_bar, (z_bar + u_bar) / 2.0


# ---------------------------------------------------------------------------
# Box intersected with a ball


def _zero_operator(x):
    return np.zeros_like(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class AffineInteriorProblem:
    """``C`` a box, ``S`` the projection onto a ball ``D``, ``A = 0``.

    The common solution set is ``C ∩ D``; the ball centre must lie strictly
    inside the box so that it is an interior witness.
    """

    d: int = 5
    box_lo: float = -1.0
    box_hi: float = 1.0
    center: Optional[tuple] = None
    radius: float = 1.0
    n_operators: int = 1

    def center_vector(self) -> np.ndarray:
        if self.center is None:
            return np.full(self.d, 0.5 * (self.box_lo + self.box_hi) + 0.25 * (self.box_hi - self.box_lo))
        return as_vector(self.center, self.d)

    def interior_witness(self) -> np.ndarray:
        c = self.center_vector()
        margin = min(float(np.min(c - self.box_lo)), float(np.min(self.box_hi - c)), self.radius)
        if not margin > 0:
            raise ValueError("box ∩ ball has no interior witness at the ball centre")
        return c


def build_affine_interior(spec: AffineInteriorProblem | None = None) -> Problem:
    spec = AffineInteriorProblem() if spec is None else spec
    c = spec.center_vector()
    witness = spec.interior_witness()
    box = Box(np.full(spec.d, spec.box_lo), np.full(spec.d, spec.box_hi))
    ball = Ball(c, spec.radius)

    def S(x):
        return project_ball(x, c, spec.radius)

    # A = 0 is inverse strongly monotone with any modulus.
    ops = [MonotoneOperator(_zero_operator, 1.0, name=f"Z{i}") for i in range(1, spec.n_operators + 1)]
    return Problem(
        C=box,
        operators=ops,
        maps=[FixedPointMap(S, lipschitz_L=1.0, name="P_D")],
        bifunctions=(),
        solution=witness,
        name="affine_interior",
        meta={"spec": spec, "ball": ball},
    )


# ---------------------------------------------------------------------------
# Brute-force projection oracle


def _linear_constraints(S: ConvexSet) -> list[HalfSpace]:
    base = S.base if isinstance(S, NestedSet) else S
    out = []
    if isinstance(base, (Interval, Box)):
        out.extend(base.halfspaces())
    if isinstance(S, NestedSet):
        out.extend(S.active_halfspaces())
    return out


def _member_mask(S: ConvexSet, pts: np.ndarray, tol: float) -> np.ndarray:
    base = S.base if isinstance(S, NestedSet) else S
    if isinstance(base, (Interval, Box)):
        lo, hi = base.bounds()
        mask = np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)
    elif isinstance(base, Ball):
        mask = np.linalg.norm(pts - base.center, axis=1) <= base.radius + tol
    else:
        mask = np.array([base.contains(p, tol) for p in pts], dtype=bool)
    if isinstance(S, NestedSet):
        for h in S.active_halfspaces():
            mask &= pts @ h.normal <= h.offset + tol
    return mask


def brute_force_projection(x0, S: ConvexSet, resolution: float, refine: bool = True) -> np.ndarray:
    """Nearest point of a bounded set of dimension <= 2 by exhaustive grid scan.

    The grid spans the bounding box of ``S`` at spacing ``resolution``. With
    ``refine``, the grid winner is compared against the exact projections of
    ``x0`` onto the affine hulls of every small group of nearly active linear
    constraints; any feasible one that is at least as close replaces it.
    """
    x0 = as_vector(x0, S.dim)
    if S.dim > 2:
        raise ValueError("brute-force projection supports dimension <= 2")
    box = S.bounds()
    if box is None:
        raise ValueError("brute-force projection needs a bounded set")
    lo, hi = box
    axes = [np.arange(l, h + 0.5 * resolution, resolution) for l, h in zip(lo, hi)]
    axes = [np.clip(a, l, h) for a, l, h in zip(axes, lo, hi)]
    if S.dim == 1:
        pts = axes[0][:, None]
    else:
        g0, g1 = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([g0.ravel(), g1.ravel()])
    mask = _member_mask(S, pts, 1e-12)
    if not np.any(mask):
        raise ValueError("no grid point lies in the set; refine the resolution")
    feas = pts[mask]
    d2 = np.sum((feas - x0) ** 2, axis=1)
    best = feas[int(np.argmin(d2))]
    best_d = float(np.sqrt(np.min(d2)))
    if not refine:
        return best

    cons = _linear_constraints(S)
    # The grid winner lies within about sqrt(2 D h) of the true projection.
    window = 2.0 * math.sqrt(2.0 * (best_d + resolution) * resolution * S.dim) + 2.0 * resolution
    near = [h for h in cons if h.slack(best) / np.linalg.norm(h.normal) <= window]
    candidates = [x0]
    for size in range(1, S.dim + 1):
        for group in itertools.combinations(near, size):
            A = np.array([h.normal for h in group])
            b = np.array([h.offset for h in group])
            G = A @ A.T
            if abs(np.linalg.det(G)) < 1e-14:
                continue
            candidates.append(x0 - A.T @ np.linalg.solve(G, A @ x0 - b))
    for c in candidates:
        if _member_mask(S, c[None, :], 1e-10)[0]:
            dc = float(np.linalg.norm(c - x0))
            if dc <= best_d + 1e-12:
                best, best_d = c, dc
    return best
