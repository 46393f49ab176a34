"""Half-spaces, elementary projections and projection onto nested sets.

In a Hilbert space the set ``{z : phi(z, u) <= phi(z, x) + eps}`` is the
half-space ``2<z, x - u> <= ||x||^2 - ||u||^2 + eps``, so the shrinking
feasible sets built by the hybrid methods are the base set intersected with
an append-only list of half-spaces. Projection onto such an intersection is
done with Dykstra's cyclic algorithm, or by clamping when the set is a 1-D
interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ConvexSet, DimensionError, Vector, as_vector


class EmptySetError(ValueError):
    """The set (or a half-space) is provably empty."""


class ProjectionError(ArithmeticError):
    """Dykstra's iteration did not converge within the inner budget."""

    def __init__(self, message: str, cycles: int = 0, last_change: float = np.nan):
        super().__init__(message)
        self.cycles = cycles
        self.last_change = last_change


WHOLE = "whole"
EMPTY = "empty"


@dataclass(frozen=True, slots=True)
class HalfSpace:
    """``{z : <normal, z> <= offset}``.

    A zero normal is flagged: ``degenerate == "whole"`` when the offset is
    nonnegative, ``"empty"`` otherwise.
    """

    normal: Vector
    offset: float
    degenerate: Optional[str] = None

    @classmethod
    def make(cls, normal, offset: float) -> "HalfSpace":
        a = as_vector(normal)
        b = float(offset)
        if not np.isfinite(b):
            raise ValueError("half-space offset must be finite")
        flag = None
        if not a.any():
            flag = WHOLE if b >= 0 else EMPTY
        a.setflags(write=False)
        return cls(a, b, flag)

    @property
    def dim(self) -> int:
        return self.normal.size

    def slack(self, z) -> float:
        """``offset - <normal, z>``; nonnegative inside."""
        return self.offset - float(np.dot(self.normal, z))

    def contains(self, z, tol: float = 0.0) -> bool:
        return self.slack(z) >= -tol

    def project(self, x) -> Vector:
        if self.degenerate == WHOLE:
            return np.array(x, dtype=np.float64)
        if self.degenerate == EMPTY:
            raise EmptySetError("projection onto an empty half-space")
        return project_halfspace(x, self.normal, self.offset)


def phi_comparison_to_halfspace(u, x, eps: float = 0.0) -> HalfSpace:
    """Half-space form of ``{z : phi(z, u) <= phi(z, x) + eps}``."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if u.shape != x.shape:
        raise DimensionError(f"dimension mismatch: {u.shape} vs {x.shape}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return HalfSpace.make(2.0 * (x - u), np.dot(x, x) - np.dot(u, u) + eps)


# Elementary projections


def project_interval(x, lo: float, hi: float) -> Vector:
    if lo > hi:
        raise EmptySetError(f"inverted interval [{lo}, {hi}]")
    return np.minimum(np.maximum(np.atleast_1d(np.asarray(x, dtype=np.float64)), lo), hi)


def project_box(x, lo, hi) -> Vector:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), x.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), x.shape)
    if np.any(lo > hi):
        raise EmptySetError("box has an inverted side")
    return np.minimum(np.maximum(x, lo), hi)


def project_ball(x, center, radius: float) -> Vector:
    if radius < 0:
        raise EmptySetError(f"ball radius {radius} < 0")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    c = np.asarray(center, dtype=np.float64)
    if c.shape != x.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {c.shape}")
    d = x - c
    dist = float(np.linalg.norm(d))
    if dist <= radius:
        return x.copy()
    return c + (radius / dist) * d


def project_halfspace(x, normal, offset: float) -> Vector:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    a = np.asarray(normal, dtype=np.float64)
    if a.shape != x.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {a.shape}")
    nn = float(np.dot(a, a))
    if nn == 0.0:
        if offset >= 0:
            return x.copy()
        raise EmptySetError("zero normal with negative offset")
    excess = float(np.dot(a, x)) - offset
    if excess <= 0:
        return x.copy()
    return x - (excess / nn) * a


# Concrete sets


class Interval(ConvexSet):
    kind = "interval"

    def __init__(self, lo: float, hi: float):
        if lo > hi:
            raise EmptySetError(f"inverted interval [{lo}, {hi}]")
        self.lo, self.hi = float(lo), float(hi)
        self.dim = 1

    def project(self, x):
        return np.minimum(np.maximum(np.asarray(x, dtype=np.float64), self.lo), self.hi)

    def contains(self, x, tol=0.0):
        v = float(np.atleast_1d(x)[0])
        return self.lo - tol <= v <= self.hi + tol

    def bounds(self):
        return np.array([self.lo]), np.array([self.hi])

    def halfspaces(self) -> list[HalfSpace]:
        return [HalfSpace.make([1.0], self.hi), HalfSpace.make([-1.0], -self.lo)]

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"


class Box(ConvexSet):
    kind = "box"

    def __init__(self, lo, hi):
        lo = as_vector(lo)
        hi = as_vector(hi, lo.size)
        if np.any(lo > hi):
            raise EmptySetError("box has an inverted side")
        self.lo, self.hi = lo, hi
        self.dim = lo.size

    def project(self, x):
        return project_box(x, self.lo, self.hi)

    def contains(self, x, tol=0.0):
        x = np.atleast_1d(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def bounds(self):
        return self.lo.copy(), self.hi.copy()

    def halfspaces(self) -> list[HalfSpace]:
        out = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            out.append(HalfSpace.make(e, self.hi[i]))
            out.append(HalfSpace.make(-e, -self.lo[i]))
        return out

    def __repr__(self):
        return f"Box({self.lo.tolist()}, {self.hi.tolist()})"


class Ball(ConvexSet):
    kind = "ball"

    def __init__(self, center, radius: float):
        if radius < 0:
            raise EmptySetError(f"ball radius {radius} < 0")
        self.center = as_vector(center)
        self.radius = float(radius)
        self.dim = self.center.size

    def project(self, x):
        return project_ball(x, self.center, self.radius)

    def contains(self, x, tol=0.0):
        return float(np.linalg.norm(np.atleast_1d(x) - self.center)) <= self.radius + tol

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def __repr__(self):
        return f"Ball({self.center.tolist()}, {self.radius})"


class CustomSet(ConvexSet):
    """User-supplied projection and membership callbacks."""

    kind = "custom"

    def __init__(self, dim: int, project: Callable, contains: Callable, bounds=None):
        self.dim = dim
        self._project = project
        self._contains = contains
        self._bounds = bounds

    def project(self, x):
        return np.asarray(self._project(x), dtype=np.float64)

    def contains(self, x, tol=0.0):
        return bool(self._contains(x, tol))

    def bounds(self):
        return self._bounds


# Dykstra


DEFAULT_TOL = 1e-12
DEFAULT_MAX_INNER = 10_000


def dykstra(
    x0,
    projections: Sequence[Callable[[Vector], Vector]],
    tol: float = DEFAULT_TOL,
    max_inner: int = DEFAULT_MAX_INNER,
) -> tuple[Vector, int]:
    """Project ``x0`` onto the intersection of sets given by their projectors.

    Runs Dykstra's cyclic algorithm until the per-set outputs and correction
    increments change by at most ``tol`` over a cycle (Euclidean norm).
    Outputs alone are not enough: a projection onto a half-space is constant
    along its normal, so outputs can freeze away from the answer while the
    increments drift. Returns the point and the number of cycles used.
    """
    x = np.array(x0, dtype=np.float64)
    m = len(projections)
    if m == 0:
        return x, 0
    incr = np.zeros((m, x.size))
    outs = np.tile(x, (m, 1))
    change = np.inf
    for cycle in range(1, max_inner + 1):
        change2 = 0.0
        for i, proj in enumerate(projections):
            w = x + incr[i]
            y = proj(w)
            new_incr = w - y
            d = y - outs[i]
            e = new_incr - incr[i]
            change2 += float(np.dot(d, d)) + float(np.dot(e, e))
            incr[i] = new_incr
            outs[i] = y
            x = y
        change = np.sqrt(change2)
        if change <= tol:
            return x, cycle
    raise ProjectionError(
        f"Dykstra did not converge in {max_inner} cycles (last change {change:.3e}); "
        "the intersection may be empty or badly conditioned",
        cycles=max_inner,
        last_change=change,
    )


def _dykstra_halfspaces(x0, base: ConvexSet, A, beta, nn, tol, max_inner, incr=None):
    # Same iteration as ``dykstra`` with the half-space projections inlined.
    # ``incr`` holds one correction per set (base first); Dykstra keeps
    # x = x0 - sum(incr), so a previous solution's corrections, padded with
    # zeros for new sets, form a valid warm start.
    x0 = np.asarray(x0, dtype=np.float64)
    m = A.shape[0] + 1
    if incr is None:
        incr = np.zeros((m, x0.size))
    x = x0 - incr.sum(axis=0)
    outs = np.empty((m, x0.size))
    outs[:] = np.nan
    change = np.inf
    for cycle in range(1, max_inner + 1):
        change2 = 0.0
        w = x + incr[0]
        y = base.project(w)
        new_incr = w - y
        d = y - outs[0] if cycle > 1 else np.zeros_like(y)
        e = new_incr - incr[0]
        change2 += float(np.dot(d, d)) + float(np.dot(e, e))
        incr[0] = new_incr
        outs[0] = y
        x = y
        for i in range(1, m):
            a = A[i - 1]
            w = x + incr[i]
            excess = float(np.dot(a, w)) - beta[i - 1]
            if excess > 0:
                new_incr = (excess / nn[i - 1]) * a
            else:
                new_incr = np.zeros_like(w)
            y = w - new_incr
            e = new_incr - incr[i]
            change2 += float(np.dot(e, e))
            if cycle > 1:
                d = y - outs[i]
                change2 += float(np.dot(d, d))
            incr[i] = new_incr
            outs[i] = y
            x = y
        change = np.sqrt(change2)
        if cycle > 1 and change <= tol:
            return x, cycle, incr
    raise ProjectionError(
        f"Dykstra did not converge in {max_inner} cycles (last change {change:.3e}, "
        f"{m - 1} half-spaces); the intersection may be empty or badly conditioned",
        cycles=max_inner,
        last_change=change,
    )


class NestedSet(ConvexSet):
    """``base`` intersected with an append-only sequence of half-spaces.

    Extending returns a new set; the half-spaces live in a store shared along
    one chain of extensions, so each append is O(1). Branching off an older
    set copies the store. For a 1-D interval base the current interval is
    kept alongside, which gives the exact projection in O(1).
    """

    kind = "halfspace-intersection"

    def __init__(self, base: ConvexSet, halfspaces: Sequence[HalfSpace] = ()):
        self.base = base
        self.dim = base.dim
        self._store: list = []
        self._count = 0
        self._interval = (base.lo, base.hi) if isinstance(base, Interval) else None
        self._append(halfspaces)

    def _append(self, halfspaces):
        for h in halfspaces:
            if h.dim != self.dim:
                raise DimensionError(f"half-space of dimension {h.dim} in a {self.dim}-D set")
            if h.degenerate == EMPTY:
                raise EmptySetError("nested set contains an empty half-space")
            self._store.append(h)
            self._count += 1
            if self._interval is not None and h.degenerate is None:
                a, lo, hi = float(h.normal[0]), *self._interval
                if a > 0:
                    hi = min(hi, h.offset / a)
                else:
                    lo = max(lo, h.offset / a)
                self._interval = (lo, hi)

    @property
    def halfspaces(self) -> tuple:
        return tuple(self._store[: self._count])

    def __len__(self):
        return self._count

    def extend(self, *halfspaces: HalfSpace) -> "NestedSet":
        """Return the smaller set with ``halfspaces`` appended."""
        new = NestedSet.__new__(NestedSet)
        new.base, new.dim = self.base, self.dim
        if self._count == len(self._store):
            new._store = self._store
        else:
            new._store = self._store[: self._count]
        new._count = self._count
        new._interval = self._interval
        new._append(halfspaces)
        return new

    @property
    def interval(self) -> Optional[tuple[float, float]]:
        """``(lo, hi)`` of a 1-D set with interval base, else None."""
        return self._interval

    def contains(self, x, tol=0.0):
        if not self.base.contains(x, tol):
            return False
        return all(h.contains(x, tol) for h in self.halfspaces)

    def bounds(self):
        return self.base.bounds()

    def project(self, x):
        return project_nested(x, self)

    def active_halfspaces(self) -> list[HalfSpace]:
        return [h for h in self.halfspaces if h.degenerate is None]


def project_nested(
    x0,
    S: NestedSet,
    tol: float = DEFAULT_TOL,
    max_inner: int = DEFAULT_MAX_INNER,
    method: str = "auto",
) -> Vector:
    """Metric projection of ``x0`` onto ``S``.

    ``method="dykstra"`` always runs Dykstra's algorithm (whole-space
    half-spaces skipped) and raises :class:`ProjectionError` when it does not
    settle within ``max_inner`` cycles. ``"auto"`` clamps to the cached
    interval for 1-D interval-based sets and uses Dykstra otherwise.
    """
    p, _ = project_nested_warm(x0, S, None, tol, max_inner, method)
    return p


def project_nested_warm(
    x0,
    S: NestedSet,
    corrections: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    max_inner: int = DEFAULT_MAX_INNER,
    method: str = "auto",
) -> tuple[Vector, Optional[np.ndarray]]:
    """:func:`project_nested` that also returns Dykstra's corrections.

    Pass the corrections of a projection of the same ``x0`` onto a set that
    ``S`` extends to warm-start the next one; rows for the new half-spaces
    start at zero. Returns ``None`` corrections on the 1-D closed-form path.
    """
    x0 = as_vector(x0, S.dim)
    if method not in ("auto", "dykstra"):
        raise ValueError(f"unknown projection method {method!r}")
    if method == "auto" and S.interval is not None:
        lo, hi = S.interval
        if lo > hi:
            raise EmptySetError(f"nested interval [{lo}, {hi}] is empty")
        return np.minimum(np.maximum(x0, lo), hi), None
    hs = S.active_halfspaces()
    if not hs:
        return S.base.project(x0), None
    A, beta = _drop_implied(
        np.array([h.normal for h in hs]), np.array([h.offset for h in hs]), _base_radius(S.base)
    )
    nn = np.einsum("ij,ij->i", A, A)
    incr = np.zeros((len(A) + 1, S.dim))
    if corrections is not None and len(corrections) <= len(incr):
        incr[: len(corrections)] = corrections
    p, _, incr = _dykstra_halfspaces(x0, S.base, A, beta, nn, tol, max_inner, incr)
    return p, incr


def _base_radius(base: ConvexSet) -> float:
    box = base.bounds()
    if box is None:
        return np.inf
    lo, hi = box
    return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))


def _drop_implied(A, beta, radius: float):
    """Normalize half-spaces and drop those implied by a nearly parallel one.

    With ``||z|| <= radius`` on the base set, ``<u_j, z> <= b_j`` follows
    from ``<u_i, z> <= b_i`` whenever ``b_j >= b_i + radius * ||u_i - u_j||``,
    so the intersection is unchanged. Dykstra shifts its corrections between
    such redundant cuts only slowly, which is where it otherwise stalls.
    Surviving cuts keep the position of the family they joined, so warm
    starts stay aligned when later cuts add directions or tighten old ones.
    """
    norms = np.sqrt(np.einsum("ij,ij->i", A, A))
    U = A / norms[:, None]
    b = beta / norms
    reps = np.empty_like(U)
    rep_b = np.empty_like(b)
    keep: list[int] = []
    for i in range(len(U)):
        k = len(keep)
        if k:
            diff = reps[:k] - U[i]
            gap = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            margin = np.where(gap == 0.0, 0.0, radius * gap)
            if np.any(b[i] >= rep_b[:k] + margin):
                continue
            hit = np.flatnonzero(rep_b[:k] >= b[i] + margin)
            if hit.size:
                j = int(hit[0])
                reps[j], rep_b[j], keep[j] = U[i], b[i], i
                continue
        reps[k], rep_b[k] = U[i], b[i]
        keep.append(i)
    return U[keep], b[keep]
