"""Ambient-space arithmetic and the problem interfaces used by the solvers.

Everything lives in R^d with the standard inner product, so the Lyapunov
functional reduces to the squared distance and generalized projections are
ordinary metric projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Vector = np.ndarray


class DimensionError(ValueError):
    """Raised when vectors of different dimension are combined."""


class NonFiniteError(ArithmeticError):
    """Raised when a computation produces NaN or infinity."""


def as_vector(x, dim: Optional[int] = None) -> Vector:
    """Convert scalars, lists and arrays to a finite 1-D float64 array."""
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {v.shape}")
    if v.size == 0:
        raise DimensionError("vectors must have dimension >= 1")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {v.size}")
    if not np.isfinite(v).all():
        raise NonFiniteError(f"non-finite coordinates in {v!r}")
    return v


def _pair(x, y) -> tuple[Vector, Vector]:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def inner(x, y) -> float:
    """Standard inner product."""
    x, y = _pair(x, y)
    return float(np.dot(x, y))


def norm(x) -> float:
    x = np.atleast_1d(x)
    return math.sqrt(float(np.dot(x, x)))


def phi(x, y) -> float:
    """Lyapunov functional ``||x||^2 - 2<x, y> + ||y||^2 = ||x - y||^2``."""
    x, y = _pair(x, y)
    d = x - y
    return float(np.dot(d, d))


@dataclass(frozen=True)
class MonotoneOperator:
    """An operator ``A`` with declared inverse-strong-monotonicity modulus.

    ``<Ax - Ay, x - y> >= ism_modulus * ||Ax - Ay||^2`` is assumed, not
    verified; the test suite samples it.
    """

    eval: Callable[[Vector], Vector]
    ism_modulus: float
    name: str = ""

    def __post_init__(self):
        if not self.ism_modulus > 0:
            raise ValueError("ism_modulus must be positive")

    def __call__(self, x: Vector) -> Vector:
        return self.eval(x)


def _iterate_power(fn: Callable[[Vector], Vector]) -> Callable[[Vector, int], Vector]:
    def power(x: Vector, n: int) -> Vector:
        for _ in range(n):
            x = fn(x)
        return x

    return power


def _unit_sequence(n: int) -> float:
    return 1.0


@dataclass(frozen=True)
class FixedPointMap:
    """A mapping ``S`` with powers ``S^n`` and asymptotic constants ``k_n``.

    ``eval_power(x, n)`` returns ``S^n x``; when omitted, ``S`` is applied
    ``n`` times. ``k_sequence(n)`` bounds ``phi(p, S^n x) <= k_n phi(p, x)``
    for fixed points ``p``; ``k_n == 1`` is the quasi-phi-nonexpansive case.
    """

    eval: Callable[[Vector], Vector]
    eval_power: Optional[Callable[[Vector, int], Vector]] = None
    k_sequence: Callable[[int], float] = _unit_sequence
    lipschitz_L: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if self.eval_power is None:
            object.__setattr__(self, "eval_power", _iterate_power(self.eval))

    def __call__(self, x: Vector) -> Vector:
        return self.eval(x)

    def power(self, x: Vector, n: int) -> Vector:
        if n < 1:
            raise ValueError("power must be a positive integer")
        return self.eval_power(x, n)


@dataclass(frozen=True)
class Bifunction:
    """An equilibrium bifunction ``f(x, y)``.

    Two optional accelerators feed the resolvent: ``resolvent_closed_form``
    maps ``(x, r)`` to ``T_r x`` directly; ``operator`` declares the form
    ``f(x, y) = <B(x), y - x>`` with ``B`` monotone and
    ``operator_lipschitz``-Lipschitz.
    """

    eval: Callable[[Vector, Vector], float]
    resolvent_closed_form: Optional[Callable[[Vector, float], Vector]] = None
    operator: Optional[Callable[[Vector], Vector]] = None
    operator_lipschitz: Optional[float] = None
    name: str = ""

    def __call__(self, x: Vector, y: Vector) -> float:
        return self.eval(x, y)

    @classmethod
    def from_operator(cls, B, lipschitz: float, closed_form=None, name: str = ""):
        def f(x, y):
            return float(np.dot(B(x), np.asarray(y) - np.asarray(x)))

        return cls(
            eval=f,
            resolvent_closed_form=closed_form,
            operator=B,
            operator_lipschitz=lipschitz,
            name=name,
        )


class ConvexSet:
    """Closed convex set with a metric projection oracle."""

    kind = "custom"
    dim: int

    def project(self, x: Vector) -> Vector:
        raise NotImplementedError

    def contains(self, x: Vector, tol: float = 0.0) -> bool:
        raise NotImplementedError

    def bounds(self) -> Optional[tuple[Vector, Vector]]:
        """Axis-aligned bounding box, or None when unbounded."""
        return None


@dataclass(frozen=True)
class Problem:
    """Common-solution problem: M operators, N mappings, K bifunctions over C.

    ``solution`` optionally records a known point of the common solution
    set, used for diagnostics and validation only.
    """

    C: ConvexSet
    operators: Sequence[MonotoneOperator]
    maps: Sequence[FixedPointMap]
    bifunctions: Sequence[Bifunction] = ()
    solution: Optional[Vector] = None
    name: str = "problem"
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.C.dim

    @property
    def ism_modulus(self) -> float:
        """Smallest declared modulus across the operators."""
        if not self.operators:
            return np.inf
        return min(op.ism_modulus for op in self.operators)

    def asymptotic_k(self, n: int) -> float:
        """Common asymptotic constant: the largest ``k_n`` over the mappings."""
        if not self.maps:
            return 1.0
        return max(float(m.k_sequence(n)) for m in self.maps)
