"""Shared domain types, the splice/select operators, and hull utilities.

Tuples of values are represented by plain Python sequences; points in R^d are
represented by read-only float64 numpy arrays produced by :func:`as_point`.
Injection maps are 1-based, matching the usual index notation for selecting
slots out of an n-tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError

BARY_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """A nonempty, nondegenerate real interval with optionally open endpoints.

    Endpoints may be ``-inf`` / ``+inf``; infinite endpoints are always open.
    """

    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise InvalidArgumentError("interval endpoints must not be NaN")
        if not self.lo < self.hi:
            raise InvalidArgumentError(
                f"interval requires lo < hi, got [{self.lo}, {self.hi}]"
            )
        if math.isinf(self.lo) and not self.lo_open:
            object.__setattr__(self, "lo_open", True)
        if math.isinf(self.hi) and not self.hi_open:
            object.__setattr__(self, "hi_open", True)

    def __contains__(self, u: float) -> bool:
        if math.isnan(u):
            return False
        if u < self.lo or (u == self.lo and self.lo_open):
            return False
        if u > self.hi or (u == self.hi and self.hi_open):
            return False
        return True

    def finite_window(self, width: float = 8.0, margin: float = 1e-6) -> tuple[float, float]:
        """A closed finite subinterval usable for sampling and clipping.

        Infinite endpoints are clipped to a window of the given width around
        the finite endpoint (or around 0 when both are infinite); open finite
        endpoints are shrunk inward by ``margin`` times the window span.
        """
        lo, hi = self.lo, self.hi
        if math.isinf(lo) and math.isinf(hi):
            lo, hi = -width / 2, width / 2
        elif math.isinf(lo):
            lo = hi - width
        elif math.isinf(hi):
            hi = lo + width
        span = hi - lo
        if self.lo_open:
            lo += margin * span
        if self.hi_open:
            hi -= margin * span
        return lo, hi


REALS = Interval()
POSITIVE_REALS = Interval(0.0, math.inf, lo_open=True)


def as_point(p, dim: Optional[int] = None) -> np.ndarray:
    """Validate and normalize a point of R^d to a float64 numpy array.

    Rejects non-finite coordinates and, when ``dim`` is given, any dimension
    mismatch.
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"a point must be a 1-d coordinate list, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidArgumentError(f"expected a point of dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("point coordinates must be finite")
    return arr


def as_point_tuple(xs, dim: Optional[int] = None) -> list[np.ndarray]:
    """Validate a nonempty sequence of points sharing one dimension."""
    if len(xs) == 0:
        raise InvalidArgumentError("empty point tuple")
    pts = [as_point(x, dim) for x in xs]
    d = pts[0].shape[0]
    for p in pts[1:]:
        if p.shape[0] != d:
            raise InvalidArgumentError("points in a tuple must share a dimension")
    return pts


@dataclass(frozen=True)
class Injection:
    """An injective map from slot indices 1..k into slot indices 1..n."""

    k: int
    n: int
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(j) for j in self.map))
        if self.k <= 0 or self.n <= 0:
            raise InvalidArgumentError("injection arities must be positive")
        if self.k > self.n:
            raise InvalidArgumentError(f"injection needs k <= n, got k={self.k}, n={self.n}")
        if len(self.map) != self.k:
            raise InvalidArgumentError("injection map length must equal k")
        if len(set(self.map)) != self.k:
            raise InvalidArgumentError("injection map entries must be pairwise distinct")
        for j in self.map:
            if not 1 <= j <= self.n:
                raise InvalidArgumentError(f"injection map entry {j} outside 1..{self.n}")

    @classmethod
    def of(cls, entries: Sequence[int], n: int) -> "Injection":
        return cls(k=len(entries), n=n, map=tuple(entries))

    @property
    def image(self) -> frozenset[int]:
        return frozenset(self.map)

    def is_bijection(self) -> bool:
        return self.k == self.n


@dataclass(frozen=True)
class Barycentric:
    """Nonnegative weights summing to 1, certifying hull membership."""

    weights: tuple[float, ...]

    def __post_init__(self):
        ws = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        if len(ws) == 0:
            raise InvalidArgumentError("barycentric weights must be nonempty")
        for w in ws:
            if not math.isfinite(w) or w < 0.0:
                raise InvalidArgumentError(f"barycentric weight {w} is negative or non-finite")
        total = math.fsum(ws)
        if abs(total - 1.0) > BARY_SUM_TOL:
            raise InvalidArgumentError(f"barycentric weights sum to {total}, not 1")

    @classmethod
    def clipped(cls, weights, neg_tol: float = 1e-12) -> "Barycentric":
        """Clip numerically tiny negatives to zero and renormalize.

        Used by solvers whose iterates live on the simplex up to rounding.
        Weights below ``-neg_tol`` are still rejected.
        """
        arr = np.asarray(weights, dtype=float)
        if np.any(arr < -neg_tol):
            raise InvalidArgumentError("barycentric weight below the clipping tolerance")
        arr = np.clip(arr, 0.0, None)
        total = arr.sum()
        if total <= 0.0:
            raise InvalidArgumentError("barycentric weights sum to zero")
        return cls(tuple(arr / total))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets shared by every numerical solve."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 10_000
    damping: float = 1.0
    grid_oracle_resolution: int = 2001

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise InvalidArgumentError("abs_tol must be positive")
        if not self.rel_tol > 0:
            raise InvalidArgumentError("rel_tol must be positive")
        if self.max_iter <= 0:
            raise InvalidArgumentError("max_iter must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise InvalidArgumentError("damping must lie in (0, 1]")
        if self.grid_oracle_resolution < 2:
            raise InvalidArgumentError("grid_oracle_resolution must be at least 2")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one numerical solve: value, residual, and iteration count.

    ``converged`` is set by the solver only when the residual meets the
    tolerance it was asked for.  ``barycentric`` carries the hull-membership
    certificate for vector solves.
    """

    value: Union[float, np.ndarray]
    residual: float
    iterations: int
    converged: bool
    trace: Optional[tuple] = None
    barycentric: Optional[Barycentric] = None

    def to_json(self) -> dict:
        value = self.value
        if isinstance(value, np.ndarray):
            value = [float(v) for v in value]
        else:
            value = float(value)
        out = {
            "value": value,
            "residual": float(self.residual),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }
        if self.barycentric is not None:
            out["barycentric"] = [float(w) for w in self.barycentric.weights]
        return out


def splice(x: Sequence, chi: Injection, y) -> tuple:
    """Build the n-tuple placing ``x`` along the injection and ``y`` elsewhere.

    Slot ``chi.map[j]`` receives ``x[j]``; every slot outside the image of the
    injection receives ``y``.
    """
    if len(x) != chi.k:
        raise InvalidArgumentError(f"splice needs len(x) == chi.k, got {len(x)} != {chi.k}")
    out = [y] * chi.n
    for j, slot in enumerate(chi.map):
        out[slot - 1] = x[j]
    return tuple(out)


def select(x: Sequence, chi: Injection) -> tuple:
    """Select the k entries of an n-tuple indexed by the injection."""
    if len(x) != chi.n:
        raise InvalidArgumentError(f"select needs len(x) == chi.n, got {len(x)} != {chi.n}")
    return tuple(x[slot - 1] for slot in chi.map)


def hull_combination(x: Sequence, lam: Barycentric) -> np.ndarray:
    """The convex combination sum(lam_i * x_i) of a tuple of points."""
    pts = as_point_tuple(x)
    if len(lam) != len(pts):
        raise InvalidArgumentError(
            f"weight count {len(lam)} does not match point count {len(pts)}"
        )
    X = np.stack(pts, axis=0)
    return lam.array @ X


def in_hull_1d(x: Sequence[float], y: float) -> bool:
    """Whether y lies in [min(x), max(x)]."""
    if len(x) == 0:
        raise InvalidArgumentError("empty tuple has no hull")
    return min(x) <= y <= max(x)
