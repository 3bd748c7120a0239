"""Generalized deviation means on convex subsets of R^d.

A generalized deviation E maps a pair of points to a covector (the gradient
representation of a continuous linear functional); the generalized deviation
mean of x = (x_1, ..., x_n) is the unique point y in conv{x_1, ..., x_n}
satisfying the variational inequality

    (E_1(x_1, y) + ... + E_n(x_n, y)) (x_j - y) <= 0    for every j.

The solver runs an extragradient iteration on barycentric coordinates over
the unit simplex, so every iterate carries hull membership by construction.
The companion route goes through potentials: for a family F with strictly
convex, differentiable sections and vanishing gradient at the diagonal,
E(u, v) = -dF(u, .)/dv is a generalized deviation and the mean is the unique
minimizer of sum_i F_i(x_i, v) over the hull, found here by projected
gradient descent with Armijo backtracking.  A brute-force lattice search over
barycentric coordinates serves as an independent oracle for small tuples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from .core import (
    Barycentric,
    DEFAULT_CONFIG,
    SolverConfig,
    SolverReport,
    as_point,
    as_point_tuple,
)
from .errors import (
    InvalidArgumentError,
    InvalidDeviationError,
    InvalidPotentialError,
)
from .scalar import ScalarDeviation

_VALIDATION_SEED = 20240902
_LIPSCHITZ_SEED = 20240903


@dataclass(frozen=True)
class Covector:
    """A continuous linear functional on R^d, represented by its gradient."""

    grad: tuple[float, ...]

    def __post_init__(self):
        gs = tuple(float(g) for g in self.grad)
        object.__setattr__(self, "grad", gs)
        for g in gs:
            if not math.isfinite(g):
                raise InvalidArgumentError("covector entries must be finite")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.grad, dtype=float)

    def __call__(self, h) -> float:
        return float(np.dot(self.array, as_point(h, dim=len(self.grad))))

    def __len__(self) -> int:
        return len(self.grad)


def _as_grad(value, dim: int) -> np.ndarray:
    if isinstance(value, Covector):
        arr = value.array
    else:
        arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape[0] != dim:
        raise InvalidArgumentError(f"covector dimension {arr.shape[0]} != {dim}")
    if not math.isfinite(float(arr.sum())) and not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("covector entries must be finite")
    return arr


@dataclass(frozen=True)
class GenDeviation:
    """A generalized deviation on R^d.

    ``eval(u, v)`` returns the covector E(u, v) (a Covector or any array
    convertible).  Sampled at construction inside ``[sample_low,
    sample_high]^dim``: E(u, u) = 0, strict monotone decrease of the second
    section, and E(u, v)(u - v) > 0 off the diagonal.

    ``inner_weight`` marks the gradient-type family E(u, v) = 2 w(u) (u - v);
    solvers exploit the affine structure of its sums (the coefficients only
    involve the fixed data points) without changing any semantics.
    """

    dim: int
    eval: Callable
    label: str = "generalized deviation"
    sample_low: float = -1.0
    sample_high: float = 1.0
    samples: int = 32
    validate: bool = True
    inner_weight: Optional[Callable] = None

    def __post_init__(self):
        if self.dim <= 0:
            raise InvalidArgumentError("deviation dimension must be positive")
        if self.validate and self.samples > 0:
            self._check_axioms()

    def grad(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return _as_grad(self.eval(u, v), self.dim)

    def _check_axioms(self):
        rng = np.random.default_rng(_VALIDATION_SEED)
        shape = (self.samples, self.dim)
        us = rng.uniform(self.sample_low, self.sample_high, shape)
        vs = rng.uniform(self.sample_low, self.sample_high, shape)
        ws = rng.uniform(self.sample_low, self.sample_high, shape)
        magnitude = 1.0
        for u, v, w in zip(us, vs, ws):
            euu = self.grad(u, u)
            euv = self.grad(u, v)
            euw = self.grad(u, w)
            magnitude = max(magnitude, np.abs(euv).max(), np.abs(euw).max())
            if np.abs(euu).max() > 1e-9 * magnitude:
                raise InvalidDeviationError(f"{self.label}: E(u,u) != 0 at u={u}")
            pairing = float((euv - euw) @ (v - w))
            if pairing >= 1e-12 * magnitude:
                raise InvalidDeviationError(
                    f"{self.label}: second section not strictly monotone "
                    f"decreasing: (E(u,v)-E(u,w))(v-w) = {pairing}"
                )
            sign_pairing = float(euv @ (u - v))
            if np.linalg.norm(u - v) > 1e-9 and sign_pairing <= 0.0:
                raise InvalidDeviationError(
                    f"{self.label}: sign pairing E(u,v)(u-v) = {sign_pairing} <= 0"
                )

    def __call__(self, u, v) -> Covector:
        return Covector(tuple(self.grad(as_point(u, self.dim), as_point(v, self.dim))))


def lift_scalar_deviation(dev: ScalarDeviation, label: Optional[str] = None) -> GenDeviation:
    """View a scalar deviation as a 1-dimensional generalized deviation."""
    lo, hi = dev.domain.finite_window()
    return GenDeviation(
        dim=1,
        eval=lambda u, v, f=dev.eval: (f(float(u[0]), float(v[0])),),
        label=label or f"lifted {dev.label}",
        sample_low=lo,
        sample_high=hi,
        validate=False,
    )


def inner_product_deviation(weight, dim: int,
                            label: str = "inner-product deviation") -> GenDeviation:
    """The gradient-type deviation E(u, v) = 2 w(u) (u - v).

    ``weight`` is a positive constant or a positive callable on points.  This
    is the deviation of the weighted squared-distance potential; its deviation
    mean is the functionally weighted arithmetic mean.
    """
    if callable(weight):
        w = weight
    else:
        c = float(weight)
        if not c > 0:
            raise InvalidArgumentError("inner-product deviation weight must be positive")
        w = lambda u, c=c: c  # noqa: E731

    return GenDeviation(
        dim=dim,
        eval=lambda u, v, w=w: 2.0 * w(u) * (np.asarray(u, float) - np.asarray(v, float)),
        label=label,
        validate=False,
        inner_weight=w,
    )


def _check_family(E: Sequence[GenDeviation], x: Sequence) -> tuple[list[np.ndarray], int]:
    if len(E) == 0:
        raise InvalidArgumentError("empty deviation tuple")
    dim = E[0].dim
    for e in E[1:]:
        if e.dim != dim:
            raise InvalidArgumentError("deviations must share one dimension")
    pts = as_point_tuple(x, dim)
    if len(pts) != len(E):
        raise InvalidArgumentError(f"tuple length {len(pts)} != deviation count {len(E)}")
    return pts, dim


def gen_e_sum(E: Sequence[GenDeviation], x: Sequence, y) -> Covector:
    """The summed covector sum_i E_i(x_i, y)."""
    pts, dim = _check_family(E, x)
    yv = as_point(y, dim)
    total = np.zeros(dim)
    for e, xi in zip(E, pts):
        total += e.grad(xi, yv)
    return Covector(tuple(total))


def _project_simplex(v: np.ndarray) -> np.ndarray:
    # Euclidean projection onto the probability simplex (sort-based).  Small
    # problems dominate this code path, where plain Python beats numpy's
    # sort/cumsum overhead by an order of magnitude.
    n = v.shape[0]
    if n <= 16:
        u = sorted(v.tolist(), reverse=True)
        css = 0.0
        theta = u[0] - 1.0
        for i, ui in enumerate(u):
            css += ui
            t = (css - 1.0) / (i + 1.0)
            if ui - t <= 0.0:
                break
            theta = t
        out = v - theta
        np.clip(out, 0.0, None, out=out)
        return out
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, n + 1)
    rho = np.nonzero(u + (1.0 - css) / idx > 0.0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _sum_grad(E: Sequence[GenDeviation], pts: Sequence[np.ndarray], dim: int):
    if all(e.inner_weight is not None for e in E):
        # Gradient-type family: sum_i 2 w_i(x_i) (x_i - y) is affine in y
        # with coefficients fixed by the data points.
        coeffs = np.asarray([float(e.inner_weight(xi)) for e, xi in zip(E, pts)])
        const = 2.0 * (coeffs @ np.stack(pts, axis=0))
        total_w = 2.0 * float(coeffs.sum())

        def geval_affine(y: np.ndarray) -> np.ndarray:
            return const - total_w * y

        return geval_affine

    evals = [e.eval for e in E]
    pairs = list(zip(evals, pts))
    checked = [False]

    def geval(y: np.ndarray) -> np.ndarray:
        total = np.zeros(dim)
        if not checked[0]:
            for ev, xi in pairs:
                total += _as_grad(ev(xi, y), dim)
            checked[0] = True
            return total
        # Shapes were validated on the first call; skip the checks in the
        # hot loop.
        for ev, xi in pairs:
            v = ev(xi, y)
            total += v.array if type(v) is Covector else np.asarray(v, dtype=float).reshape(-1)
        return total

    return geval


class _SecantAccelerator:
    """Strided secant extrapolation of a fixed-point update map.

    Consecutive-iterate displacement differences shrink linearly in the
    contraction rate and sink below measurability exactly in the slow
    regimes where extrapolation matters most, so the secant acts on
    snapshots ``stride`` iterations apart, the stride adapting until the
    signal (difference relative to displacement) is resolvable.  The caller
    evaluates the proposal and keeps it only on a sufficient merit decrease,
    so a bad one costs one evaluation and nothing else.
    """

    MAX_STRIDE = 4096

    def __init__(self):
        self.stride = 1
        self.count = 0
        self.last_lam = None
        self.prev_lam = None
        self.prev_disp = None

    def propose(self, lam_next: np.ndarray):
        self.count += 1
        if self.count < self.stride:
            return None
        self.count = 0
        raw = None
        if self.last_lam is not None:
            disp = lam_next - self.last_lam
            if self.prev_disp is not None:
                d_disp = disp - self.prev_disp
                denom = float(d_disp @ d_disp)
                norm_disp = math.sqrt(float(disp @ disp))
                if denom > 0.0:
                    # theta grows like 1/(1 - rate) when convergence crawls;
                    # that is the regime the extrapolation exists for, so it
                    # must not be capped.
                    theta = float(disp @ d_disp) / denom
                    raw = (self.last_lam + disp
                           - theta * ((self.last_lam - self.prev_lam) + d_disp))
                    if not (math.isfinite(theta) and np.all(np.isfinite(raw))):
                        raw = None
                if norm_disp > 0.0:
                    signal = math.sqrt(denom) / norm_disp
                    if signal < 0.03:
                        wanted = int(0.03 / max(signal, 1e-9)) + 1
                        self.stride = min(self.MAX_STRIDE, max(2 * self.stride, wanted))
                    else:
                        self.stride = max(1, self.stride // 2)
            self.prev_lam = self.last_lam
            self.prev_disp = disp
        self.last_lam = lam_next.copy()
        return raw

    def accepted(self):
        self.stride = max(1, self.stride // 2)
        self.count = 0
        self.last_lam = None
        self.prev_lam = None
        self.prev_disp = None

    def rejected(self):
        # Rejections are cheap (one evaluation); the stride is governed by
        # the displacement signal, so just skip one extra iteration.
        self.count = min(self.count, -1)


def _estimate_lipschitz(geval, X: np.ndarray) -> float:
    # Lipschitz estimate for the simplex pullback of the summed deviation:
    # a handful of random barycentric pairs plus short local displacements
    # (random pairs alone miss the top curvature direction).
    n = X.shape[0]
    rng = np.random.default_rng(_LIPSCHITZ_SEED)
    lams = list(rng.dirichlet(np.ones(n), size=5))
    uniform = np.full(n, 1.0 / n)
    for j in range(n):
        lams.append(0.9 * uniform + 0.1 * np.eye(n)[j])
    pulls = []
    for lam in lams:
        y = lam @ X
        g = geval(y)
        pulls.append((lam, X @ g - float(y @ g)))
    best = 0.0
    for (la, da), (lb, db) in itertools.combinations(pulls, 2):
        denom = float(np.linalg.norm(la - lb))
        if denom > 1e-14:
            best = max(best, float(np.linalg.norm(da - db)) / denom)
    return max(best, 1e-8)


def gen_deviation_mean(E: Sequence[GenDeviation], x: Sequence,
                       cfg: SolverConfig = DEFAULT_CONFIG,
                       init=None, lipschitz: Optional[float] = None,
                       keep_trace: bool = False) -> SolverReport:
    """Solve the hull variational inequality by extragradient iteration.

    Iterates live on barycentric coordinates: at weights lam with point
    y = sum_j lam_j x_j, the search direction is the slack vector
    (g (x_j - y))_j with g the summed deviation at y, stepped with step
    damping / L (L estimated from sampled direction differences) and
    projected back onto the simplex.  A secant extrapolation of the
    extragradient map is tried each iteration and kept only when it cuts the
    slack merit by 4x, which collapses the iteration count on nearly affine
    problems without touching the certificate.  Converged when
    max_j g (x_j - y) <= abs_tol (1 + max_i |x_i|) and the point movement
    also falls below that scale; the slack criterion alone certifies the
    point only to the square root of the slack, which is too coarse for the
    downstream oracle comparisons.

    The step is halved whenever the slack merit keeps growing or the iterate
    stagnates at a positive gap (symptoms of a step beyond the true inverse
    Lipschitz constant).  Strict-monotonicity violations on observed iterate
    pairs, which the deviation axioms rule out, raise InvalidDeviationError.
    """
    pts, dim = _check_family(E, x)
    n = len(pts)
    X = np.stack(pts, axis=0)
    scale = 1.0 + float(max(np.linalg.norm(p) for p in pts))
    slack_tol = cfg.abs_tol * scale
    step_tol = cfg.abs_tol * scale

    if n == 1:
        return SolverReport(value=pts[0].copy(), residual=0.0, iterations=0,
                            converged=True, barycentric=Barycentric((1.0,)))

    if init is None:
        lam = np.full(n, 1.0 / n)
    else:
        lam = np.asarray(init, dtype=float)
        if lam.shape != (n,):
            raise InvalidArgumentError("init must be a barycentric vector of length n")
        lam = _project_simplex(lam)

    geval = _sum_grad(E, pts, dim)
    L = lipschitz if lipschitz is not None else _estimate_lipschitz(geval, X)
    # Sampled L underestimates the true Lipschitz constant; keep a margin.
    tau = 0.5 * cfg.damping / L

    trace = [] if keep_trace else None
    y = lam @ X
    g = geval(y)
    slack = X @ g - float(y @ g)
    step = math.inf
    gap = math.inf
    merit_min = math.inf
    growth_streak = 0
    halvings = 0
    stagnant = 0
    wrong_pairings = 0
    iterations = 0
    accel = _SecantAccelerator()

    for iterations in range(1, cfg.max_iter + 1):
        sl = slack.tolist()
        gap = max(sl)
        if trace is not None:
            trace.append(y.copy())
        merit = sum(s * s for s in sl if s > 0.0)
        merit_min = min(merit_min, merit)
        # Material growth only: noise-level wiggles on a plateau must not
        # count, or the step collapses while the iterate is still moving.
        if merit > 4.0 * merit_min + slack_tol ** 2:
            growth_streak += 1
        else:
            growth_streak = 0
        if growth_streak >= 12:
            tau *= 0.5
            halvings += 1
            growth_streak = 0
            merit_min = merit
        if gap <= slack_tol and step <= step_tol:
            break
        if halvings > 24:
            break
        lam_half = _project_simplex(lam + tau * slack)
        y_half = lam_half @ X
        g_half = geval(y_half)
        # Strict monotonicity demands (g(y) - g(y')) (y - y') < 0; repeated
        # violations on observed pairs mean the deviation axioms fail.
        dy = y - y_half
        if dy @ dy > 0.0:
            pairing = float((g - g_half) @ dy)
            if pairing > 1e-12 * (1.0 + abs(float(g @ dy)) + abs(float(g_half @ dy))):
                wrong_pairings += 1
                if wrong_pairings >= 3:
                    raise InvalidDeviationError(
                        "the supplied deviations violate strict monotonicity on "
                        "sampled iterate pairs"
                    )
        slack_half = X @ g_half - float(y_half @ g_half)
        lam_plain = _project_simplex(lam + tau * slack_half)
        y_plain = lam_plain @ X
        g_plain = geval(y_plain)
        slack_plain = X @ g_plain - float(y_plain @ g_plain)
        merit_plain = sum(s * s for s in slack_plain.tolist() if s > 0.0)
        chosen = (lam_plain, y_plain, g_plain, slack_plain)
        # Strided secant extrapolation of the extragradient map, accepted
        # only on a strong merit decrease; the plain step remains the
        # fallback, so a bad proposal costs one evaluation and nothing else.
        raw = accel.propose(lam_plain)
        if raw is not None and merit_plain > 0.0:
            lam_acc = _project_simplex(raw)
            y_acc = lam_acc @ X
            g_acc = geval(y_acc)
            slack_acc = X @ g_acc - float(y_acc @ g_acc)
            merit_acc = sum(s * s for s in slack_acc.tolist() if s > 0.0)
            if merit_acc <= 0.25 * merit_plain:
                chosen = (lam_acc, y_acc, g_acc, slack_acc)
                accel.accepted()
            else:
                accel.rejected()
        lam_new, y_new, g_new, slack_new = chosen
        dy_new = y_new - y
        step = math.sqrt(float(dy_new @ dy_new))
        if step == 0.0:
            stagnant += 1
            if stagnant >= 10:
                if gap <= slack_tol:
                    break
                # Pinned at a face with positive gap: the step overshot and
                # the projection absorbed it; retry smaller.
                tau *= 0.5
                halvings += 1
                stagnant = 0
        else:
            stagnant = 0
        lam, y, g, slack = lam_new, y_new, g_new, slack_new

    bary = Barycentric.clipped(lam)
    y = bary.array @ X
    g = geval(y)
    slack = X @ g - float(y @ g)
    gap = float(slack.max())
    return SolverReport(
        value=y,
        residual=gap,
        iterations=iterations,
        converged=gap <= slack_tol,
        trace=tuple(trace) if trace is not None else None,
        barycentric=bary,
    )


@dataclass(frozen=True)
class ViReport:
    """Outcome of checking the hull variational inequality at a point."""

    ok: bool
    slacks: tuple[float, ...]
    worst_index: int
    worst_slack: float
    hull_residual: float


def barycentric_feasibility(x: Sequence, y) -> tuple[np.ndarray, float]:
    """Least-squares barycentric coordinates of y over x and their residual."""
    pts = as_point_tuple(x)
    yv = as_point(y, pts[0].shape[0])
    X = np.stack(pts, axis=0)
    scale = 1.0 + float(np.abs(X).max())
    A = np.vstack([X.T, np.full((1, len(pts)), scale)])
    b = np.concatenate([yv, [scale]])
    lam, _ = nnls(A, b)
    residual = float(np.linalg.norm(A @ lam - b))
    return lam, residual


def verify_vi(E: Sequence[GenDeviation], x: Sequence, y, tol: float) -> ViReport:
    """Check the n hull inequalities at y, reporting the worst slack.

    y must be expressible in conv(x) within tol (small nonnegative
    least-squares feasibility solve); otherwise HullViolationError.
    """
    from .errors import HullViolationError

    pts, dim = _check_family(E, x)
    yv = as_point(y, dim)
    _, hull_residual = barycentric_feasibility(pts, yv)
    feas_tol = tol * (1.0 + float(np.linalg.norm(yv)))
    if hull_residual > feas_tol:
        raise HullViolationError(
            f"point {yv} is {hull_residual:.3g} away from conv(x), beyond {feas_tol:.3g}"
        )
    g = gen_e_sum(E, pts, yv).array
    slacks = tuple(float(g @ (p - yv)) for p in pts)
    worst = int(np.argmax(slacks))
    return ViReport(
        ok=slacks[worst] <= tol,
        slacks=slacks,
        worst_index=worst,
        worst_slack=slacks[worst],
        hull_residual=hull_residual,
    )


def _fd_grad(feval, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # Central differences in the second argument; h balances truncation
    # against rounding for double precision.
    out = np.zeros_like(v)
    for i in range(v.size):
        h = 6e-6 * (1.0 + abs(float(v[i])))
        vp, vm = v.copy(), v.copy()
        vp[i] += h
        vm[i] -= h
        out[i] = (feval(u, vp) - feval(u, vm)) / (2.0 * h)
    return out


@dataclass(frozen=True)
class PotentialFn:
    """A potential F(u, v) whose section in v is strictly convex with a
    minimum at v = u.

    ``grad_v`` may be omitted, in which case central finite differences of
    ``eval`` are used.  Sampled at construction: grad_v(u, u) = 0, strict
    midpoint convexity of the sections, and agreement of ``grad_v`` with
    finite differences.
    """

    dim: int
    eval: Callable
    grad_v: Optional[Callable] = None
    label: str = "potential"
    sample_low: float = -1.0
    sample_high: float = 1.0
    samples: int = 32
    validate: bool = True

    def __post_init__(self):
        if self.dim <= 0:
            raise InvalidArgumentError("potential dimension must be positive")
        if self.grad_v is None:
            object.__setattr__(
                self, "grad_v",
                lambda u, v, f=self.eval: _fd_grad(f, np.asarray(u, float), np.asarray(v, float)),
            )
        if self.validate and self.samples > 0:
            self._check_property()

    def value(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(self.eval(u, v))

    def grad(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return _as_grad(self.grad_v(u, v), self.dim)

    def _check_property(self):
        rng = np.random.default_rng(_VALIDATION_SEED + 1)
        shape = (self.samples, self.dim)
        us = rng.uniform(self.sample_low, self.sample_high, shape)
        vs = rng.uniform(self.sample_low, self.sample_high, shape)
        ws = rng.uniform(self.sample_low, self.sample_high, shape)
        for u, v, w in zip(us, vs, ws):
            g0 = self.grad(u, u)
            if np.abs(g0).max() > 1e-6 * (1.0 + np.abs(self.grad(u, v)).max()):
                raise InvalidPotentialError(
                    f"{self.label}: gradient does not vanish on the diagonal at u={u}"
                )
            if np.linalg.norm(v - w) > 1e-9:
                fmid = self.value(u, 0.5 * (v + w))
                favg = 0.5 * (self.value(u, v) + self.value(u, w))
                if not fmid < favg + 1e-12 * (1.0 + abs(favg)):
                    raise InvalidPotentialError(
                        f"{self.label}: section not strictly convex between {v} and {w}"
                    )
            fd = _fd_grad(self.eval, u, v)
            gv = self.grad(u, v)
            if np.abs(fd - gv).max() > 1e-6 * (1.0 + np.abs(gv).max()):
                raise InvalidPotentialError(
                    f"{self.label}: grad_v disagrees with finite differences at ({u}, {v})"
                )


def make_potential_deviation(F: PotentialFn) -> GenDeviation:
    """The generalized deviation E(u, v) = -grad_v F(u, v).

    The deviation axioms follow from the potential property; they are
    re-sampled here and a failure raises InvalidPotentialError.
    """
    dev = GenDeviation(
        dim=F.dim,
        eval=lambda u, v, g=F.grad: -g(np.asarray(u, float), np.asarray(v, float)),
        label=f"deviation of {F.label}",
        sample_low=F.sample_low,
        sample_high=F.sample_high,
        samples=F.samples,
        validate=False,
    )
    if F.validate and F.samples > 0:
        try:
            dev._check_axioms()
        except InvalidDeviationError as exc:
            raise InvalidPotentialError(str(exc)) from exc
    return dev


def make_norm_sq_potential(w, dim: int, label: str = "norm-squared") -> PotentialFn:
    """The potential F(u, v) = w(u) |v - u|^2 with Euclidean norm.

    ``w`` is a positive constant or a positive callable on points; the
    gradient 2 w(u) (v - u) is supplied analytically.
    """
    if callable(w):
        weight = w
    else:
        c = float(w)
        if not c > 0:
            raise InvalidArgumentError("norm-squared weight must be positive")
        weight = lambda u, c=c: c  # noqa: E731

    def feval(u, v, weight=weight):
        diff = np.asarray(v, float) - np.asarray(u, float)
        return float(weight(u) * float(diff @ diff))

    def fgrad(u, v, weight=weight):
        return 2.0 * weight(u) * (np.asarray(v, float) - np.asarray(u, float))

    return PotentialFn(dim=dim, eval=feval, grad_v=fgrad, label=label, validate=False)


def _check_potentials(F: Sequence[PotentialFn], x: Sequence):
    if len(F) == 0:
        raise InvalidArgumentError("empty potential tuple")
    dim = F[0].dim
    for f in F[1:]:
        if f.dim != dim:
            raise InvalidArgumentError("potentials must share one dimension")
    pts = as_point_tuple(x, dim)
    if len(pts) != len(F):
        raise InvalidArgumentError(f"tuple length {len(pts)} != potential count {len(F)}")
    return pts, dim


def potential_mean(F: Sequence[PotentialFn], x: Sequence,
                   cfg: SolverConfig = DEFAULT_CONFIG) -> SolverReport:
    """Minimize sum_i F_i(x_i, v) over conv(x) by projected gradient descent.

    Backtracking line search with Armijo constant 1e-4, shrink factor 0.5,
    initial step 1.0.  The convergence certificate is the same hull slack as
    for the variational inequality, taken with g = -sum grad.
    """
    pts, dim = _check_potentials(F, x)
    n = len(pts)
    X = np.stack(pts, axis=0)
    scale = 1.0 + float(max(np.linalg.norm(p) for p in pts))
    slack_tol = cfg.abs_tol * scale
    step_tol = cfg.abs_tol * scale

    if n == 1:
        return SolverReport(value=pts[0].copy(), residual=0.0, iterations=0,
                            converged=True, barycentric=Barycentric((1.0,)))

    fevals = [f.eval for f in F]
    fgrads = [f.grad for f in F]

    def phi(y: np.ndarray) -> float:
        return math.fsum(float(fe(xi, y)) for fe, xi in zip(fevals, pts))

    def total_grad(y: np.ndarray) -> np.ndarray:
        out = np.zeros(dim)
        for fg, xi in zip(fgrads, pts):
            out += fg(xi, y)
        return out

    def slack_of(y_at: np.ndarray, G_at: np.ndarray) -> np.ndarray:
        return float(y_at @ G_at) - X @ G_at  # (-G) (x_j - y)

    lam = np.full(n, 1.0 / n)
    y = lam @ X
    value = phi(y)
    G = total_grad(y)
    slack = slack_of(y, G)
    step = math.inf
    gap = math.inf
    iterations = 0
    # The Armijo phase drives the objective down; once its improvements sink
    # below float noise (which caps point accuracy near sqrt(eps)), a
    # fixed-step polish phase at the sampled Lipschitz scale finishes the
    # job.  In both phases a secant extrapolation of the update map is tried
    # and kept only when it cuts the positive-slack merit by 4x: the simplex
    # pullback turns nearly degenerate whenever data points almost coincide,
    # and the extrapolation is what collapses those crawling modes.
    polish_t: Optional[float] = None
    zero_steps = 0
    grow_streak = 0
    prev_step = math.inf
    accel = _SecantAccelerator()
    window_best = math.inf
    window_count = 0
    for iterations in range(1, cfg.max_iter + 1):
        gap = float(slack.max())
        if gap <= slack_tol and step <= step_tol:
            break
        glam = X @ G
        if polish_t is None:
            # Line-search stagnation watch: accepted steps that stop moving
            # the hull gap (ill-conditioned zig-zag) hand over to the polish
            # phase, where the secant can act on a clean update sequence.
            if gap < 0.66 * window_best:
                window_best = gap
                window_count = 0
            else:
                window_count += 1
            t = 1.0
            accepted = False
            while t > 1e-20:
                lam_plain = _project_simplex(lam - t * glam)
                y_plain = lam_plain @ X
                plain_value = phi(y_plain)
                if plain_value <= value + 1e-4 * float(glam @ (lam_plain - lam)):
                    accepted = True
                    break
                t *= 0.5
            if (not accepted or window_count >= 30
                    or abs(plain_value - value) <= 64.0 * 2.2e-16 * (1.0 + abs(value))):
                # No signal left in the objective, or no gap progress.
                polish_t = 1.0 / _estimate_lipschitz(total_grad, X)
        if polish_t is not None:
            lam_plain = _project_simplex(lam - polish_t * glam)
            y_plain = lam_plain @ X
            plain_value = value
        G_plain = total_grad(y_plain)
        slack_plain = slack_of(y_plain, G_plain)
        merit_plain = sum(s * s for s in slack_plain.tolist() if s > 0.0)
        chosen = (lam_plain, y_plain, G_plain, slack_plain, plain_value)
        raw = accel.propose(lam_plain)
        if raw is not None and merit_plain > 0.0:
            lam_acc = _project_simplex(raw)
            y_acc = lam_acc @ X
            G_acc = total_grad(y_acc)
            slack_acc = slack_of(y_acc, G_acc)
            merit_acc = sum(s * s for s in slack_acc.tolist() if s > 0.0)
            if merit_acc <= 0.25 * merit_plain:
                acc_value = phi(y_acc) if polish_t is None else plain_value
                chosen = (lam_acc, y_acc, G_acc, slack_acc, acc_value)
                accel.accepted()
            else:
                accel.rejected()
        lam_new, y_new, G_new, slack_new, value_new = chosen
        step = float(np.linalg.norm(y_new - y))
        lam, y, G, slack, value = lam_new, y_new, G_new, slack_new, value_new
        if step == 0.0:
            # The update map reached its float fixed point; there is nothing
            # more to extract at this resolution.
            zero_steps += 1
            if gap <= slack_tol or zero_steps >= 25:
                break
        else:
            zero_steps = 0
        if polish_t is not None:
            if step > prev_step:
                grow_streak += 1
                if grow_streak >= 8:
                    polish_t *= 0.5
                    grow_streak = 0
            else:
                grow_streak = 0
            prev_step = step

    bary = Barycentric.clipped(lam)
    y = bary.array @ X
    G = total_grad(y)
    slack = float(y @ G) - X @ G
    gap = float(slack.max())
    return SolverReport(
        value=y,
        residual=gap,
        iterations=iterations,
        converged=gap <= slack_tol,
        barycentric=bary,
    )


def _lattice_weights(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _lattice_weights(total - head, parts - 1):
            yield (head,) + rest


def grid_oracle_mean(F: Sequence[PotentialFn], x: Sequence, resolution: int) -> np.ndarray:
    """Exhaustive minimizer of the summed potential on a barycentric lattice.

    Independent brute-force oracle: evaluates every weight vector with
    denominators resolution - 1 and returns the best lattice point.  The
    lattice size grows combinatorially; intended for small tuples.
    """
    if resolution < 2:
        raise InvalidArgumentError("grid resolution must be at least 2")
    pts, dim = _check_potentials(F, x)
    n = len(pts)
    if n == 1:
        return pts[0].copy()
    X = np.stack(pts, axis=0)
    m = resolution - 1
    fevals = [f.eval for f in F]
    best_y = None
    best_val = math.inf
    for counts in _lattice_weights(m, n):
        lam = np.asarray(counts, dtype=float) / m
        y = lam @ X
        val = math.fsum(float(fe(xi, y)) for fe, xi in zip(fevals, pts))
        if val < best_val:
            best_val = val
            best_y = y
    return best_y
