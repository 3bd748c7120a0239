"""Reductions of means: solving M((x|chi)(y)) = y for y in the hull of x.

Given an n-variable mean M and an injection chi of k slots into n, the
reduction of M at a k-tuple x is a fixed point of the spliced evaluation
y -> M((x|chi)(y)).  For scalar means the mean property pins the sign of
mu(y) = M((x|chi)(y)) - y at the ends of [min(x), max(x)], so bisection on mu
converges unconditionally; fixed-point iteration could cycle for
non-contractive maps.  For vector means the solver is a damped fixed-point
iteration from the centroid, with a safeguarded secant (Anderson depth-1)
extrapolation layered on top: plain iteration contracts arbitrarily slowly
when the spliced slots dominate, and the extrapolated iterate is only ever
accepted when it reduces the fixed-point residual, so certificates are
unaffected.

Uniqueness cannot be decided for a black-box mean; results carry a tri-state
flag ("unique" / "multiple-suspected" / "unknown") driven by sign probes in
the scalar case and by multi-start disagreement in the vector case, never a
silent claim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    DEFAULT_CONFIG,
    Injection,
    SolverConfig,
    SolverReport,
    as_point_tuple,
    select,
    splice,
)
from .errors import (
    HullViolationError,
    InvalidArgumentError,
    NoConvergenceError,
    NotAMeanError,
)
from .scalar import as_deviation_tuple, deviation_mean, weighted_arith_mean
from .vector import GenDeviation, barycentric_feasibility, gen_deviation_mean

UNIQUE = "unique"
MULTIPLE_SUSPECTED = "multiple-suspected"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class MeanFn:
    """An n-variable mean as a callable with declared arity and kind.

    ``dim`` is None for scalar means and the point dimension for vector
    means.  The mean property and reflexivity are not enforceable for a
    black-box callable; ``check_mean_function`` samples them on demand.
    """

    arity: int
    eval: Callable
    dim: Optional[int] = None
    symmetric: bool = False
    label: str = "mean"

    def __post_init__(self):
        if self.arity <= 0:
            raise InvalidArgumentError("mean arity must be positive")
        if self.dim is not None and self.dim <= 0:
            raise InvalidArgumentError("mean dimension must be positive")

    @property
    def kind(self) -> str:
        return "scalar" if self.dim is None else "vector"

    def __call__(self, x: Sequence):
        if len(x) != self.arity:
            raise InvalidArgumentError(
                f"{self.label} expects {self.arity} arguments, got {len(x)}"
            )
        return self.eval(tuple(x))


def check_mean_function(M: MeanFn, sample_point: Callable, samples: int = 32,
                        seed: int = 0, tol: float = 1e-9):
    """Sample the mean property and reflexivity of a MeanFn.

    ``sample_point(rng)`` draws one admissible point of the mean's domain.
    Raises NotAMeanError on a violation.
    """
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        xs = tuple(sample_point(rng) for _ in range(M.arity))
        value = M(xs)
        if M.dim is None:
            lo, hi = min(xs), max(xs)
            if not (lo - 1e-12 * (1 + abs(lo)) <= value <= hi + 1e-12 * (1 + abs(hi))):
                raise NotAMeanError(f"{M.label}: value {value} outside [{lo}, {hi}]")
        else:
            _, residual = barycentric_feasibility(xs, value)
            if residual > tol * (1.0 + float(np.linalg.norm(value))):
                raise NotAMeanError(f"{M.label}: value {value} outside the hull")
        u = sample_point(rng)
        refl = M((u,) * M.arity)
        gap = abs(refl - u) if M.dim is None else float(np.linalg.norm(refl - u))
        scale = 1.0 + (abs(u) if M.dim is None else float(np.linalg.norm(u)))
        if gap > 1e-12 * scale:
            raise NotAMeanError(f"{M.label}: not reflexive at {u}: {refl}")


@dataclass(frozen=True)
class ReductionResult:
    """A reduced mean value with its fixed-point certificate."""

    reduced_value: Union[float, np.ndarray]
    fixed_point_residual: float
    certificate: SolverReport
    unique_flag: str = UNKNOWN
    continuity_suspect: bool = False

    def to_json(self) -> dict:
        value = self.reduced_value
        if isinstance(value, np.ndarray):
            value = [float(v) for v in value]
        else:
            value = float(value)
        return {
            "value": value,
            "residual": float(self.fixed_point_residual),
            "iterations": int(self.certificate.iterations),
            "converged": bool(self.certificate.converged),
            "unique_flag": self.unique_flag,
            "continuity_suspect": bool(self.continuity_suspect),
        }


def _check_chi(M: MeanFn, chi: Injection, x: Sequence):
    if chi.n != M.arity:
        raise InvalidArgumentError(f"injection targets {chi.n} slots, mean has {M.arity}")
    if len(x) != chi.k:
        raise InvalidArgumentError(f"tuple length {len(x)} != injection arity {chi.k}")


def spliced_eval(M: MeanFn, chi: Injection, x: Sequence, y):
    """Evaluate M on the tuple that places x along chi and y elsewhere.

    y must lie in the hull of x (interval check for scalars, least-squares
    feasibility for points); otherwise HullViolationError.
    """
    _check_chi(M, chi, x)
    if M.dim is None:
        xs = [float(v) for v in x]
        spread = max(xs) - min(xs)
        slack = 1e-12 * (1.0 + spread + abs(float(y)))
        if not (min(xs) - slack <= float(y) <= max(xs) + slack):
            raise HullViolationError(f"{y} outside [{min(xs)}, {max(xs)}]")
        return M(splice(xs, chi, float(y)))
    pts = as_point_tuple(x, M.dim)
    _, residual = barycentric_feasibility(pts, y)
    if residual > 1e-9 * (1.0 + float(np.linalg.norm(np.asarray(y, float)))):
        raise HullViolationError(f"{y} outside conv(x): residual {residual:.3g}")
    return M(splice(pts, chi, np.asarray(y, dtype=float)))


def reduce_scalar(M: MeanFn, chi: Injection, x: Sequence[float],
                  cfg: SolverConfig = DEFAULT_CONFIG) -> ReductionResult:
    """Reduce a scalar mean by bisection on mu(y) = M((x|chi)(y)) - y.

    The mean property forces mu >= 0 at min(x) and mu <= 0 at max(x); a sign
    anomaly beyond abs_tol raises NotAMeanError.  Adjacent evaluations whose
    gap exceeds 1000 times their separation mark the result as continuity
    suspect.  After the root is located, sign probes on both sides check the
    single-crossing picture; a probe with the wrong sign downgrades the
    uniqueness flag to "multiple-suspected".
    """
    _check_chi(M, chi, x)
    if M.dim is not None:
        raise InvalidArgumentError("reduce_scalar needs a scalar mean")
    xs = [float(v) for v in x]
    a0, b0 = min(xs), max(xs)
    spread = b0 - a0
    res_tol = cfg.abs_tol * (1.0 + spread)

    def m(y: float) -> float:
        return float(M(splice(xs, chi, y)))

    if spread == 0.0:
        report = SolverReport(value=a0, residual=0.0, iterations=0, converged=True)
        return ReductionResult(a0, 0.0, report, unique_flag=UNIQUE)

    mu_a = m(a0) - a0
    mu_b = m(b0) - b0
    if mu_a < -cfg.abs_tol:
        raise NotAMeanError(f"mu(min x) = {mu_a} < 0: {M.label} violates the mean property")
    if mu_b > cfg.abs_tol:
        raise NotAMeanError(f"mu(max x) = {mu_b} > 0: {M.label} violates the mean property")

    suspect = False
    prev_y: Optional[float] = None
    prev_m: Optional[float] = None

    def probe(y: float) -> float:
        nonlocal suspect, prev_y, prev_m
        my = m(y)
        if prev_y is not None and y != prev_y:
            if abs(my - prev_m) > 1e3 * abs(y - prev_y):
                suspect = True
        prev_y, prev_m = y, my
        return my - y

    a, b = a0, b0
    iterations = 0
    if mu_a <= 0.0:
        root, residual = a0, abs(mu_a)
    elif mu_b >= 0.0:
        root, residual = b0, abs(mu_b)
    else:
        # The bracket width floor only stops stagnation at float resolution;
        # convergence itself is judged by the fixed-point residual.
        width_floor = 8.0 * np.finfo(float).eps * (abs(a0) + abs(b0) + 1.0)
        root, residual = a0, abs(mu_a)
        exhausted = True
        for iterations in range(1, cfg.max_iter + 1):
            mid = 0.5 * (a + b)
            mu = probe(mid)
            if abs(mu) < residual:
                root, residual = mid, abs(mu)
            if mu == 0.0:
                exhausted = False
                break
            if mu > 0.0:
                a = mid
            else:
                b = mid
            if residual <= res_tol or (b - a) <= width_floor:
                exhausted = False
                break
        if exhausted or residual > res_tol:
            report = SolverReport(value=root, residual=residual,
                                  iterations=iterations,
                                  converged=residual <= res_tol)
            return ReductionResult(root, residual, report,
                                   unique_flag=UNKNOWN,
                                   continuity_suspect=suspect)

    unique = UNIQUE
    band = max(16.0 * res_tol, 1e-9 * spread)
    probes = np.linspace(a0, b0, 9)[1:-1]
    for y in probes:
        y = float(y)
        if abs(y - root) <= band:
            continue
        sign = m(y) - y
        want = root - y
        if sign * want < 0 and abs(sign) > res_tol:
            unique = MULTIPLE_SUSPECTED
            break

    converged = residual <= res_tol
    report = SolverReport(value=root, residual=residual, iterations=iterations,
                          converged=converged)
    return ReductionResult(root, residual, report,
                           unique_flag=unique if converged else UNKNOWN,
                           continuity_suspect=suspect)


def _fixed_point_run(m: Callable, y0: np.ndarray, tol: float, cfg: SolverConfig,
                     max_iter: int) -> tuple[np.ndarray, float, int, bool]:
    """Damped fixed-point iteration with safeguarded secant extrapolation."""
    alpha = cfg.damping
    y = y0.copy()
    r = m(y) - y
    rnorm = float(np.linalg.norm(r))
    prev: Optional[tuple[np.ndarray, np.ndarray]] = None
    no_progress = 0
    iterations = 0
    while rnorm > tol and iterations < max_iter:
        iterations += 1
        y_next = None
        if prev is not None:
            dr = r - prev[1]
            denom = float(dr @ dr)
            if denom > 0.0:
                theta = float(r @ dr) / denom
                if abs(theta) <= 8.0:
                    cand = (y + r) - theta * ((y - prev[0]) + dr)
                    if np.all(np.isfinite(cand)):
                        y_next = cand
        plain = y + alpha * r
        if y_next is None:
            y_next = plain
            accelerated = False
        else:
            accelerated = True
        r_next = m(y_next) - y_next
        rn = float(np.linalg.norm(r_next))
        if accelerated and rn > rnorm:
            y_next = plain
            r_next = m(y_next) - y_next
            rn = float(np.linalg.norm(r_next))
            prev = None
        else:
            prev = (y, r)
        if rn >= rnorm:
            no_progress += 1
            if no_progress >= 10:
                alpha = max(alpha * 0.5, 1.0 / 64.0)
                no_progress = 0
        else:
            no_progress = 0
        y, r, rnorm = y_next, r_next, rn
    return y, rnorm, iterations, rnorm <= tol


def reduce_vector(M: MeanFn, chi: Injection, x: Sequence,
                  cfg: SolverConfig = DEFAULT_CONFIG) -> ReductionResult:
    """Reduce a vector mean by damped fixed-point iteration from the centroid.

    Restarts from k+1 initializations (the centroid and blends toward each
    data point) drive the uniqueness flag: converged restarts that disagree
    beyond 1e-6 mark the reduction "multiple-suspected"; a restart that fails
    to converge leaves it "unknown".
    """
    _check_chi(M, chi, x)
    if M.dim is None:
        raise InvalidArgumentError("reduce_vector needs a vector mean")
    pts = as_point_tuple(x, M.dim)
    k = len(pts)
    X = np.stack(pts, axis=0)
    centroid = X.mean(axis=0)
    spread = max(
        (float(np.linalg.norm(p - q)) for p in pts for q in pts),
        default=0.0,
    )
    tol = cfg.abs_tol * (1.0 + spread)

    def m(y: np.ndarray) -> np.ndarray:
        return np.asarray(M(splice(pts, chi, y)), dtype=float)

    if spread == 0.0:
        report = SolverReport(value=pts[0].copy(), residual=0.0, iterations=0, converged=True)
        return ReductionResult(pts[0].copy(), 0.0, report, unique_flag=UNIQUE)

    y, rnorm, iterations, converged = _fixed_point_run(m, centroid, tol, cfg, cfg.max_iter)
    report = SolverReport(value=y, residual=rnorm, iterations=iterations, converged=converged)

    restart_tol = max(tol, 1e-8 * (1.0 + spread))
    results = [y] if converged else []
    all_converged = converged
    for j in range(k):
        init = 0.5 * pts[j] + 0.5 * centroid
        yj, _, _, okj = _fixed_point_run(m, init, restart_tol, cfg, cfg.max_iter)
        if okj:
            results.append(yj)
        all_converged = all_converged and okj
    if not all_converged:
        flag = UNKNOWN
    else:
        worst = max(
            (float(np.linalg.norm(p - q)) for p in results for q in results),
            default=0.0,
        )
        flag = UNIQUE if worst <= 1e-6 else MULTIPLE_SUSPECTED

    return ReductionResult(y, rnorm, report, unique_flag=flag)


def reduce_mean(M: MeanFn, chi: Injection, x: Sequence,
                cfg: SolverConfig = DEFAULT_CONFIG) -> ReductionResult:
    """Dispatch to the scalar or vector reduction."""
    if M.dim is None:
        return reduce_scalar(M, chi, x, cfg)
    return reduce_vector(M, chi, x, cfg)


def reduced_mean_fn(M: MeanFn, chi: Injection, cfg: SolverConfig = DEFAULT_CONFIG,
                    require_converged: bool = True) -> MeanFn:
    """The k-variable mean x -> reduction of M along chi at x."""

    def eval_reduced(xs):
        result = reduce_mean(M, chi, xs, cfg)
        if require_converged and not result.certificate.converged:
            raise NoConvergenceError(
                f"reduction of {M.label} did not converge at {xs}",
                best=result.reduced_value,
                residual=result.fixed_point_residual,
            )
        return result.reduced_value

    return MeanFn(
        arity=chi.k,
        eval=eval_reduced,
        dim=M.dim,
        symmetric=False,
        label=f"{M.label} reduced by {chi.map}",
    )


@dataclass(frozen=True)
class OracleCheckReport:
    """Aggregate of a randomized two-route agreement check."""

    samples: int
    tol: float
    max_abs_error: float
    failures: tuple = ()

    @property
    def passed(self) -> bool:
        return len(self.failures) == 0

    def to_json(self) -> dict:
        return {
            "samples": int(self.samples),
            "tol": float(self.tol),
            "max_abs_error": float(self.max_abs_error),
            "failures": len(self.failures),
            "passed": self.passed,
        }


def check_weighted_arith_reduction(w: Sequence, chi: Injection, samples: int,
                                   tol: float, seed: int = 0,
                                   cfg: SolverConfig = DEFAULT_CONFIG) -> OracleCheckReport:
    """Reducing a functionally weighted arithmetic mean must select weights.

    Over randomized k-tuples, the fixed-point reduction of the n-variable
    weighted arithmetic mean is compared with the k-variable weighted
    arithmetic mean built from the weights picked out by the injection.
    """
    if len(w) != chi.n:
        raise InvalidArgumentError(f"need {chi.n} weights, got {len(w)}")
    dom = getattr(w[0], "domain", None)
    lo, hi = dom.finite_window() if dom is not None else (-4.0, 4.0)
    M = MeanFn(
        arity=chi.n,
        eval=lambda xs, w=tuple(w): weighted_arith_mean(w, xs),
        symmetric=False,
        label="weighted arithmetic",
    )
    # The fixed-point residual amplifies into the value by the inverse slope
    # of mu, so the certificate must sit well below the agreement tolerance.
    run_cfg = SolverConfig(abs_tol=min(cfg.abs_tol, tol * 1e-3),
                           rel_tol=cfg.rel_tol, max_iter=cfg.max_iter,
                           damping=cfg.damping)
    w_sel = select(tuple(w), chi)
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    for _ in range(samples):
        xs = tuple(float(v) for v in rng.uniform(lo, hi, chi.k))
        lhs = reduce_scalar(M, chi, xs, run_cfg).reduced_value
        rhs = weighted_arith_mean(w_sel, xs)
        err = abs(lhs - rhs)
        worst = max(worst, err)
        if err > tol:
            failures.append({"x": list(xs), "reduced": lhs, "direct": rhs, "error": err})
    return OracleCheckReport(samples=samples, tol=tol, max_abs_error=worst,
                             failures=tuple(failures))


def check_deviation_reduction(E, chi: Injection, samples: int, tol: float,
                              seed: int = 0, cfg: SolverConfig = DEFAULT_CONFIG,
                              low: float = -2.0, high: float = 2.0) -> OracleCheckReport:
    """Reducing a deviation mean must select deviations.

    The fixed-point reduction of the n-variable deviation mean is compared
    with the k-variable deviation mean of the selected deviations, over
    randomized k-tuples.  Accepts scalar deviation tuples or generalized
    deviations; for the latter the data is drawn from [low, high]^dim.

    Inner mean solves and the outer fixed-point certificate both derive from
    the agreement tolerance: the outer residual amplifies into the reduced
    value by the inverse slope of mu and cannot beat the accuracy of the
    nested evaluations, so the chain is inner << outer << tol.
    """
    entries = tuple(E)
    if len(entries) != chi.n:
        raise InvalidArgumentError(f"need {chi.n} deviations, got {len(entries)}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    inner_abs = min(cfg.abs_tol, tol * 1e-4)
    inner = SolverConfig(abs_tol=inner_abs, rel_tol=min(cfg.rel_tol, 1e-13),
                         max_iter=cfg.max_iter, damping=cfg.damping)
    outer = SolverConfig(abs_tol=max(tol * 1e-3, inner_abs * 10.0),
                         rel_tol=cfg.rel_tol, max_iter=cfg.max_iter,
                         damping=cfg.damping)
    if isinstance(entries[0], GenDeviation):
        from .descriptors import gen_deviation_mean_fn

        dim = entries[0].dim
        selected = select(entries, chi)
        for _ in range(samples):
            xs = tuple(rng.uniform(low, high, dim) for _ in range(chi.k))
            # Fresh warm-start wrapper per sample: the nested solves along one
            # fixed-point iteration share their barycentric seed.
            M = gen_deviation_mean_fn(entries, inner)
            lhs = reduce_vector(M, chi, xs, outer).reduced_value
            rhs = gen_deviation_mean(selected, xs, inner).value
            err = float(np.linalg.norm(lhs - rhs))
            worst = max(worst, err)
            if err > tol:
                failures.append({
                    "x": [list(map(float, p)) for p in xs],
                    "reduced": [float(v) for v in lhs],
                    "direct": [float(v) for v in rhs],
                    "error": err,
                })
    else:
        dev = as_deviation_tuple(entries)
        lo, hi = dev.common_domain.finite_window()
        selected = dev.select(chi)
        M = MeanFn(
            arity=chi.n,
            eval=lambda xs, E=dev, cfg=inner: deviation_mean(E, xs, cfg).value,
            label="deviation mean",
        )
        for _ in range(samples):
            xs = tuple(float(v) for v in rng.uniform(lo, hi, chi.k))
            lhs = reduce_scalar(M, chi, xs, outer).reduced_value
            rhs = deviation_mean(selected, xs, inner).value
            err = abs(lhs - rhs)
            worst = max(worst, err)
            if err > tol:
                failures.append({"x": list(xs), "reduced": lhs, "direct": rhs, "error": err})
    return OracleCheckReport(samples=samples, tol=tol, max_abs_error=worst,
                             failures=tuple(failures))
