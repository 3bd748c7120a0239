"""Deviation functions on intervals and the means they generate.

A deviation is a two-place function E on an interval with E(u, u) = 0 whose
second-argument sections are continuous and strictly decreasing; the
deviation mean of a tuple x is the unique root y of

    E_1(x_1, y) + ... + E_n(x_n, y) = 0

inside [min(x), max(x)].  The root always exists because the summed section
is strictly decreasing with opposite signs at the endpoints, so the solver is
a bracketed bisection: the only method whose convergence needs nothing beyond
continuity and monotonicity.

Classical families (Bajraktarevic, Matkowski, Gini, Holder / power means,
quasi-arithmetic means) are provided in closed form; they double as oracles
for the root-finding path in the test suite.

Deviation axioms cannot be proven for arbitrary callables, so constructors
check them on randomized samples (configurable count); strictness remains
sampled, not proven.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import DEFAULT_CONFIG, Interval, POSITIVE_REALS, REALS, SolverConfig, SolverReport
from .errors import (
    DomainError,
    InvalidArgumentError,
    InvalidDeviationError,
    NoConvergenceError,
)

DEFAULT_VALIDATION_SAMPLES = 64
_VALIDATION_SEED = 20240901


def _sample_window(domain: Interval, rng: np.random.Generator, count: int) -> np.ndarray:
    lo, hi = domain.finite_window()
    return rng.uniform(lo, hi, size=count)


@dataclass(frozen=True)
class WeightFn:
    """A positive weight function on an interval."""

    eval: Callable[[float], float]
    domain: Interval = REALS
    samples: int = DEFAULT_VALIDATION_SAMPLES
    validate: bool = True

    def __post_init__(self):
        if self.validate and self.samples > 0:
            rng = np.random.default_rng(_VALIDATION_SEED)
            for u in _sample_window(self.domain, rng, self.samples):
                w = self.eval(float(u))
                if not (math.isfinite(w) and w > 0.0):
                    raise InvalidArgumentError(
                        f"weight function is not positive at u={u}: {w}"
                    )

    def __call__(self, u: float) -> float:
        return self.eval(u)


def constant_weight(c: float, domain: Interval = REALS) -> WeightFn:
    if not c > 0:
        raise InvalidArgumentError("constant weight must be positive")
    return WeightFn(eval=lambda u, c=float(c): c, domain=domain, validate=False)


def power_weight(q: float, domain: Interval = POSITIVE_REALS) -> WeightFn:
    return WeightFn(eval=lambda u, q=float(q): u ** q, domain=domain, validate=False)


@dataclass(frozen=True)
class GeneratorFn:
    """A strictly increasing continuous function together with its inverse."""

    eval: Callable[[float], float]
    inverse: Callable[[float], float]
    domain: Interval = REALS
    samples: int = DEFAULT_VALIDATION_SAMPLES
    validate: bool = True

    def __post_init__(self):
        if self.validate and self.samples > 0:
            rng = np.random.default_rng(_VALIDATION_SEED + 1)
            us = np.sort(_sample_window(self.domain, rng, self.samples))
            prev_u, prev_f = None, None
            for u in us:
                u = float(u)
                fu = self.eval(u)
                if not math.isfinite(fu):
                    raise InvalidArgumentError(f"generator not finite at u={u}")
                if prev_f is not None and u > prev_u and not fu > prev_f:
                    raise InvalidArgumentError(
                        f"generator is not strictly increasing between {prev_u} and {u}"
                    )
                back = self.inverse(fu)
                if abs(back - u) > 1e-10 * (1.0 + abs(u)):
                    raise InvalidArgumentError(
                        f"generator inverse round-trip failed at u={u}: got {back}"
                    )
                prev_u, prev_f = u, fu

    def __call__(self, u: float) -> float:
        return self.eval(u)


def numeric_inverse(fn: Callable[[float], float], domain: Interval,
                    cfg: SolverConfig = DEFAULT_CONFIG) -> Callable[[float], float]:
    """Invert a strictly increasing function by bracket expansion + bisection.

    The bracket starts from the domain's finite window and grows outward
    (geometrically toward infinite endpoints, by endpoint-halving toward open
    finite ones) until it straddles the target value.
    """
    lo0, hi0 = domain.finite_window()

    def inverse(t: float, fn=fn, domain=domain, cfg=cfg, lo0=lo0, hi0=hi0) -> float:
        a, b = lo0, hi0
        fa, fb = fn(a), fn(b)
        step = (hi0 - lo0) or 1.0
        for _ in range(256):
            if fa <= t:
                break
            if math.isinf(domain.lo):
                a -= step
                step *= 2.0
            else:
                a = 0.5 * (a + domain.lo)
                if domain.lo_open and a <= domain.lo:
                    raise DomainError(f"target {t} below the generator's range")
            fa = fn(a)
        else:
            raise DomainError(f"target {t} below the generator's range")
        step = (hi0 - lo0) or 1.0
        for _ in range(256):
            if fb >= t:
                break
            if math.isinf(domain.hi):
                b += step
                step *= 2.0
            else:
                b = 0.5 * (b + domain.hi)
                if domain.hi_open and b >= domain.hi:
                    raise DomainError(f"target {t} above the generator's range")
            fb = fn(b)
        else:
            raise DomainError(f"target {t} above the generator's range")
        for _ in range(cfg.max_iter):
            mid = 0.5 * (a + b)
            if mid == a or mid == b:
                return mid
            fm = fn(mid)
            if fm == t:
                return mid
            if fm < t:
                a = mid
            else:
                b = mid
            # Inverses feed round-trip checks at 1e-10; bisect to near machine
            # resolution (cheap, ~55 iterations).
            if b - a <= 1e-14 * (1.0 + abs(a) + abs(b)):
                return 0.5 * (a + b)
        raise NoConvergenceError("generator inversion exhausted its iteration budget")

    return inverse


def identity_generator(domain: Interval = REALS) -> GeneratorFn:
    return GeneratorFn(eval=lambda u: u, inverse=lambda t: t, domain=domain, validate=False)


def log_generator() -> GeneratorFn:
    return GeneratorFn(eval=math.log, inverse=math.exp, domain=POSITIVE_REALS, validate=False)


def exp_generator(domain: Interval = REALS) -> GeneratorFn:
    return GeneratorFn(eval=math.exp, inverse=math.log, domain=domain, validate=False)


def power_generator(p: float, domain: Interval = POSITIVE_REALS) -> GeneratorFn:
    """u -> u**p on the positive axis; strictly increasing needs p > 0."""
    if not p > 0:
        raise InvalidArgumentError("power generator requires a positive exponent")
    return GeneratorFn(
        eval=lambda u, p=p: u ** p,
        inverse=lambda t, p=p: t ** (1.0 / p),
        domain=domain,
        validate=False,
    )


@dataclass(frozen=True)
class ScalarDeviation:
    """A deviation function E(u, v) on an interval.

    Axioms checked on randomized triples at construction: E(u, u) = 0, the
    sections v -> E(u, v) strictly decrease, and sgn E(u, v) = sgn(u - v).

    ``generator``/``weight`` mark the structured family
    E(u, v) = w(u) (f(u) - f(v)); the root finder collapses sums of such
    deviations at fixed first arguments to a single generator evaluation,
    without changing any semantics.
    """

    domain: Interval
    eval: Callable[[float, float], float]
    label: str = "deviation"
    samples: int = DEFAULT_VALIDATION_SAMPLES
    validate: bool = True
    generator: Optional["GeneratorFn"] = None
    weight: Optional["WeightFn"] = None

    def __post_init__(self):
        if self.validate and self.samples > 0:
            self._check_axioms()

    def _check_axioms(self):
        rng = np.random.default_rng(_VALIDATION_SEED + 2)
        us = _sample_window(self.domain, rng, self.samples)
        vs = _sample_window(self.domain, rng, self.samples)
        ws = _sample_window(self.domain, rng, self.samples)
        span = us.max() - us.min() + 1.0
        magnitude = 1.0
        for u, v, w in zip(us, vs, ws):
            u, v, w = float(u), float(v), float(w)
            duu = self.eval(u, u)
            duv = self.eval(u, v)
            duw = self.eval(u, w)
            magnitude = max(magnitude, abs(duv), abs(duw))
            if not abs(duu) <= 1e-9 * magnitude:
                raise InvalidDeviationError(
                    f"{self.label}: E(u,u) = {duu} != 0 at u={u}"
                )
            lo_v, hi_v = (v, w) if v < w else (w, v)
            lo_e, hi_e = (duv, duw) if v < w else (duw, duv)
            if hi_v - lo_v > 1e-9 * span and not lo_e > hi_e - 1e-12 * magnitude:
                raise InvalidDeviationError(
                    f"{self.label}: section not strictly decreasing on "
                    f"({u}; {lo_v}, {hi_v})"
                )
            if abs(u - v) > 1e-9 * span:
                if duv * (u - v) <= 0:
                    raise InvalidDeviationError(
                        f"{self.label}: sign property fails at (u,v)=({u},{v}): E={duv}"
                    )

    def __call__(self, u: float, v: float) -> float:
        return self.eval(u, v)


@dataclass(frozen=True)
class DeviationTuple:
    """A tuple of deviations sharing one interval."""

    deviations: tuple[ScalarDeviation, ...]
    common_domain: Interval = field(init=False)

    def __post_init__(self):
        devs = tuple(self.deviations)
        object.__setattr__(self, "deviations", devs)
        if len(devs) == 0:
            raise InvalidArgumentError("deviation tuple must be nonempty")
        dom = devs[0].domain
        for d in devs[1:]:
            if d.domain != dom:
                raise InvalidArgumentError("all deviations must share one domain")
        object.__setattr__(self, "common_domain", dom)

    def __len__(self) -> int:
        return len(self.deviations)

    def __iter__(self):
        return iter(self.deviations)

    def __getitem__(self, i):
        return self.deviations[i]

    def select(self, chi) -> "DeviationTuple":
        from .core import select as _select

        return DeviationTuple(_select(self.deviations, chi))


def as_deviation_tuple(E) -> DeviationTuple:
    if isinstance(E, DeviationTuple):
        return E
    return DeviationTuple(tuple(E))


def _check_in_domain(domain: Interval, values, what: str):
    for v in values:
        if float(v) not in domain:
            raise InvalidArgumentError(f"{what} {v} outside the domain {domain}")


def e_sum(E, x: Sequence[float], u: float) -> float:
    """The summed deviation sum_i E_i(x_i, u)."""
    E = as_deviation_tuple(E)
    if len(x) != len(E):
        raise InvalidArgumentError(f"tuple length {len(x)} != deviation count {len(E)}")
    _check_in_domain(E.common_domain, x, "data value")
    _check_in_domain(E.common_domain, (u,), "evaluation point")
    return math.fsum(d.eval(float(xi), u) for d, xi in zip(E.deviations, x))


def deviation_mean(E, x: Sequence[float], cfg: SolverConfig = DEFAULT_CONFIG) -> SolverReport:
    """Solve sum_i E_i(x_i, y) = 0 on [min(x), max(x)] by bisection.

    The summed section decreases strictly from a nonnegative value at min(x)
    to a nonpositive value at max(x); a sign anomaly at the bracket endpoints
    or non-monotone behaviour observed during bracketing raises
    InvalidDeviationError.  Exhausting the iteration budget returns a
    non-converged report with the best iterate.
    """
    E = as_deviation_tuple(E)
    if len(x) != len(E):
        raise InvalidArgumentError(f"tuple length {len(x)} != deviation count {len(E)}")
    xs = [float(v) for v in x]
    _check_in_domain(E.common_domain, xs, "data value")
    a, b = min(xs), max(xs)
    if a == b:
        return SolverReport(value=a, residual=0.0, iterations=0, converged=True)

    f = _summed_section(E, xs)

    fa = f(a)
    fb = f(b)
    neg_guard = cfg.abs_tol + 1e-12 * (1.0 + abs(fa) + abs(fb))
    if fa < -neg_guard:
        raise InvalidDeviationError(
            f"summed deviation is negative at the lower bracket endpoint: {fa}"
        )
    if fb > neg_guard:
        raise InvalidDeviationError(
            f"summed deviation is positive at the upper bracket endpoint: {fb}"
        )
    if fa <= 0.0:
        return SolverReport(value=a, residual=abs(fa), iterations=0, converged=True)
    if fb >= 0.0:
        return SolverReport(value=b, residual=abs(fb), iterations=0, converged=True)

    span = b - a
    width_tol = cfg.rel_tol * span + cfg.abs_tol
    mid = 0.5 * (a + b)
    fm = fa
    for it in range(1, cfg.max_iter + 1):
        mid = 0.5 * (a + b)
        fm = f(mid)
        guard = 1e-9 * (1.0 + abs(fa) + abs(fb) + abs(fm))
        if fm > fa + guard or fm < fb - guard:
            raise InvalidDeviationError(
                f"summed deviation is not monotone: f({a})={fa}, f({mid})={fm}, f({b})={fb}"
            )
        if fm == 0.0:
            return SolverReport(value=mid, residual=0.0, iterations=it, converged=True)
        if fm > 0.0:
            a, fa = mid, fm
        else:
            b, fb = mid, fm
        if abs(fm) <= cfg.abs_tol or (b - a) <= width_tol:
            return SolverReport(value=mid, residual=abs(fm), iterations=it, converged=True)
    return SolverReport(value=mid, residual=abs(fm), iterations=cfg.max_iter, converged=False)


def _summed_section(E: DeviationTuple, xs: list) -> Callable[[float], float]:
    """The map y -> sum_i E_i(x_i, y) with x fixed.

    Structured deviations w_i(u)(f_i(u) - f_i(v)) collapse: the weights and
    generator values at the data points are constants, and deviations sharing
    one generator need a single f(y) per evaluation.
    """
    devs = E.deviations
    if all(d.generator is not None for d in devs):
        consts = [d.weight.eval(xi) for d, xi in zip(devs, xs)]
        offset = math.fsum(c * d.generator.eval(xi)
                           for c, d, xi in zip(consts, devs, xs))
        groups: dict = {}
        for c, d in zip(consts, devs):
            key = id(d.generator)
            entry = groups.setdefault(key, [d.generator.eval, 0.0])
            entry[1] += c
        terms = [(fe, w) for fe, w in groups.values()]
        if len(terms) == 1:
            fe, w = terms[0]
            return lambda y, fe=fe, w=w, offset=offset: offset - w * fe(y)
        return lambda y, terms=terms, offset=offset: offset - math.fsum(
            w * fe(y) for fe, w in terms)

    evals = [d.eval for d in devs]
    return lambda y, evals=evals, xs=xs: math.fsum(
        ev(xi, y) for ev, xi in zip(evals, xs))


def deviation_sign(E, x: Sequence[float], u: float,
                   cfg: SolverConfig = DEFAULT_CONFIG) -> int:
    """Sign of the summed deviation at u: +1, 0, or -1.

    Equals sgn(deviation_mean(E, x) - u) wherever the summed section does not
    vanish.
    """
    s = e_sum(E, x, u)
    if s > 0.0:
        return 1
    if s < 0.0:
        return -1
    return 0


def make_bajraktarevic_deviation(f: GeneratorFn, w: WeightFn,
                                 label: Optional[str] = None) -> ScalarDeviation:
    """The deviation E(u, v) = w(u) * (f(u) - f(v)).

    The axioms follow from f strictly increasing and w positive, so the
    sampled re-check is skipped.
    """
    if f.domain != w.domain:
        raise InvalidArgumentError("generator and weight must share one domain")
    return ScalarDeviation(
        domain=f.domain,
        eval=lambda u, v, f=f.eval, w=w.eval: w(u) * (f(u) - f(v)),
        label=label or "bajraktarevic",
        validate=False,
        generator=f,
        weight=w,
    )


def bajraktarevic_mean(f: GeneratorFn, w: Sequence[WeightFn], x: Sequence[float]) -> float:
    """f^{-1}( sum_i w_i(x_i) f(x_i) / sum_i w_i(x_i) ).

    This is the closed form of the deviation mean generated by the deviations
    w_i(u)(f(u) - f(v)).  The weighted average of f-values is clamped into the
    hull of the sampled f-values to guard against rounding before inversion.
    """
    if len(w) != len(x):
        raise InvalidArgumentError(f"weight count {len(w)} != tuple length {len(x)}")
    if len(x) == 0:
        raise InvalidArgumentError("empty tuple")
    xs = [float(v) for v in x]
    _check_in_domain(f.domain, xs, "data value")
    weights = [wi(xi) for wi, xi in zip(w, xs)]
    for wi, xi in zip(weights, xs):
        if not wi > 0:
            raise InvalidArgumentError(f"weight {wi} not positive at {xi}")
    fw = [f.eval(xi) for xi in xs]
    t = math.fsum(wi * fi for wi, fi in zip(weights, fw)) / math.fsum(weights)
    t = min(max(t, min(fw)), max(fw))
    y = f.inverse(t)
    if not math.isfinite(y) or (y not in f.domain and not _near_domain(y, f.domain)):
        raise DomainError(f"inverted value {y} escapes the generator domain")
    return min(max(y, min(xs)), max(xs))


def _near_domain(y: float, domain: Interval, slack: float = 1e-9) -> bool:
    lo, hi = domain.lo, domain.hi
    scale = 1.0 + abs(y)
    return (lo - slack * scale) <= y <= (hi + slack * scale)


def quasi_arithmetic_mean(f: GeneratorFn, x: Sequence[float]) -> float:
    """f^{-1} of the plain average of f-values."""
    ones = [constant_weight(1.0, f.domain)] * len(x)
    return bajraktarevic_mean(f, ones, x)


def matkowski_mean(f: Sequence[GeneratorFn], x: Sequence[float],
                   cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """(f_1 + ... + f_n)^{-1}(f_1(x_1) + ... + f_n(x_n)).

    The sum of the generators has no closed-form inverse in general, so it is
    inverted by bracketed bisection on [min(x), max(x)], where the strictly
    increasing sum always straddles the target.
    """
    if len(f) != len(x):
        raise InvalidArgumentError(f"generator count {len(f)} != tuple length {len(x)}")
    if len(x) == 0:
        raise InvalidArgumentError("empty tuple")
    dom = f[0].domain
    for fi in f[1:]:
        if fi.domain != dom:
            raise InvalidArgumentError("all generators must share one domain")
    xs = [float(v) for v in x]
    _check_in_domain(dom, xs, "data value")
    a, b = min(xs), max(xs)
    if a == b:
        return a
    evals = [fi.eval for fi in f]
    target = math.fsum(ev(xi) for ev, xi in zip(evals, xs))

    def g(y: float) -> float:
        return math.fsum(ev(y) for ev in evals) - target

    ga, gb = g(a), g(b)
    if ga >= 0.0:
        return a
    if gb <= 0.0:
        return b
    span = b - a
    width_tol = cfg.rel_tol * span + cfg.abs_tol
    for _ in range(cfg.max_iter):
        mid = 0.5 * (a + b)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if gm < 0.0:
            a = mid
        else:
            b = mid
        if b - a <= width_tol:
            return 0.5 * (a + b)
    raise NoConvergenceError("matkowski mean inversion exhausted its iteration budget",
                             best=0.5 * (a + b), residual=b - a)


def _check_positive(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        raise InvalidArgumentError("empty tuple")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise InvalidArgumentError("power-type means require strictly positive inputs")
    return arr


def holder_mean(p: float, x: Sequence[float]) -> float:
    """The power mean ((sum x_i^p) / n)^(1/p); geometric mean for p = 0.

    Inputs are normalized by an extreme element before exponentiation so that
    large |p| cannot overflow.
    """
    arr = _check_positive(x)
    if p == 0.0:
        return float(np.exp(np.mean(np.log(arr))))
    m = float(arr.max()) if p > 0 else float(arr.min())
    return m * float(np.mean((arr / m) ** p) ** (1.0 / p))


def gini_mean(p: float, q: float, x: Sequence[float]) -> float:
    """The Gini mean (sum x^p / sum x^q)^(1/(p-q)); for p = q, the limiting
    form exp(sum x^p log x / sum x^p) is used."""
    arr = _check_positive(x)
    if p == q:
        wp = arr ** p
        return float(np.exp(np.sum(wp * np.log(arr)) / np.sum(wp)))
    if p < q:
        p, q = q, p
    m = float(arr.max())
    scaled = arr / m
    ratio = np.sum(scaled ** p) / np.sum(scaled ** q)
    return m * float(ratio ** (1.0 / (p - q)))


def weighted_arith_mean(w: Sequence, x: Sequence) -> Union[float, np.ndarray]:
    """sum_i w_i(x_i) x_i / sum_i w_i(x_i) for scalar or point entries.

    Weight entries may be WeightFn instances or plain callables; each must be
    positive at its argument.
    """
    if len(w) != len(x):
        raise InvalidArgumentError(f"weight count {len(w)} != tuple length {len(x)}")
    if len(x) == 0:
        raise InvalidArgumentError("empty tuple")
    scalar = np.isscalar(x[0]) or np.asarray(x[0]).ndim == 0
    values = [wi(xi) for wi, xi in zip(w, x)]
    for wv in values:
        if not (math.isfinite(wv) and wv > 0):
            raise InvalidArgumentError(f"weight {wv} not positive")
    total = math.fsum(values)
    if scalar:
        return math.fsum(wv * float(xi) for wv, xi in zip(values, x)) / total
    from .core import as_point_tuple

    pts = as_point_tuple(x)
    acc = np.zeros_like(pts[0])
    for wv, pt in zip(values, pts):
        acc = acc + wv * pt
    return acc / total
