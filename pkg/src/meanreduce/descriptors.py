"""Serializable recipes for mean families and their construction.

A MeanDescriptor is the JSON-facing description of a mean: a kind, an arity,
a dimension for vector kinds, and kind-specific parameters.  Weight,
generator, deviation, and potential parameters are expression strings in the
shared grammar (see :mod:`meanreduce.expr`): variables ``u``/``v`` for scalar
kinds, ``u1..ud``/``v1..vd`` for vector kinds.

Plain-Python constructors for each family are also provided; they are what
the CLI, the verification suites, and the tests use to assemble MeanFn
objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import DEFAULT_CONFIG, Interval, POSITIVE_REALS, REALS, SolverConfig, SolverReport
from .errors import InvalidArgumentError
from .expr import parse_expression, point_vars
from .reduction import MeanFn
from .scalar import (
    DeviationTuple,
    GeneratorFn,
    ScalarDeviation,
    WeightFn,
    bajraktarevic_mean,
    constant_weight,
    deviation_mean,
    gini_mean,
    holder_mean,
    matkowski_mean,
    numeric_inverse,
    quasi_arithmetic_mean,
    weighted_arith_mean,
)
from .vector import (
    GenDeviation,
    PotentialFn,
    _estimate_lipschitz,
    _sum_grad,
    gen_deviation_mean,
    make_norm_sq_potential,
    potential_mean,
)

SCHEMA_VERSION = 1

KINDS = (
    "arithmetic",
    "weighted-arithmetic",
    "holder",
    "gini",
    "quasi-arithmetic",
    "bajraktarevic",
    "matkowski",
    "deviation-custom",
    "gen-deviation",
    "norm-squared-potential",
    "custom-potential",
)

_VECTOR_KINDS = {"gen-deviation", "norm-squared-potential", "custom-potential"}
_SOLVER_KINDS = {"deviation-custom", "gen-deviation", "norm-squared-potential",
                 "custom-potential", "matkowski", "quasi-arithmetic"}


@dataclass(frozen=True)
class MeanDescriptor:
    """A serializable recipe for a mean family."""

    kind: str
    arity: int
    params: dict = field(default_factory=dict)
    dim: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown mean kind {self.kind!r}")
        if self.arity <= 0:
            raise InvalidArgumentError("descriptor arity must be positive")
        if self.kind in _VECTOR_KINDS and (self.dim is None or self.dim <= 0):
            raise InvalidArgumentError(f"kind {self.kind!r} needs a positive dim")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "arity": self.arity, "params": dict(self.params)}
        if self.dim is not None:
            out["dim"] = self.dim
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MeanDescriptor":
        if not isinstance(data, dict) or "kind" not in data:
            raise InvalidArgumentError("a mean descriptor must be an object with a 'kind'")
        extra = set(data) - {"kind", "arity", "params", "dim"}
        if extra:
            raise InvalidArgumentError(f"unknown descriptor fields {sorted(extra)}")
        return cls(
            kind=data["kind"],
            arity=int(data.get("arity", 0)),
            params=dict(data.get("params", {})),
            dim=int(data["dim"]) if data.get("dim") is not None else None,
        )


def parse_domain(spec) -> Interval:
    """Interval from JSON: [lo, hi] with null for infinite, or an object with
    explicit open flags."""
    if spec is None:
        return REALS
    if isinstance(spec, Interval):
        return spec
    if isinstance(spec, dict):
        lo = spec.get("lo")
        hi = spec.get("hi")
        return Interval(
            lo=-math.inf if lo is None else float(lo),
            hi=math.inf if hi is None else float(hi),
            lo_open=bool(spec.get("lo_open", False)),
            hi_open=bool(spec.get("hi_open", False)),
        )
    lo, hi = spec
    lo = -math.inf if lo is None else float(lo)
    hi = math.inf if hi is None else float(hi)
    # A finite zero lower endpoint is by far most often a positivity
    # constraint; treat it as open so log-type expressions stay evaluable.
    return Interval(lo=lo, hi=hi, lo_open=(lo == 0.0))


_NAMED_GENERATORS = {"identity", "id", "u", "log", "exp"}


def build_generator(spec, domain: Optional[Interval] = None) -> GeneratorFn:
    """A GeneratorFn from a named generator or an expression in u."""
    from .scalar import exp_generator, identity_generator, log_generator

    if isinstance(spec, GeneratorFn):
        return spec
    text = str(spec).strip()
    if text in ("identity", "id", "u"):
        return identity_generator(domain or REALS)
    if text == "log":
        return log_generator()
    if text == "exp":
        return exp_generator(domain or REALS)
    dom = domain or REALS
    compiled = parse_expression(text, allowed=("u",))
    feval = lambda u, c=compiled: c(u=u)  # noqa: E731
    return GeneratorFn(eval=feval, inverse=numeric_inverse(feval, dom), domain=dom)


def build_weight(spec, domain: Interval) -> WeightFn:
    """A WeightFn from a positive number or an expression in u."""
    if isinstance(spec, WeightFn):
        return spec
    if isinstance(spec, (int, float)):
        return constant_weight(float(spec), domain)
    compiled = parse_expression(str(spec), allowed=("u",))
    return WeightFn(eval=lambda u, c=compiled: c(u=u), domain=domain)


def build_scalar_deviation(expr_text: str, domain: Interval) -> ScalarDeviation:
    compiled = parse_expression(str(expr_text), allowed=("u", "v"))
    return ScalarDeviation(
        domain=domain,
        eval=lambda u, v, c=compiled: c(u=u, v=v),
        label=f"deviation {expr_text!r}",
    )


def _expand(entries, arity: int, what: str) -> list:
    if isinstance(entries, (str, int, float)) or not isinstance(entries, (list, tuple)):
        entries = [entries]
    entries = list(entries)
    if len(entries) == 1:
        entries = entries * arity
    if len(entries) != arity:
        raise InvalidArgumentError(f"need 1 or {arity} {what}, got {len(entries)}")
    return entries


def _point_weight(spec, dim: int) -> Callable:
    """A positive weight on points from a number or an expression in u1..ud."""
    if callable(spec):
        return spec
    if isinstance(spec, (int, float)):
        c = float(spec)
        if not c > 0:
            raise InvalidArgumentError("weight must be positive")
        return lambda u, c=c: c
    allowed = tuple(f"u{i + 1}" for i in range(dim))
    compiled = parse_expression(str(spec), allowed=allowed)
    return lambda u, c=compiled: c(**point_vars("u", u))


def build_gen_deviation(exprs: Sequence[str], dim: int,
                        sample_low: float = -2.0, sample_high: float = 2.0) -> GenDeviation:
    """A GenDeviation whose covector coordinates are expressions in
    u1..ud, v1..vd."""
    if len(exprs) != dim:
        raise InvalidArgumentError(f"need {dim} covector expressions, got {len(exprs)}")
    allowed = tuple(f"u{i + 1}" for i in range(dim)) + tuple(f"v{i + 1}" for i in range(dim))
    compiled = [parse_expression(str(e), allowed=allowed) for e in exprs]

    def eval_cov(u, v, compiled=compiled):
        env = point_vars("u", u)
        env.update(point_vars("v", v))
        return [c(**env) for c in compiled]

    return GenDeviation(dim=dim, eval=eval_cov, label="custom generalized deviation",
                        sample_low=sample_low, sample_high=sample_high)


def build_custom_potential(expr_text: str, dim: int,
                           sample_low: float = -2.0, sample_high: float = 2.0) -> PotentialFn:
    """A PotentialFn from an expression for F(u, v); gradient by central
    differences."""
    allowed = tuple(f"u{i + 1}" for i in range(dim)) + tuple(f"v{i + 1}" for i in range(dim))
    compiled = parse_expression(str(expr_text), allowed=allowed)

    def feval(u, v, compiled=compiled):
        env = point_vars("u", u)
        env.update(point_vars("v", v))
        return compiled(**env)

    return PotentialFn(dim=dim, eval=feval, label=f"potential {expr_text!r}",
                       sample_low=sample_low, sample_high=sample_high)


def arithmetic_mean_fn(arity: int, dim: Optional[int] = None) -> MeanFn:
    if dim is None:
        return MeanFn(arity=arity, eval=lambda xs: math.fsum(float(v) for v in xs) / len(xs),
                      symmetric=True, label="arithmetic")
    return MeanFn(arity=arity, dim=dim, symmetric=True, label="arithmetic",
                  eval=lambda xs: np.mean(np.stack([np.asarray(p, float) for p in xs]), axis=0))


def weighted_arithmetic_mean_fn(weights: Sequence, arity: int,
                                dim: Optional[int] = None,
                                domain: Interval = REALS) -> MeanFn:
    if dim is None:
        ws = tuple(build_weight(w, domain) for w in _expand(weights, arity, "weights"))
    else:
        ws = tuple(_point_weight(w, dim) for w in _expand(weights, arity, "weights"))
    return MeanFn(arity=arity, dim=dim, label="weighted arithmetic",
                  eval=lambda xs, ws=ws: weighted_arith_mean(ws, xs))


def holder_mean_fn(p: float, arity: int) -> MeanFn:
    return MeanFn(arity=arity, symmetric=True, label=f"holder p={p}",
                  eval=lambda xs, p=float(p): holder_mean(p, xs))


def gini_mean_fn(p: float, q: float, arity: int) -> MeanFn:
    return MeanFn(arity=arity, symmetric=True, label=f"gini p={p} q={q}",
                  eval=lambda xs, p=float(p), q=float(q): gini_mean(p, q, xs))


def quasi_arithmetic_mean_fn(f, arity: int, domain: Optional[Interval] = None) -> MeanFn:
    gen = build_generator(f, domain)
    return MeanFn(arity=arity, symmetric=True, label="quasi-arithmetic",
                  eval=lambda xs, g=gen: quasi_arithmetic_mean(g, xs))


def bajraktarevic_mean_fn(f, weights: Sequence, arity: int,
                          domain: Optional[Interval] = None) -> MeanFn:
    gen = build_generator(f, domain)
    ws = tuple(build_weight(w, gen.domain) for w in _expand(weights, arity, "weights"))
    return MeanFn(arity=arity, label="bajraktarevic",
                  eval=lambda xs, g=gen, ws=ws: bajraktarevic_mean(g, ws, xs))


def matkowski_mean_fn(fs: Sequence, arity: int, domain: Optional[Interval] = None,
                      cfg: SolverConfig = DEFAULT_CONFIG) -> MeanFn:
    gens = tuple(build_generator(f, domain) for f in _expand(fs, arity, "generators"))
    return MeanFn(arity=arity, label="matkowski",
                  eval=lambda xs, gs=gens, cfg=cfg: matkowski_mean(gs, xs, cfg))


def deviation_mean_fn(E, cfg: SolverConfig = DEFAULT_CONFIG,
                      label: str = "deviation mean") -> MeanFn:
    dev = E if isinstance(E, DeviationTuple) else DeviationTuple(tuple(E))
    return MeanFn(arity=len(dev), label=label,
                  eval=lambda xs, E=dev, cfg=cfg: deviation_mean(E, xs, cfg).value)


def gen_deviation_mean_fn(E: Sequence[GenDeviation], cfg: SolverConfig = DEFAULT_CONFIG,
                          warm_start: bool = True,
                          label: str = "generalized deviation mean") -> MeanFn:
    """MeanFn wrapper around the hull variational inequality solver.

    With ``warm_start`` the previous barycentric solution seeds the next
    solve and the pullback Lipschitz estimate is reused; helpful when the
    mean is evaluated along a fixed-point iteration, where successive data
    tuples differ in a single slot.  Results stay deterministic for a given
    call sequence, but the wrapper is not thread-safe.
    """
    entries = tuple(E)
    dim = entries[0].dim
    state = {"init": None, "lipschitz": None}

    def eval_mean(xs, E=entries, cfg=cfg):
        init = state["init"] if warm_start else None
        if init is not None and init.shape != (len(xs),):
            init = None
        if warm_start and state["lipschitz"] is None:
            pts = [np.asarray(p, float) for p in xs]
            X = np.stack(pts, axis=0)
            state["lipschitz"] = _estimate_lipschitz(_sum_grad(E, pts, dim), X)
        rep = gen_deviation_mean(E, xs, cfg, init=init, lipschitz=state["lipschitz"])
        if warm_start and rep.barycentric is not None:
            state["init"] = rep.barycentric.array
        return rep.value

    return MeanFn(arity=len(entries), dim=dim, label=label, eval=eval_mean)


def potential_mean_fn(F: Sequence[PotentialFn], cfg: SolverConfig = DEFAULT_CONFIG,
                      label: str = "potential mean") -> MeanFn:
    entries = tuple(F)
    return MeanFn(arity=len(entries), dim=entries[0].dim, label=label,
                  eval=lambda xs, F=entries, cfg=cfg: potential_mean(F, xs, cfg).value)


def _norm_sq_potentials(weights, arity: int, dim: int) -> tuple[PotentialFn, ...]:
    specs = _expand(weights if weights is not None else [1.0], arity, "weights")
    return tuple(make_norm_sq_potential(_point_weight(w, dim), dim) for w in specs)


def build_mean(desc: MeanDescriptor, cfg: SolverConfig = DEFAULT_CONFIG) -> MeanFn:
    """Construct the MeanFn described by a descriptor."""
    kind, arity, params, dim = desc.kind, desc.arity, dict(desc.params), desc.dim
    domain = parse_domain(params.get("domain"))
    if kind == "arithmetic":
        return arithmetic_mean_fn(arity, dim)
    if kind == "weighted-arithmetic":
        return weighted_arithmetic_mean_fn(params.get("weights", [1.0]), arity, dim, domain)
    if kind == "holder":
        return holder_mean_fn(_require(params, "p"), arity)
    if kind == "gini":
        return gini_mean_fn(_require(params, "p"), _require(params, "q"), arity)
    if kind == "quasi-arithmetic":
        return quasi_arithmetic_mean_fn(_require(params, "f"),
                                        arity, _generator_domain(params))
    if kind == "bajraktarevic":
        return bajraktarevic_mean_fn(_require(params, "f"), params.get("weights", [1.0]),
                                     arity, _generator_domain(params))
    if kind == "matkowski":
        return matkowski_mean_fn(_require(params, "fs"), arity,
                                 _generator_domain(params), cfg)
    if kind == "deviation-custom":
        exprs = _expand(_require(params, "exprs"), arity, "deviation expressions")
        devs = DeviationTuple(tuple(build_scalar_deviation(e, domain) for e in exprs))
        return deviation_mean_fn(devs, cfg, label="custom deviation mean")
    if kind == "gen-deviation":
        exprs = _require(params, "exprs")
        if exprs and isinstance(exprs[0], str):
            exprs = [exprs]
        exprs = _expand(exprs, arity, "covector expression lists")
        devs = [build_gen_deviation(e, dim) for e in exprs]
        return gen_deviation_mean_fn(devs, cfg)
    if kind == "norm-squared-potential":
        pots = _norm_sq_potentials(params.get("weights"), arity, dim)
        return potential_mean_fn(pots, cfg, label="norm-squared potential mean")
    if kind == "custom-potential":
        exprs = _expand(_require(params, "exprs"), arity, "potential expressions")
        pots = tuple(build_custom_potential(e, dim) for e in exprs)
        return potential_mean_fn(pots, cfg, label="custom potential mean")
    raise InvalidArgumentError(f"unknown mean kind {kind!r}")


def _require(params: dict, key: str):
    if key not in params:
        raise InvalidArgumentError(f"missing required parameter {key!r}")
    return params[key]


def _generator_domain(params: dict) -> Optional[Interval]:
    if "domain" in params and params["domain"] is not None:
        return parse_domain(params["domain"])
    f = params.get("f") or (params.get("fs") or [None])[0]
    if isinstance(f, str) and f.strip() == "log":
        return POSITIVE_REALS
    return None


def evaluate_with_report(desc: MeanDescriptor, x: Sequence,
                         cfg: SolverConfig = DEFAULT_CONFIG) -> tuple:
    """Evaluate a descriptor-defined mean, returning (value, SolverReport).

    Solver-backed kinds return the solver's own report; closed-form kinds
    report zero residual and zero iterations.
    """
    kind, arity, params, dim = desc.kind, desc.arity, dict(desc.params), desc.dim
    domain = parse_domain(params.get("domain"))
    if kind == "deviation-custom":
        exprs = _expand(_require(params, "exprs"), arity, "deviation expressions")
        devs = DeviationTuple(tuple(build_scalar_deviation(e, domain) for e in exprs))
        report = deviation_mean(devs, x, cfg)
        return report.value, report
    if kind == "gen-deviation":
        exprs = _require(params, "exprs")
        if exprs and isinstance(exprs[0], str):
            exprs = [exprs]
        exprs = _expand(exprs, arity, "covector expression lists")
        devs = [build_gen_deviation(e, dim) for e in exprs]
        report = gen_deviation_mean(devs, x, cfg)
        return report.value, report
    if kind == "norm-squared-potential":
        pots = _norm_sq_potentials(params.get("weights"), arity, dim)
        report = potential_mean(pots, x, cfg)
        return report.value, report
    if kind == "custom-potential":
        exprs = _expand(_require(params, "exprs"), arity, "potential expressions")
        pots = tuple(build_custom_potential(e, dim) for e in exprs)
        report = potential_mean(pots, x, cfg)
        return report.value, report
    value = build_mean(desc, cfg)(tuple(x))
    return value, SolverReport(value=value, residual=0.0, iterations=0, converged=True)
