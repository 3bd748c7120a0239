"""Verification suites: JSON case corpora and their runner.

A suite file is ``{"schema": 1, "name": ..., "cases": [...]}``.  Case types:

- ``convexity``: f with a domain-side mean M and a scalar range-side mean N;
  optional ``chi`` adds the reduced k-variable check.
- ``comparison``: two scalar means G <= E plus the reduced comparison.
- ``holder-minkowski``: slot families N_i, outer scalar mean M, combining
  function f ("sum" or "product"), plus the reduced check.
- ``weighted-arith-reduction`` / ``deviation-reduction``: two-route oracle
  agreement checks from the reduction module.

``expected`` is "pass" (no counterexample anywhere) or "fail" (the full
check must produce a counterexample).  Whatever the expectation, a case
whose full check passes while its reduced check finds a violation is an
implication violation: the reduction theorems exclude it, so it fails the
suite as a machinery defect.

Runs are deterministic: per-case seeds derive from the suite seed by index,
and reports are plain JSON data.
"""

from __future__ import annotations

import json
import os
from importlib import resources
from typing import Callable, Optional

from .core import Injection, SolverConfig
from .descriptors import MeanDescriptor, build_mean, build_scalar_deviation, build_weight, parse_domain
from .errors import InvalidArgumentError
from .expr import parse_expression, point_vars
from .lab import (
    BoxSampler,
    ConvexityCase,
    FuzzCase,
    HolderMinkowskiCase,
    check_convexity,
    check_holder_minkowski,
    check_reduced_convexity,
    combiner,
    compare_means,
    fuzz_suite,
)
from .reduction import check_deviation_reduction, check_weighted_arith_reduction
from .scalar import DeviationTuple
from .vector import inner_product_deviation

SCHEMA_VERSION = 1

DEFAULT_TRIALS = 40
DEFAULT_TOL = 1e-9
DEFAULT_REDUCED_TOL = 1e-8

# Tolerances for reductions nested inside suite checks: the certificate must
# stay attainable when every mean evaluation is itself an iterative solve.
REDUCTION_CFG = SolverConfig(abs_tol=1e-10, rel_tol=1e-12)


def packaged_suite_names() -> list[str]:
    base = resources.files("meanreduce").joinpath("suites")
    return sorted(p.name for p in base.iterdir() if p.name.endswith(".json"))


def load_suite(source: str) -> dict:
    """Load a suite from a filesystem path or a packaged suite name."""
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        name = source if source.endswith(".json") else source + ".json"
        entry = resources.files("meanreduce").joinpath("suites").joinpath(name)
        if not entry.is_file():
            raise InvalidArgumentError(
                f"no suite file at {source!r} and no packaged suite "
                f"{name!r} (available: {', '.join(packaged_suite_names())})"
            )
        data = json.loads(entry.read_text(encoding="utf-8"))
    if not isinstance(data, dict) or "cases" not in data or not isinstance(data["cases"], list):
        raise InvalidArgumentError("a suite must be an object with a 'cases' list")
    return data


def _build_function(spec, dim: Optional[int]) -> Callable:
    """The case function f from an expression in u (scalar) or u1..ud."""
    if callable(spec):
        return spec
    text = str(spec)
    if dim is None:
        compiled = parse_expression(text, allowed=("u",))
        return lambda u, c=compiled: c(u=float(u))
    allowed = tuple(f"u{i + 1}" for i in range(dim))
    compiled = parse_expression(text, allowed=allowed)
    return lambda u, c=compiled: c(**point_vars("u", u))


def _sampler(spec, dim: Optional[int] = None) -> BoxSampler:
    if spec is None:
        return BoxSampler(low=0.1, high=4.0, dim=dim, log_uniform=True)
    data = dict(spec)
    data.setdefault("dim", dim)
    if data.get("dim") is None:
        data.pop("dim", None)
    return BoxSampler.from_json(data)


def _chi(case: dict, arity: int) -> Injection:
    if "chi" not in case:
        raise InvalidArgumentError(f"case {case.get('name')!r} needs a 'chi' entry")
    return Injection.of([int(v) for v in case["chi"]], n=arity)


def _case_tols(case: dict, trials: int, tol: float, reduced_tol: float):
    return (
        int(case.get("trials", trials)),
        float(case.get("tol", tol)),
        float(case.get("reduced_tol", reduced_tol)),
    )


def build_runner(case: dict, trials: int, tol: float, reduced_tol: float) -> FuzzCase:
    """Compile one suite case into a seeded runnable returning its report."""
    kind = case.get("type")
    name = case.get("name", kind or "case")
    expected = case.get("expected", "pass")
    if expected not in ("pass", "fail"):
        raise InvalidArgumentError(f"case {name!r}: expected must be 'pass' or 'fail'")
    trials, tol, reduced_tol = _case_tols(case, trials, tol, reduced_tol)

    if kind == "convexity":
        M = build_mean(MeanDescriptor.from_json(case["M"]), REDUCTION_CFG)
        N = build_mean(MeanDescriptor.from_json(case["N"]), REDUCTION_CFG)
        f = _build_function(case["f"], M.dim)
        sampler = _sampler(case.get("domain"), M.dim)
        conv = ConvexityCase(M=M, N=N, f=f, sampler=sampler, name=name)
        chi = _chi(case, M.arity) if "chi" in case else None

        def run(seed: int, run_trials: int) -> dict:
            full = check_convexity(conv, trials, tol, seed=seed)
            out = {"full": full.to_json()}
            reduced = None
            if chi is not None:
                reduced = check_reduced_convexity(conv, chi, trials, reduced_tol,
                                                  seed=seed + 1, cfg=REDUCTION_CFG)
                out["reduced"] = reduced.to_json()
            out.update(_judge(expected, full, reduced, tol))
            return out

    elif kind == "comparison":
        G = build_mean(MeanDescriptor.from_json(case["G"]), REDUCTION_CFG)
        E = build_mean(MeanDescriptor.from_json(case["E"]), REDUCTION_CFG)
        chi = _chi(case, G.arity)
        sampler = _sampler(case.get("domain"))

        def run(seed: int, run_trials: int) -> dict:
            pair = compare_means(G, E, chi, trials, tol, sampler=sampler,
                                 seed=seed, cfg=REDUCTION_CFG, reduced_tol=reduced_tol,
                                 name=name)
            out = pair.to_json()
            out.update(_judge(expected, pair.full, pair.reduced, tol))
            return out

    elif kind == "holder-minkowski":
        descriptors = case["N"]
        N_list = tuple(build_mean(MeanDescriptor.from_json(d), REDUCTION_CFG)
                       for d in descriptors)
        M = build_mean(MeanDescriptor.from_json(case["M"]), REDUCTION_CFG)
        chi = _chi(case, M.arity)
        domains = case.get("domains")
        if domains is None:
            domains = [case.get("domain")] * len(N_list)
        samplers = tuple(_sampler(d) for d in domains)
        f = combiner(case.get("f", "product"))
        hm = HolderMinkowskiCase(ell=len(N_list), N_list=N_list, M=M, f=f,
                                 chi=chi, samplers=samplers, name=name)

        def run(seed: int, run_trials: int) -> dict:
            pair = check_holder_minkowski(hm, trials, tol, seed=seed,
                                          cfg=REDUCTION_CFG, reduced_tol=reduced_tol)
            out = pair.to_json()
            out.update(_judge(expected, pair.full, pair.reduced, tol))
            return out

    elif kind == "weighted-arith-reduction":
        domain = parse_domain(case.get("domain", [0.2, 6.0]))
        weights = [build_weight(w, domain) for w in case["weights"]]
        chi = Injection.of([int(v) for v in case["chi"]], n=len(weights))
        samples = int(case.get("samples", 60))

        def run(seed: int, run_trials: int) -> dict:
            report = check_weighted_arith_reduction(weights, chi, samples, tol,
                                                    seed=seed, cfg=REDUCTION_CFG)
            out = report.to_json()
            out["ok"] = report.passed if expected == "pass" else not report.passed
            return out

    elif kind == "deviation-reduction":
        samples = int(case.get("samples", 40))
        if "exprs" in case:
            domain = parse_domain(case.get("domain", [0.2, 6.0]))
            exprs = case["exprs"]
            devs = DeviationTuple(tuple(build_scalar_deviation(e, domain) for e in exprs))
            chi = Injection.of([int(v) for v in case["chi"]], n=len(devs))
            entries = devs
        else:
            dim = int(case["dim"])
            weights = case.get("weights", [1.0])
            entries = tuple(
                inner_product_deviation(_vector_weight(w, dim), dim)
                for w in weights
            )
            chi = Injection.of([int(v) for v in case["chi"]], n=len(entries))

        def run(seed: int, run_trials: int) -> dict:
            report = check_deviation_reduction(entries, chi, samples, tol,
                                               seed=seed, cfg=REDUCTION_CFG,
                                               low=float(case.get("low", -2.0)),
                                               high=float(case.get("high", 2.0)))
            out = report.to_json()
            out["ok"] = report.passed if expected == "pass" else not report.passed
            return out

    else:
        raise InvalidArgumentError(f"case {name!r}: unknown type {kind!r}")

    return FuzzCase(name=name, kind=kind, runner=run)


def _vector_weight(spec, dim: int):
    if isinstance(spec, (int, float)):
        return float(spec)
    allowed = tuple(f"u{i + 1}" for i in range(dim))
    compiled = parse_expression(str(spec), allowed=allowed)
    return lambda u, c=compiled: c(**point_vars("u", u))


def _judge(expected: str, full, reduced, tol: float) -> dict:
    """Expectation verdict plus the one-way implication defect flag."""
    implication_violated = bool(reduced is not None and not full.found and reduced.found)
    if expected == "pass":
        ok = not full.found and (reduced is None or not reduced.found)
    else:
        # A deliberate failure must produce a strict, re-evaluated witness.
        ok = bool(full.found and full.gap is not None
                  and full.gap > tol * (1.0 + abs(full.lhs) + abs(full.rhs)))
    if implication_violated:
        ok = False
    return {"expected": expected, "ok": ok, "implication_violated": implication_violated}


def run_suite(suite: dict, seed: int = 0, trials: int = DEFAULT_TRIALS,
              tol: float = DEFAULT_TOL, reduced_tol: float = DEFAULT_REDUCED_TOL) -> dict:
    """Run every case and fold in the pass/fail expectations."""
    runners = [build_runner(c, trials, tol, reduced_tol) for c in suite["cases"]]
    report = fuzz_suite(runners, seed=seed, trials=trials)
    failures = sum(
        1 for entry in report["cases"] if entry.get("error") or not entry.get("ok", False)
    )
    report["schema"] = SCHEMA_VERSION
    report["suite"] = suite.get("name", "suite")
    report["tol"] = tol
    report["reduced_tol"] = reduced_tol
    report["failures"] = failures
    report["passed"] = failures == 0
    return report
