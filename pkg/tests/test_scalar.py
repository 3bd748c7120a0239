import math

import numpy as np
import pytest
from scipy.integrate import quad

from meanreduce.core import Interval, POSITIVE_REALS, REALS, SolverConfig
from meanreduce.errors import (
    InvalidArgumentError,
    InvalidDeviationError,
)
from meanreduce.scalar import (
    DeviationTuple,
    GeneratorFn,
    ScalarDeviation,
    WeightFn,
    bajraktarevic_mean,
    constant_weight,
    deviation_mean,
    deviation_sign,
    e_sum,
    gini_mean,
    holder_mean,
    identity_generator,
    log_generator,
    make_bajraktarevic_deviation,
    matkowski_mean,
    numeric_inverse,
    power_generator,
    power_weight,
    quasi_arithmetic_mean,
    weighted_arith_mean,
)


def arithmetic_deviation(domain=REALS) -> ScalarDeviation:
    return ScalarDeviation(domain=domain, eval=lambda u, v: u - v,
                           label="arithmetic", validate=False)


def gini_21_deviation(domain=POSITIVE_REALS) -> ScalarDeviation:
    # E(u, v) = u (u - v): generates the Gini mean with exponents (2, 1).
    return ScalarDeviation(domain=domain, eval=lambda u, v: u * (u - v),
                           label="gini21", validate=False)


class TestESum:
    def test_centered_at_arithmetic_mean(self):
        E = DeviationTuple((arithmetic_deviation(),) * 3)
        assert e_sum(E, (1.0, 2.0, 3.0), 2.0) == 0.0

    def test_linear_offset(self):
        E = DeviationTuple((arithmetic_deviation(),) * 3)
        assert e_sum(E, (1.0, 2.0, 3.0), 0.0) == 6.0

    def test_gini_type_hand_value(self):
        E = DeviationTuple((gini_21_deviation(),) * 2)
        # 1*(1 - 2.5) + 3*(3 - 2.5) = 0
        assert e_sum(E, (1.0, 3.0), 2.5) == 0.0

    def test_length_mismatch(self):
        E = DeviationTuple((arithmetic_deviation(),) * 2)
        with pytest.raises(InvalidArgumentError):
            e_sum(E, (1.0, 2.0, 3.0), 0.0)

    def test_domain_violation(self):
        E = DeviationTuple((gini_21_deviation(),) * 2)
        with pytest.raises(InvalidArgumentError):
            e_sum(E, (1.0, -3.0), 1.0)


class TestDeviationMean:
    def test_arithmetic_deviations_give_arithmetic_mean(self):
        E = DeviationTuple((arithmetic_deviation(),) * 3)
        report = deviation_mean(E, (1.0, 2.0, 3.0))
        assert report.converged
        assert report.value == pytest.approx(2.0, abs=1e-10)

    def test_constant_tuple_short_circuits(self):
        E = DeviationTuple((arithmetic_deviation(),) * 4)
        report = deviation_mean(E, (0.7, 0.7, 0.7, 0.7))
        assert report.value == 0.7
        assert report.iterations == 0
        assert report.residual == 0.0

    def test_gini_deviation_solves_to_ratio_of_power_sums(self):
        E = DeviationTuple((gini_21_deviation(),) * 2)
        report = deviation_mean(E, (1.0, 3.0))
        # sum x_i^2 = y sum x_i  =>  y = 10/4
        assert report.value == pytest.approx(2.5, abs=1e-10)

    def test_mean_property_and_report_invariant(self):
        rng = np.random.default_rng(7)
        E = DeviationTuple((gini_21_deviation(),) * 4)
        for _ in range(50):
            x = tuple(rng.uniform(0.2, 5.0, 4))
            report = deviation_mean(E, x)
            assert report.converged
            assert min(x) <= report.value <= max(x)

    def test_invalid_deviation_detected_at_bracket(self):
        # Reversed sign: E(u, v) = v - u increases in v.
        bad = ScalarDeviation(domain=REALS, eval=lambda u, v: v - u,
                              label="reversed", validate=False)
        with pytest.raises(InvalidDeviationError):
            deviation_mean(DeviationTuple((bad, bad)), (0.0, 1.0))

    def test_non_monotone_section_detected_in_loop(self):
        # Valid sign pattern at the endpoints but a hump peaking mid-bracket.
        def hump(u, v):
            return (u - v) + 40.0 * math.sin(math.pi * v)

        bad = ScalarDeviation(domain=Interval(-0.5, 1.5), eval=hump,
                              label="hump", validate=False)
        with pytest.raises(InvalidDeviationError):
            deviation_mean(DeviationTuple((bad, bad)), (0.0, 1.0))

    def test_budget_exhaustion_reports_no_convergence(self):
        E = DeviationTuple((arithmetic_deviation(),) * 2)
        cfg = SolverConfig(abs_tol=1e-300, rel_tol=1e-300, max_iter=3)
        report = deviation_mean(E, (0.1, 1.0), cfg)
        assert not report.converged
        assert report.iterations == 3

    def test_construction_validation_rejects_reversed_sign(self):
        with pytest.raises(InvalidDeviationError):
            ScalarDeviation(domain=REALS, eval=lambda u, v: v - u)

    def test_construction_validation_rejects_nonzero_diagonal(self):
        with pytest.raises(InvalidDeviationError):
            ScalarDeviation(domain=REALS, eval=lambda u, v: u - v + 1.0)


class TestDeviationSign:
    def test_below_mean(self):
        E = DeviationTuple((arithmetic_deviation(),) * 2)
        assert deviation_sign(E, (1.0, 3.0), 1.5) == 1

    def test_at_mean(self):
        E = DeviationTuple((arithmetic_deviation(),) * 2)
        assert deviation_sign(E, (1.0, 3.0), 2.0) == 0

    def test_above_mean(self):
        E = DeviationTuple((gini_21_deviation(),) * 2)
        assert deviation_sign(E, (1.0, 3.0), 3.0) == -1

    def test_matches_sign_of_mean_minus_u(self):
        rng = np.random.default_rng(11)
        E = DeviationTuple((gini_21_deviation(),) * 3)
        for _ in range(100):
            x = tuple(rng.uniform(0.2, 5.0, 3))
            mean = deviation_mean(E, x).value
            lo, hi = min(x), max(x)
            if hi - lo < 1e-6:
                continue
            u = float(rng.uniform(lo, hi))
            if abs(u - mean) <= 1e-9:
                continue
            assert deviation_sign(E, x, u) == (1 if mean > u else -1)


class TestBajraktarevicDeviation:
    def test_arithmetic_deviation_values(self):
        dev = make_bajraktarevic_deviation(identity_generator(), constant_weight(1.0))
        assert dev(3.0, 1.0) == 2.0

    def test_log_generator(self):
        dev = make_bajraktarevic_deviation(log_generator(),
                                           constant_weight(1.0, POSITIVE_REALS))
        assert dev(math.e, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_identity_with_linear_weight(self):
        w = WeightFn(eval=lambda u: u, domain=POSITIVE_REALS)
        dev = make_bajraktarevic_deviation(identity_generator(POSITIVE_REALS), w)
        assert dev(2.0, 5.0) == 2.0 * (2.0 - 5.0)

    def test_domain_mismatch_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_bajraktarevic_deviation(log_generator(), constant_weight(1.0, REALS))


class TestBajraktarevicMean:
    def test_unit_weights_identity_generator(self):
        f = identity_generator()
        w = [constant_weight(1.0)] * 3
        assert bajraktarevic_mean(f, w, (1.0, 2.0, 3.0)) == pytest.approx(2.0)

    def test_linear_weight_matches_gini(self):
        f = identity_generator(POSITIVE_REALS)
        w = [WeightFn(eval=lambda u: u, domain=POSITIVE_REALS)] * 2
        assert bajraktarevic_mean(f, w, (1.0, 3.0)) == pytest.approx(2.5)

    def test_constant_weights(self):
        f = identity_generator()
        w = [constant_weight(2.0), constant_weight(1.0)]
        assert bajraktarevic_mean(f, w, (0.0, 3.0)) == pytest.approx(1.0)


class TestMatkowskiMean:
    def test_identity_generators(self):
        fs = [identity_generator()] * 3
        assert matkowski_mean(fs, (1.0, 2.0, 3.0)) == pytest.approx(2.0, abs=1e-9)

    def test_log_generators_give_geometric_mean(self):
        fs = [log_generator()] * 2
        assert matkowski_mean(fs, (2.0, 8.0)) == pytest.approx(4.0, abs=1e-9)

    def test_mixed_linear_generators(self):
        f1 = identity_generator()
        f2 = GeneratorFn(eval=lambda u: 2.0 * u, inverse=lambda t: t / 2.0,
                         domain=REALS, validate=False)
        # y + 2y = 0 + 6  =>  y = 2
        assert matkowski_mean((f1, f2), (0.0, 3.0)) == pytest.approx(2.0, abs=1e-9)

    def test_quasi_arithmetic_alias(self):
        assert quasi_arithmetic_mean(log_generator(), (2.0, 8.0)) == pytest.approx(4.0)


class TestHolderMean:
    def test_arithmetic_case(self):
        assert holder_mean(1.0, (1.0, 2.0, 3.0)) == pytest.approx(2.0)

    def test_quadratic_case(self):
        assert holder_mean(2.0, (1.0, 7.0)) == pytest.approx(5.0)

    def test_geometric_extension(self):
        assert holder_mean(0.0, (2.0, 8.0)) == pytest.approx(4.0)

    def test_nonpositive_rejected(self):
        with pytest.raises(InvalidArgumentError):
            holder_mean(1.0, (1.0, -2.0))
        with pytest.raises(InvalidArgumentError):
            holder_mean(2.0, (0.0, 1.0))

    def test_extreme_exponents_stable(self):
        # Exponents at which the naive power sum would overflow; the exact
        # value follows from factoring out the extreme element.
        x = (0.5, 2.0, 7.0)
        assert holder_mean(600.0, x) == pytest.approx(7.0 * 3.0 ** (-1 / 600), rel=1e-12)
        assert holder_mean(-600.0, x) == pytest.approx(0.5 * 3.0 ** (1 / 600), rel=1e-12)

    def test_monotone_in_exponent(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = tuple(rng.uniform(0.2, 6.0, 4))
            p, q = sorted(rng.uniform(-4.0, 4.0, 2))
            assert holder_mean(p, x) <= holder_mean(q, x) + 1e-10


class TestGiniMean:
    def test_arithmetic_case(self):
        assert gini_mean(1.0, 0.0, (1.0, 2.0, 3.0)) == pytest.approx(2.0)

    def test_ratio_of_power_sums(self):
        assert gini_mean(2.0, 1.0, (1.0, 3.0)) == pytest.approx(2.5)

    def test_reflexive_on_constant_tuple(self):
        assert gini_mean(0.0, -1.0, (2.0, 2.0)) == pytest.approx(2.0, abs=1e-12)

    def test_equal_exponents_limit(self):
        x = (1.0, 2.0, 5.0)
        for p in (0.0, 1.0, -2.0):
            direct = gini_mean(p, p, x)
            nearby = gini_mean(p + 1e-7, p, x)
            assert direct == pytest.approx(nearby, rel=1e-5)

    def test_symmetric_in_exponent_order(self):
        x = (0.7, 1.9, 3.1)
        assert gini_mean(2.0, 1.0, x) == pytest.approx(gini_mean(1.0, 2.0, x), rel=1e-14)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        x = tuple(rng.uniform(0.3, 4.0, 5))
        perm = tuple(np.asarray(x)[rng.permutation(5)])
        assert gini_mean(1.7, -0.4, x) == pytest.approx(gini_mean(1.7, -0.4, perm), abs=1e-12)
        assert holder_mean(2.3, x) == pytest.approx(holder_mean(2.3, perm), abs=1e-12)


class TestWeightedArithMean:
    def test_unit_weights(self):
        w = [constant_weight(1.0)] * 3
        assert weighted_arith_mean(w, (1.0, 2.0, 3.0)) == pytest.approx(2.0)

    def test_point_entries(self):
        w = [constant_weight(3.0), constant_weight(1.0)]
        out = weighted_arith_mean(w, [(0.0, 0.0), (4.0, 4.0)])
        np.testing.assert_allclose(out, [1.0, 1.0])

    def test_functional_weights_match_gini(self):
        w = [power_weight(1.0)] * 2
        assert weighted_arith_mean(w, (1.0, 3.0)) == pytest.approx(2.5)

    def test_nonpositive_weight_rejected(self):
        w = [lambda u: 0.0, lambda u: 1.0]
        with pytest.raises(InvalidArgumentError):
            weighted_arith_mean(w, (1.0, 2.0))


class TestGeneratorFn:
    def test_inverse_roundtrip_validation(self):
        with pytest.raises(InvalidArgumentError):
            GeneratorFn(eval=lambda u: u ** 3, inverse=lambda t: t,
                        domain=Interval(0.5, 2.0))

    def test_monotonicity_validation(self):
        with pytest.raises(InvalidArgumentError):
            GeneratorFn(eval=lambda u: -u, inverse=lambda t: -t, domain=REALS)

    def test_numeric_inverse_matches_analytic(self):
        dom = POSITIVE_REALS
        inv = numeric_inverse(lambda u: u ** 3, dom)
        for t in (0.001, 1.0, 27.0, 12345.0):
            assert inv(t) == pytest.approx(t ** (1 / 3), rel=1e-9)

    def test_power_generator_requires_positive_exponent(self):
        with pytest.raises(InvalidArgumentError):
            power_generator(-1.0)


class TestOracleEquivalence:
    """The root-finding route must agree with the closed forms."""

    def test_bajraktarevic_oracle(self):
        rng = np.random.default_rng(17)
        dom = Interval(0.1, 10.0)
        pool = [
            identity_generator(dom),
            power_generator(2.0, dom),
            power_generator(0.5, dom),
            GeneratorFn(eval=math.log, inverse=math.exp, domain=dom, validate=False),
        ]
        for _ in range(60):
            n = int(rng.integers(2, 6))
            f = pool[int(rng.integers(len(pool)))]
            consts = rng.uniform(0.5, 3.0, n)
            ws = [constant_weight(float(c), dom) for c in consts]
            devs = DeviationTuple(tuple(
                make_bajraktarevic_deviation(f, w) for w in ws
            ))
            x = tuple(rng.uniform(0.2, 8.0, n))
            solved = deviation_mean(devs, x).value
            closed = bajraktarevic_mean(f, ws, x)
            assert solved == pytest.approx(closed, rel=1e-9, abs=1e-9)

    def test_matkowski_oracle(self):
        rng = np.random.default_rng(23)
        dom = Interval(0.1, 10.0)
        pool = [
            identity_generator(dom),
            power_generator(3.0, dom),
            GeneratorFn(eval=math.log, inverse=math.exp, domain=dom, validate=False),
            exp_gen_on(dom),
        ]
        one = constant_weight(1.0, dom)
        for _ in range(60):
            n = int(rng.integers(2, 6))
            fs = [pool[int(rng.integers(len(pool)))] for _ in range(n)]
            devs = DeviationTuple(tuple(
                make_bajraktarevic_deviation(f, one) for f in fs
            ))
            x = tuple(rng.uniform(0.2, 8.0, n))
            solved = deviation_mean(devs, x).value
            closed = matkowski_mean(fs, x)
            assert solved == pytest.approx(closed, rel=1e-9, abs=1e-9)

    def test_reflexivity_of_family_evaluators(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            u = float(rng.uniform(0.3, 5.0))
            n = int(rng.integers(2, 6))
            x = (u,) * n
            assert holder_mean(rng.uniform(-3, 3), x) == pytest.approx(u, abs=1e-12)
            assert gini_mean(rng.uniform(-2, 2), rng.uniform(-2, 2), x) == pytest.approx(u, abs=1e-12)
            w = [constant_weight(float(c)) for c in rng.uniform(0.5, 2.0, n)]
            assert weighted_arith_mean(w, x) == pytest.approx(u, abs=1e-12)


def exp_gen_on(dom: Interval) -> GeneratorFn:
    return GeneratorFn(eval=math.exp, inverse=math.log, domain=dom, validate=False)


class TestIntegralPotentialOracle:
    """Quadrature of a deviation yields a potential whose derivative in the
    second slot recovers the negated deviation (finite-difference check)."""

    def test_quadrature_potential_derivative(self):
        rng = np.random.default_rng(31)
        dev = gini_21_deviation()

        def F(u, v):
            value, _ = quad(lambda t: dev(u, t), u, v)
            return -value

        for _ in range(10):
            u = float(rng.uniform(0.5, 3.0))
            v = float(rng.uniform(0.5, 3.0))
            h = 1e-5
            fd = (F(u, v + h) - F(u, v - h)) / (2 * h)
            assert fd == pytest.approx(-dev(u, v), abs=1e-6)
