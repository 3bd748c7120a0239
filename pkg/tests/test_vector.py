import math

import numpy as np
import pytest

from meanreduce.core import POSITIVE_REALS
from meanreduce.errors import (
    HullViolationError,
    InvalidArgumentError,
    InvalidDeviationError,
    InvalidPotentialError,
)
from meanreduce.scalar import ScalarDeviation, deviation_mean
from meanreduce.vector import (
    Covector,
    GenDeviation,
    PotentialFn,
    gen_deviation_mean,
    gen_e_sum,
    grid_oracle_mean,
    inner_product_deviation as library_ipd,
    lift_scalar_deviation,
    make_norm_sq_potential,
    make_potential_deviation,
    potential_mean,
    verify_vi,
)


def inner_product_deviation(dim: int, weight=1.0) -> GenDeviation:
    return library_ipd(weight, dim)


TRIANGLE = ((0.0, 0.0), (2.0, 0.0), (0.0, 2.0))


class TestCovector:
    def test_action_is_dot_product(self):
        cov = Covector((1.0, -2.0))
        assert cov((3.0, 1.0)) == 1.0

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            Covector((math.nan,))


class TestGenESum:
    def test_zero_at_centroid(self):
        E = [inner_product_deviation(2)] * 3
        out = gen_e_sum(E, TRIANGLE, (2 / 3, 2 / 3))
        np.testing.assert_allclose(out.array, [0.0, 0.0], atol=1e-15)

    def test_zero_on_diagonal(self):
        E = [inner_product_deviation(2)] * 3
        u = (0.4, -1.2)
        out = gen_e_sum(E, (u, u, u), u)
        np.testing.assert_allclose(out.array, [0.0, 0.0], atol=1e-15)

    def test_single_deviation_value(self):
        E = [inner_product_deviation(2)]
        out = gen_e_sum(E, ((1.0, 0.0),), (0.0, 0.0))
        np.testing.assert_allclose(out.array, [2.0, 0.0])

    def test_dimension_mismatch(self):
        E = [inner_product_deviation(2)] * 2
        with pytest.raises(InvalidArgumentError):
            gen_e_sum(E, ((0.0, 0.0), (1.0, 1.0)), (0.0, 0.0, 0.0))


class TestGenDeviationMean:
    def test_centroid_for_unit_weights(self):
        E = [inner_product_deviation(2)] * 3
        report = gen_deviation_mean(E, TRIANGLE)
        assert report.converged
        np.testing.assert_allclose(report.value, [2 / 3, 2 / 3], atol=1e-9)
        assert report.barycentric is not None

    def test_reflexive_on_constant_tuple(self):
        E = [inner_product_deviation(3)] * 4
        u = (0.3, -1.0, 2.0)
        report = gen_deviation_mean(E, (u, u, u, u))
        np.testing.assert_allclose(report.value, u, atol=1e-9)

    def test_weighted_closed_form(self):
        E = [inner_product_deviation(2, 3.0), inner_product_deviation(2, 1.0)]
        report = gen_deviation_mean(E, ((0.0, 0.0), (4.0, 0.0)))
        np.testing.assert_allclose(report.value, [1.0, 0.0], atol=1e-9)

    def test_single_point(self):
        E = [inner_product_deviation(2)]
        report = gen_deviation_mean(E, ((1.5, -0.5),))
        np.testing.assert_allclose(report.value, [1.5, -0.5])
        assert report.iterations == 0

    def test_empty_tuple_rejected(self):
        with pytest.raises(InvalidArgumentError):
            gen_deviation_mean([], ())

    def test_uniqueness_across_initializations(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            n = int(rng.integers(2, 6))
            d = int(rng.integers(1, 5))
            weights = [float(c) for c in rng.uniform(0.5, 2.5, n)]
            E = [inner_product_deviation(d, w) for w in weights]
            x = tuple(rng.uniform(-2.0, 2.0, d) for _ in range(n))
            a = gen_deviation_mean(E, x).value
            init = rng.dirichlet(np.ones(n))
            b = gen_deviation_mean(E, x, init=init).value
            assert float(np.linalg.norm(a - b)) <= 1e-7

    def test_vi_slack_reverified_at_solution(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            n = int(rng.integers(2, 6))
            E = [inner_product_deviation(2, float(c)) for c in rng.uniform(0.5, 2.0, n)]
            x = tuple(rng.uniform(-2.0, 2.0, 2) for _ in range(n))
            report = gen_deviation_mean(E, x)
            scale = 1.0 + max(float(np.linalg.norm(np.asarray(p))) for p in x)
            vi = verify_vi(E, x, report.value, 1e-8 * scale)
            assert vi.ok

    def test_scalar_consistency_in_dimension_one(self):
        rng = np.random.default_rng(47)
        dev = ScalarDeviation(domain=POSITIVE_REALS, eval=lambda u, v: u * (u - v),
                              label="gini21", validate=False)
        lifted = lift_scalar_deviation(dev)
        for _ in range(25):
            n = int(rng.integers(2, 6))
            x = tuple(float(v) for v in rng.uniform(0.2, 4.0, n))
            scalar_value = deviation_mean([dev] * n, x).value
            vector_value = gen_deviation_mean([lifted] * n, [(v,) for v in x]).value
            assert vector_value[0] == pytest.approx(scalar_value, abs=1e-9)

    def test_monotonicity_violation_detected(self):
        # Reversed pairing: E(u, v) = v - u is anti-monotone the wrong way.
        # (Its zero happens to sit at the centroid, so start off-center.)
        bad = GenDeviation(
            dim=2,
            eval=lambda u, v: np.asarray(v, float) - np.asarray(u, float),
            label="reversed",
            validate=False,
        )
        with pytest.raises(InvalidDeviationError):
            gen_deviation_mean([bad] * 3, TRIANGLE, init=(0.7, 0.2, 0.1))


class TestGenDeviationValidation:
    def test_rejects_reversed_sign(self):
        with pytest.raises(InvalidDeviationError):
            GenDeviation(dim=2, eval=lambda u, v: np.asarray(v, float) - np.asarray(u, float))

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(InvalidDeviationError):
            GenDeviation(dim=1, eval=lambda u, v: (u[0] - v[0] + 1.0,))

    def test_accepts_valid_deviation(self):
        GenDeviation(dim=2, eval=lambda u, v: 2.0 * (np.asarray(u, float) - np.asarray(v, float)))


class TestVerifyVi:
    def test_true_at_centroid(self):
        E = [inner_product_deviation(2)] * 3
        vi = verify_vi(E, TRIANGLE, (2 / 3, 2 / 3), 1e-9)
        assert vi.ok
        assert vi.worst_slack <= 1e-9

    def test_false_at_vertex(self):
        E = [inner_product_deviation(2)] * 3
        vi = verify_vi(E, TRIANGLE, (0.0, 0.0), 1e-9)
        assert not vi.ok
        # g at the origin is 2((2,0)+(0,2)) = (4,4); slack against (2,0) is 8.
        assert vi.worst_slack == pytest.approx(8.0)
        assert vi.worst_index in (1, 2)

    def test_single_point_hull(self):
        E = [inner_product_deviation(2)]
        vi = verify_vi(E, ((1.0, 1.0),), (1.0, 1.0), 1e-12)
        assert vi.ok

    def test_outside_hull_rejected(self):
        E = [inner_product_deviation(2)] * 3
        with pytest.raises(HullViolationError):
            verify_vi(E, TRIANGLE, (5.0, 5.0), 1e-9)


class TestPotentialDeviation:
    def test_unit_weight_gradient(self):
        F = make_norm_sq_potential(1.0, dim=2)
        E = make_potential_deviation(F)
        u, v = np.array([0.5, 0.5]), np.array([2.0, -1.0])
        np.testing.assert_allclose(E(u, v).array, 2.0 * (u - v), atol=1e-12)

    def test_zero_on_diagonal(self):
        F = make_norm_sq_potential(2.5, dim=3)
        E = make_potential_deviation(F)
        u = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(E(u, u).array, np.zeros(3), atol=1e-12)

    def test_one_dimensional_value(self):
        F = PotentialFn(dim=1, eval=lambda u, v: (v[0] - u[0]) ** 2,
                        grad_v=lambda u, v: (2.0 * (v[0] - u[0]),), validate=False)
        E = make_potential_deviation(F)
        assert E((1.0,), (3.0,)).array[0] == pytest.approx(-4.0)

    def test_concave_potential_rejected(self):
        with pytest.raises(InvalidPotentialError):
            F = PotentialFn(dim=1, eval=lambda u, v: -((v[0] - u[0]) ** 2),
                            grad_v=lambda u, v: (-2.0 * (v[0] - u[0]),))
            make_potential_deviation(F)


class TestNormSqPotential:
    def test_value(self):
        F = make_norm_sq_potential(1.0, dim=2)
        assert F.value(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(25.0)

    def test_zero_on_diagonal(self):
        F = make_norm_sq_potential(1.0, dim=2)
        u = np.array([1.1, -0.3])
        assert F.value(u, u) == 0.0

    def test_weighted_value(self):
        F = make_norm_sq_potential(2.0, dim=1)
        assert F.value(np.array([1.0]), np.array([4.0])) == pytest.approx(18.0)

    def test_rejects_nonpositive_constant(self):
        with pytest.raises(InvalidArgumentError):
            make_norm_sq_potential(0.0, dim=2)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(53)
        F = make_norm_sq_potential(lambda u: 1.0 + 0.5 / (1.0 + float(u @ u)), dim=3)
        for _ in range(10):
            u = rng.uniform(-2, 2, 3)
            v = rng.uniform(-2, 2, 3)
            g = F.grad(u, v)
            for i in range(3):
                h = 1e-6
                vp, vm = v.copy(), v.copy()
                vp[i] += h
                vm[i] -= h
                fd = (F.value(u, vp) - F.value(u, vm)) / (2 * h)
                assert g[i] == pytest.approx(fd, abs=1e-6)


class TestPotentialMean:
    def test_centroid_least_squares(self):
        F = [make_norm_sq_potential(1.0, dim=2)] * 3
        report = potential_mean(F, TRIANGLE)
        assert report.converged
        np.testing.assert_allclose(report.value, [2 / 3, 2 / 3], atol=1e-9)

    def test_single_point(self):
        F = [make_norm_sq_potential(1.0, dim=2)]
        report = potential_mean(F, ((0.5, 0.5),))
        np.testing.assert_allclose(report.value, [0.5, 0.5])

    def test_weighted_one_dimensional_argmin(self):
        F = [make_norm_sq_potential(3.0, dim=1), make_norm_sq_potential(1.0, dim=1)]
        report = potential_mean(F, ((0.0,), (4.0,)))
        assert report.value[0] == pytest.approx(1.0, abs=1e-9)

    def test_agrees_with_deviation_route(self):
        rng = np.random.default_rng(59)
        for _ in range(15):
            n = int(rng.integers(2, 5))
            d = int(rng.integers(1, 4))
            weights = [float(c) for c in rng.uniform(0.5, 2.0, n)]
            F = [make_norm_sq_potential(w, dim=d) for w in weights]
            E = [make_potential_deviation(f) for f in F]
            x = tuple(rng.uniform(-2.0, 2.0, d) for _ in range(n))
            a = potential_mean(F, x).value
            b = gen_deviation_mean(E, x).value
            assert float(np.linalg.norm(a - b)) <= 1e-8

    def test_closed_form_weighted_average(self):
        rng = np.random.default_rng(61)
        for _ in range(15):
            n = int(rng.integers(2, 6))
            d = int(rng.integers(1, 4))
            weights = [float(c) for c in rng.uniform(0.5, 3.0, n)]
            F = [make_norm_sq_potential(w, dim=d) for w in weights]
            x = [rng.uniform(-2.0, 2.0, d) for _ in range(n)]
            value = potential_mean(F, x).value
            closed = sum(w * p for w, p in zip(weights, x)) / sum(weights)
            assert float(np.linalg.norm(value - closed)) <= 1e-9


class TestGridOracle:
    def test_centroid_within_lattice_spacing(self):
        F = [make_norm_sq_potential(1.0, dim=2)] * 3
        best = grid_oracle_mean(F, TRIANGLE, resolution=201)
        assert float(np.linalg.norm(best - np.array([2 / 3, 2 / 3]))) <= 0.02

    def test_single_point(self):
        F = [make_norm_sq_potential(1.0, dim=2)]
        np.testing.assert_allclose(grid_oracle_mean(F, ((1.0, 2.0),), 11), [1.0, 2.0])

    def test_weighted_one_dimensional(self):
        F = [make_norm_sq_potential(3.0, dim=1), make_norm_sq_potential(1.0, dim=1)]
        best = grid_oracle_mean(F, ((0.0,), (4.0,)), resolution=4001)
        assert best[0] == pytest.approx(1.0, abs=0.002)

    def test_resolution_too_small_rejected(self):
        F = [make_norm_sq_potential(1.0, dim=1)] * 2
        with pytest.raises(InvalidArgumentError):
            grid_oracle_mean(F, ((0.0,), (1.0,)), resolution=1)
