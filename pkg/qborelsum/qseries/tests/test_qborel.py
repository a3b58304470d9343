import cmath
import math

import numpy as np
from django.test import TestCase

from qseries.definitions import SumMethod
from qseries.exceptions import (
    DomainError,
    ForbiddenDirectionError,
    ParameterError,
    PoleError,
    RegionError,
    ResonanceError,
)
from qseries.qborel import (
    BorelImage,
    SpiralNeighborhood,
    asymptotic_ratios,
    borel_growth_profile,
    borel_growth_ratios,
    borel_image,
    borel_remainder,
    closed_form_argument,
    continue_phi,
    fit_gevrey_constants,
    gevrey_bound_excess,
    optimal_truncation,
    qborel_transform,
    qlaplace,
    qsum_closed,
    qsum_direct,
    qsum_remainder,
    spiral_distance,
)
from qseries.qcore import QBase, QSpiral, qpoch_inf
from qseries.series import CoefficientStream, SeriesParams, eval_phi, partial_sum, phi_coefficients

ZHANG = SeriesParams(QBase(0.5), (2.0, 3.0))
MORITA = SeriesParams(QBase(0.5), (2.0, 3.0, 5.0), (7.0,))
SECOND_ORDER = SeriesParams(QBase(0.6), (2.0, 3.0, 7.0))
NONTERMINATING = SeriesParams(QBase(0.5), (2.5, 3.5))

ANCHORS = (1 + 1j, 0.5 - 1j, -0.3 + 1j)
FAMILIES = (ZHANG, MORITA, SECOND_ORDER)


def relative(value: complex, reference: complex) -> float:
    return abs(value - reference) / abs(reference)


def sample_points(params: SeriesParams, lam: complex, count: int = 10) -> list[complex]:
    """Points with 0.2 <= |x| <= 0.6 kept away from the pole spiral [-lambda; p]."""
    poles = QSpiral(-lam, params.p)
    points = []
    for index, modulus in enumerate(np.linspace(0.2, 0.6, count)):
        for shift in np.linspace(0.0, 2.0 * math.pi, 12, endpoint=False):
            x = float(modulus) * cmath.exp(1j * (0.35 + 1.7 * index + float(shift)))
            if spiral_distance(poles, x)[1] > 0.05:
                points.append(x)
                break
    return points


class QBorelTransformTests(TestCase):
    def test_examples(self) -> None:
        np.testing.assert_allclose(qborel_transform([1.0, 1.0, 1.0, 1.0], 0.5), [1.0, 1.0, 0.5, 0.125])
        self.assertEqual(len(qborel_transform([], 0.5)), 0)

    def test_borel_coefficients_are_the_image_series(self) -> None:
        for params in (NONTERMINATING, SECOND_ORDER, MORITA):
            q, k = params.q, params.k
            coefficients = phi_coefficients(q, params.a, params.b, 15)
            image = phi_coefficients(q, params.a, params.b + (0.0,) * k, 15) * (-1.0) ** (k * np.arange(15))
            with self.subTest(params=params.to_log_payload()):
                np.testing.assert_allclose(qborel_transform(coefficients, params.p), image, rtol=1e-12)

    def test_shift_covariance(self) -> None:
        rng = np.random.default_rng(11)
        p = 0.5
        coefficients = rng.normal(size=20) + 1j * rng.normal(size=20)
        j = np.arange(20)
        for m in range(3):
            for n in range(3):
                # x^m sigma^n f
                shifted = np.zeros(20 + m, dtype=complex)
                shifted[m:] = coefficients * p ** (n * j)
                lhs = qborel_transform(shifted, p)[m:]
                rhs = p ** (m * (m - 1) / 2) * qborel_transform(coefficients, p) * p ** ((n + m) * j)
                with self.subTest(m=m, n=n):
                    np.testing.assert_allclose(lhs, rhs, rtol=1e-10)


class ContinuePhiTests(TestCase):
    a = (2.5, 3.5)
    b = (6.0,)

    def test_agrees_with_series_on_overlap(self) -> None:
        for xi in (0.7 * cmath.exp(1j), 0.9 * cmath.exp(-2.2j)):
            with self.subTest(xi=xi):
                series = eval_phi(0.5, self.a, self.b, xi)
                self.assertLess(relative(continue_phi(0.5, self.a, self.b, xi), series), 1e-9)

    def test_symmetric_in_upper_parameters(self) -> None:
        xi = 3.0 * cmath.exp(0.4j)
        forward = continue_phi(0.5, self.a, self.b, xi)
        backward = continue_phi(0.5, self.a[::-1], self.b, xi)
        self.assertLess(relative(forward, backward), 1e-12)

    def test_pole_spiral(self) -> None:
        with self.assertRaises(PoleError):
            continue_phi(0.5, self.a, self.b, 2.0)

    def test_resonance(self) -> None:
        with self.assertRaises(ResonanceError) as cm:
            continue_phi(0.5, (2.0, 4.0), self.b, 3.0j)
        self.assertEqual((cm.exception.i, cm.exception.j, cm.exception.m), (0, 1, 1))

    def test_region_and_shape(self) -> None:
        with self.assertRaises(RegionError):
            continue_phi(0.5, self.a, self.b, 0.1j)
        with self.assertRaises(ParameterError):
            continue_phi(0.5, self.a, (), 3.0j)
        with self.assertRaises(DomainError):
            continue_phi(0.5, self.a, self.b, 0.0)


class BorelImageTests(TestCase):
    def test_value_at_origin(self) -> None:
        img = BorelImage(NONTERMINATING)
        self.assertLess(abs(borel_image(img, 1e-8) - 1.0), 1e-6)

    def test_series_and_continuation_agree(self) -> None:
        xi = 0.8 * cmath.exp(0.7j)
        for params in (NONTERMINATING, SECOND_ORDER):
            img = BorelImage(params)
            with self.subTest(params=params.to_log_payload()):
                self.assertLess(relative(img.continuation(xi), img.series(xi)), 1e-9)

    def test_pole_spiral(self) -> None:
        img = BorelImage(NONTERMINATING)
        self.assertEqual(img.pole_spiral.anchor, -1.0)
        with self.assertRaises(PoleError):
            borel_image(img, -4.0)

    def test_polynomial_image(self) -> None:
        img = BorelImage(ZHANG)
        self.assertTrue(img.is_polynomial)
        # 1 + (1-2)(1-3) / (1-q) * (-xi)
        self.assertAlmostEqual(borel_image(img, 10.0), 1.0 - 4.0 * 10.0, places=10)

    def test_invalid_switch_radii(self) -> None:
        with self.assertRaises(ParameterError):
            BorelImage(NONTERMINATING, inner_radius=1.5)
        with self.assertRaises(ParameterError):
            BorelImage(NONTERMINATING, inner_radius=0.6, outer_switch=0.5)

    def test_growth_profile(self) -> None:
        img = BorelImage(NONTERMINATING)
        ratios = borel_growth_ratios(img, 1 + 1j, range(-20, 21), growth=1.0)
        peak = int(np.argmax(ratios)) - 20
        self.assertTrue(np.all(np.isfinite(ratios)))
        self.assertLessEqual(abs(peak), 10)
        self.assertLess(ratios[0], 1e-4 * ratios.max())
        self.assertLess(ratios[-1], 1e-4 * ratios.max())
        near = borel_growth_profile(img, 1 + 1j, range(-10, 11), growth=1.0)
        wide = borel_growth_profile(img, 1 + 1j, range(-20, 21), growth=1.0)
        self.assertEqual(near, wide)

    def test_remainder_inside_and_outside_the_inner_disk(self) -> None:
        img = BorelImage(NONTERMINATING)
        lower = NONTERMINATING.b + (0.0,)
        head = phi_coefficients(NONTERMINATING.q, NONTERMINATING.a, lower, 4)
        for xi in (0.5 * cmath.exp(1j), 0.05j, 2.0 * cmath.exp(0.3j)):
            polynomial = sum(head[n] * (-xi) ** n for n in range(4))
            with self.subTest(xi=xi):
                expected = borel_image(img, xi) - polynomial
                self.assertLess(abs(borel_remainder(img, xi, 4) - expected), 1e-12 * max(1.0, abs(polynomial)))
        self.assertEqual(borel_remainder(img, 0.0, 4), 0.0)
        with self.assertRaises(ParameterError):
            borel_remainder(img, 0.1, -1)

    def test_remainder_of_small_borel_argument_keeps_relative_accuracy(self) -> None:
        img = BorelImage(NONTERMINATING)
        lower = NONTERMINATING.b + (0.0,)
        coefficients = phi_coefficients(NONTERMINATING.q, NONTERMINATING.a, lower, 8)
        xi = 1e-3 * cmath.exp(0.2j)
        # the leading tail term dominates to O(|xi|)
        leading = coefficients[6] * (-xi) ** 6
        self.assertLess(relative(borel_remainder(img, xi, 6), leading), 1e-1)

class QLaplaceTests(TestCase):
    def test_constant_and_linear(self) -> None:
        x = 0.3 + 0.2j
        self.assertLess(abs(qlaplace(lambda xi: 1.0, 1 + 1j, 0.5, x).value - 1.0), 1e-12)
        self.assertLess(relative(qlaplace(lambda xi: xi, 1 + 1j, 0.5, x).value, x), 1e-12)

    def test_round_trip_of_convergent_series(self) -> None:
        q, a = 0.5, 0.3
        x = 0.2 * cmath.exp(0.5j)
        expected = qpoch_inf(a * x, q) / qpoch_inf(x, q)
        evaluation = qlaplace(lambda xi: eval_phi(q, (a,), (0.0,), -xi), 1.0, q, x)
        self.assertLess(relative(evaluation.value, expected), 1e-9)
        self.assertEqual(evaluation.method, SumMethod.DIRECT)
        self.assertGreater(evaluation.terms_used, 10)

    def test_shift_covariance(self) -> None:
        p = 0.5
        x = 0.3 * cmath.exp(0.7j)

        def g(xi: complex) -> complex:
            return 1.0 / (1.0 + 0.5 * xi)

        for m in range(3):
            for n in range(3):
                lhs = qlaplace(lambda xi, m=m, n=n: xi**m * g(p**n * xi), 1.0, p, x).value
                rhs = p ** (-m * (m - 1) / 2) * x**m * qlaplace(g, 1.0, p, p ** (n - m) * x).value
                with self.subTest(m=m, n=n):
                    self.assertLess(relative(lhs, rhs), 1e-10)

    def test_pole_index(self) -> None:
        lam = 1 + 1j
        with self.assertRaises(PoleError) as cm:
            qlaplace(lambda xi: 1.0, lam, 0.5, -lam * 0.25)
        self.assertEqual(cm.exception.index, 2)

    def test_zero_arguments(self) -> None:
        with self.assertRaises(DomainError):
            qlaplace(lambda xi: 1.0, 1.0, 0.5, 0.0)


class QSumTests(TestCase):
    def test_direct_equals_closed(self) -> None:
        for params in FAMILIES:
            for lam in ANCHORS:
                points = sample_points(params, lam)
                self.assertGreaterEqual(len(points), 8)
                for x in points:
                    direct = qsum_direct(params, lam, x)
                    closed = qsum_closed(params, lam, x)
                    with self.subTest(params=params.to_log_payload(), lam=lam, x=x):
                        self.assertLess(relative(direct.value, closed.value), 1e-8)
                        self.assertEqual(closed.method, SumMethod.CLOSED)

    def test_resonant_family_is_rejected(self) -> None:
        # 3/5 = 0.6 = q
        params = SeriesParams(QBase(0.6), (2.0, 3.0, 5.0))
        with self.assertRaises(ResonanceError) as cm:
            qsum_closed(params, 1 + 1j, 0.4j)
        self.assertEqual((cm.exception.i, cm.exception.j, cm.exception.m), (1, 2, 1))
        with self.assertRaises(ResonanceError):
            qsum_direct(SeriesParams(QBase(0.5), (2.0, 4.0)), 1 + 1j, 0.4j)

    def test_same_spiral_class_gives_same_sum(self) -> None:
        lam = 1 + 1j
        p = NONTERMINATING.p.value
        for x in (0.3 * cmath.exp(0.4j), 0.1 * cmath.exp(-1.9j)):
            with self.subTest(x=x):
                first = qsum_direct(NONTERMINATING, lam, x).value
                second = qsum_direct(NONTERMINATING, lam * p**2, x).value
                self.assertLess(relative(first, second), 1e-10)

    def test_remainder_sum_completes_the_partial_sum(self) -> None:
        lam = 0.5 - 1j
        stream = CoefficientStream(NONTERMINATING)
        for x in (0.3 * cmath.exp(0.4j), 0.1 * cmath.exp(-1.9j)):
            value = qsum_direct(NONTERMINATING, lam, x).value
            for n_terms in (0, 3, 6):
                remainder = qsum_remainder(NONTERMINATING, lam, x, n_terms).value
                with self.subTest(x=x, n_terms=n_terms):
                    self.assertLess(relative(remainder + partial_sum(stream, x, n_terms), value), 1e-10)

    def test_optimal_truncation_grows_towards_zero(self) -> None:
        direction = cmath.exp(1j * math.pi / 4)
        orders = [optimal_truncation(NONTERMINATING, 0.3 * direction * 0.5**step) for step in (0, 4, 8, 16)]
        self.assertEqual(orders, sorted(orders))
        self.assertGreater(orders[-1], orders[0])
        self.assertEqual(optimal_truncation(NONTERMINATING, 0.0), 0)

    def test_simple_poles(self) -> None:
        # anchored next to the Borel pole spiral [-1;q] so the residues are not exponentially small
        lam = -1 + 0.1j
        p = NONTERMINATING.p.value
        for m in (-1, 0, 1):
            pole = -lam * p**m
            means, one_sided = [], []
            for delta in (1e-3, 1e-4, 1e-5):
                above = pole * (1.0 + delta)
                below = pole * (1.0 - delta)
                upper = (above - pole) * qsum_direct(NONTERMINATING, lam, above).value
                lower = (below - pole) * qsum_direct(NONTERMINATING, lam, below).value
                means.append((upper + lower) / 2)
                one_sided.append(upper)
            with self.subTest(m=m):
                self.assertGreater(abs(means[-1]), 1e-8)
                self.assertLess(relative(means[0], means[-1]), 1e-3)
                self.assertLess(abs(one_sided[2] - one_sided[1]) * 5, abs(one_sided[1] - one_sided[0]))

    def test_pole_proximity_is_rejected(self) -> None:
        lam = 1 + 1j
        with self.assertRaises(PoleError):
            qsum_direct(NONTERMINATING, lam, -lam * 0.5 * (1 + 1e-9))

    def test_forbidden_directions(self) -> None:
        for params, lam in ((NONTERMINATING, -1.0), (NONTERMINATING, -0.25), (SECOND_ORDER, 0.36)):
            with self.subTest(params=params.to_log_payload(), lam=lam):
                with self.assertRaises(ForbiddenDirectionError):
                    qsum_direct(params, lam, 0.3j)
                with self.assertRaises(ForbiddenDirectionError):
                    qsum_closed(params, lam, 0.3j)

    def test_closed_form_region(self) -> None:
        self.assertAlmostEqual(abs(closed_form_argument(MORITA, 0.05)), 0.5 * 7.0 / (30.0 * 0.05))
        with self.assertRaises(RegionError):
            qsum_closed(MORITA, 1 + 1j, 0.05)
        # the direct method has no such restriction
        self.assertTrue(cmath.isfinite(qsum_direct(MORITA, 1 + 1j, 0.05).value))

    def test_diagnostics(self) -> None:
        evaluation = qsum_closed(NONTERMINATING, 1 + 1j, 0.4 * cmath.exp(0.3j))
        self.assertEqual(evaluation.anchor, 1 + 1j)
        self.assertGreater(evaluation.terms_used, 0)
        self.assertGreater(evaluation.pole_proximity, 0.05)
        self.assertGreaterEqual(evaluation.max_term, 0.0)
        self.assertEqual(evaluation.to_log_payload()["method"], "closed")


class AsymptoticTests(TestCase):
    def _points_outside_tube(self, tube: SpiralNeighborhood, seed: int, count: int, low: float) -> list[complex]:
        rng = np.random.default_rng(seed)
        xs: list[complex] = []
        while len(xs) < count:
            x = float(rng.uniform(low, 0.1)) * cmath.exp(1j * float(rng.uniform(-math.pi, math.pi)))
            if not tube.contains(x):
                xs.append(x)
        return xs

    def test_gevrey_certificate(self) -> None:
        lam = 1 + 1j
        params = NONTERMINATING
        tube = SpiralNeighborhood(QSpiral(-lam, params.p), 0.1)
        ratios = asymptotic_ratios(params, lam, self._points_outside_tube(tube, 3, 20, 0.03), 12)
        self.assertEqual(ratios.shape, (20, 13))
        scale, growth = fit_gevrey_constants(ratios)
        self.assertTrue(math.isfinite(scale))
        self.assertTrue(math.isfinite(growth))
        self.assertLessEqual(gevrey_bound_excess(ratios, scale, growth), 1.0 + 1e-9)
        # the constants carry over to points they were not fitted on, up to an O(1) factor
        fresh = asymptotic_ratios(params, lam, self._points_outside_tube(tube, 11, 40, 0.01), 12)
        self.assertLessEqual(gevrey_bound_excess(fresh, scale, growth), 2.0)
        # the |p|^{-N(N-1)/2} normalization leaves no quadratic growth in N
        quadratic = np.polyfit(np.arange(13), np.log(np.max(ratios, axis=0)), 2)[0]
        self.assertLess(abs(quadratic), 0.15)

    def test_ratios_from_remainder_sum_match_subtraction(self) -> None:
        lam = 1 + 1j
        x = 0.3 * cmath.exp(0.4j)
        stream = CoefficientStream(NONTERMINATING)
        value = qsum_direct(NONTERMINATING, lam, x).value
        ratios = asymptotic_ratios(NONTERMINATING, lam, [x], 4)[0]
        for n_terms in range(5):
            remainder = abs(value - partial_sum(stream, x, n_terms))
            scale = 0.5 ** (-n_terms * (n_terms - 1) / 2) * abs(x) ** n_terms
            with self.subTest(n_terms=n_terms):
                self.assertLess(abs(ratios[n_terms] - remainder / scale), 1e-8 * ratios[n_terms])

    def test_bound_excess(self) -> None:
        ratios = np.array([[1.0, 2.0, 4.0], [0.5, 3.0, 2.0]])
        self.assertEqual(gevrey_bound_excess(ratios, 1.0, 2.0), 1.5)

    def test_neighborhood(self) -> None:
        tube = SpiralNeighborhood(QSpiral(-1.0, 0.5), 0.1)
        self.assertTrue(tube.contains(-0.25 * 1.05))
        self.assertFalse(tube.contains(0.25j))
        with self.assertRaises(ParameterError):
            SpiralNeighborhood(QSpiral(-1.0, 0.5), 0.0)
