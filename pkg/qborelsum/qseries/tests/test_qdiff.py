import cmath
import math

import numpy as np
from django.test import TestCase

from qseries.exceptions import DomainError, ParameterError, RegionError
from qseries.qborel import qsum_closed, qsum_direct
from qseries.qcore import QBase, theta
from qseries.qdiff import (
    QOperator,
    anchor_difference,
    apply_operator,
    evaluate_anchored_operator,
    evaluate_operator,
    fundamental_solution,
    stokes_coefficients,
    stokes_factor,
)
from qseries.series import CoefficientStream, SeriesParams, partial_sum

ZHANG = SeriesParams(QBase(0.5), (2.0, 3.0))
MORITA = SeriesParams(QBase(0.5), (2.0, 3.0, 5.0), (7.0,))
SECOND_ORDER = SeriesParams(QBase(0.6), (2.0, 3.0, 7.0))
NONTERMINATING = SeriesParams(QBase(0.5), (2.5, 3.5))

FAMILIES = (ZHANG, MORITA, SECOND_ORDER, NONTERMINATING)
RING = tuple(1.5 * cmath.exp(1j * (0.3 + 2.0 * math.pi * index / 6)) for index in range(6))


class QOperatorTests(TestCase):
    def test_coefficients(self) -> None:
        operator = QOperator(ZHANG)
        np.testing.assert_allclose(operator.upper_coefficients, [1.0, -5.0, 6.0])
        np.testing.assert_allclose(operator.lower_coefficients, [1.0, -1.0])
        # (1 - sigma)(1 - (7/q) sigma)
        np.testing.assert_allclose(QOperator(MORITA).lower_coefficients, [1.0, -15.0, 14.0])

    def test_stencil(self) -> None:
        self.assertEqual(QOperator(NONTERMINATING).stencil, range(-1, 2))
        self.assertEqual(QOperator(MORITA).stencil, range(-1, 3))
        self.assertEqual(QOperator(SECOND_ORDER).stencil, range(-2, 2))

    def test_linearity(self) -> None:
        rng = np.random.default_rng(5)
        alpha, beta = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))

        def f(y: complex) -> complex:
            return y**2 + 1.0

        def g(y: complex) -> complex:
            return cmath.exp(y)

        for x in RING:
            combined = evaluate_operator(lambda y: alpha * f(y) + beta * g(y), MORITA, x)
            expected = alpha * apply_operator(f, MORITA, x) + beta * apply_operator(g, MORITA, x)
            with self.subTest(x=x):
                self.assertLess(abs(combined.residual - expected), 1e-12 * combined.local_scale)

    def test_partial_sum_defect_order(self) -> None:
        n_terms = 3
        stream = CoefficientStream(NONTERMINATING)

        def truncated(y: complex) -> complex:
            return partial_sum(stream, y, n_terms)

        direction = cmath.exp(0.4j)
        large = abs(apply_operator(truncated, NONTERMINATING, 1e-3 * direction))
        small = abs(apply_operator(truncated, NONTERMINATING, 1e-4 * direction))
        self.assertGreaterEqual(math.log10(large / small), n_terms - 1)

    def test_relative_residual_without_scale(self) -> None:
        evaluation = evaluate_operator(lambda y: 0.0, ZHANG, 1.0)
        self.assertEqual(evaluation.residual, 0.0)
        self.assertEqual(evaluation.relative, 0.0)


class SolutionPropertyTests(TestCase):
    def test_closed_sum_solves_the_equation(self) -> None:
        lam = 1 + 1j
        for params in FAMILIES:
            for x in RING:
                evaluation = evaluate_anchored_operator(
                    lambda anchor, y, params=params: qsum_closed(params, anchor, y).value, params, lam, x
                )
                with self.subTest(params=params.to_log_payload(), x=x):
                    self.assertLess(evaluation.relative, 1e-8)

    def test_fixed_anchor_solves_the_equation_when_k_is_one(self) -> None:
        lam = 1 + 1j
        for params in (ZHANG, MORITA, NONTERMINATING):
            for x in RING:
                evaluation = evaluate_operator(lambda y, params=params: qsum_closed(params, lam, y).value, params, x)
                with self.subTest(params=params.to_log_payload(), x=x):
                    self.assertLess(evaluation.relative, 1e-8)

    def test_second_order_sum_needs_the_shifted_anchor(self) -> None:
        lam = 1 + 1j
        x = -1.433 - 0.443j
        anchored = evaluate_anchored_operator(
            lambda anchor, y: qsum_closed(SECOND_ORDER, anchor, y).value, SECOND_ORDER, lam, x
        )
        fixed = evaluate_operator(lambda y: qsum_closed(SECOND_ORDER, lam, y).value, SECOND_ORDER, x)
        self.assertLess(anchored.relative, 1e-8)
        self.assertGreater(fixed.relative, 1e-3)

    def test_direct_sum_solves_the_equation(self) -> None:
        lam = 0.5 - 1j
        for x in (0.3 * cmath.exp(0.2j), 0.15 * cmath.exp(2.5j)):
            evaluation = evaluate_operator(lambda y: qsum_direct(NONTERMINATING, lam, y).value, NONTERMINATING, x)
            with self.subTest(x=x):
                self.assertLess(evaluation.relative, 1e-8)

    def test_solutions_at_infinity(self) -> None:
        for params in FAMILIES:
            for i in range(1, params.r + 1):
                for x in RING:
                    evaluation = evaluate_operator(
                        lambda y, params=params, i=i: fundamental_solution(params, i, y), params, x
                    )
                    with self.subTest(params=params.to_log_payload(), i=i, x=x):
                        self.assertLess(evaluation.relative, 1e-8)

    def test_prefactor_shift(self) -> None:
        q = NONTERMINATING.q
        x = 0.7 * cmath.exp(1.1j)
        for a_i in NONTERMINATING.a:

            def prefactor(y: complex, a_i: complex = a_i) -> complex:
                return cmath.exp(theta(q, -a_i * y).log_value - theta(q, -y).log_value)

            with self.subTest(a_i=a_i):
                ratio = prefactor(q.value * x) / prefactor(x)
                self.assertLess(abs(ratio * a_i - 1.0), 1e-10)

    def test_solution_region(self) -> None:
        with self.assertRaises(RegionError):
            fundamental_solution(NONTERMINATING, 1, 0.01j)
        with self.assertRaises(ParameterError):
            fundamental_solution(NONTERMINATING, 3, 1.0j)
        with self.assertRaises(DomainError):
            fundamental_solution(NONTERMINATING, 1, 0.0)


class StokesTests(TestCase):
    def test_recombination_equals_closed_sum(self) -> None:
        lam = 1 + 1j
        for params in FAMILIES:
            for x in RING:
                decomposition = stokes_coefficients(params, lam, x)
                closed = qsum_closed(params, lam, x).value
                with self.subTest(params=params.to_log_payload(), x=x):
                    self.assertEqual(len(decomposition.coefficients), params.r)
                    self.assertLess(abs(decomposition.recombined - closed) / abs(closed), 1e-9)

    def test_periodic_factor_is_p_periodic(self) -> None:
        lam = 1 + 1j
        for params in (NONTERMINATING, SECOND_ORDER):
            p = params.p.value
            for j in range(1, params.r + 1):
                for x in RING[:3]:
                    first = stokes_factor(params, j, lam, x)
                    shifted = stokes_factor(params, j, lam, p * x)
                    with self.subTest(params=params.to_log_payload(), j=j, x=x):
                        self.assertLess(abs(shifted - first) / abs(first), 1e-10)

    def test_continuity_in_lambda(self) -> None:
        lam = 1 + 1j
        x = RING[1]
        step = 1e-4
        base = stokes_coefficients(NONTERMINATING, lam, x).recombined
        single = stokes_coefficients(NONTERMINATING, lam * (1 + step), x).recombined - base
        double = stokes_coefficients(NONTERMINATING, lam * (1 + 2 * step), x).recombined - base
        ratio = abs(double) / (2 * abs(single))
        self.assertGreaterEqual(ratio, 0.5)
        self.assertLessEqual(ratio, 2.0)

    def test_anchor_difference_matches_direct_sums(self) -> None:
        first_anchor, second_anchor = 1j, 1 + 0.5j
        for x in (0.3 * cmath.exp(1j * math.pi / 4), 0.15 * cmath.exp(1j * math.pi / 4)):
            first = qsum_direct(NONTERMINATING, first_anchor, x).value
            expected = first - qsum_direct(NONTERMINATING, second_anchor, x).value
            difference = anchor_difference(NONTERMINATING, first_anchor, second_anchor, x)
            with self.subTest(x=x):
                self.assertLess(abs(difference - expected) / abs(expected), 1e-6)

    def test_stokes_phenomenon_is_beyond_all_orders(self) -> None:
        params = NONTERMINATING
        p = params.p.value
        start = 0.3 * cmath.exp(1j * math.pi / 4)
        xs = [start * p**step for step in range(25)]
        differences = np.array([abs(anchor_difference(params, 1j, 1 + 0.5j, x)) for x in xs])
        self.assertTrue(np.all(differences > 0))
        log_x = np.log(np.abs(xs))
        for n_terms in range(11):
            ratios = np.log(differences) - n_terms * log_x
            peak = int(np.argmax(ratios))
            with self.subTest(n_terms=n_terms):
                self.assertLess(peak, 20)
                self.assertTrue(np.all(np.diff(ratios[peak:]) < 0))
                self.assertLess(ratios[-1], ratios[0] + math.log(1e-6))
        # the jump solves a first order equation near 0: log|delta f| is quadratic in j with curvature ln|p|
        curvature = np.diff(np.log(differences), 2)[8:]
        np.testing.assert_allclose(curvature, math.log(abs(p)), rtol=0.05)

    def test_log_payload(self) -> None:
        decomposition = stokes_coefficients(NONTERMINATING, 1 + 1j, RING[0])
        payload = decomposition.to_log_payload()
        self.assertEqual(len(payload["coefficients"]), 2)
        self.assertEqual(len(decomposition.connection_constants), 2)
        self.assertEqual(len(decomposition.periodic_factors), 2)
