"""
The q-difference operator satisfied by the series, its solutions at infinity
and the q-Stokes decomposition of the [lambda;p]-sum.

With sigma y(x) = y(qx) the operator reads

    x prod_j (1 - a_j sigma) (-sigma)^{-k} - (1 - sigma) prod_l (1 - (b_l/q) sigma)

and is applied to an evaluator on the stencil x q^m, -k <= m <= max(r-k, s+1).
"""

from __future__ import annotations

import cmath
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .definitions import POLE_PROXIMITY_TOL, SERIES_DEFAULT_TOL
from .exceptions import DomainError, ParameterError, PoleError, RegionError
from .qborel import (
    check_direction,
    closed_form_argument,
    log_connection_constant,
    optimal_truncation,
    qsum_remainder,
)
from .qcore import QSpiral, theta
from .series import SeriesParams, eval_phi

logger = logging.getLogger(__name__)


def _shift_polynomial(roots: list[complex]) -> np.ndarray:
    """Coefficients of prod (1 - c sigma) in increasing powers of sigma."""
    coefficients = np.array([1.0 + 0.0j])
    for value in roots:
        coefficients = np.convolve(coefficients, np.array([1.0, -value], dtype=complex))
    return coefficients


@dataclass(frozen=True)
class QOperator:
    """The q-difference operator attached to a set of series parameters."""

    params: SeriesParams

    @property
    def upper_coefficients(self) -> np.ndarray:
        """alpha_m of prod_j (1 - a_j sigma)."""
        return _shift_polynomial(list(self.params.a))

    @property
    def lower_coefficients(self) -> np.ndarray:
        """beta_m of (1 - sigma) prod_l (1 - (b_l/q) sigma)."""
        q = self.params.q.value
        return _shift_polynomial([1.0, *(value / q for value in self.params.b)])

    @property
    def stencil(self) -> range:
        k = self.params.k
        return range(-k, max(self.params.r - k, self.params.s + 1) + 1)


@dataclass(frozen=True)
class OperatorEvaluation:
    residual: complex
    local_scale: float

    @property
    def relative(self) -> float:
        if self.local_scale == 0:
            return abs(self.residual)
        return abs(self.residual) / self.local_scale


def _operator_terms(operator: QOperator, x: complex, values: dict[int, complex]) -> OperatorEvaluation:
    k = operator.params.k
    # x (-1)^k sigma^{-k} first group, then (1 - sigma) prod(1 - b/q sigma)
    sign = (-1.0) ** k
    first = [x * sign * alpha * values[m - k] for m, alpha in enumerate(operator.upper_coefficients)]
    second = [beta * values[m] for m, beta in enumerate(operator.lower_coefficients)]
    residual = complex(sum(first, complex(0.0)) - sum(second, complex(0.0)))
    local_scale = max(abs(term) for term in first + second)
    return OperatorEvaluation(residual=residual, local_scale=local_scale)


def evaluate_operator(f: Callable[[complex], complex], params: SeriesParams, x: complex) -> OperatorEvaluation:
    """
    Residual of the operator applied to f at x, with the largest individual
    term as local scale.

    Raises:
        PoleError: f fails with a pole at one of the shift points.
    """
    operator = QOperator(params)
    q = params.q.value
    x = complex(x)
    values: dict[int, complex] = {}
    for shift in operator.stencil:
        try:
            values[shift] = complex(f(x * q**shift))
        except PoleError as exc:
            raise PoleError(f"evaluator hits a pole at shift q^{shift} x: {exc}", index=shift) from exc
    return _operator_terms(operator, x, values)


def evaluate_anchored_operator(
    f: Callable[[complex, complex], complex],
    params: SeriesParams,
    lam: complex,
    x: complex,
) -> OperatorEvaluation:
    """
    Residual of the operator applied to a [lambda;p]-sum f(lambda, x).

    sigma_q moves the anchor with the argument: the shift point q^m x is
    evaluated as f(lambda q^m, x q^m). For k = 1 this is the fixed-anchor
    residual since [lambda q; q] = [lambda; q]; for k >= 2 the periodic
    factors of the sum are only p-periodic and a fixed anchor does not solve
    the equation.

    Raises:
        PoleError: f fails with a pole at one of the shift points.
    """
    operator = QOperator(params)
    q = params.q.value
    lam = complex(lam)
    x = complex(x)
    values: dict[int, complex] = {}
    for shift in operator.stencil:
        factor = q**shift
        try:
            values[shift] = complex(f(lam * factor, x * factor))
        except PoleError as exc:
            raise PoleError(f"evaluator hits a pole at shift q^{shift} x: {exc}", index=shift) from exc
    return _operator_terms(operator, x, values)


def apply_operator(f: Callable[[complex], complex], params: SeriesParams, x: complex) -> complex:
    """Residual of the q-difference operator applied to f at x."""
    return evaluate_operator(f, params, x).residual


def _log_theta_pair(params: SeriesParams, numerator: complex, denominator: complex) -> complex:
    num = theta(params.q, numerator)
    den = theta(params.q, denominator)
    if den.reduced_value == 0:
        raise PoleError(f"theta_q({denominator}) vanishes")
    if num.reduced_value == 0:
        return complex(-math.inf, 0.0)
    return num.log_value - den.log_value


def _exp_log(value: complex) -> complex:
    if math.isinf(value.real) and value.real < 0:
        return complex(0.0)
    return cmath.exp(value)


def _check_index(params: SeriesParams, i: int) -> int:
    if not 1 <= i <= params.r:
        raise ParameterError(f"solution index must lie in 1..{params.r}, got {i}")
    return i - 1


def _check_theta_zero(params: SeriesParams, anchor: complex, x: complex, label: str) -> None:
    index, distance = QSpiral(anchor, params.q).nearest(x)
    if distance < POLE_PROXIMITY_TOL:
        raise PoleError(f"x={x} collides with the theta zero spiral {label} (index {index})", index=index, proximity=distance)


def fundamental_solution(params: SeriesParams, i: int, x: complex, tol: float = SERIES_DEFAULT_TOL) -> complex:
    """
    y_i(x) = theta_q(-a_i x) / theta_q(-x)
             r_phi_{r-1}(a_i, a_i q/b_1, ..., 0_k; a_i q/a_l (l != i); q, q b_1..b_s / (a_1..a_r x))

    Raises:
        RegionError: |q b_1..b_s / (a_1..a_r x)| >= 1.
    """
    j = _check_index(params, i)
    x = complex(x)
    if x == 0:
        raise DomainError("solutions at infinity are undefined at x = 0")
    params.ensure_nonresonant()
    argument = closed_form_argument(params, x)
    if abs(argument) >= 1.0:
        raise RegionError(f"solution y_{i} needs |q b/(a x)| < 1, got {abs(argument):.6g}")
    _check_theta_zero(params, 1.0, x, "[1;q]")
    q = params.q.value
    a_j = params.a[j]
    others = [value for index, value in enumerate(params.a) if index != j]
    inner = eval_phi(
        params.q,
        (a_j, *(a_j * q / value for value in params.b), *(0.0,) * params.k),
        tuple(a_j * q / value for value in others),
        argument,
        tol,
    )
    return _exp_log(_log_theta_pair(params, -a_j * x, -x)) * inner


def stokes_factor(params: SeriesParams, j: int, lam: complex, x: complex) -> complex:
    """
    T_j(x, lambda) for the 1-based index j; p-periodic in x.

    theta_p(p a_j^k x / lambda) / theta_p(p x / lambda)
    * theta_q((-1)^{1-k} a_j lambda) / theta_q((-1)^{1-k} lambda)
    * theta_q(-x) / theta_q(-a_j x)
    """
    index = _check_index(params, j)
    lam = complex(lam)
    x = complex(x)
    a_j = params.a[index]
    p = params.p
    k = params.k
    sign = (-1.0) ** (1 - k)
    _check_theta_zero(params, 1.0 / a_j, x, f"[1/a_{j};q]")
    theta_p_num = theta(p, p.value * a_j**k * x / lam)
    theta_p_den = theta(p, p.value * x / lam)
    if theta_p_den.reduced_value == 0:
        raise PoleError(f"x={x} lies on the pole spiral [-lambda;p]")
    log_value = (
        theta_p_num.log_value
        - theta_p_den.log_value
        + _log_theta_pair(params, sign * a_j * lam, sign * lam)
        + _log_theta_pair(params, -x, -a_j * x)
    )
    return _exp_log(log_value)


@dataclass(frozen=True)
class StokesDecomposition:
    """f(x) = sum_j M_j y_j(x) with M_j = C_j T_j(x, lambda)."""

    coefficients: tuple[complex, ...]
    solutions: tuple[complex, ...]
    connection_constants: tuple[complex, ...]
    periodic_factors: tuple[complex, ...]

    @property
    def recombined(self) -> complex:
        return complex(sum((m * y for m, y in zip(self.coefficients, self.solutions, strict=True)), complex(0.0)))

    def to_log_payload(self) -> dict[str, object]:
        return {
            "coefficients": [str(v) for v in self.coefficients],
            "recombined": str(self.recombined),
        }


def stokes_coefficients(params: SeriesParams, lam: complex, x: complex, tol: float = SERIES_DEFAULT_TOL) -> StokesDecomposition:
    """
    q-Stokes coefficients M_j, the solutions y_j at infinity and their recombination.

    The constants C_j come from the same infinite products as the closed form;
    the solutions are evaluated independently through ``fundamental_solution``.
    """
    lam = complex(lam)
    x = complex(x)
    check_direction(params, lam)
    params.ensure_nonresonant()
    constants = tuple(_exp_log(log_connection_constant(params.q, params.a, params.b, j)) for j in range(params.r))
    factors = tuple(stokes_factor(params, j + 1, lam, x) for j in range(params.r))
    solutions = tuple(fundamental_solution(params, j + 1, x, tol) for j in range(params.r))
    decomposition = StokesDecomposition(
        coefficients=tuple(c * t for c, t in zip(constants, factors, strict=True)),
        solutions=solutions,
        connection_constants=constants,
        periodic_factors=factors,
    )
    logger.debug(f"stokes_decomposition payload={decomposition.to_log_payload()}")
    return decomposition



def anchor_difference(
    params: SeriesParams,
    first_anchor: complex,
    second_anchor: complex,
    x: complex,
    n_terms: int | None = None,
) -> complex:
    """
    f^{[first]}(x) - f^{[second]}(x), the q-Stokes jump between two anchors.

    Both sums share the asymptotic expansion, so the jump is taken as the
    difference of their remainders after n_terms terms. The default is the
    optimal truncation at x, where each remainder is about as small as the
    jump itself and the subtraction keeps its digits.
    """
    x = complex(x)
    if n_terms is None:
        n_terms = optimal_truncation(params, x)
    first = qsum_remainder(params, first_anchor, x, n_terms).value
    second = qsum_remainder(params, second_anchor, x, n_terms).value
    return first - second
