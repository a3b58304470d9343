"""q-Borel transform, Borel image continuation and the [lambda;p]-sum.

The divergent series f(x) = r_phi_s(a; b; q, x), k = r-s-1, is resummed in
two stages at base p = q^k:

  * the Borel image g(xi) = r_phi_{r-1}(a; b, 0_k; q, (-1)^{-k} xi) has unit
    radius and continues meromorphically with poles on [(-1)^k; q];
  * the Jackson sum sum_m g(lambda p^m) / theta_p(lambda p^m / x) gives the
    [lambda;p]-sum, meromorphic in x with simple poles on [-lambda; p].

``qsum_closed`` evaluates the same function from its r-term connection
formula, which converges for |q b_1..b_s / (a_1..a_r x)| < 1.
"""

from __future__ import annotations

import cmath
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .definitions import (
    BOREL_INNER_RADIUS,
    BOREL_OUTER_SWITCH,
    BOREL_SPIRAL_GUARD,
    JACKSON_CONSECUTIVE_SMALL_TERMS,
    JACKSON_DEFAULT_TOL,
    JACKSON_MAX_WINDOW,
    OPTIMAL_TRUNCATION_MAX_TERMS,
    POLE_PROXIMITY_TOL,
    SERIES_DEFAULT_TOL,
    SPIRAL_DEFAULT_TOL,
    SumMethod,
)
from .exceptions import ConvergenceError, DomainError, ForbiddenDirectionError, ParameterError, PoleError, RegionError
from .qcore import QBase, QSpiral, log_qpoch_inf, spiral_contains, term_cap, theta
from .series import (
    CoefficientStream,
    SeriesParams,
    ensure_nonresonant,
    eval_phi,
    eval_phi_counted,
    phi_coefficients,
    terminating_degree,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SumEvaluation:
    """A value of the [lambda;p]-sum with its diagnostics."""

    value: complex
    anchor: complex
    method: SumMethod
    terms_used: int
    max_term: float
    pole_proximity: float

    def to_log_payload(self) -> dict[str, object]:
        return {
            "value": str(self.value),
            "lambda": str(self.anchor),
            "method": self.method.value,
            "terms_used": self.terms_used,
            "max_term": self.max_term,
            "pole_proximity": self.pole_proximity,
        }


@dataclass(frozen=True)
class SpiralNeighborhood:
    """Union over m of the discs |x - lambda q^m| < epsilon |lambda q^m|."""

    anchor: QSpiral
    epsilon: float

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")

    def contains(self, x: complex) -> bool:
        _, distance = self.anchor.nearest(x)
        return distance < self.epsilon


def spiral_distance(s: QSpiral, x: complex) -> tuple[int, float]:
    """Nearest spiral index and relative distance |x - l b^m| / |l b^m|."""
    return s.nearest(x)


def qborel_transform(coeffs: Sequence[complex] | np.ndarray, p: QBase | complex | float) -> np.ndarray:
    """Order-one q-Borel transform at base p: a_n -> a_n p^{n(n-1)/2}."""
    base = QBase.coerce(p)
    values = np.asarray(coeffs, dtype=complex)
    n = np.arange(len(values))
    with np.errstate(under="ignore"):
        return values * np.power(base.value, n * (n - 1) // 2)


def log_connection_constant(
    q: QBase,
    a: Sequence[complex],
    b: Sequence[complex],
    j: int,
) -> complex:
    """
    log C_j = log prod_{i!=j} (a_i;q)_inf prod_l (b_l/a_j;q)_inf
              - log prod_l (b_l;q)_inf prod_{i!=j} (a_i/a_j;q)_inf

    Zero lower parameters contribute nothing. The real part is -inf when
    C_j vanishes (a terminating series).
    """
    a_j = a[j]
    others = [value for index, value in enumerate(a) if index != j]
    numerator = sum((log_qpoch_inf(value, q) for value in others), complex(0.0))
    numerator += sum((log_qpoch_inf(value / a_j, q) for value in b), complex(0.0))
    denominator = sum((log_qpoch_inf(value, q) for value in b), complex(0.0))
    denominator += sum((log_qpoch_inf(value / a_j, q) for value in others), complex(0.0))
    if math.isinf(denominator.real):
        raise PoleError(f"connection constant C_{j + 1} has a vanishing denominator")
    if math.isinf(numerator.real):
        return complex(-math.inf, 0.0)
    return numerator - denominator


def _exp_log(value: complex) -> complex:
    if math.isinf(value.real) and value.real < 0:
        return complex(0.0)
    return cmath.exp(value)


def _log_theta_quotient(q: QBase, x: complex, y: complex) -> complex:
    """log theta_q(x) - log theta_q(y); -inf when the numerator vanishes."""
    numerator = theta(q, x)
    denominator = theta(q, y)
    if denominator.reduced_value == 0:
        raise PoleError(f"theta_q({y}) vanishes (q={q.value})")
    if numerator.reduced_value == 0:
        return complex(-math.inf, 0.0)
    return numerator.log_value - denominator.log_value


def continue_phi(
    q: QBase | complex | float,
    a: Sequence[complex],
    b: Sequence[complex],
    xi: complex,
    tol: float = SERIES_DEFAULT_TOL,
    spiral_tol: float = SPIRAL_DEFAULT_TOL,
) -> complex:
    """
    Analytic continuation of r_phi_{r-1}(a; b; q, xi) outside the unit disk.

    sum_j C_j theta_q(-a_j xi) / theta_q(-xi)
          r_phi_{r-1}(a_j, a_j q/b_1, ...; a_j q/a_i (i != j); q, q b_1..b_{r-1} / (a_1..a_r xi))

    Raises:
        ResonanceError: a_i/a_j in q^Z.
        PoleError: xi on [1; q], the zeros of theta_q(-xi).
        RegionError: the inner argument has modulus >= 1.
    """
    base = QBase.coerce(q)
    upper = tuple(complex(v) for v in a)
    lower = tuple(complex(v) for v in b)
    xi = complex(xi)
    if len(lower) != len(upper) - 1 or any(v == 0 for v in upper + lower):
        raise ParameterError(f"continuation needs r nonzero upper and r-1 nonzero lower parameters, got a={upper}, b={lower}")
    if xi == 0:
        raise DomainError("continuation is undefined at xi = 0")
    ensure_nonresonant(upper, base, spiral_tol)
    poles = QSpiral(1.0, base)
    if poles.contains(xi, spiral_tol):
        index, distance = poles.nearest(xi)
        raise PoleError(f"xi={xi} lies on the pole spiral [1;q] (index {index})", index=index, proximity=distance)

    argument = base.value * math.prod(lower, start=complex(1.0)) / (math.prod(upper, start=complex(1.0)) * xi)
    if abs(argument) >= 1.0:
        raise RegionError(f"continuation argument |{argument}| >= 1 at xi={xi}")
    total = complex(0.0)
    for j, a_j in enumerate(upper):
        others = [value for index, value in enumerate(upper) if index != j]
        log_prefactor = log_connection_constant(base, upper, lower, j) + _log_theta_quotient(base, -a_j * xi, -xi)
        inner = eval_phi(
            base,
            (a_j, *(a_j * base.value / value for value in lower)),
            tuple(a_j * base.value / value for value in others),
            argument,
            tol,
        )
        total += _exp_log(log_prefactor) * inner
    return total


@dataclass(frozen=True)
class BorelImage:
    """The Borel image g of the divergent series, with its region switch."""

    params: SeriesParams
    inner_radius: float = BOREL_INNER_RADIUS
    outer_switch: float = BOREL_OUTER_SWITCH
    tol: float = SERIES_DEFAULT_TOL

    def __post_init__(self) -> None:
        if not 0.0 < self.inner_radius < 1.0:
            raise ParameterError(f"inner_radius must lie in (0, 1), got {self.inner_radius}")
        if self.outer_switch < self.inner_radius:
            raise ParameterError(f"outer_switch {self.outer_switch} < inner_radius {self.inner_radius}")

    @property
    def is_polynomial(self) -> bool:
        return terminating_degree(self.params.a, self.params.q) is not None

    @property
    def pole_spiral(self) -> QSpiral:
        return QSpiral((-1.0) ** self.params.k, self.params.q)

    def series(self, xi: complex) -> complex:
        params = self.params
        lower = params.b + (0.0,) * params.k
        return eval_phi(params.q, params.a, lower, (-1.0) ** params.k * xi, self.tol)

    def continuation(self, xi: complex) -> complex:
        """r-term continued form; each _{s+1}phi_{r-1} factor is entire."""
        params = self.params
        q = params.q
        k = params.k
        sign = (-1.0) ** k
        upper = params.a
        lower_product = params.lower_product
        total = complex(0.0)
        for j, a_j in enumerate(upper):
            others = [value for index, value in enumerate(upper) if index != j]
            argument = sign * q.value ** (k + 1) * lower_product / (a_j ** (1 - k) * math.prod(others, start=complex(1.0)) * xi)
            log_prefactor = log_connection_constant(q, upper, params.b, j)
            log_prefactor += _log_theta_quotient(q, -sign * a_j * xi, -sign * xi)
            inner = eval_phi(
                q,
                (a_j, *(a_j * q.value / value for value in params.b)),
                tuple(a_j * q.value / value for value in others),
                argument,
                self.tol,
            )
            total += _exp_log(log_prefactor) * inner
        return total


def borel_image(img: BorelImage, xi: complex) -> complex:
    """
    Evaluate g(xi), switching between the series and its continuation.

    Raises:
        PoleError: xi on [(-1)^k; q] outside the inner disk.
    """
    xi = complex(xi)
    modulus = abs(xi)
    if modulus <= img.inner_radius or img.is_polynomial:
        return img.series(xi)
    index, distance = img.pole_spiral.nearest(xi)
    if distance < POLE_PROXIMITY_TOL:
        raise PoleError(f"Borel image pole at xi={xi} (spiral index {index})", index=index, proximity=distance)
    if modulus < img.outer_switch and modulus < 1.0 and distance < BOREL_SPIRAL_GUARD:
        return img.series(xi)
    img.params.ensure_nonresonant()
    return img.continuation(xi)


def borel_remainder(img: BorelImage, xi: complex, n_terms: int) -> complex:
    """
    g(xi) minus its Taylor polynomial of degree n_terms - 1.

    Inside the inner disk the tail of the Borel series is summed directly, so
    the remainder keeps its relative accuracy however small it is.
    """
    if n_terms < 0:
        raise ParameterError(f"n_terms must be >= 0, got {n_terms}")
    params = img.params
    xi = complex(xi)
    argument = (-1.0) ** params.k * xi
    lower = params.b + (0.0,) * params.k
    modulus = abs(xi)
    if modulus == 0:
        return complex(0.0)
    if modulus <= img.inner_radius:
        # |xi|^length < tol past the last kept term
        length = math.ceil(math.log(img.tol) / math.log(modulus)) + 1
        count = min(n_terms + length, term_cap(params.q))
        coefficients = phi_coefficients(params.q, params.a, lower, count)[n_terms:]
        with np.errstate(under="ignore"):
            powers = np.power(argument, np.arange(n_terms, count, dtype=float))
        return complex(np.sum(coefficients * powers))
    head = phi_coefficients(params.q, params.a, lower, n_terms)
    return borel_image(img, xi) - complex(np.sum(head * np.power(argument, np.arange(n_terms, dtype=float))))


def qlaplace(
    g: Callable[[complex], complex],
    lam: complex,
    p: QBase | complex | float,
    x: complex,
    tol: float = JACKSON_DEFAULT_TOL,
    *,
    max_window: int = JACKSON_MAX_WINDOW,
    pole_tol: float = POLE_PROXIMITY_TOL,
    method: SumMethod = SumMethod.DIRECT,
) -> SumEvaluation:
    """
    Jackson sum sum_{m in Z} g(lam p^m) / theta_p(lam p^m / x).

    The window grows symmetrically from m = 0; each side stops after
    JACKSON_CONSECUTIVE_SMALL_TERMS terms below tol x running max |sum|.

    Raises:
        PoleError: x within pole_tol of [-lam; p].
        ConvergenceError: the window reached |m| = max_window.
    """
    base = QBase.coerce(p)
    lam = complex(lam)
    x = complex(x)
    if lam == 0 or x == 0:
        raise DomainError(f"q-Laplace transform needs nonzero lambda and x, got lambda={lam}, x={x}")
    index, proximity = QSpiral(-lam, base).nearest(x)
    if proximity < pole_tol:
        logger.warning(f"x={x} is {proximity:.3e} from the pole spiral [-lambda;p]")
        raise PoleError(
            f"x={x} lies on the pole spiral [-lambda;p] (index {index}, distance {proximity:.3e})",
            index=index,
            proximity=proximity,
        )

    def term(m: int) -> complex:
        xi = lam * base.value**m
        denominator = theta(base, xi / x)
        return g(xi) * cmath.exp(-denominator.log_scale) / denominator.reduced_value

    first = term(0)
    total = first
    running_max = abs(total)
    max_term = abs(first)
    terms_used = 1
    runs = {1: 0, -1: 0}
    m = 0
    while any(run < JACKSON_CONSECUTIVE_SMALL_TERMS for run in runs.values()):
        m += 1
        if m > max_window:
            raise ConvergenceError(f"Jackson sum did not settle within |m| <= {max_window} (x={x}, lambda={lam})")
        for side, run in runs.items():
            if run >= JACKSON_CONSECUTIVE_SMALL_TERMS:
                continue
            value = term(side * m)
            total += value
            terms_used += 1
            max_term = max(max_term, abs(value))
            running_max = max(running_max, abs(total))
            runs[side] = run + 1 if abs(value) < tol * running_max else 0
    return SumEvaluation(
        value=total,
        anchor=lam,
        method=method,
        terms_used=terms_used,
        max_term=max_term,
        pole_proximity=proximity,
    )


def check_direction(params: SeriesParams, lam: complex) -> None:
    """Reject lambda on the Borel pole spiral [(-1)^k; q]."""
    if lam == 0:
        raise DomainError("lambda must be nonzero")
    forbidden = QSpiral((-1.0) ** params.k, params.q)
    if spiral_contains(forbidden, lam, params.spiral_tol):
        index, _ = forbidden.nearest(lam)
        logger.warning(f"lambda={lam} lies on [(-1)^k;q] (index {index})")
        raise ForbiddenDirectionError(f"forbidden direction: lambda={lam} lies on [(-1)^k;q] with k={params.k}")


def qsum_direct(
    params: SeriesParams,
    lam: complex,
    x: complex,
    tol: float = JACKSON_DEFAULT_TOL,
    *,
    inner_radius: float = BOREL_INNER_RADIUS,
    outer_switch: float = BOREL_OUTER_SWITCH,
    max_window: int = JACKSON_MAX_WINDOW,
    pole_tol: float = POLE_PROXIMITY_TOL,
) -> SumEvaluation:
    """The [lambda;p]-sum as the q-Laplace transform of the Borel image."""
    lam = complex(lam)
    check_direction(params, lam)
    params.ensure_nonresonant()
    img = BorelImage(params, inner_radius=inner_radius, outer_switch=outer_switch, tol=min(tol, SERIES_DEFAULT_TOL))
    evaluation = qlaplace(
        lambda xi: borel_image(img, xi),
        lam,
        params.p,
        x,
        tol,
        max_window=max_window,
        pole_tol=pole_tol,
        method=SumMethod.DIRECT,
    )
    logger.debug(f"qsum_evaluation payload={evaluation.to_log_payload()}")
    return evaluation


def qsum_remainder(
    params: SeriesParams,
    lam: complex,
    x: complex,
    n_terms: int,
    tol: float = JACKSON_DEFAULT_TOL,
    *,
    inner_radius: float = BOREL_INNER_RADIUS,
    outer_switch: float = BOREL_OUTER_SWITCH,
    max_window: int = JACKSON_MAX_WINDOW,
    pole_tol: float = POLE_PROXIMITY_TOL,
) -> SumEvaluation:
    """
    f(x) - S_N(x) for the [lambda;p]-sum f and N = n_terms.

    The Jackson sum maps xi^n to p^{-n(n-1)/2} x^n for every anchor, so the
    remainder is the Jackson sum of ``borel_remainder``. It is never formed by
    subtracting S_N from f and stays accurate far below the size of f.
    """
    lam = complex(lam)
    check_direction(params, lam)
    params.ensure_nonresonant()
    img = BorelImage(params, inner_radius=inner_radius, outer_switch=outer_switch, tol=min(tol, SERIES_DEFAULT_TOL))
    evaluation = qlaplace(
        lambda xi: borel_remainder(img, xi, n_terms),
        lam,
        params.p,
        x,
        tol,
        max_window=max_window,
        pole_tol=pole_tol,
        method=SumMethod.DIRECT,
    )
    logger.debug(f"qsum_remainder payload={evaluation.to_log_payload()} n_terms={n_terms}")
    return evaluation


def optimal_truncation(params: SeriesParams, x: complex, n_max: int = OPTIMAL_TRUNCATION_MAX_TERMS) -> int:
    """Index N <= n_max of the smallest term |c_N x^N| of the divergent series."""
    stream = CoefficientStream(params)
    x = complex(x)
    if x == 0:
        return 0
    log_modulus = math.log(abs(x))
    sizes = []
    for n in range(n_max + 1):
        coefficient = stream.coefficient(n)
        if coefficient == 0:
            return n
        sizes.append(math.log(abs(coefficient)) + n * log_modulus)
    return int(np.argmin(sizes))


def closed_form_argument(params: SeriesParams, x: complex) -> complex:
    """q b_1..b_s / (a_1..a_r x), the argument of the connection series."""
    return params.q.value * params.lower_product / (params.upper_product * complex(x))


def closed_form_terms(
    params: SeriesParams,
    lam: complex,
    x: complex,
    tol: float = SERIES_DEFAULT_TOL,
) -> tuple[list[complex], list[complex], list[complex], int]:
    """
    Per-j pieces of the connection formula.

    Returns (log C_j, log of the theta quotient pairs, inner series values,
    terms used) so that term_j = exp(log C_j + log T'_j) * inner_j.
    """
    q = params.q
    p = params.p
    k = params.k
    lam = complex(lam)
    x = complex(x)
    argument = closed_form_argument(params, x)
    if abs(argument) >= 1.0:
        raise RegionError(
            f"closed form needs |q b/(a x)| < 1, got {abs(argument):.6g} at x={x}; use the direct method"
        )
    sign = (-1.0) ** (1 - k)
    log_constants: list[complex] = []
    log_thetas: list[complex] = []
    inner_values: list[complex] = []
    terms_used = 0
    for j, a_j in enumerate(params.a):
        others = [value for index, value in enumerate(params.a) if index != j]
        log_constants.append(log_connection_constant(q, params.a, params.b, j))
        log_thetas.append(
            _log_theta_quotient(p, p.value * a_j**k * x / lam, p.value * x / lam)
            + _log_theta_quotient(q, sign * a_j * lam, sign * lam)
        )
        value, used = eval_phi_counted(
            q,
            (a_j, *(a_j * q.value / value for value in params.b), *(0.0,) * k),
            tuple(a_j * q.value / value for value in others),
            argument,
            tol,
        )
        inner_values.append(value)
        terms_used += used
    return log_constants, log_thetas, inner_values, terms_used


def qsum_closed(
    params: SeriesParams,
    lam: complex,
    x: complex,
    tol: float = SERIES_DEFAULT_TOL,
    *,
    pole_tol: float = POLE_PROXIMITY_TOL,
) -> SumEvaluation:
    """
    The [lambda;p]-sum from its r-term connection formula.

    Raises:
        RegionError: |q b_1..b_s / (a_1..a_r x)| >= 1.
        ForbiddenDirectionError, ResonanceError, PoleError: as for ``qsum_direct``.
    """
    lam = complex(lam)
    x = complex(x)
    check_direction(params, lam)
    params.ensure_nonresonant()
    if x == 0:
        raise DomainError("the closed form is an expansion at infinity; x must be nonzero")
    index, proximity = QSpiral(-lam, params.p).nearest(x)
    if proximity < pole_tol:
        raise PoleError(
            f"x={x} lies on the pole spiral [-lambda;p] (index {index}, distance {proximity:.3e})",
            index=index,
            proximity=proximity,
        )
    log_constants, log_thetas, inner_values, terms_used = closed_form_terms(params, lam, x, tol)
    terms = [
        _exp_log(log_c + log_t) * inner
        for log_c, log_t, inner in zip(log_constants, log_thetas, inner_values, strict=True)
    ]
    evaluation = SumEvaluation(
        value=complex(sum(terms, complex(0.0))),
        anchor=lam,
        method=SumMethod.CLOSED,
        terms_used=terms_used,
        max_term=max(abs(t) for t in terms),
        pole_proximity=proximity,
    )
    logger.debug(f"qsum_evaluation payload={evaluation.to_log_payload()}")
    return evaluation


def borel_growth_ratios(
    img: BorelImage,
    lam: complex,
    m_values: Sequence[int],
    growth: float,
) -> np.ndarray:
    """|g(lam p^m)| / theta_{|p|}(growth |lam p^m|) for each m."""
    p = img.params.p
    modulus = QBase(p.modulus)
    ratios = np.zeros(len(m_values))
    for position, m in enumerate(m_values):
        xi = complex(lam) * p.value**m
        value = borel_image(img, xi)
        if value == 0:
            continue
        log_ratio = math.log(abs(value)) - theta(modulus, growth * abs(xi)).log_value.real
        ratios[position] = math.exp(log_ratio)
    return ratios


def borel_growth_profile(
    img: BorelImage,
    lam: complex,
    m_values: Sequence[int],
    growth: float,
) -> float:
    """
    sup_m |g(lam p^m)| / theta_{|p|}(growth |lam p^m|).

    A finite value for some growth constant certifies p-exponential growth of
    the Borel image along the spiral.
    """
    return float(np.max(borel_growth_ratios(img, lam, m_values, growth)))


def asymptotic_ratios(
    params: SeriesParams,
    lam: complex,
    xs: Sequence[complex],
    n_max: int,
    tol: float = JACKSON_DEFAULT_TOL,
) -> np.ndarray:
    """
    |f(x) - S_N(x)| / (|p|^{-N(N-1)/2} |x|^N) for N = 0..n_max.

    Rows follow ``xs``. The remainder after n_max terms comes from
    ``qsum_remainder``; lower orders add the missing series terms back.
    """
    stream = CoefficientStream(params)
    coefficients = np.asarray(stream.snapshot(n_max))
    modulus = params.p.modulus
    n = np.arange(n_max + 1)
    ratios = np.zeros((len(xs), n_max + 1))
    for row, x in enumerate(xs):
        x = complex(x)
        tail = qsum_remainder(params, lam, x, n_max, tol).value
        terms = coefficients * np.power(x, np.arange(n_max))
        # R_N = R_{n_max} + sum_{N <= n < n_max} c_n x^n
        remainders = tail + np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]])
        log_scale = -n * (n - 1) / 2 * math.log(modulus) + n * math.log(abs(x))
        ratios[row] = np.abs(remainders) / np.exp(log_scale)
    return ratios


def fit_gevrey_constants(ratios: np.ndarray) -> tuple[float, float]:
    """
    Fit (L, M) with ratios[:, N] <= L M^N for every row and N.

    M comes from a least-squares line through log max_x ratio_N; L is then
    the smallest constant making the bound hold.
    """
    worst = np.max(np.atleast_2d(ratios), axis=0)
    worst = np.maximum(worst, np.finfo(float).tiny)
    n = np.arange(len(worst))
    slope, _ = np.polyfit(n, np.log(worst), 1)
    growth = float(np.exp(slope))
    scale = float(np.max(worst / growth**n))
    return scale, growth


def gevrey_bound_excess(ratios: np.ndarray, scale: float, growth: float) -> float:
    """max over rows and N of ratios[:, N] / (L M^N); at most 1 when the bound holds."""
    ratios = np.atleast_2d(ratios)
    bound = scale * growth ** np.arange(ratios.shape[1])
    return float(np.max(ratios / bound))
