"""Foundational q-special functions.

q-shift factorials (finite and infinite), the theta function
theta_q(x) = sum_n q^{n(n-1)/2} x^n with argument reduction, the q-gamma
function and q-spiral geometry. Everything here is a pure function of its
inputs; values are immutable dataclasses.

Theta grows q-exponentially, so ``theta`` never returns the raw value alone:
the argument is reduced into the annulus |q| < |x0| <= 1 and the
quasi-periodicity multiplier is carried as a complex log-scale. Quotients of
thetas are then formed by exponent subtraction (see ``theta_ratio``).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from .definitions import (
    GAMMA_POLE_TOL,
    MIN_TERM_CAP,
    PRODUCT_DEFAULT_TOL,
    SPIRAL_DEFAULT_TOL,
    TERM_CAP_SCALE,
    THETA_CONSECUTIVE_SMALL_TERMS,
    THETA_PRODUCT_MIN_MODULUS,
    THETA_TRUNCATION_RATIO,
)
from .exceptions import ConvergenceError, DomainError, ParameterError, PoleError

logger = logging.getLogger(__name__)

# exp() overflows beyond this real part
MAX_EXP_ARGUMENT = 709.0


@dataclass(frozen=True)
class QBase:
    """A base q with 0 < |q| < 1."""

    value: complex

    def __post_init__(self) -> None:
        value = complex(self.value)
        object.__setattr__(self, "value", value)
        if not 0.0 < abs(value) < 1.0:
            raise ParameterError(f"base q must satisfy 0 < |q| < 1, got q={value}")

    @classmethod
    def coerce(cls, q: QBase | complex | float) -> QBase:
        return q if isinstance(q, QBase) else cls(complex(q))

    @property
    def modulus(self) -> float:
        return abs(self.value)

    @property
    def log(self) -> complex:
        """Principal logarithm of q."""
        return cmath.log(self.value)

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0.0 and self.value.real > 0.0

    def power(self, k: int) -> QBase:
        """The derived base q^k (e.g. p = q^k)."""
        return QBase(self.value**k)

    def pow(self, exponent: complex) -> complex:
        """q**exponent on the principal branch."""
        if isinstance(exponent, int):
            return self.value**exponent
        return cmath.exp(exponent * self.log)


def term_cap(q: QBase | complex | float) -> int:
    """Maximum number of terms for a series/product in base q.

    Grows like 1/(1-|q|) so that q -> 1 scans keep enough terms, bounded by
    ``settings.QSUM_MAX_TERMS``.
    """
    modulus = abs(QBase.coerce(q).value)
    scaled = math.ceil(TERM_CAP_SCALE / (1.0 - modulus))
    return min(int(settings.QSUM_MAX_TERMS), max(MIN_TERM_CAP, scaled))


def qpoch(a: complex, q: QBase | complex | float, n: int) -> complex:
    """(a;q)_n = prod_{j=0}^{n-1} (1 - a q^j)."""
    if n < 0:
        raise ParameterError(f"qpoch requires n >= 0, got n={n}")
    if n == 0:
        return complex(1.0)
    base = QBase.coerce(q)
    powers = np.power(base.value, np.arange(n, dtype=float).astype(complex))
    return complex(np.prod(1.0 - complex(a) * powers))


def _product_length(a: complex, base: QBase, tol: float) -> int:
    """Number of factors after which |a||q|^j / (1-|q|) < tol."""
    if a == 0:
        return 0
    modulus = base.modulus
    bound = tol * (1.0 - modulus) / abs(a)
    if bound >= 1.0:
        return 1
    length = math.ceil(math.log(bound) / math.log(modulus)) + 1
    cap = term_cap(base)
    if length > cap:
        raise ConvergenceError(f"(a;q)_inf needs {length} factors for a={a}, q={base.value} (cap {cap})")
    return max(length, 1)


def log_qpoch_inf(a: complex, q: QBase | complex | float, tol: float = PRODUCT_DEFAULT_TOL) -> complex:
    """
    Logarithm of (a;q)_inf as a sum of principal logarithms.

    exp() of the result is the product itself; the imaginary part is only
    meaningful modulo 2*pi. A vanishing factor yields -inf.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    base = QBase.coerce(q)
    a = complex(a)
    length = _product_length(a, base, tol)
    if length == 0:
        return complex(0.0)
    shifted = a * np.power(base.value, np.arange(length, dtype=float).astype(complex))
    factors = 1.0 - shifted
    if np.any(factors == 0):
        return complex(-math.inf, 0.0)
    return complex(np.sum(np.log1p(-shifted)))


def qpoch_inf(a: complex, q: QBase | complex | float, tol: float = PRODUCT_DEFAULT_TOL) -> complex:
    """(a;q)_inf, truncated once the geometric tail bound falls below tol."""
    log_value = log_qpoch_inf(a, q, tol)
    if math.isinf(log_value.real) and log_value.real < 0:
        return complex(0.0)
    return cmath.exp(log_value)


def log_qpoch_inf_many(values: list[complex], q: QBase | complex | float, tol: float = PRODUCT_DEFAULT_TOL) -> complex:
    """log (a_1, ..., a_n; q)_inf."""
    return complex(sum((log_qpoch_inf(a, q, tol) for a in values), complex(0.0)))


@dataclass(frozen=True)
class ThetaEval:
    """
    theta_q(x) = exp(log_scale) * reduced_value.

    ``reduced_value`` is theta at the reduced argument |q| < |x0| <= 1 and
    ``log_scale`` the log of the quasi-periodicity multiplier.
    """

    log_scale: complex
    reduced_value: complex
    shift: int = 0
    value: complex = field(init=False)
    overflow: bool = field(init=False)

    def __post_init__(self) -> None:
        magnitude = self.log_scale.real + (math.log(abs(self.reduced_value)) if self.reduced_value else -math.inf)
        overflow = magnitude > MAX_EXP_ARGUMENT
        value = complex(math.inf, 0.0) if overflow else cmath.exp(self.log_scale) * self.reduced_value
        object.__setattr__(self, "overflow", overflow)
        object.__setattr__(self, "value", value)

    @property
    def log_value(self) -> complex:
        """log theta_q(x); -inf at a zero."""
        if self.reduced_value == 0:
            return complex(-math.inf, 0.0)
        return self.log_scale + cmath.log(self.reduced_value)


def _reduction_shift(base: QBase, x: complex) -> int:
    """Integer n with |q| < |q^n x| <= 1."""
    modulus = base.modulus
    shift = math.ceil(math.log(abs(x)) / -math.log(modulus))
    # guard against rounding at the annulus edges
    while abs(x) * modulus**shift > 1.0:
        shift += 1
    while abs(x) * modulus**shift <= modulus:
        shift -= 1
    return shift


def _truncated_sum(terms: np.ndarray, threshold: float) -> complex:
    """Sum terms until THETA_CONSECUTIVE_SMALL_TERMS consecutive ones fall below threshold."""
    small = np.abs(terms) < threshold
    run = 0
    stop = len(terms)
    for index, is_small in enumerate(small):
        run = run + 1 if is_small else 0
        if run >= THETA_CONSECUTIVE_SMALL_TERMS:
            stop = index + 1
            break
    return complex(np.sum(terms[:stop]))


def _theta_series(base: QBase, x0: complex) -> complex:
    """Bilateral theta series at a reduced argument."""
    log_q = base.log
    log_x = cmath.log(x0)
    # |q|^{n(n-1)/2} drops below THETA_TRUNCATION_RATIO after ~sqrt(2 ln(1/ratio) / ln(1/|q|)) terms
    width = math.ceil(math.sqrt(2.0 * -math.log(THETA_TRUNCATION_RATIO) / -math.log(base.modulus))) + 4
    n_pos = np.arange(0, width + 1, dtype=float)
    n_neg = -np.arange(1, width + 1, dtype=float)
    positive = np.exp(n_pos * (n_pos - 1.0) / 2.0 * log_q + n_pos * log_x)
    negative = np.exp(n_neg * (n_neg - 1.0) / 2.0 * log_q + n_neg * log_x)
    threshold = THETA_TRUNCATION_RATIO * max(float(np.max(np.abs(positive))), float(np.max(np.abs(negative))))
    return _truncated_sum(positive, threshold) + _truncated_sum(negative, threshold)


def _theta_product(base: QBase, x0: complex) -> tuple[float, complex]:
    """
    Reduced theta as (log modulus, unit phase) from (q, -x0, -q/x0; q)_inf.

    Near |q| = 1 the value is exponentially smaller than the largest series
    term, so the modulus is kept as a logarithm. A zero gives (-inf, 0).
    """
    log_value = log_qpoch_inf_many([base.value, -x0, -base.value / x0], base)
    if math.isinf(log_value.real):
        return -math.inf, complex(0.0)
    return log_value.real, cmath.exp(1j * log_value.imag)


def theta(q: QBase | complex | float, x: complex) -> ThetaEval:
    """theta_q(x) with argument reduction into |q| < |x0| <= 1."""
    base = QBase.coerce(q)
    x = complex(x)
    if x == 0:
        raise DomainError("theta_q(x) is undefined at x = 0")
    shift = _reduction_shift(base, x)
    x0 = x * cmath.exp(shift * base.log)
    # theta(q^{-n} x0) = x0^n q^{-n(n+1)/2} theta(x0)
    log_scale = shift * cmath.log(x0) - (shift * (shift + 1) / 2) * base.log
    if base.modulus < THETA_PRODUCT_MIN_MODULUS:
        return ThetaEval(log_scale=log_scale, reduced_value=_theta_series(base, x0), shift=shift)
    log_modulus, phase = _theta_product(base, x0)
    if phase == 0:
        return ThetaEval(log_scale=log_scale, reduced_value=phase, shift=shift)
    return ThetaEval(log_scale=log_scale + log_modulus, reduced_value=phase, shift=shift)


def theta_ratio(q: QBase | complex | float, x: complex, y: complex) -> complex:
    """theta_q(x) / theta_q(y) formed in log-scale."""
    numerator = theta(q, x)
    denominator = theta(q, y)
    if denominator.reduced_value == 0:
        raise PoleError(f"theta_q({y}) vanishes (q={QBase.coerce(q).value})")
    return cmath.exp(numerator.log_scale - denominator.log_scale) * numerator.reduced_value / denominator.reduced_value


def theta_triple_product(q: QBase | complex | float, x: complex, tol: float = PRODUCT_DEFAULT_TOL) -> complex:
    """theta_q(x) = (q, -x, -q/x; q)_inf, the product form used as a cross-check."""
    base = QBase.coerce(q)
    x = complex(x)
    if x == 0:
        raise DomainError("theta_q(x) is undefined at x = 0")
    return qpoch_inf(base.value, base, tol) * qpoch_inf(-x, base, tol) * qpoch_inf(-base.value / x, base, tol)


def q_gamma(q: QBase | complex | float, z: complex) -> complex:
    """Gamma_q(z) = (q;q)_inf / (q^z;q)_inf * (1-q)^{1-z}, principal branches."""
    base = QBase.coerce(q)
    z = complex(z)
    q_to_z = base.pow(z)
    index, distance = QSpiral(1.0, base).nearest(q_to_z)
    if index <= 0 and distance < GAMMA_POLE_TOL:
        raise PoleError(f"Gamma_q has a pole at z={z}: q^z q^{-index} = 1", index=-index, proximity=distance)
    log_value = (
        log_qpoch_inf(base.value, base)
        - log_qpoch_inf(q_to_z, base)
        + (1.0 - z) * cmath.log(1.0 - base.value)
    )
    return cmath.exp(log_value)


@dataclass(frozen=True)
class QSpiral:
    """The discrete spiral [anchor; base] = anchor * base^Z."""

    anchor: complex
    base: QBase

    def __post_init__(self) -> None:
        anchor = complex(self.anchor)
        if anchor == 0:
            raise DomainError("q-spiral anchor must be nonzero")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "base", QBase.coerce(self.base))

    def point(self, m: int) -> complex:
        return self.anchor * self.base.value**m

    def _candidate_indices(self, x: complex) -> list[int]:
        log_base = self.base.log
        centre = cmath.log(x / self.anchor).real / log_base.real
        low = math.floor(centre)
        return [low - 1, low, low + 1, low + 2]

    def log_distance(self, x: complex) -> float:
        """Distance of log_base(x / anchor) to the integers, imaginary part taken mod 2*pi*i."""
        x = complex(x)
        if x == 0:
            raise DomainError("spiral distance is undefined at x = 0")
        log_ratio = cmath.log(x / self.anchor)
        log_base = self.base.log
        best = math.inf
        for m in self._candidate_indices(x):
            residual = log_ratio - m * log_base
            wrapped = complex(residual.real, math.remainder(residual.imag, 2.0 * math.pi))
            best = min(best, abs(wrapped) / abs(log_base))
        return best

    def nearest(self, x: complex) -> tuple[int, float]:
        """Index m of the nearest spiral point and the relative distance |x - l q^m| / |l q^m|."""
        x = complex(x)
        if x == 0:
            raise DomainError("spiral distance is undefined at x = 0")
        best_index = 0
        best_distance = math.inf
        for m in self._candidate_indices(x):
            point = self.point(m)
            distance = abs(x - point) / abs(point)
            if distance < best_distance:
                best_index, best_distance = m, distance
        return best_index, best_distance

    def contains(self, x: complex, tol: float = SPIRAL_DEFAULT_TOL) -> bool:
        return self.log_distance(x) < tol


def spiral_contains(s: QSpiral, x: complex, tol: float = SPIRAL_DEFAULT_TOL) -> bool:
    """True iff x lies on the spiral s up to tol in the q-logarithm."""
    if x == 0:
        raise DomainError("spiral membership is undefined at x = 0")
    return s.contains(x, tol)
