"""Coefficients and convergent evaluation of basic hypergeometric series.

The series r_phi_s(a; b; q, x) = sum_n (a;q)_n / ((b;q)_n (q;q)_n)
{(-1)^n q^{n(n-1)/2}}^{1+s-r} x^n is never built from products: each
coefficient is obtained from the previous one by the term ratio

    c_{n+1} / c_n = prod_j (1 - a_j q^n) / ((1 - q^{n+1}) prod_l (1 - b_l q^n))
                    * (-q^n)^{1+s-r}

where the exponent is an integer, so no logarithm branch is involved.
"""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .definitions import (
    MAX_SPIRAL_SHIFT,
    SERIES_CONSECUTIVE_SMALL_TERMS,
    SERIES_DEFAULT_TOL,
    SPIRAL_DEFAULT_TOL,
    TERMINATION_TOL,
)
from .exceptions import ConvergenceError, DivergenceError, ParameterError, PoleError, ResonanceError
from .qcore import QBase, QSpiral, term_cap

logger = logging.getLogger(__name__)

EVALUATION_CHUNK_SIZE = 64


def _as_tuple(values: Sequence[complex]) -> tuple[complex, ...]:
    return tuple(complex(v) for v in values)


def terminating_degree(a: Sequence[complex], q: QBase | complex | float) -> int | None:
    """
    Smallest m with a_j q^m = 1 for some upper parameter a_j, or None.

    When it exists every coefficient past c_m vanishes and the series is a
    polynomial of degree m, even in the divergent regime.
    """
    base = QBase.coerce(q)
    degrees = []
    for value in _as_tuple(a):
        if value == 0:
            continue
        m, distance = QSpiral(1.0, base).nearest(1.0 / value)
        if 0 <= m <= MAX_SPIRAL_SHIFT and distance < TERMINATION_TOL:
            degrees.append(m)
    return min(degrees) if degrees else None


def find_lower_pole(b: Sequence[complex], q: QBase, tol: float = SPIRAL_DEFAULT_TOL) -> tuple[int, int] | None:
    """(index, m) of a lower parameter b_l = q^{-m}, m >= 0, else None."""
    spiral = QSpiral(1.0, q)
    for index, value in enumerate(_as_tuple(b)):
        if value == 0:
            continue
        m, _ = spiral.nearest(value)
        if -MAX_SPIRAL_SHIFT <= m <= 0 and spiral.log_distance(value) < tol:
            return index, -m
    return None


def find_resonance(a: Sequence[complex], q: QBase, tol: float = SPIRAL_DEFAULT_TOL) -> tuple[int, int, int] | None:
    """First pair (i, j, m) with a_i / a_j = q^m, i < j, |m| <= MAX_SPIRAL_SHIFT."""
    values = _as_tuple(a)
    spiral = QSpiral(1.0, q)
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            ratio = values[i] / values[j]
            m, _ = spiral.nearest(ratio)
            if abs(m) <= MAX_SPIRAL_SHIFT and spiral.log_distance(ratio) < tol:
                return i, j, m
    return None


def ensure_nonresonant(a: Sequence[complex], q: QBase, tol: float = SPIRAL_DEFAULT_TOL) -> None:
    resonance = find_resonance(a, q, tol)
    if resonance is not None:
        i, j, m = resonance
        logger.warning(f"resonant upper parameters a[{i}]/a[{j}] = q^{m}")
        raise ResonanceError(f"resonant parameters: a[{i}]/a[{j}] = q^{m} (need a_i/a_j not in q^Z)", i=i, j=j, m=m)


@dataclass(frozen=True)
class SeriesParams:
    """Parameters (q, a, b) of the divergent series with k = r - s - 1 >= 1."""

    q: QBase
    a: tuple[complex, ...]
    b: tuple[complex, ...] = ()
    spiral_tol: float = field(default=SPIRAL_DEFAULT_TOL, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", QBase.coerce(self.q))
        object.__setattr__(self, "a", _as_tuple(self.a))
        object.__setattr__(self, "b", _as_tuple(self.b))
        if self.r <= self.s + 1:
            raise ParameterError(f"need r > s+1 for a divergent series, got r={self.r}, s={self.s}")
        if any(v == 0 for v in self.a + self.b):
            raise ParameterError(f"parameters must be nonzero: a={self.a}, b={self.b}")
        pole = find_lower_pole(self.b, self.q, self.spiral_tol)
        if pole is not None:
            index, m = pole
            logger.warning(f"lower parameter b[{index}] = q^-{m}")
            raise PoleError(f"lower parameter b[{index}] = q^-{m} makes (b;q)_n vanish", index=m)

    @property
    def r(self) -> int:
        return len(self.a)

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def k(self) -> int:
        return self.r - self.s - 1

    @property
    def p(self) -> QBase:
        return self.q.power(self.k)

    @property
    def upper_product(self) -> complex:
        return math.prod(self.a, start=complex(1.0))

    @property
    def lower_product(self) -> complex:
        return math.prod(self.b, start=complex(1.0))

    def ensure_nonresonant(self) -> None:
        ensure_nonresonant(self.a, self.q, self.spiral_tol)

    def to_log_payload(self) -> dict[str, object]:
        return {
            "q": str(self.q.value),
            "a": [str(v) for v in self.a],
            "b": [str(v) for v in self.b],
            "k": self.k,
        }


def _term_ratios(q: QBase, a: tuple[complex, ...], b: tuple[complex, ...], n: np.ndarray) -> np.ndarray:
    """c_{n+1}/c_n for each n in the array (zero upper parameters allowed)."""
    exponent = 1 + len(b) - len(a)
    q_to_n = np.power(q.value, n.astype(complex))
    numerator = np.ones_like(q_to_n)
    for value in a:
        numerator = numerator * (1.0 - value * q_to_n)
    denominator = 1.0 - q.value * q_to_n
    for value in b:
        denominator = denominator * (1.0 - value * q_to_n)
    zero = np.flatnonzero(denominator == 0)
    if zero.size:
        offending = int(n[zero[0]])
        raise PoleError(f"lower parameter pole at n={offending}: (b;q)_{offending + 1} = 0", index=offending)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        # (-q^n)^e as an exact reciprocal for negative e
        power = (-q_to_n) ** exponent if exponent >= 0 else 1.0 / (-q_to_n) ** (-exponent)
        return numerator / denominator * power


class CoefficientStream:
    """
    Lazily extended cache of the coefficients c_n of a series.

    Extension happens under a lock so concurrent readers always see a
    consistent prefix.
    """

    def __init__(self, params: SeriesParams) -> None:
        self.params = params
        self._cache: list[complex] = [complex(1.0)]
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._cache)

    def ratio(self, n: int) -> complex:
        """c_{n+1} / c_n."""
        return complex(_term_ratios(self.params.q, self.params.a, self.params.b, np.array([n]))[0])

    def _extend(self, n: int) -> None:
        with self._lock:
            start = len(self._cache) - 1
            if n <= start:
                return
            ratios = _term_ratios(self.params.q, self.params.a, self.params.b, np.arange(start, n))
            with np.errstate(over="ignore", invalid="ignore"):
                values = self._cache[-1] * np.cumprod(ratios)
            self._cache.extend(complex(v) for v in values)

    def coefficient(self, n: int) -> complex:
        if n < 0:
            raise ParameterError(f"coefficient index must be >= 0, got {n}")
        if n >= len(self._cache):
            self._extend(n)
        return self._cache[n]

    def snapshot(self, count: int) -> tuple[complex, ...]:
        """Immutable copy of c_0, ..., c_{count-1}."""
        if count > len(self._cache):
            self._extend(count - 1)
        return tuple(self._cache[:count])


def phi_coeff(stream: CoefficientStream, n: int) -> complex:
    """c_n of the series held by ``stream`` (cached)."""
    return stream.coefficient(n)


def phi_coefficients(
    q: QBase | complex | float,
    a: Sequence[complex],
    b: Sequence[complex],
    count: int,
) -> np.ndarray:
    """c_0, ..., c_{count-1} of r'_phi_s'(a; b; q, x) for arbitrary r', s'."""
    if count <= 0:
        return np.zeros(0, dtype=complex)
    base = QBase.coerce(q)
    ratios = _term_ratios(base, _as_tuple(a), _as_tuple(b), np.arange(count - 1))
    with np.errstate(over="ignore", invalid="ignore"):
        return np.concatenate([[1.0 + 0.0j], np.cumprod(ratios)])


def recurrence_residual(stream: CoefficientStream, n: int) -> complex:
    """c_{n+1} prod(1-b q^n)(1-q^{n+1}) - c_n (-q^n)^{1+s-r} prod(1-a q^n)."""
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    params = stream.params
    q = params.q.value
    q_to_n = q**n
    lower = (1.0 - q * q_to_n) * math.prod((1.0 - v * q_to_n for v in params.b), start=complex(1.0))
    upper = math.prod((1.0 - v * q_to_n for v in params.a), start=complex(1.0))
    exponent = 1 + params.s - params.r
    power = (-q_to_n) ** exponent if exponent >= 0 else 1.0 / (-q_to_n) ** (-exponent)
    return stream.coefficient(n + 1) * lower - stream.coefficient(n) * power * upper


def partial_sum(stream: CoefficientStream, x: complex, n_terms: int) -> complex:
    """S_N(x) = sum_{n<N} c_n x^n."""
    if n_terms <= 0:
        return complex(0.0)
    coefficients = np.asarray(stream.snapshot(n_terms))
    powers = np.power(complex(x), np.arange(n_terms))
    return complex(np.sum(coefficients * powers))


def divergence_witness(stream: CoefficientStream, n: int) -> float:
    """|c_n q^{k n(n-1)/2}|^{1/n}; bounded and nonzero for a genuinely divergent series."""
    if n < 1:
        raise ParameterError(f"divergence witness needs n >= 1, got {n}")
    params = stream.params
    ratios = _term_ratios(params.q, params.a, params.b, np.arange(n))
    with np.errstate(divide="ignore"):
        log_abs = float(np.sum(np.log(np.abs(ratios))))
    log_abs += params.k * n * (n - 1) / 2 * math.log(params.q.modulus)
    return math.exp(log_abs / n)


def sum_by_ratios(
    ratios: Callable[[np.ndarray], np.ndarray],
    x: complex,
    tol: float,
    cap: int,
) -> tuple[complex, int]:
    """
    Sum c_n x^n with c_0 = 1 given the coefficient ratios c_{n+1}/c_n.

    Terms are generated in numpy chunks; summation stops after
    SERIES_CONSECUTIVE_SMALL_TERMS consecutive terms below tol x running max
    of the partial sums. Returns (sum, terms used).
    """
    total = complex(1.0)
    running_max = 1.0
    small_run = 0
    last_term = complex(1.0)
    start = 0
    while start < cap:
        n = np.arange(start, min(start + EVALUATION_CHUNK_SIZE, cap))
        with np.errstate(over="ignore", invalid="ignore"):
            terms = last_term * np.cumprod(ratios(n) * x)
        if not np.all(np.isfinite(terms)):
            raise ConvergenceError(f"series terms overflowed near n={start} (x={x})")
        partial = total + np.cumsum(terms)
        maxima = np.maximum(running_max, np.maximum.accumulate(np.abs(partial)))
        small = np.abs(terms) < tol * maxima
        for index, is_small in enumerate(small):
            small_run = small_run + 1 if is_small else 0
            if small_run >= SERIES_CONSECUTIVE_SMALL_TERMS:
                return complex(partial[index]), start + index + 2
        total = complex(partial[-1])
        running_max = float(maxima[-1])
        last_term = complex(terms[-1])
        start = int(n[-1]) + 1
    raise ConvergenceError(f"series did not settle within {cap} terms (x={x})")


def eval_phi_counted(
    q: QBase | complex | float,
    a: Sequence[complex],
    b: Sequence[complex],
    x: complex,
    tol: float = SERIES_DEFAULT_TOL,
) -> tuple[complex, int]:
    """``eval_phi`` together with the number of terms summed."""
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    base = QBase.coerce(q)
    upper = _as_tuple(a)
    lower = _as_tuple(b)
    x = complex(x)
    if x == 0:
        return complex(1.0), 1

    degree = terminating_degree(upper, base)
    if degree is not None:
        coefficients = phi_coefficients(base, upper, lower, degree + 1)
        return complex(np.sum(coefficients * np.power(x, np.arange(degree + 1)))), degree + 1

    exponent = 1 + len(lower) - len(upper)
    if exponent < 0:
        raise DivergenceError(
            f"{len(upper)}_phi_{len(lower)} has radius 0; use the q-Borel-Laplace path for divergent series"
        )
    if exponent == 0 and abs(x) >= 1.0:
        raise DivergenceError(f"{len(upper)}_phi_{len(lower)} converges only for |x| < 1, got |x|={abs(x)}")
    return sum_by_ratios(lambda n: _term_ratios(base, upper, lower, n), x, tol, term_cap(base))


def eval_phi(
    q: QBase | complex | float,
    a: Sequence[complex],
    b: Sequence[complex],
    x: complex,
    tol: float = SERIES_DEFAULT_TOL,
) -> complex:
    """
    Sum r'_phi_s'(a; b; q, x) in its convergent regime.

    Upper parameters may include zeros (they still count in r'). Terminating
    series are summed exactly whatever the regime.

    Raises:
        DivergenceError: r' > s'+1 for a non-terminating series, or |x| >= 1 when r' = s'+1.
        PoleError: a lower parameter hits q^{-n}.
    """
    value, _ = eval_phi_counted(q, a, b, x, tol)
    return value
