"""Classical counterpart of the q-sum and the q -> 1 limit scan.

The divergent series rF_s(alpha; beta; x) = sum_n (alpha)_n / ((beta)_n n!) x^n,
k = r-s-1 >= 1, is Borel summable in every direction but the positive real
axis. Its sum is

    C_ab sum_j C_ab(j) (-x)^{-alpha_j} _{s+1}F_{r-1}(alpha_j, 1+alpha_j-beta; 1+alpha_j-alpha^_j; (-1)^k / x)

and is the q -> 1 limit of the [lambda;p]-sum at a = q^alpha, b = q^beta,
evaluated at (-1)^k x / (1-q)^k.
"""

from __future__ import annotations

import cmath
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from scipy import special

from .definitions import GAMMA_POLE_TOL, LIMIT_SCAN_ERROR_FLOOR, SERIES_DEFAULT_TOL
from .exceptions import BranchError, DivergenceError, DomainError, ForbiddenDirectionError, ParameterError, PoleError, SectorError
from .qborel import qsum_closed
from .qcore import QBase, q_gamma, qpoch, theta
from .series import SeriesParams, sum_by_ratios

logger = logging.getLogger(__name__)

INTEGER_TOL = 1e-12


def _is_integer(value: complex, tol: float = INTEGER_TOL) -> bool:
    return abs(value.imag) < tol and abs(value.real - round(value.real)) < tol


def gamma(z: complex) -> complex:
    """Gamma function on the principal branch (scipy.special.gamma)."""
    z = complex(z)
    if _is_integer(z, GAMMA_POLE_TOL) and round(z.real) <= 0:
        raise PoleError(f"Gamma has a pole at z={z}", index=-round(z.real))
    return complex(special.gamma(z))


@dataclass(frozen=True)
class ClassicalParams:
    """Parameters (alpha, beta) of the classical divergent series, k = r-s-1 >= 1."""

    alpha: tuple[complex, ...]
    beta: tuple[complex, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", tuple(complex(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(complex(v) for v in self.beta))
        if self.r <= self.s + 1:
            raise ParameterError(f"need r > s+1, got r={self.r}, s={self.s}")
        for i in range(self.r):
            for j in range(i + 1, self.r):
                difference = self.alpha[i] - self.alpha[j]
                if _is_integer(difference):
                    logger.warning(f"alpha[{i}] - alpha[{j}] = {difference.real:.0f} is an integer")
                    raise ParameterError(f"alpha[{i}] - alpha[{j}] must not be an integer, got {difference}")
        for index, value in enumerate(self.beta):
            if _is_integer(value) and round(value.real) <= 0:
                raise PoleError(f"beta[{index}] = {value} is a nonpositive integer", index=index)

    @property
    def r(self) -> int:
        return len(self.alpha)

    @property
    def s(self) -> int:
        return len(self.beta)

    @property
    def k(self) -> int:
        return self.r - self.s - 1

    def q_params(self, q: float) -> SeriesParams:
        """SeriesParams with a = q^alpha, b = q^beta."""
        base = QBase(q)
        return SeriesParams(base, tuple(base.pow(v) for v in self.alpha), tuple(base.pow(v) for v in self.beta))


@dataclass(frozen=True)
class LimitScanRow:
    q: float
    qsum_value: complex
    classical_value: complex
    terms_used: int = 0
    rel_error: float = field(init=False)

    def __post_init__(self) -> None:
        scale = max(abs(self.classical_value), LIMIT_SCAN_ERROR_FLOOR)
        object.__setattr__(self, "rel_error", abs(self.qsum_value - self.classical_value) / scale)

    def to_log_payload(self) -> dict[str, object]:
        return {
            "q": self.q,
            "qsum_value": str(self.qsum_value),
            "classical_value": str(self.classical_value),
            "rel_error": self.rel_error,
        }


def _hypergeometric_ratios(alpha: tuple[complex, ...], beta: tuple[complex, ...], n: np.ndarray) -> np.ndarray:
    numerator = np.ones(len(n), dtype=complex)
    for value in alpha:
        numerator = numerator * (value + n)
    denominator = n + 1.0 + 0.0j
    for value in beta:
        denominator = denominator * (value + n)
    zero = np.flatnonzero(denominator == 0)
    if zero.size:
        raise PoleError(f"lower parameter pole at n={int(n[zero[0]])}", index=int(n[zero[0]]))
    return numerator / denominator


def eval_F(  # noqa: N802
    alpha: Sequence[complex],
    beta: Sequence[complex],
    x: complex,
    tol: float = SERIES_DEFAULT_TOL,
) -> complex:
    """
    Sum pF_q(alpha; beta; x) in its convergent regime.

    Raises:
        DivergenceError: p > q+1 for a non-terminating series, or |x| >= 1 when p = q+1.
    """
    upper = tuple(complex(v) for v in alpha)
    lower = tuple(complex(v) for v in beta)
    x = complex(x)
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if x == 0:
        return complex(1.0)
    degrees = [-round(v.real) for v in upper if _is_integer(v) and round(v.real) <= 0]
    if degrees:
        degree = min(degrees)
        ratios = _hypergeometric_ratios(upper, lower, np.arange(degree))
        coefficients = np.concatenate([[1.0 + 0.0j], np.cumprod(ratios)])
        return complex(np.sum(coefficients * np.power(x, np.arange(degree + 1))))
    if len(upper) > len(lower) + 1:
        raise DivergenceError(f"{len(upper)}F{len(lower)} has radius 0")
    if len(upper) == len(lower) + 1 and abs(x) >= 1.0:
        raise DivergenceError(f"{len(upper)}F{len(lower)} converges only for |x| < 1, got |x|={abs(x)}")
    value, _ = sum_by_ratios(
        lambda n: _hypergeometric_ratios(upper, lower, n), x, tol, int(settings.QSUM_MAX_TERMS)
    )
    return value


def classical_partial_sum(cparams: ClassicalParams, x: complex, n_terms: int) -> complex:
    """S_N(x) = sum_{n<N} (alpha)_n / ((beta)_n n!) x^n."""
    if n_terms <= 0:
        return complex(0.0)
    ratios = _hypergeometric_ratios(cparams.alpha, cparams.beta, np.arange(n_terms - 1))
    coefficients = np.concatenate([[1.0 + 0.0j], np.cumprod(ratios)])
    return complex(np.sum(coefficients * np.power(complex(x), np.arange(n_terms))))


def check_sector(cparams: ClassicalParams, x: complex) -> None:
    """|pi - arg x| < (r-s+1) pi / 2 with arg x in [0, 2 pi), and x not on the positive axis."""
    x = complex(x)
    if x == 0:
        raise DomainError("the Borel sum is an expansion at infinity; x must be nonzero")
    argument = cmath.phase(x) % (2.0 * math.pi)
    opening = (cparams.r - cparams.s + 1) * math.pi / 2.0
    if argument == 0.0 or abs(math.pi - argument) >= opening:
        raise SectorError(f"x={x} lies outside the summability sector (arg x = {argument:.6g})")


def gamma_quotient(cparams: ClassicalParams, j: int = 1) -> complex:
    """C_ab C_ab(j): Gamma(beta) Gamma(alpha^_j - alpha_j) / (Gamma(alpha^_j) Gamma(beta - alpha_j))."""
    index = j - 1
    a_j = cparams.alpha[index]
    others = [value for position, value in enumerate(cparams.alpha) if position != index]
    numerator = math.prod((gamma(b) for b in cparams.beta), start=complex(1.0))
    numerator *= math.prod((gamma(value - a_j) for value in others), start=complex(1.0))
    # 1/Gamma is entire, so a pole of Gamma(beta - alpha_j) gives a zero term
    reciprocal = math.prod((complex(special.rgamma(value)) for value in others), start=complex(1.0))
    reciprocal *= math.prod((complex(special.rgamma(b - a_j)) for b in cparams.beta), start=complex(1.0))
    return numerator * reciprocal


def classical_borel_sum(cparams: ClassicalParams, x: complex, tol: float = SERIES_DEFAULT_TOL) -> complex:
    """
    Borel sum of rF_s(alpha; beta; x) from its r-term connection formula.

    Raises:
        SectorError: x outside the summability sector.
    """
    x = complex(x)
    check_sector(cparams, x)
    argument = (-1.0) ** cparams.k / x
    total = complex(0.0)
    for j, a_j in enumerate(cparams.alpha):
        others = [value for position, value in enumerate(cparams.alpha) if position != j]
        inner = eval_F(
            (a_j, *(1.0 + a_j - b for b in cparams.beta)),
            tuple(1.0 + a_j - value for value in others),
            argument,
            tol,
        )
        total += gamma_quotient(cparams, j + 1) * cmath.exp(-a_j * cmath.log(-x)) * inner
    return total


def qgamma_quotient(q: float, cparams: ClassicalParams, j: int = 1) -> complex:
    """The q-gamma analogue of ``gamma_quotient``."""
    index = j - 1
    a_j = cparams.alpha[index]
    others = [value for position, value in enumerate(cparams.alpha) if position != index]
    numerator = math.prod((q_gamma(q, b) for b in cparams.beta), start=complex(1.0))
    numerator *= math.prod((q_gamma(q, value - a_j) for value in others), start=complex(1.0))
    denominator = math.prod((q_gamma(q, value) for value in others), start=complex(1.0))
    denominator *= math.prod((q_gamma(q, b - a_j) for b in cparams.beta), start=complex(1.0))
    return numerator / denominator


def theta_power_ratio(q: float, alpha: complex, beta: complex, x: complex) -> complex:
    """theta_q(q^beta x) / theta_q(q^alpha x); tends to x^{alpha-beta} as q -> 1."""
    base = QBase(q)
    numerator = theta(base, base.pow(complex(beta)) * x)
    denominator = theta(base, base.pow(complex(alpha)) * x)
    return cmath.exp(numerator.log_value - denominator.log_value)


def theta_scaled_ratio(q: float, k: int, alpha: complex, beta: complex, x: complex) -> complex:
    """
    theta_p(p^alpha x / (1-q)^k) / theta_p(p^beta x / (1-q)^k) (1-q)^{k(beta-alpha)}, p = q^k;
    tends to x^{beta-alpha} as q -> 1.
    """
    p = QBase(q**k)
    scale = (1.0 - q) ** k
    numerator = theta(p, p.pow(complex(alpha)) * x / scale)
    denominator = theta(p, p.pow(complex(beta)) * x / scale)
    log_value = numerator.log_value - denominator.log_value + k * (complex(beta) - complex(alpha)) * math.log(1.0 - q)
    return cmath.exp(log_value)


def qpoch_ratio_limit(q: float, alpha: complex, n: int) -> complex:
    """(q^alpha; q)_n / (1-q)^n; tends to (alpha)_n as q -> 1."""
    base = QBase(q)
    return qpoch(base.pow(complex(alpha)), base, n) / (1.0 - q) ** n


@dataclass(frozen=True)
class LimitIngredients:
    """The q-side factors of the j-th connection term next to their q -> 1 limits."""

    gamma_quotient: complex
    gamma_limit: complex
    theta_q_ratio: complex
    theta_q_limit: complex
    theta_p_ratio: complex
    theta_p_limit: complex


def limit_ingredients(q: float, cparams: ClassicalParams, lam: complex, x: complex, j: int = 1) -> LimitIngredients:
    """Gamma_q quotient, lambda theta ratio and x theta ratio of the j-th term at q."""
    k = cparams.k
    a_j = cparams.alpha[j - 1]
    lam_arg = (-1.0) ** (1 - k) * complex(lam)
    x_arg = (-1.0) ** k * complex(x) / complex(lam)
    return LimitIngredients(
        gamma_quotient=qgamma_quotient(q, cparams, j),
        gamma_limit=gamma_quotient(cparams, j),
        theta_q_ratio=theta_power_ratio(q, 0.0, a_j, lam_arg),
        theta_q_limit=cmath.exp(-a_j * cmath.log(lam_arg)),
        theta_p_ratio=theta_scaled_ratio(q, k, a_j + 1.0, 1.0, x_arg),
        theta_p_limit=cmath.exp(-a_j * cmath.log(x_arg)),
    )


def check_branch(cparams: ClassicalParams, lam: complex, x: complex) -> None:
    """Admissibility of (lambda, x) for the q -> 1 limit."""
    k = cparams.k
    lam = complex(lam)
    x = complex(x)
    if lam == 0 or x == 0:
        raise DomainError("lambda and x must be nonzero")
    sign = (-1.0) ** k
    if abs(cmath.phase(lam * sign)) == 0.0:
        raise ForbiddenDirectionError(f"forbidden direction: lambda={lam} lies on (-1)^k R_+")
    if abs(cmath.phase(-sign * x / lam)) == 0.0:
        raise BranchError(f"x={x} lies on (-1)^(k+1) lambda R_+")
    if abs(cmath.phase(-x) - cmath.phase(-sign * lam)) >= math.pi:
        raise BranchError(f"branch condition |arg(-x) - arg((-1)^(k-1) lambda)| < pi fails for x={x}, lambda={lam}")


def _scan_row(cparams: ClassicalParams, lam: complex, x: complex, q: float, classical_value: complex) -> LimitScanRow:
    if not 0.0 < q < 1.0:
        raise ParameterError(f"limit scan needs real q in (0, 1), got {q}")
    params = cparams.q_params(q)
    argument = (-1.0) ** cparams.k * x / (1.0 - q) ** cparams.k
    evaluation = qsum_closed(params, lam, argument)
    row = LimitScanRow(q=q, qsum_value=evaluation.value, classical_value=classical_value, terms_used=evaluation.terms_used)
    logger.info(f"limit_scan_row payload={row.to_log_payload()}")
    return row


def limit_scan(
    cparams: ClassicalParams,
    lam: complex,
    x: complex,
    q_list: Sequence[float],
    *,
    workers: int = 1,
) -> list[LimitScanRow]:
    """
    Compare the [lambda;p]-sum at a = q^alpha, b = q^beta with the classical
    Borel sum for each q; rows are ordered by q.
    """
    lam = complex(lam)
    x = complex(x)
    check_branch(cparams, lam, x)
    classical_value = classical_borel_sum(cparams, x)
    ordered = sorted(float(q) for q in q_list)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        return list(executor.map(lambda q: _scan_row(cparams, lam, x, q, classical_value), ordered))
