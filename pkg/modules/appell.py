# ============================================================================
# MODULE: APPELL
# ============================================================================
# The symbol A(u) = sum a_j u^j as a finite coefficient list, the q-Appell
# polynomials it generates and the constants the moment formulas consume
# ============================================================================

"""
q-Appell polynomials are read off the generating relation

    A(u) e_q^(u x) = sum_k P_k(q; x) u^k / [k]_q!

which gives P_k(q; x) = sum_{j <= min(k, J)} [k]_q! / [k-j]_q! * a_j x^(k-j).
At q = 1 the same code yields the classical Appell polynomials of g(u).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

import config
from modules.errors import InvalidArgument, QOverflow
from modules.q_kernel import check_q, q_integers


@dataclass(frozen=True)
class AppellSystem:
    coeffs: tuple
    q: float = 1.0

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        check_q(self.q)
        if not coeffs:
            raise InvalidArgument("Appell coefficient list is empty")
        if not all(math.isfinite(a) for a in coeffs):
            raise InvalidArgument(f"Appell coefficients must be finite, got {coeffs}")
        if abs(math.fsum(coeffs)) <= config.A1_MIN_ABS:
            raise InvalidArgument(f"A(1) = sum of coefficients must be nonzero, got {coeffs}")

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float], q: float = 1.0) -> "AppellSystem":
        return cls(tuple(coeffs), q)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def with_q(self, q: float) -> "AppellSystem":
        return AppellSystem(self.coeffs, q)


class PositivityReport(NamedTuple):
    all_nonneg: bool
    a1_positive: bool

    @property
    def positive(self) -> bool:
        return self.all_nonneg and self.a1_positive


class LemmaConstants(NamedTuple):
    a1: float  # A(1)
    aq: float  # A(q)
    dA1: float  # D_q A(1)
    dAq: float  # D_q A(q)
    d2A1: float  # D_q^2 A(1)


def a_value(sys: AppellSystem, u: float) -> float:
    """A(u) by Horner."""
    return float(npoly.polyval(u, sys.coeffs))


def _qderiv_coeffs(sys: AppellSystem, order: int) -> np.ndarray:
    a = np.asarray(sys.coeffs)
    js = np.arange(a.size, dtype=float)
    if order == 1:
        return (a * q_integers(js, sys.q))[1:]
    if order == 2:
        return (a * q_integers(js, sys.q) * q_integers(js - 1.0, sys.q))[2:]
    raise InvalidArgument(f"a_qderiv supports order 1 or 2, got {order}")


def a_qderiv(sys: AppellSystem, u: float, order: int = 1) -> float:
    """D_q A (order 1) or D_q^2 A (order 2) at u, termwise on the monomials."""
    c = _qderiv_coeffs(sys, order)
    if c.size == 0:
        return 0.0
    return float(npoly.polyval(u, c))


def appell_poly(sys: AppellSystem, k: int, x: float) -> float:
    """P_k(q; x)."""
    if k < 0:
        raise InvalidArgument(f"Appell index must be >= 0, got {k}")

    total = 0.0
    ratio = 1.0  # [k]_q! / [k-j]_q!
    qk = q_integers(np.arange(k, k - min(k, sys.degree), -1), sys.q)
    try:
        with np.errstate(over="ignore"):
            for j in range(min(k, sys.degree) + 1):
                if j > 0:
                    ratio *= float(qk[j - 1])
                total += ratio * sys.coeffs[j] * x ** (k - j)
    except OverflowError:
        total = math.inf
    if not math.isfinite(total):
        raise QOverflow(f"P_{k}(q; {x}) is not representable in double precision")
    return total


def appell_weight_coeffs(sys: AppellSystem, exp_terms: np.ndarray) -> np.ndarray:
    """
    P_k(q; x) / [k]_q! for k = 0 .. len(exp_terms) - 1, given the
    q-exponential terms x^m / [m]_q!. A common scale factor on the terms
    carries over; the J trailing entries see a truncated series.
    """
    return np.convolve(np.asarray(exp_terms, dtype=float), np.asarray(sys.coeffs))


def positivity_report(sys: AppellSystem) -> PositivityReport:
    return PositivityReport(
        all_nonneg=all(a >= 0 for a in sys.coeffs),
        a1_positive=math.fsum(sys.coeffs) > 0,
    )


def lemma_constants(sys: AppellSystem) -> LemmaConstants:
    return LemmaConstants(
        a1=a_value(sys, 1.0),
        aq=a_value(sys, sys.q),
        dA1=a_qderiv(sys, 1.0, 1),
        dAq=a_qderiv(sys, sys.q, 1),
        d2A1=a_qderiv(sys, 1.0, 2),
    )
