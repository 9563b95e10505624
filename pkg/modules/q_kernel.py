# ============================================================================
# MODULE: Q-KERNEL
# ============================================================================
# q-integers, q-factorials, the two q-exponentials and the q-derivative,
# plus the truncation engine every series in the package runs on
# ============================================================================

"""
q-calculus primitives in double precision.

    [n]_q   = (1 - q^n) / (1 - q),  n at q = 1
    e_q^z   = sum z^k / [k]_q!            (converges for (1 - q)|z| < 1)
    E_q^z   = sum q^(k(k-1)/2) z^k / [k]_q!  (entire for q < 1)
    D_q f(x) = (f(x) - f(qx)) / ((1 - q) x)

q = 1 is an explicit branch that returns the classical objects. Series are
summed in log space (log-sum-exp) so e_q^z stays usable past the double range
when it is only needed as a normalizer.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.special import logsumexp

import config
from modules.errors import DomainExceeded, InvalidArgument, NonConverged, QOverflow

SCHEDULES = ("one_minus_inv_n", "ratio")


# ============================================================================
# DEFORMATION PARAMETER
# ============================================================================

@dataclass(frozen=True)
class QContext:
    """Fixed q, or an n-dependent schedule q_n that increases to 1."""

    mode: str = "fixed"
    q_fixed: float = 1.0
    schedule_id: str = None

    def __post_init__(self):
        if self.mode == "fixed":
            check_q(self.q_fixed)
        elif self.mode == "schedule":
            if self.schedule_id not in SCHEDULES:
                raise InvalidArgument(
                    f"Unknown q schedule '{self.schedule_id}' (expected one of {', '.join(SCHEDULES)})"
                )
        else:
            raise InvalidArgument(f"Unknown QContext mode '{self.mode}'")

    @classmethod
    def fixed(cls, q: float) -> "QContext":
        return cls(mode="fixed", q_fixed=float(q))

    @classmethod
    def schedule(cls, schedule_id: str) -> "QContext":
        return cls(mode="schedule", schedule_id=schedule_id.replace("-", "_"))

    def resolve(self, n: int) -> float:
        """q at index n (n >= 1)."""
        if n < 1:
            raise InvalidArgument(f"q is resolved at n >= 1, got n={n}")
        if self.mode == "fixed":
            return self.q_fixed
        if self.schedule_id == "ratio":
            return n / (n + 1.0)
        # 1 - 1/n vanishes at n = 1; hold q at 1/2 there
        return max(1.0 - 1.0 / n, 0.5)

    def describe(self) -> str:
        if self.mode == "fixed":
            return f"q={self.q_fixed!r}"
        return f"q_schedule={self.schedule_id}"


def check_q(q: float):
    if not (isinstance(q, (int, float)) and 0.0 < q <= 1.0):
        raise InvalidArgument(f"q must lie in (0, 1], got {q!r}")


def _resolve_q(ctx: Union[QContext, float], at_n: int) -> float:
    if isinstance(ctx, QContext):
        return ctx.resolve(at_n)
    check_q(ctx)
    return float(ctx)


# ============================================================================
# TRUNCATION POLICY
# ============================================================================

@dataclass(frozen=True)
class TruncationPolicy:
    tol_rel: float = field(default_factory=lambda: config.TOL_REL)
    tol_abs: float = field(default_factory=lambda: config.TOL_ABS)
    k_max: int = field(default_factory=lambda: config.K_MAX)
    consecutive: int = field(default_factory=lambda: config.CONSECUTIVE_SMALL_TERMS)
    domain_margin: float = field(default_factory=lambda: config.DOMAIN_MARGIN)

    def __post_init__(self):
        if not self.tol_rel > 0:
            raise InvalidArgument(f"tol_rel must be positive, got {self.tol_rel}")
        if self.tol_abs < 0:
            raise InvalidArgument(f"tol_abs must be nonnegative, got {self.tol_abs}")
        if self.k_max < 100:
            raise InvalidArgument(f"k_max must be at least 100, got {self.k_max}")
        if self.consecutive < 1:
            raise InvalidArgument(f"consecutive must be at least 1, got {self.consecutive}")
        if not 0.0 < self.domain_margin < 1.0:
            raise InvalidArgument(f"domain_margin must lie in (0, 1), got {self.domain_margin}")

    def tightened(self, tol_divisor: float = None, kmax_factor: int = None) -> "TruncationPolicy":
        """Policy used by the brute-force oracle."""
        tol_divisor = tol_divisor or config.ORACLE_TOL_DIVISOR
        kmax_factor = kmax_factor or config.ORACLE_KMAX_FACTOR
        return TruncationPolicy(
            tol_rel=self.tol_rel / tol_divisor,
            tol_abs=self.tol_abs,
            k_max=self.k_max * kmax_factor,
            consecutive=self.consecutive,
            domain_margin=self.domain_margin,
        )


def _small_run_end(logs: np.ndarray, policy: TruncationPolicy):
    """
    Index of the last term of the first run of `consecutive` small terms.
    A term is small when the geometric tail bound t_k / (1 - r_k), with
    r_k = t_k / t_(k-1) < 1, is below TAIL_TOL_FRACTION * tol_rel * partial.
    The bound holds for series whose term ratios decrease past the peak.
    """
    top = float(np.max(logs))
    scaled = np.exp(logs - top)
    partial = np.cumsum(scaled)
    floor = math.exp(math.log(policy.tol_abs) - top) if policy.tol_abs > 0 else 0.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratios = np.exp(np.diff(logs, prepend=np.inf))
        tail = np.where(ratios < 1.0, scaled / (1.0 - ratios), np.inf)
    small = tail < config.TAIL_TOL_FRACTION * policy.tol_rel * partial + floor

    c = policy.consecutive
    if small.size < c:
        return None
    window = np.convolve(small.astype(np.int64), np.ones(c, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(window == c)
    if hits.size == 0:
        return None
    return int(hits[0]) + c - 1


def truncated_log_terms(log_step: Callable[[np.ndarray], np.ndarray],
                        policy: TruncationPolicy) -> np.ndarray:
    """
    Log-terms t_0 = 1, t_1, ... of a positive series, where
    log t_k - log t_(k-1) = log_step(k). Terms are generated in doubling
    blocks and cut after the first run of `policy.consecutive` terms whose
    tail bounds are small (see _small_run_end).
    """
    logs = np.zeros(1)
    start = 1
    chunk = config.SERIES_CHUNK

    while start <= policy.k_max:
        stop = min(start + chunk, policy.k_max + 1)
        ks = np.arange(start, stop, dtype=float)
        with np.errstate(divide="ignore"):
            steps = log_step(ks)
        logs = np.concatenate([logs, logs[-1] + np.cumsum(steps)])

        end = _small_run_end(logs, policy)
        if end is not None:
            return logs[: end + 1]

        start = stop
        chunk *= 2

    raise NonConverged(f"series did not meet the truncation rule within k_max={policy.k_max} terms")


# ============================================================================
# Q-INTEGERS & Q-FACTORIALS
# ============================================================================

def q_integers(ks, q: float) -> np.ndarray:
    """Vectorized [k]_q."""
    ks = np.asarray(ks, dtype=float)
    if q == 1.0:
        return ks.copy()
    return -np.expm1(ks * math.log(q)) / (1.0 - q)


def q_integer(n: int, ctx: Union[QContext, float] = 1.0, at_n: int = 1) -> float:
    """[n]_q with q resolved from ctx at index at_n."""
    if n < 0:
        raise InvalidArgument(f"q-integers are defined for n >= 0, got {n}")
    q = _resolve_q(ctx, at_n)
    return float(q_integers(n, q))


def q_factorial(n: int, q: float) -> float:
    """[n]_q! = [n]_q [n-1]_q ... [1]_q, 1 for n = 0."""
    check_q(q)
    if n < 0:
        raise InvalidArgument(f"q-factorials are defined for n >= 0, got {n}")
    if n == 0:
        return 1.0
    with np.errstate(over="ignore"):
        value = float(np.prod(q_integers(np.arange(1, n + 1), q)))
    if not math.isfinite(value):
        raise QOverflow(f"[{n}]_q! overflows double precision at q={q}; work with log-terms instead")
    return value


# ============================================================================
# Q-EXPONENTIALS
# ============================================================================

def _default_policy(policy: TruncationPolicy) -> TruncationPolicy:
    return policy if policy is not None else TruncationPolicy()


def lower_domain_ok(z: float, q: float, policy: TruncationPolicy = None) -> bool:
    """True when the e_q series may be summed at |z|."""
    policy = _default_policy(policy)
    return q == 1.0 or (1.0 - q) * abs(z) < 1.0 - policy.domain_margin


def log_q_exp_lower(z: float, q: float, policy: TruncationPolicy = None) -> float:
    """log e_q^z."""
    check_q(q)
    policy = _default_policy(policy)
    if z == 0:
        return 0.0
    if q == 1.0:
        return float(z)
    if z < 0:
        # e_q^z E_q^-z = 1
        return -log_q_exp_upper(-z, q, policy)
    if (1.0 - q) * z >= 1.0 - policy.domain_margin:
        raise DomainExceeded(
            f"e_q^z needs (1-q)z < {1.0 - policy.domain_margin}, got (1-q)z={(1.0 - q) * z:.6g}"
        )

    log_z = math.log(z)
    logs = truncated_log_terms(lambda ks: log_z - np.log(q_integers(ks, q)), policy)
    return float(logsumexp(logs))


def log_q_exp_upper(z: float, q: float, policy: TruncationPolicy = None) -> float:
    """log E_q^z (E_q^z must be positive)."""
    check_q(q)
    policy = _default_policy(policy)
    if z == 0:
        return 0.0
    if q == 1.0:
        return float(z)
    if z > 0:
        log_z, log_q = math.log(z), math.log(q)
        logs = truncated_log_terms(
            lambda ks: (ks - 1.0) * log_q + log_z - np.log(q_integers(ks, q)), policy
        )
        return float(logsumexp(logs))
    if lower_domain_ok(z, q, policy):
        return -log_q_exp_lower(-z, q, policy)

    value = _upper_product(z, q, policy)
    if value <= 0:
        raise DomainExceeded(f"E_q^z is not positive at z={z}, q={q}")
    return math.log(value)


def _upper_product(z: float, q: float, policy: TruncationPolicy) -> float:
    """
    E_q^z = prod_k (1 + c q^k), c = (1-q) z. The first K factors, those with
    |c q^k| > PRODUCT_TAIL_START, are multiplied out; the rest contribute
    log prod_(k>=K) = -sum_m (-c q^K)^m / (m (1 - q^m)).
    """
    c = (1.0 - q) * z
    log_q = math.log(q)
    head = 0
    if abs(c) > config.PRODUCT_TAIL_START:
        head = max(0, math.ceil(math.log(config.PRODUCT_TAIL_START / abs(c)) / log_q))
        while abs(c) * q ** head > config.PRODUCT_TAIL_START:
            head += 1
    if head > policy.k_max:
        raise NonConverged(f"E_q product needs {head} explicit factors, k_max={policy.k_max}")

    value = float(np.prod(1.0 + c * np.power(q, np.arange(head, dtype=float))))
    y = -c * q ** head
    ms = np.arange(1, config.PRODUCT_TAIL_TERMS + 1, dtype=float)
    tail = -np.power(y, ms) / (ms * -np.expm1(ms * log_q))
    return value * math.exp(math.fsum(tail))


def _exp_checked(log_value: float, label: str) -> float:
    try:
        return math.exp(log_value)
    except OverflowError:
        raise QOverflow(f"{label} overflows double precision (log value {log_value:.6g})")


def q_exp_lower(z: float, q: float, policy: TruncationPolicy = None) -> float:
    """e_q^z = sum z^k / [k]_q!; exp(z) at q = 1."""
    return _exp_checked(log_q_exp_lower(z, q, policy), f"e_q^{z}")


def q_exp_upper(z: float, q: float, policy: TruncationPolicy = None) -> float:
    """E_q^z = sum q^(k(k-1)/2) z^k / [k]_q!; exp(z) at q = 1."""
    check_q(q)
    policy = _default_policy(policy)
    if q < 1.0 and z < 0 and not lower_domain_ok(z, q, policy):
        return _upper_product(z, q, policy)
    return _exp_checked(log_q_exp_upper(z, q, policy), f"E_q^{z}")


# ============================================================================
# Q-DERIVATIVE
# ============================================================================

def q_derivative_numeric(f: Callable[[float], float], x: float, q: float) -> float:
    """(f(x) - f(qx)) / ((1 - q) x), straight from the definition."""
    if not 0.0 < q < 1.0:
        raise InvalidArgument(f"q-derivative needs q in (0, 1), got {q}")
    if x == 0:
        raise InvalidArgument("q-derivative is undefined at x = 0; use appell.a_qderiv for polynomials")
    return (f(x) - f(q * x)) / ((1.0 - q) * x)
