# ============================================================================
# MODULE: OPERATOR CORE
# ============================================================================
# The Chlodowsky q-Favard-Szasz operator, its classical specializations,
# the reference moment formulas and the brute-force summation oracle
# ============================================================================

"""
    P*_n(f; q; x) = E_q^(-u) / A(1) * sum_k P_k(q; u) / [k]_q! * f([k]_q b_n / [n]_q),
    u = [n]_q x / b_n.

Since P_k(q; u) / [k]_q! = sum_j a_j u^(k-j) / [k-j]_q!, the weights are the
q-Poisson weights pi_m = u^m / ([m]_q! e_q^u) convolved with (a_j) / A(1).
The pi_m are built in log space from the ratio u / [m]_q, so neither
[m]_q! nor e_q^u is ever formed. The normalizer E_q^(-u) = 1 / e_q^u is
summed over the same truncated terms as the weights.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable, List, NamedTuple, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp
from scipy.stats import poisson

import config
from modules.appell import AppellSystem, appell_weight_coeffs, lemma_constants
from modules.csv_manager import ExperimentReport
from modules.errors import DomainExceeded, InvalidArgument, NonConverged, QOverflow
from modules.functions import TestFunction
from modules.log_utils import log_failure
from modules.q_kernel import (
    QContext, TruncationPolicy, log_q_exp_lower, log_q_exp_upper, q_integer, q_integers,
    truncated_log_terms,
)

RECOVERABLE = (DomainExceeded, NonConverged, QOverflow)


# ============================================================================
# PARAMETERS
# ============================================================================

BN_KINDS = ("const", "power", "log")


@dataclass(frozen=True)
class BnSchedule:
    """b_n = c, n^p (0 < p < 1) or 1 + ln n."""

    kind: str = "const"
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in BN_KINDS:
            raise InvalidArgument(f"Unknown b_n schedule '{self.kind}' (expected const, power or log)")
        if self.kind == "const" and not self.param > 0:
            raise InvalidArgument(f"const b_n must be positive, got {self.param}")
        if self.kind == "power" and not 0.0 < self.param < 1.0:
            raise InvalidArgument(f"power b_n needs 0 < p < 1, got {self.param}")

    @classmethod
    def parse(cls, text: str) -> "BnSchedule":
        kind, _, value = text.strip().partition(":")
        if kind == "log":
            if value:
                raise InvalidArgument(f"log b_n takes no parameter, got '{text}'")
            return cls("log", 0.0)
        try:
            return cls(kind, float(value))
        except ValueError:
            raise InvalidArgument(f"Cannot parse b_n schedule '{text}'")

    def resolve(self, n: int) -> float:
        if self.kind == "const":
            return self.param
        if self.kind == "power":
            return float(n) ** self.param
        return 1.0 + math.log(n)

    def spec(self) -> str:
        return "log" if self.kind == "log" else f"{self.kind}:{self.param!r}"


@dataclass(frozen=True)
class OperatorParams:
    n: int
    qctx: QContext
    bn_schedule: BnSchedule
    appell: AppellSystem
    trunc: TruncationPolicy = field(default_factory=TruncationPolicy)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument(f"n must be a positive integer, got {self.n}")
        q = self.qctx.resolve(self.n)
        if self.appell.q != q:
            raise InvalidArgument(f"Appell system built at q={self.appell.q}, operator resolves q={q}")

    @classmethod
    def build(cls, n: int, qctx: QContext, bn_schedule: BnSchedule,
              coeffs: Union[Sequence[float], AppellSystem],
              trunc: TruncationPolicy = None) -> "OperatorParams":
        """Construct with the Appell system at the resolved q."""
        appell = coeffs if isinstance(coeffs, AppellSystem) else AppellSystem.from_coeffs(coeffs)
        return cls(n, qctx, bn_schedule, appell.with_q(qctx.resolve(n)),
                   trunc if trunc is not None else TruncationPolicy())

    @property
    def q(self) -> float:
        return self.qctx.resolve(self.n)

    @property
    def bn(self) -> float:
        return self.bn_schedule.resolve(self.n)

    @property
    def qint_n(self) -> float:
        return q_integer(self.n, self.qctx, self.n)

    def with_trunc(self, trunc: TruncationPolicy) -> "OperatorParams":
        return replace(self, trunc=trunc)


def params_family(ns: Iterable[int], qctx: QContext, bn_schedule: BnSchedule,
                  coeffs: Sequence[float], trunc: TruncationPolicy = None) -> List[OperatorParams]:
    appell = AppellSystem.from_coeffs(coeffs)
    return [OperatorParams.build(n, qctx, bn_schedule, appell, trunc) for n in ns]


# ============================================================================
# DOMAIN
# ============================================================================

def domain_bound(p: OperatorParams) -> float:
    """Supremum of admissible x; inf at q = 1."""
    if p.q == 1.0:
        return math.inf
    return (1.0 - p.trunc.domain_margin) * p.bn / (p.qint_n * (1.0 - p.q))


def sweep_end(p: OperatorParams, x_max: float = math.inf) -> float:
    """
    Right end of a sweep: X_MAX_FRACTION of the domain bound, capped by x_max
    and by the x whose weight peak sits at SWEEP_KMAX_FRACTION * k_max.
    The peak index k solves [k]_q = u, so u <= [K]_q keeps it at or below K.
    """
    bound = domain_bound(p)
    end = config.CLASSICAL_X_MAX if math.isinf(bound) else config.X_MAX_FRACTION * bound
    peak_cap = config.SWEEP_KMAX_FRACTION * p.trunc.k_max
    series_end = float(q_integers(peak_cap, p.q)) * p.bn / p.qint_n
    return min(end, series_end, x_max)


def default_xs(p: OperatorParams, points: int = None) -> np.ndarray:
    return np.linspace(0.0, sweep_end(p), points or config.DEFAULT_X_POINTS)


def scaled_argument(p: OperatorParams, x: float) -> float:
    """u = [n]_q x / b_n."""
    if x < 0:
        raise InvalidArgument(f"operator argument must be >= 0, got {x}")
    u = p.qint_n * x / p.bn
    if p.q < 1.0 and (1.0 - p.q) * u >= 1.0 - p.trunc.domain_margin:
        raise DomainExceeded(
            f"x={x} is outside the convergence domain (x < {domain_bound(p):.6g}) for n={p.n}, q={p.q}"
        )
    return u


# ============================================================================
# WEIGHTS & NODES
# ============================================================================

@lru_cache(maxsize=512)
def _node_table(q: float, bn: float, qint_n: float, count: int) -> np.ndarray:
    nodes = q_integers(np.arange(count), q) * (bn / qint_n)
    nodes.setflags(write=False)
    return nodes


def operator_weights(p: OperatorParams, x: float, policy: TruncationPolicy = None):
    """(nodes, weights) with sum(weights * f(nodes)) = P*_n(f; q; x)."""
    policy = policy if policy is not None else p.trunc
    u = scaled_argument(p, x)
    q = p.q

    if u == 0:
        log_pi = np.zeros(1)
    else:
        log_u = math.log(u)
        logs = truncated_log_terms(lambda ks: log_u - np.log(q_integers(ks, q)), policy)
        log_pi = logs - logsumexp(logs)

    a = np.asarray(p.appell.coeffs)
    weights = appell_weight_coeffs(p.appell, np.exp(log_pi)) / math.fsum(a)
    return _node_table(q, p.bn, p.qint_n, weights.size), weights


def apply(p: OperatorParams, f: TestFunction, x: float, policy: TruncationPolicy = None) -> float:
    """P*_n(f; q; x)."""
    nodes, weights = operator_weights(p, x, policy)
    values = np.broadcast_to(np.asarray(f(nodes), dtype=float), nodes.shape)
    return math.fsum(weights * values)


def apply_classical(n: int, b_n: float, g_coeffs: Sequence[float], f: TestFunction, x: float,
                    policy: TruncationPolicy = None) -> float:
    """
    q = 1 operator with Poisson weights e^(-u) u^m / m!, u = n x / b_n:
    b_n = 1 and g = 1 is the Favard-Szasz operator, general g the
    Jakimovski-Leviatan operator, general b_n its Chlodowsky variant.
    """
    if n < 1 or not b_n > 0:
        raise InvalidArgument(f"need n >= 1 and b_n > 0, got n={n}, b_n={b_n}")
    if x < 0:
        raise InvalidArgument(f"operator argument must be >= 0, got {x}")
    a = np.asarray(g_coeffs, dtype=float)
    g1 = math.fsum(a)
    if a.size == 0 or abs(g1) <= config.A1_MIN_ABS:
        raise InvalidArgument(f"g(1) must be nonzero, got coefficients {tuple(g_coeffs)}")

    policy = policy if policy is not None else TruncationPolicy()
    u = n * x / b_n
    if u == 0:
        pi = np.ones(1)
    else:
        last = int(poisson.isf(policy.tol_rel, u)) + policy.consecutive
        if last > policy.k_max:
            raise NonConverged(f"Poisson weights need {last} terms at u={u}, k_max={policy.k_max}")
        pi = poisson.pmf(np.arange(last + 1), u)

    weights = np.convolve(pi, a) / g1
    nodes = np.arange(weights.size) * (b_n / n)
    values = np.broadcast_to(np.asarray(f(nodes), dtype=float), nodes.shape)
    return math.fsum(weights * values)


# ============================================================================
# MOMENTS: REFERENCE CLOSED FORMS
# ============================================================================

def exp_ratio(p: OperatorParams, x: float) -> float:
    """E_q^(-u) e_q^(qu); equals 1 - (1 - q) u."""
    u = scaled_argument(p, x)
    return math.exp(log_q_exp_upper(-u, p.q, p.trunc) + log_q_exp_lower(p.q * u, p.q, p.trunc))


def moment_closed(p: OperatorParams, r: int, x: float) -> float:
    """P*_n(e_r; q; x) from the reference closed forms, taken as stated."""
    if r not in (0, 1, 2):
        raise InvalidArgument(f"moments are available for r = 0, 1, 2, got {r}")
    ratio = exp_ratio(p, x)
    if r == 0:
        return 1.0

    c = lemma_constants(p.appell)
    h = p.bn / p.qint_n
    if r == 1:
        return x + c.dA1 * ratio / c.a1 * h
    return (x * x
            + ratio * (p.q * c.dAq + c.dA1) / c.a1 * h * x
            + c.d2A1 * ratio / c.a1 * h * h)


def central_moment_closed(p: OperatorParams, r: int, x: float) -> float:
    """P*_n((t - x)^r; q; x) from the reference closed forms, taken as stated."""
    if r not in (1, 2):
        raise InvalidArgument(f"central moments are available for r = 1, 2, got {r}")
    ratio = exp_ratio(p, x)
    c = lemma_constants(p.appell)
    h = p.bn / p.qint_n
    if r == 1:
        return c.dA1 * ratio / c.a1 * h
    return (ratio * (p.q * c.dAq - c.dA1) / c.a1 * h * x
            + c.d2A1 * ratio / c.a1 * h * h)


# ============================================================================
# MOMENTS: SERIES SUMMED IN CLOSED FORM
# ============================================================================

def moment_derived(p: OperatorParams, r: int, x: float) -> float:
    """
    Moments obtained by summing the series exactly, using
    [m + j]_q = [j]_q + q^j [m]_q and sum pi_m [m]_q = u,
    sum pi_m [m]_q^2 = q u^2 + u.
    """
    if r not in (0, 1, 2):
        raise InvalidArgument(f"moments are available for r = 0, 1, 2, got {r}")
    u = scaled_argument(p, x)
    if r == 0:
        return 1.0

    a = np.asarray(p.appell.coeffs)
    js = np.arange(a.size, dtype=float)
    qj = q_integers(js, p.q)
    pw = np.power(p.q, js)
    h = p.bn / p.qint_n
    a1 = math.fsum(a)
    if r == 1:
        return h * math.fsum(a * (qj + pw * u)) / a1
    return h * h * math.fsum(a * (qj * qj + 2.0 * pw * qj * u + pw * pw * (p.q * u * u + u))) / a1


def central_moment_derived(p: OperatorParams, r: int, x: float) -> float:
    if r == 1:
        return moment_derived(p, 1, x) - x
    if r == 2:
        return moment_derived(p, 2, x) - 2.0 * x * moment_derived(p, 1, x) + x * x
    raise InvalidArgument(f"central moments are available for r = 1, 2, got {r}")


# ============================================================================
# MOMENTS: BRUTE-FORCE ORACLE
# ============================================================================

class Moments(NamedTuple):
    x: float
    m0: float
    m1: float
    m2: float

    def raw(self, r: int) -> float:
        return (self.m0, self.m1, self.m2)[r]

    def central(self, r: int) -> float:
        if r == 1:
            return self.m1 - self.x * self.m0
        if r == 2:
            return self.m2 - 2.0 * self.x * self.m1 + self.x * self.x * self.m0
        raise InvalidArgument(f"central moments are available for r = 1, 2, got {r}")


def oracle_moments(p: OperatorParams, x: float) -> Moments:
    """m_0, m_1, m_2 by direct summation under the tightened policy."""
    nodes, weights = operator_weights(p, x, p.trunc.tightened())
    return Moments(
        x=x,
        m0=math.fsum(weights),
        m1=math.fsum(weights * nodes),
        m2=math.fsum(weights * nodes * nodes),
    )


def moment_oracle(p: OperatorParams, r: int, x: float) -> float:
    if r not in (0, 1, 2):
        raise InvalidArgument(f"moments are available for r = 0, 1, 2, got {r}")
    return oracle_moments(p, x).raw(r)


def central_moment_oracle(p: OperatorParams, r: int, x: float) -> float:
    return oracle_moments(p, x).central(r)


# ============================================================================
# RESIDUAL REPORT
# ============================================================================

VALIDATE_COLUMNS = ("n", "q", "bn", "x", "r", "closed", "oracle", "residual", "status")
MOMENTS_COLUMNS = ("n", "q", "bn", "x", "kind", "r", "closed", "derived", "oracle", "residual", "status")


def _moment_rows(p: OperatorParams, x: float, kinds: Sequence[str]) -> List[dict]:
    base = {"n": p.n, "q": p.q, "bn": p.bn, "x": float(x)}
    cells = [("raw", r) for r in (0, 1, 2)] if "raw" in kinds else []
    cells += [("central", r) for r in (1, 2)] if "central" in kinds else []

    try:
        oracle = oracle_moments(p, x)
    except RECOVERABLE as e:
        log_failure("lemma_residual_report", f"n={p.n} x={x}: {type(e).__name__}: {e}")
        return [dict(base, kind=kind, r=r, status="failed") for kind, r in cells]

    rows = []
    for kind, r in cells:
        row = dict(base, kind=kind, r=r)
        try:
            if kind == "raw":
                closed, derived, value = moment_closed(p, r, x), moment_derived(p, r, x), oracle.raw(r)
            else:
                closed, derived, value = (central_moment_closed(p, r, x),
                                          central_moment_derived(p, r, x), oracle.central(r))
        except RECOVERABLE as e:
            log_failure("lemma_residual_report", f"n={p.n} x={x} {kind} r={r}: {type(e).__name__}: {e}")
            rows.append(dict(row, status="failed"))
            continue

        residual = abs(closed - value)
        if r == 2:
            status = "recorded"
        elif residual <= config.MOMENT_ABS_TOL * (1.0 + abs(x)):
            status = "ok"
        else:
            status = "mismatch"
        rows.append(dict(row, closed=closed, derived=derived, oracle=value, residual=residual,
                         status=status))
    return rows


def lemma_residual_report(params: Sequence[OperatorParams], xs: Sequence[float] = None,
                          kinds: Sequence[str] = ("raw",), workers: int = 1,
                          points: int = None) -> ExperimentReport:
    """
    Reference closed form against the oracle for every (params, x, r).
    Without xs, each n gets `points` x-values spread over its sweep range.
    """
    columns = MOMENTS_COLUMNS if "central" in kinds else VALIDATE_COLUMNS
    key = ("n", "x", "kind", "r") if "central" in kinds else ("n", "x", "r")
    report = ExperimentReport(columns=columns, key_columns=key)

    cells = [(p, float(x)) for p in params
             for x in (xs if xs is not None else default_xs(p, points))]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for rows in pool.map(lambda cell: _moment_rows(cell[0], cell[1], kinds), cells):
            for row in rows:
                if "kind" not in columns:
                    row.pop("kind")
                    row.pop("derived", None)
                report.add_row(**row)
    return report


# ============================================================================
# SUPREMUM ESTIMATES
# ============================================================================

class SupEstimate(NamedTuple):
    value: float
    argmax: float


def refined_sup(h: Callable[[float], float], xs: np.ndarray) -> SupEstimate:
    """Grid maximum of h, then bounded refinement between the argmax's neighbours."""
    xs = np.asarray(xs, dtype=float)
    values = np.array([h(float(x)) for x in xs])
    i = int(np.argmax(values))  # first maximizer on plateaus
    best, best_x = float(values[i]), float(xs[i])

    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -h(float(t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": config.REFINE_REL_TOL * max(1.0, abs(best_x))})
        if res.success and -res.fun > best:
            best, best_x = float(-res.fun), float(res.x)
    return SupEstimate(best, best_x)


def delta_n_estimate(p: OperatorParams, b: float) -> SupEstimate:
    """sup over [0, b] of the oracle second central moment, with its argmax."""
    if b < 0:
        raise InvalidArgument(f"interval end must be >= 0, got {b}")
    scaled_argument(p, b)
    if b == 0:
        return SupEstimate(central_moment_oracle(p, 2, 0.0), 0.0)
    xs = np.linspace(0.0, b, config.SUP_GRID_POINTS)
    return refined_sup(lambda x: central_moment_oracle(p, 2, x), xs)


def delta_n(p: OperatorParams, b: float) -> float:
    """delta_n(b) := sup_{x in [0, b]} P*_n((t - x)^2; q; x)."""
    return delta_n_estimate(p, b).value
