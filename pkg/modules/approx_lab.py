# ============================================================================
# MODULE: APPROX LAB
# ============================================================================
# Weighted norms, grid moduli of continuity, weighted-convergence runs and
# the modulus-of-continuity error bound check
# ============================================================================

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

import config
from modules.csv_manager import ExperimentReport
from modules.errors import InvalidArgument
from modules.functions import BUILTINS, TestFunction, combine, membership
from modules.log_utils import log_failure, log_message
from modules.operator_core import (
    RECOVERABLE, OperatorParams, apply, delta_n, refined_sup, scaled_argument, sweep_end,
)

LAYOUTS = ("uniform", "hybrid")

CONVERGE_COLUMNS = ("n", "q", "bn", "f", "alpha", "x_max", "argmax", "weighted_error", "tail_ratio",
                    "status")
BOUND_COLUMNS = ("n", "q", "bn", "f", "b", "lhs", "delta_n_b", "omega_term", "rhs", "holds", "status")
EVAL_COLUMNS = ("n", "q", "bn", "x", "f", "value", "f_x", "error", "status")


@dataclass(frozen=True)
class GridSpec:
    x_max: float
    points: int = config.SUP_GRID_POINTS
    layout: str = "uniform"

    def __post_init__(self):
        if not self.x_max > 0:
            raise InvalidArgument(f"grid x_max must be positive, got {self.x_max}")
        if self.points < config.MIN_GRID_POINTS:
            raise InvalidArgument(f"grid needs at least {config.MIN_GRID_POINTS} points, got {self.points}")
        if self.layout not in LAYOUTS:
            raise InvalidArgument(f"Unknown grid layout '{self.layout}'")

    def nodes(self) -> np.ndarray:
        if not math.isfinite(self.x_max):
            raise InvalidArgument("grid x_max must be finite to build nodes")
        if self.layout == "uniform":
            return np.linspace(0.0, self.x_max, self.points)
        # geometric near 0, uniform elsewhere
        half = self.points // 2
        geometric = np.geomspace(config.HYBRID_GEOMETRIC_START * self.x_max, self.x_max, half)
        uniform = np.linspace(0.0, self.x_max, self.points - half)
        return np.union1d(geometric, uniform)


class NormEstimate(NamedTuple):
    value: float
    argmax: float
    x_max: float  # the sup only covers [0, x_max]


class Theorem3Result(NamedTuple):
    lhs: float
    delta_n_b: float
    omega_term: float
    rhs: float
    holds: bool


# ============================================================================
# WEIGHTED NORMS
# ============================================================================

def weighted_norm(g: Callable[[float], float], alpha: float, grid: GridSpec) -> NormEstimate:
    """sup |g(x)| / (1 + x^2)^(1 + alpha) over the grid, refined at the argmax."""
    if alpha < 0:
        raise InvalidArgument(f"alpha must be >= 0, got {alpha}")
    power = 1.0 + alpha
    estimate = refined_sup(lambda x: abs(float(g(x))) / (1.0 + x * x) ** power, grid.nodes())
    return NormEstimate(estimate.value, estimate.argmax, grid.x_max)


# ============================================================================
# MODULUS OF CONTINUITY
# ============================================================================

def _grid_size(b: float, step: float) -> int:
    return max(1, math.ceil(b / step * (1.0 - 1e-12)))


def _grid_modulus(f: TestFunction, b: float, step: float, reach: int) -> float:
    """Max of f(x_j) - f(x_i) over |j - i| <= reach on x_j = min(j * step, b)."""
    count = _grid_size(b, step)
    xs = np.minimum(np.arange(count + 1) * step, b)
    values = np.broadcast_to(np.asarray(f(xs), dtype=float), xs.shape)
    if reach >= count:
        return float(np.max(values) - np.min(values))
    size = reach + 1
    upper = maximum_filter1d(values, size=size, mode="nearest")
    lower = minimum_filter1d(values, size=size, mode="nearest")
    return float(np.max(upper - lower))


def modulus(f: TestFunction, delta: float, b: float, grid_step: float = None) -> float:
    """
    omega_b(f, delta) = sup |f(t) - f(x)| over x, t in [0, b], |t - x| <= delta.
    Grid estimate (a lower bound); the grid step divides delta and is halved
    until two estimates agree to MODULUS_REL_TOL.
    """
    if delta < 0 or not b > 0:
        raise InvalidArgument(f"need delta >= 0 and b > 0, got delta={delta}, b={b}")
    if delta == 0:
        return 0.0
    limit = delta / config.MODULUS_STEP_DIVISOR
    grid_step = grid_step if grid_step is not None else limit
    if grid_step <= 0 or grid_step > limit * (1.0 + 1e-12):
        raise InvalidArgument(
            f"grid_step={grid_step} too coarse for delta={delta} (need <= delta/{config.MODULUS_STEP_DIVISOR})"
        )

    reach = math.ceil(delta / grid_step * (1.0 - 1e-12))
    estimate = _grid_modulus(f, b, delta / reach, reach)
    for _ in range(config.MODULUS_MAX_REFINEMENTS):
        if 2 * _grid_size(b, delta / reach) + 1 > config.MODULUS_MAX_POINTS:
            break
        reach *= 2
        refined = _grid_modulus(f, b, delta / reach, reach)
        stable = abs(refined - estimate) <= config.MODULUS_REL_TOL * abs(refined)
        estimate = max(estimate, refined)
        if stable:
            break
    return estimate


# ============================================================================
# OPERATOR ERRORS
# ============================================================================

def sup_error_on_interval(p: OperatorParams, f: TestFunction, b: float,
                          grid: GridSpec = None) -> NormEstimate:
    """sup over [0, b] of |P*_n(f; q; x) - f(x)|."""
    scaled_argument(p, b)
    grid = replace(grid, x_max=b) if grid is not None else GridSpec(b)
    estimate = refined_sup(lambda x: abs(apply(p, f, x) - float(f(x))), grid.nodes())
    return NormEstimate(estimate.value, estimate.argmax, b)


def bound_for_delta(p: OperatorParams, f: TestFunction, b: float, delta: float,
                    delta_n_b: float = None) -> float:
    """N_f (1 + b^2) delta_n(b) + (1 + sqrt(delta_n(b)) / delta) omega_(b+1)(f, delta)."""
    if not delta > 0:
        raise InvalidArgument(f"delta must be positive, got {delta}")
    dn = delta_n(p, b) if delta_n_b is None else delta_n_b
    nf = config.NF_FACTOR * f.growth_M
    return nf * (1.0 + b * b) * dn + (1.0 + math.sqrt(max(dn, 0.0)) / delta) * modulus(f, delta, b + 1.0)


def theorem3_check(p: OperatorParams, f: TestFunction, b: float) -> Theorem3Result:
    """
    ||P*_n f - f||_C[0,b] <= N_f (1 + b^2) delta_n(b) + 2 omega_(b+1)(f, sqrt(delta_n(b))),
    N_f = 6 M_f, checked with a THEOREM3_SLACK factor on the right. The right
    side is bound_for_delta at delta = sqrt(delta_n(b)).
    """
    reach = max(sweep_end(p), b + 1.0)
    growth = membership(f, np.linspace(0.0, reach, config.SUP_GRID_POINTS))
    if not growth.in_b_x2:
        raise InvalidArgument(
            f"{f.id} leaves B_x2 with M_f={f.growth_M} on [0, {reach:.6g}] "
            f"(|f| / (M_f (1 + x^2)) reaches {growth.worst_ratio:.6g})"
        )
    lhs = sup_error_on_interval(p, f, b).value
    dn = delta_n(p, b)
    growth_term = config.NF_FACTOR * f.growth_M * (1.0 + b * b) * dn
    root = math.sqrt(max(dn, 0.0))
    rhs = bound_for_delta(p, f, b, root, delta_n_b=dn) if root > 0 else growth_term
    return Theorem3Result(lhs, dn, rhs - growth_term, rhs, lhs <= config.THEOREM3_SLACK * rhs)


def tail_ratio_check(p: OperatorParams, x0: float, alpha: float, points: int = None,
                     x_max: float = math.inf) -> NormEstimate:
    """sup over [x0, sweep end] of P*_n(1 + t^2; q; x) / (1 + x^2)^(1 + alpha)."""
    end = sweep_end(p, x_max)
    if not 0 <= x0 < end:
        raise InvalidArgument(f"x0={x0} must lie in [0, {end:.6g})")
    one_plus_t2 = combine(1.0, BUILTINS["e0"], 1.0, BUILTINS["e2"])
    xs = np.linspace(x0, end, points or config.SUP_GRID_POINTS)
    power = 1.0 + alpha
    estimate = refined_sup(lambda x: apply(p, one_plus_t2, x) / (1.0 + x * x) ** power, xs)
    return NormEstimate(estimate.value, estimate.argmax, end)


# ============================================================================
# EXPERIMENT RUNS
# ============================================================================

def _base(p: OperatorParams) -> dict:
    return {"n": p.n, "q": p.q, "bn": p.bn}


def _convergence_row(p: OperatorParams, f: TestFunction, alpha: float, grid: GridSpec) -> dict:
    row = dict(_base(p), f=f.id, alpha=float(alpha))
    try:
        end = sweep_end(p, grid.x_max)
        estimate = weighted_norm(lambda x: apply(p, f, x) - float(f(x)), alpha, replace(grid, x_max=end))
        tail = None
        if alpha > 0:
            tail = tail_ratio_check(p, config.TAIL_X0_FRACTION * end, alpha, grid.points, grid.x_max).value
    except RECOVERABLE as e:
        log_failure("weighted_convergence_run", f"n={p.n}: {type(e).__name__}: {e}")
        return dict(row, status="failed")
    return dict(row, x_max=end, argmax=estimate.argmax, weighted_error=estimate.value,
                tail_ratio=tail, status="ok")


def weighted_convergence_run(pfamily: Sequence[OperatorParams], f: TestFunction, alpha: float,
                             grid: GridSpec, workers: int = 1) -> ExperimentReport:
    """One row per n: sup over [0, x_max] of |P*_n f - f| / (1 + x^2)^(1 + alpha)."""
    report = ExperimentReport(columns=CONVERGE_COLUMNS, key_columns=("n",))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for row in pool.map(lambda p: _convergence_row(p, f, alpha, grid), pfamily):
            report.add_row(**row)
    log_message(f"✅ Weighted convergence run for {f.id}: {len(report.rows)} rows")
    return report


def _bound_row(p: OperatorParams, f: TestFunction, b: float) -> dict:
    row = dict(_base(p), f=f.id, b=float(b))
    try:
        result = theorem3_check(p, f, b)
    except RECOVERABLE as e:
        log_failure("theorem3_check", f"n={p.n} f={f.id} b={b}: {type(e).__name__}: {e}")
        return dict(row, status="failed")
    return dict(row, **result._asdict(), status="ok" if result.holds else "violated")


def theorem3_suite(pfamily: Sequence[OperatorParams], functions: Sequence[TestFunction],
                   bs: Sequence[float], workers: int = 1) -> ExperimentReport:
    report = ExperimentReport(columns=BOUND_COLUMNS, key_columns=("n", "b", "f"))
    cells = [(p, f, b) for p in pfamily for f in functions for b in bs]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for row in pool.map(lambda cell: _bound_row(*cell), cells):
            report.add_row(**row)
    return report


def evaluation_run(pfamily: Sequence[OperatorParams], f: TestFunction,
                   xs: Sequence[float] = None, points: int = None) -> ExperimentReport:
    """P*_n(f; q; x) next to f(x) for every n and x."""
    report = ExperimentReport(columns=EVAL_COLUMNS, key_columns=("n", "x"))
    for p in pfamily:
        grid = xs if xs is not None else np.linspace(0.0, sweep_end(p), points or config.DEFAULT_X_POINTS)
        for x in grid:
            row = dict(_base(p), x=float(x), f=f.id)
            try:
                value = apply(p, f, float(x))
            except RECOVERABLE as e:
                log_failure("evaluation_run", f"n={p.n} x={x}: {type(e).__name__}: {e}")
                report.add_row(**row, status="failed")
                continue
            f_x = float(f(float(x)))
            report.add_row(**row, value=value, f_x=f_x, error=abs(value - f_x), status="ok")
    return report


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(a > b for a, b in zip(values, values[1:]))
