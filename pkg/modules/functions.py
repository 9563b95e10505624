# ============================================================================
# MODULE: TEST FUNCTIONS
# ============================================================================
# Named functions in the weighted space C*_{x^2} with their growth constants
# ============================================================================

import math
from dataclasses import dataclass
from typing import Callable, Dict, NamedTuple, Optional

import numpy as np

import config
from modules.errors import InvalidArgument


@dataclass(frozen=True)
class TestFunction:
    """f on [0, inf) with |f(x)| <= growth_M (1 + x^2); eval takes scalars or arrays."""

    __test__ = False  # not a pytest test class

    id: str
    eval: Callable
    growth_M: float
    lipschitz_L: Optional[float] = None
    note: str = ""

    def __call__(self, x):
        return self.eval(x)


class Membership(NamedTuple):
    in_b_x2: bool  # |f| <= M_f (1 + x^2) on the grid
    worst_ratio: float  # max |f| / (M_f (1 + x^2))
    tail_ratio: float  # f(x_max) / (1 + x_max^2)


BUILTINS: Dict[str, TestFunction] = {
    "e0": TestFunction("e0", lambda x: np.ones_like(np.asarray(x, dtype=float)), 1.0, 0.0,
                       "Korovkin test function 1"),
    "e1": TestFunction("e1", lambda x: np.asarray(x, dtype=float), 1.0, 1.0,
                       "Korovkin test function x"),
    "e2": TestFunction("e2", lambda x: np.square(np.asarray(x, dtype=float)), 1.0, None,
                       "Korovkin test function x^2"),
    "sq_ratio": TestFunction("sq_ratio", lambda x: np.square(x) / (1.0 + np.square(x)), 1.0,
                             3.0 * math.sqrt(3.0) / 8.0, "x^2 / (1 + x^2)"),
    "sin": TestFunction("sin", np.sin, 1.0, 1.0, "sin x"),
    "inv1p": TestFunction("inv1p", lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float)), 1.0, 1.0,
                          "1 / (1 + x)"),
}


def get_function(function_id: str) -> TestFunction:
    try:
        return BUILTINS[function_id]
    except KeyError:
        raise InvalidArgument(
            f"Unknown function id '{function_id}' (known: {', '.join(sorted(BUILTINS))})"
        )


def combine(alpha: float, f: TestFunction, beta: float, g: TestFunction) -> TestFunction:
    """alpha f + beta g."""
    return TestFunction(
        id=f"{alpha!r}*{f.id}+{beta!r}*{g.id}",
        eval=lambda x: alpha * np.asarray(f(x), dtype=float) + beta * np.asarray(g(x), dtype=float),
        growth_M=abs(alpha) * f.growth_M + abs(beta) * g.growth_M,
        lipschitz_L=(abs(alpha) * f.lipschitz_L + abs(beta) * g.lipschitz_L
                     if f.lipschitz_L is not None and g.lipschitz_L is not None else None),
    )


def membership(f: TestFunction, xs: np.ndarray) -> Membership:
    """Check |f| <= M_f (1 + x^2) on xs and report the tail ratio f / (1 + x^2)."""
    xs = np.asarray(xs, dtype=float)
    weight = 1.0 + np.square(xs)
    values = np.asarray(f(xs), dtype=float)
    ratios = np.abs(values) / (f.growth_M * weight)
    worst = float(np.max(ratios))
    return Membership(
        in_b_x2=worst <= 1.0 + config.GROWTH_CHECK_TOL,
        worst_ratio=worst,
        tail_ratio=float(values[-1] / weight[-1]),
    )
