import math

import numpy as np
import pytest

from modules.errors import InvalidArgument
from modules.functions import BUILTINS, TestFunction, combine, get_function, membership

xs = np.linspace(0.0, 50.0, 2001)


def test_builtin_catalogue():
    assert set(BUILTINS) == {"e0", "e1", "e2", "sq_ratio", "sin", "inv1p"}
    assert get_function("sin").id == "sin"


def test_unknown_function_rejected():
    with pytest.raises(InvalidArgument, match="exp"):
        get_function("exp")


@pytest.mark.parametrize("function_id", sorted(BUILTINS))
def test_builtins_scalar_and_vector_eval_agree(function_id):
    f = get_function(function_id)
    vector = np.broadcast_to(np.asarray(f(xs[:5]), dtype=float), (5,))
    scalar = [float(f(float(x))) for x in xs[:5]]
    assert np.allclose(vector, scalar, rtol=1e-14, atol=1e-300)


@pytest.mark.parametrize("function_id", sorted(BUILTINS))
def test_builtins_lie_in_weighted_space(function_id):
    assert membership(get_function(function_id), xs).in_b_x2


@pytest.mark.parametrize("function_id", ["e1", "sq_ratio", "sin", "inv1p"])
def test_lipschitz_constants_hold_on_grid(function_id):
    f = get_function(function_id)
    slopes = np.abs(np.diff(f(xs))) / np.diff(xs)
    assert np.max(slopes) <= f.lipschitz_L * (1 + 1e-12)


def test_tail_ratio():
    assert membership(BUILTINS["e2"], xs).tail_ratio == pytest.approx(2500.0 / 2501.0)
    assert membership(BUILTINS["e0"], xs).tail_ratio == pytest.approx(1.0 / 2501.0)


def test_membership_flags_growth_violation():
    fast = TestFunction("cube", lambda x: np.power(x, 3), 1.0)
    report = membership(fast, xs)
    assert not report.in_b_x2
    assert report.worst_ratio > 40


def test_combine():
    h = combine(2.0, BUILTINS["sin"], 3.0, BUILTINS["e2"])
    assert float(h(1.5)) == pytest.approx(2.0 * math.sin(1.5) + 3.0 * 2.25)
    assert h.growth_M == 5.0
    assert h.lipschitz_L is None
    assert combine(1.0, BUILTINS["e1"], -1.0, BUILTINS["sin"]).lipschitz_L == 2.0
