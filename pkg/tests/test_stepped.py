import numpy as np
import pytest

from exctime import SteppedProcess


def test_pure_jump_eval_and_inverse():
    f = SteppedProcess.pure_jump([1.0, 2.5], [2.0, 3.0], t_max=4.0)
    assert f(0.0) == 0.0
    assert f(0.99) == 0.0
    assert f(1.0) == 2.0  # right-continuous
    assert f.left_limit(1.0) == 0.0
    assert f(2.5) == 5.0
    assert f.final_value == 5.0
    assert f.inverse(0.5) == 1.0
    assert f.inverse(2.0) == 2.5  # at the plateau value, jumps to next knot
    assert f.inverse(4.9) == 2.5
    with pytest.raises(ValueError):
        f.inverse(5.0)
    with pytest.raises(ValueError):
        f(4.1)


def test_slope_one_with_jumps():
    w = SteppedProcess.slope_one_with_jumps([2.0], [10.0], t_max=5.0)
    assert w(1.0) == 1.0
    assert w(2.0) == 12.0
    assert w.left_limit(2.0) == 2.0
    assert w(5.0) == 15.0
    # inverse: identity below the jump, flat across it, shifted after
    assert w.inverse(1.5) == 1.5
    assert w.inverse(7.0) == 2.0
    assert w.inverse(13.0) == 3.0


def test_jump_at_zero():
    w = SteppedProcess.slope_one_with_jumps([0.0, 1.0], [3.0, 2.0], t_max=2.0)
    assert w(0.0) == 3.0
    assert w.inverse(1.0) == 0.0
    assert w.inverse(3.5) == 0.5


def test_duplicate_jump_times_merge():
    f = SteppedProcess.pure_jump([1.0, 1.0, 2.0], [1.0, 2.0, 4.0], t_max=3.0)
    assert f(1.0) == 3.0
    assert f(2.0) == 7.0


def test_monotonicity_validation():
    with pytest.raises(ValueError):
        SteppedProcess(np.array([0.0, 1.0]), np.array([1.0, 0.5]), np.zeros(2), 2.0)
    with pytest.raises(ValueError):
        SteppedProcess(np.array([0.5, 1.0]), np.array([0.0, 1.0]), np.zeros(2), 2.0)


def test_vectorized_matches_scalar():
    f = SteppedProcess.pure_jump([0.5, 1.5, 3.0], [1.0, 0.5, 2.0], t_max=4.0)
    xs = np.linspace(0.0, 4.0, 23)
    vals = f(xs)
    assert vals.shape == xs.shape
    assert all(vals[i] == f(float(x)) for i, x in enumerate(xs))
    us = np.linspace(0.0, f.final_value - 1e-9, 17)
    invs = f.inverse(us)
    assert all(invs[i] == f.inverse(float(u)) for i, u in enumerate(us))


def test_inverse_is_right_continuous_inverse():
    rng = np.random.default_rng(3)
    times = np.sort(rng.uniform(0.1, 9.9, size=40))
    sizes = rng.exponential(size=40)
    f = SteppedProcess.pure_jump(times, sizes, t_max=10.0)
    for u in rng.uniform(0.0, f.final_value * 0.999, size=200):
        x = f.inverse(float(u))
        assert f(x) > u - 1e-12
        if x > 0:
            assert f.left_limit(x) <= u + 1e-12
