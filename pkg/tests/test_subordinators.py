import math

import numpy as np
import pytest
from scipy.special import erfc

from exctime import (
    SubordinatorSpec,
    derive_stream,
    laplace_exponent,
    sample_positive_stable,
    subordinator_increment,
    subordinator_increments,
)
from exctime.subordinators import _stable_from_uniform_exponential

# hand evaluations of the one-shot formula at fixed (U, E), frozen from an
# arbitrary-precision run
CMS_HAND = [
    (0.5, 0.3, 1.2, 0.26242003826718744),
    (0.7, 0.6, 0.8, 0.87633712344514573),
]


def test_laplace_exponent_values():
    assert laplace_exponent(SubordinatorSpec(0.0, 1.0, 0.5), 4.0) == pytest.approx(2.0)
    assert laplace_exponent(SubordinatorSpec(2.0, 0.0, 0.5), 3.0) == pytest.approx(6.0)
    assert laplace_exponent(SubordinatorSpec(1.0, 1.0, 0.5), 1.0) == pytest.approx(2.0)
    assert laplace_exponent(SubordinatorSpec(1.0, 1.0, 0.5), 0.0) == 0.0


def test_laplace_exponent_monotone_concave():
    spec = SubordinatorSpec(0.5, 2.0, 0.7)
    q = np.linspace(0.0, 10.0, 200)
    psi = laplace_exponent(spec, q)
    assert np.all(np.diff(psi) > 0)
    assert np.all(np.diff(psi, 2) <= 1e-12)


def test_laplace_exponent_domain():
    with pytest.raises(ValueError):
        laplace_exponent(SubordinatorSpec(1.0, 0.0, 0.5), -0.1)


def test_spec_validation_and_normalization():
    with pytest.raises(ValueError):
        SubordinatorSpec(0.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        SubordinatorSpec(-1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        SubordinatorSpec(0.0, 1.0, 1.5)
    # stable index at (or numerically at) 1 collapses into drift
    spec = SubordinatorSpec(0.5, 2.0, 1.0)
    assert spec.drift == 2.5 and spec.stable_scale == 0.0
    spec = SubordinatorSpec(0.0, 1.0, 1.0 - 1e-9)
    assert spec.is_pure_drift and spec.drift == 1.0


def test_cms_hand_values():
    for gamma, u, e, expected in CMS_HAND:
        got = float(_stable_from_uniform_exponential(gamma, u, e))
        assert got == pytest.approx(expected, rel=1e-13)


def test_stable_domain():
    rng = derive_stream(0, 0)
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValueError):
            sample_positive_stable(bad, rng)


def test_stable_half_cdf_against_erfc_oracle():
    # closed-form CDF of the gamma = 1/2 law: P(S <= x) = erfc(1/(2 sqrt(x)))
    rng = derive_stream(101, 0)
    s = sample_positive_stable(0.5, rng, size=1_000_000)
    for x in (0.25, 1.0, 4.0):
        p_hat = float(np.mean(s <= x))
        p = float(erfc(0.5 / math.sqrt(x)))
        se = math.sqrt(p * (1 - p) / s.size)
        assert abs(p_hat - p) <= 4 * se
    assert abs(float(np.mean(s <= 1.0)) - 0.4795) < 0.002


def test_stable_transform_at_q1_all_indices():
    rng = derive_stream(102, 0)
    target = math.exp(-1.0)
    for gamma in (0.3, 0.5, 0.7, 0.9):
        s = sample_positive_stable(gamma, rng, size=1_000_000)
        v = np.exp(-s)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(v.mean() - target) <= 3 * se


def test_increment_trivials():
    rng = derive_stream(103, 0)
    spec = SubordinatorSpec(2.0, 0.0, 0.5)
    assert subordinator_increment(spec, 0.0, rng) == 0.0
    assert subordinator_increment(spec, 3.0, rng) == 6.0
    # pure drift consumes no randomness
    u0 = derive_stream(103, 1).uniform()
    r2 = derive_stream(103, 1)
    subordinator_increment(spec, 5.0, r2)
    assert r2.uniform() == u0


def test_increment_transform_grid():
    # |emp E exp(-qX) - exp(-dt psi(q))| <= 4 se over the full spec grid
    n = 1_000_000
    dt = 0.7
    rng = derive_stream(104, 0)
    for gamma in (0.3, 0.5, 0.7, 0.9):
        for b in (0.5, 1.0, 2.0):
            for a in (0.0, 1.0):
                spec = SubordinatorSpec(a, b, gamma)
                x = subordinator_increments(spec, np.full(n, dt), rng)
                for q in (0.25, 0.5, 1.0, 2.0, 4.0):
                    v = np.exp(-q * x)
                    se = v.std(ddof=1) / math.sqrt(n)
                    target = math.exp(-dt * float(laplace_exponent(spec, q)))
                    assert abs(v.mean() - target) <= 4 * se, (gamma, b, a, q)


def test_increment_scaling_example():
    # (a=0, b=1, gamma=0.5), dt=4: transform exp(-4 sqrt(q))
    rng = derive_stream(105, 0)
    spec = SubordinatorSpec(0.0, 1.0, 0.5)
    x = subordinator_increments(spec, np.full(400_000, 4.0), rng)
    for q in (0.5, 1.0, 2.0):
        v = np.exp(-q * x)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(v.mean() - math.exp(-4.0 * math.sqrt(q))) <= 4 * se


def test_drift_part_monotone_in_dt():
    # fixed draws: the drift component never decreases with dt
    spec = SubordinatorSpec(1.5, 1.0, 0.5)
    for dt1, dt2 in ((0.1, 0.2), (1.0, 3.0)):
        x1 = subordinator_increment(spec, dt1, derive_stream(106, 0))
        x2 = subordinator_increment(spec, dt2, derive_stream(106, 0))
        assert x2 - x1 >= spec.drift * (dt2 - dt1) - 1e-12


def test_determinism():
    spec = SubordinatorSpec(0.3, 1.2, 0.6)
    a = subordinator_increment(spec, 2.0, derive_stream(107, 5))
    b = subordinator_increment(spec, 2.0, derive_stream(107, 5))
    assert a == b
