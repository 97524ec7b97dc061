"""Drift + one-sided-stable subordinators and exact increment sampling.

A subordinator here is parametrized by a drift ``a >= 0`` and a stable part
with scale ``b >= 0`` and index ``gamma in (0, 1]``, giving the Laplace
exponent

    psi(q) = a*q + b*q**gamma.

Increments over an interval of length ``dt`` are sampled exactly (no path
discretization): the stable part of the increment is ``(b*dt)**(1/gamma) * S``
where ``S`` is a normalized positive stable variate with
``E[exp(-q*S)] = exp(-q**gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streams import RngStream

# Indices this close to 1 are numerically indistinguishable from drift:
# the sampling exponent (1-gamma)/gamma underflows.
_GAMMA_DRIFT_GUARD = 1.0 - 1e-6

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class SubordinatorSpec:
    """Strictly increasing subordinator with exponent a*q + b*q**gamma.

    Requires ``a > 0`` or ``b > 0 with gamma < 1`` so that paths are
    strictly increasing.  A stable part with ``gamma`` at (or within 1e-6
    of) 1 is deterministic and is normalized into the drift.
    """

    drift: float = 0.0
    stable_scale: float = 0.0
    stable_index: float = 0.5

    def __post_init__(self):
        a, b, g = float(self.drift), float(self.stable_scale), float(self.stable_index)
        if a < 0 or b < 0:
            raise ValueError("drift and stable_scale must be nonnegative")
        if not (0.0 < g <= 1.0):
            raise ValueError("stable_index must lie in (0, 1]")
        if b > 0 and g >= _GAMMA_DRIFT_GUARD:
            a, b = a + b, 0.0
        if a == 0.0 and b == 0.0:
            raise ValueError("need drift > 0 or a nondegenerate stable part")
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "stable_scale", b)
        object.__setattr__(self, "stable_index", g)

    @property
    def is_pure_drift(self) -> bool:
        return self.stable_scale == 0.0


def laplace_exponent(spec: SubordinatorSpec, q):
    """Evaluate psi(q) = a*q + b*q**gamma for q >= 0 (scalar or array)."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("laplace_exponent requires q >= 0")
    out = spec.drift * q
    if spec.stable_scale > 0:
        out = out + spec.stable_scale * np.power(q, spec.stable_index)
    return out if out.ndim else float(out)


def _stable_from_uniform_exponential(gamma: float, u, e):
    """Kanter's representation of the normalized positive stable law.

    With theta = pi*u,

        A(theta) = [sin(g*th)**g * sin((1-g)*th)**(1-g) / sin(th)]**(1/(1-g))
        S = (A(theta) / e)**((1-g)/g)

    gives E[exp(-q*S)] = exp(-q**gamma).  Evaluated in logs for stability.
    """
    g = gamma
    theta = np.pi * np.maximum(u, _TINY)
    e = np.maximum(e, _TINY)
    log_a = (
        g * np.log(np.sin(g * theta))
        + (1.0 - g) * np.log(np.sin((1.0 - g) * theta))
        - np.log(np.sin(theta))
    ) / (1.0 - g)
    return np.exp(((1.0 - g) / g) * (log_a - np.log(e)))


def sample_positive_stable(gamma: float, rng: RngStream, size: int | None = None):
    """Sample S > 0 with Laplace transform exp(-q**gamma), 0 < gamma < 1.

    Exact one-shot sampler (Kanter / Chambers-Mallows-Stuck); returns a
    scalar when ``size`` is None, else an array of independent draws.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("sample_positive_stable requires gamma in (0, 1)")
    if size is None:
        return float(_stable_from_uniform_exponential(gamma, rng.uniform(), rng.exponential()))
    return _stable_from_uniform_exponential(gamma, rng.uniforms(size), rng.exponentials(size))


def subordinator_increment(spec: SubordinatorSpec, dt: float, rng: RngStream) -> float:
    """Sample the subordinator's increment over an interval of length dt.

    The result has Laplace transform exp(-dt * psi(q)) and is strictly
    positive for dt > 0.  ``dt == 0`` returns 0.0 without consuming any
    random numbers, as does a pure-drift spec.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0.0:
        return 0.0
    out = spec.drift * dt
    if spec.stable_scale > 0.0:
        g = spec.stable_index
        out += (spec.stable_scale * dt) ** (1.0 / g) * sample_positive_stable(g, rng)
    return out


def subordinator_increments(spec: SubordinatorSpec, dts: np.ndarray, rng: RngStream) -> np.ndarray:
    """Vectorized independent increments over intervals of lengths ``dts``."""
    dts = np.asarray(dts, dtype=float)
    if np.any(dts < 0):
        raise ValueError("interval lengths must be nonnegative")
    out = spec.drift * dts
    if spec.stable_scale > 0.0:
        g = spec.stable_index
        s = sample_positive_stable(g, rng, size=dts.size).reshape(dts.shape)
        out = out + np.power(spec.stable_scale * dts, 1.0 / g) * s
        out[dts == 0.0] = 0.0
    return out


def levy_half_cdf(x) -> np.ndarray:
    """CDF of the gamma=1/2 normalized stable law: erfc(1 / (2*sqrt(x)))."""
    from scipy.special import erfc

    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = erfc(0.5 / np.sqrt(x[pos]))
    return out
