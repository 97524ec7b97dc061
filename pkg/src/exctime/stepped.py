"""Nondecreasing cadlag functions as sorted breakpoints with segments.

A :class:`SteppedProcess` stores knots ``t[0] = 0 < t[1] < ...`` with the
(post-jump) value at each knot and a per-segment slope in {0, 1}.  The value
on ``[t[k], t[k+1])`` is ``v[k] + slope[k] * (x - t[k])``; jumps happen at
knots.  This one representation covers cumulative-lifetime processes (pure
jump), occupation curves (alternating slopes), and the slope-one-with-jumps
functions inverted by Williams' formula.  The right-continuous inverse is
computed exactly: binary search on knots plus an affine solve, with no
root-finding tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SteppedProcess:
    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    t_max: float

    def __post_init__(self):
        t = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        sl = np.asarray(self.slopes, dtype=float)
        if t.size == 0 or t[0] != 0.0:
            raise ValueError("knots must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knots must be strictly increasing")
        if sl.shape != t.shape or v.shape != t.shape:
            raise ValueError("values and slopes must match knots")
        if np.any((sl != 0.0) & (sl != 1.0)):
            raise ValueError("slopes must be 0 or 1")
        if self.t_max < t[-1]:
            raise ValueError("t_max must cover the last knot")
        seg_end = v[:-1] + sl[:-1] * np.diff(t)
        if np.any(seg_end > v[1:] + 1e-12 * np.maximum(1.0, np.abs(v[1:]))):
            raise ValueError("process must be nondecreasing")
        object.__setattr__(self, "knots", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slopes", sl)

    @classmethod
    def pure_jump(cls, times, sizes, t_max: float) -> "SteppedProcess":
        """Right-continuous step function jumping by ``sizes`` at ``times``."""
        t, v = _merged_cumulative(times, sizes)
        return cls(t, v, np.zeros_like(t), max(t_max, float(t[-1])))

    @classmethod
    def slope_one_with_jumps(cls, times, sizes, t_max: float) -> "SteppedProcess":
        """W(x) = x + sum of jump sizes at jump times <= x."""
        t, cum = _merged_cumulative(times, sizes)
        return cls(t, t + cum, np.ones_like(t), max(t_max, float(t[-1])))

    @property
    def final_value(self) -> float:
        return float(self.values[-1] + self.slopes[-1] * (self.t_max - self.knots[-1]))

    def __call__(self, x):
        """Right-continuous evaluation at x (scalar or array), 0 <= x <= t_max."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > self.t_max):
            raise ValueError("argument outside [0, t_max]")
        k = np.searchsorted(self.knots, x, side="right") - 1
        out = self.values[k] + self.slopes[k] * (x - self.knots[k])
        return out if out.ndim else float(out)

    def left_limit(self, x):
        """Limit from the left at x > 0 (scalar or array)."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0) or np.any(x > self.t_max):
            raise ValueError("argument outside (0, t_max]")
        k = np.searchsorted(self.knots, x, side="left") - 1
        out = self.values[k] + self.slopes[k] * (x - self.knots[k])
        return out if out.ndim else float(out)

    def inverse(self, u):
        """Right-continuous inverse inf{x : f(x) > u} (scalar or array).

        Requires u < final value; raises ValueError beyond the range.
        """
        u = np.asarray(u, dtype=float)
        if np.any(u >= self.final_value):
            raise ValueError("argument at or beyond the final value; inverse undefined")
        k = np.searchsorted(self.values, u, side="right") - 1
        out = np.empty(u.shape if u.ndim else (1,))
        kk = np.atleast_1d(k)
        uu = np.atleast_1d(u)
        below = kk < 0
        out[below] = 0.0
        inside = ~below
        ki = kk[inside]
        seg_t = self.knots[ki]
        seg_v = self.values[ki]
        sl = self.slopes[ki]
        nxt = np.where(ki + 1 < self.knots.size, self.knots[np.minimum(ki + 1, self.knots.size - 1)], self.t_max)
        cand = np.where(sl > 0, seg_t + (uu[inside] - seg_v), nxt)
        out[inside] = np.minimum(cand, nxt)
        return out.reshape(u.shape) if u.ndim else float(out[0])


def _merged_cumulative(times, sizes) -> tuple[np.ndarray, np.ndarray]:
    """Sort jumps, merge float-identical times (summing sizes, stable in
    the original order), prepend the zero knot, and return cumulative
    values at the knots."""
    times = np.asarray(times, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    order = np.argsort(times, kind="stable")
    times, sizes = times[order], sizes[order]
    if times.size > 1 and np.any(np.diff(times) == 0.0):
        uniq, inv = np.unique(times, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, sizes)
        times, sizes = uniq, merged
    if times.size and times[0] == 0.0:
        return times, np.cumsum(sizes)
    return (
        np.concatenate(([0.0], times)),
        np.concatenate(([0.0], np.cumsum(sizes))),
    )
