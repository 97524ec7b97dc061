"""Continuous-time Markov chain on a star of rays, with analytic oracles.

The state space is a distinguished center ``o`` plus ``n`` finite rays that
communicate only through ``o``.  Trajectories are generated by exact
event-driven (Gillespie) simulation.  Hitting-time Laplace transforms and
means on each ray are computed by dense linear solves, which makes every
excursion-lifetime functional analytically available:

* ``hitting_laplace``: phi_x(q) = E_x[exp(-q tau_o)] per ray state,
* ``mean_hitting``: E_x[tau_o],
* ``class_lifetime_exponent``: the Levy exponent of the cumulative lifetime
  of ray-i excursions per unit local time at o,
* ``lifetime_mean_measure``: its mean m_i.

Local time at ``o`` is normalized to Lebesgue time spent at ``o``, so the
stagnancy rate is 1 and the excursion measure of ray i has total mass
``r_i`` (the entry rate into the ray).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .streams import RngStream


class ModelError(ValueError):
    """Raised for structurally invalid chain models."""


@dataclass(frozen=True)
class RaySpec:
    """One ray: within-ray rates, exit rates to o, entry rates from o.

    ``internal_rates[x, y]`` is the jump rate x -> y between ray states
    (diagonal ignored), ``exit_rates[x]`` the rate x -> o, and
    ``entry_rates[x]`` the rate o -> x.  The entry distribution is
    mu(x) = entry_rates[x] / r with r = sum(entry_rates).
    """

    internal_rates: np.ndarray
    exit_rates: np.ndarray
    entry_rates: np.ndarray

    def __post_init__(self):
        q = np.array(self.internal_rates, dtype=float, copy=True)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ModelError("internal_rates must be a square matrix")
        np.fill_diagonal(q, 0.0)
        ex = np.array(self.exit_rates, dtype=float, copy=True).ravel()
        en = np.array(self.entry_rates, dtype=float, copy=True).ravel()
        k = q.shape[0]
        if ex.shape != (k,) or en.shape != (k,):
            raise ModelError("exit_rates and entry_rates must have one entry per state")
        if np.any(q < 0) or np.any(ex < 0) or np.any(en < 0):
            raise ModelError("rates must be nonnegative")
        if en.sum() <= 0:
            raise ModelError("ray needs a positive total entry rate")
        if ex.sum() <= 0:
            raise ModelError("ray needs at least one state with a positive exit rate")
        for a in (q, ex, en):
            a.setflags(write=False)
        object.__setattr__(self, "internal_rates", q)
        object.__setattr__(self, "exit_rates", ex)
        object.__setattr__(self, "entry_rates", en)
        if not self._o_reachable_everywhere():
            raise ModelError("every ray state must reach o with probability 1")

    def _o_reachable_everywhere(self) -> bool:
        k = self.n_states
        reach = self.exit_rates > 0
        for _ in range(k):
            grown = reach | ((self.internal_rates > 0) @ reach)
            if np.array_equal(grown, reach):
                break
            reach = grown
        return bool(reach.all())

    @property
    def n_states(self) -> int:
        return self.exit_rates.shape[0]

    @property
    def r(self) -> float:
        """Total entry rate from o into this ray."""
        return float(self.entry_rates.sum())

    @property
    def mu(self) -> np.ndarray:
        """Entrance distribution over ray states."""
        return self.entry_rates / self.r

    @property
    def total_rates(self) -> np.ndarray:
        """Total outflow rate q(x) per ray state."""
        return self.internal_rates.sum(axis=1) + self.exit_rates


@dataclass
class StarChainModel:
    """Star of rays glued at o.  State 0 encodes o; ray i state k encodes
    the global index offset_i + k."""

    rays: tuple[RaySpec, ...]

    def __post_init__(self):
        self.rays = tuple(self.rays)
        if not self.rays:
            raise ModelError("model needs at least one ray")
        self._compile()

    def _compile(self):
        offsets = [1]
        for ray in self.rays[:-1]:
            offsets.append(offsets[-1] + ray.n_states)
        self._offsets = offsets
        n_global = offsets[-1] + self.rays[-1].n_states
        cls = np.zeros(n_global, dtype=np.int64)
        rate = np.zeros(n_global, dtype=float)
        # per-state transition tables: parallel lists (cumulative prob, target)
        cum_list: list[list[float]] = [[]]
        tgt_list: list[list[int]] = [[]]
        for i, ray in enumerate(self.rays, start=1):
            off = offsets[i - 1]
            qx = ray.total_rates
            for k in range(ray.n_states):
                g = off + k
                cls[g] = i
                rate[g] = qx[k]
                cums, tgts, acc = [], [], 0.0
                if ray.exit_rates[k] > 0:
                    acc += ray.exit_rates[k] / qx[k]
                    cums.append(acc)
                    tgts.append(0)
                for m in range(ray.n_states):
                    w = ray.internal_rates[k, m]
                    if w > 0:
                        acc += w / qx[k]
                        cums.append(acc)
                        tgts.append(off + m)
                cums[-1] = 1.0
                cum_list.append(cums)
                tgt_list.append(tgts)
        # entry table from o over all rays
        q_o = sum(ray.r for ray in self.rays)
        cums, tgts, acc = [], [], 0.0
        for i, ray in enumerate(self.rays, start=1):
            off = offsets[i - 1]
            for k in range(ray.n_states):
                if ray.entry_rates[k] > 0:
                    acc += ray.entry_rates[k] / q_o
                    cums.append(acc)
                    tgts.append(off + k)
        cums[-1] = 1.0
        cum_list[0] = cums
        tgt_list[0] = tgts
        self._class_of = cls
        self._rate_of = rate
        self._cum = cum_list
        self._tgt = tgt_list
        self._q_o = q_o

    @property
    def n_rays(self) -> int:
        return len(self.rays)

    @property
    def q_o(self) -> float:
        """Total exit rate from o (= sum of ray entry rates)."""
        return self._q_o

    @property
    def class_of_state(self) -> np.ndarray:
        """Map global state index -> ray id (0 for o)."""
        return self._class_of

    def ray_offset(self, i: int) -> int:
        return self._offsets[i - 1]

    def _pick(self, from_state: int, u: float) -> int:
        cums = self._cum[from_state]
        tgts = self._tgt[from_state]
        for j in range(len(cums)):
            if u <= cums[j]:
                return tgts[j]
        return tgts[-1]


@dataclass
class Path:
    """Trajectory as (state, sojourn) entries, starting at o.

    Sojourns are strictly positive except that a truncating stop may end
    the path mid-sojourn (the recorded duration is the truncated one).
    ``final_complete`` says whether a path ending away from o ends exactly
    at the completing return to o (true for the n_excursions stop) or was
    cut mid-excursion (horizon stop).
    """

    states: np.ndarray
    durations: np.ndarray
    final_complete: bool = True

    @property
    def duration(self) -> float:
        return float(self.durations.sum())


def simulate_path(
    model: StarChainModel,
    rng: RngStream,
    *,
    n_excursions: int | None = None,
    horizon: float | None = None,
    local_time: float | None = None,
) -> Path:
    """Exact-in-law trajectory from o under one stop rule.

    ``n_excursions``: stop at the return to o that completes that many
    excursions (the path then ends with the excursion's last sojourn).
    ``horizon``: stop at that total path duration, truncating the final
    sojourn; an unfinished excursion is later dropped by the ledger.
    ``local_time``: stop when the accumulated time at o reaches that
    value, truncating the final holding (the path ends at o).
    """
    chosen = [x is not None for x in (n_excursions, horizon, local_time)]
    if sum(chosen) != 1:
        raise ValueError("exactly one of n_excursions, horizon, local_time must be given")
    if n_excursions is not None and n_excursions <= 0:
        raise ValueError("n_excursions must be positive")
    if horizon is not None and horizon <= 0:
        raise ValueError("horizon must be positive")
    if local_time is not None and local_time <= 0:
        raise ValueError("local_time must be positive")

    q_o = model._q_o
    rate_of = model._rate_of
    states: list[int] = []
    durs: list[float] = []
    done = 0
    elapsed = 0.0
    at_o_total = 0.0
    final_complete = True
    while True:
        h = rng.exponential() / q_o
        if local_time is not None and at_o_total + h >= local_time:
            states.append(0)
            durs.append(local_time - at_o_total)
            break
        if horizon is not None and elapsed + h >= horizon:
            states.append(0)
            durs.append(horizon - elapsed)
            break
        states.append(0)
        durs.append(h)
        at_o_total += h
        elapsed += h
        g = model._pick(0, rng.uniform())
        truncated = False
        while g != 0:
            d = rng.exponential() / rate_of[g]
            if horizon is not None and elapsed + d >= horizon:
                states.append(g)
                durs.append(horizon - elapsed)
                truncated = True
                break
            states.append(g)
            durs.append(d)
            elapsed += d
            g = model._pick(g, rng.uniform())
        if truncated:
            final_complete = False
            break
        done += 1
        if n_excursions is not None and done >= n_excursions:
            break
    return Path(np.array(states, dtype=np.int64), np.array(durs, dtype=float), final_complete)


def _hitting_system(ray: RaySpec, q: float) -> np.ndarray:
    m = np.diag(q + ray.total_rates) - ray.internal_rates
    return m


def hitting_laplace(ray: RaySpec, q: float) -> np.ndarray:
    """phi(x) = E_x[exp(-q tau_o)] for every ray state x.

    Solves (q + q(x)) phi(x) = sum_y q(x, y) phi(y) + q(x, o).  At q = 0
    recurrence gives phi = 1.
    """
    if q < 0:
        raise ValueError("hitting_laplace requires q >= 0")
    try:
        phi = np.linalg.solve(_hitting_system(ray, q), ray.exit_rates)
    except np.linalg.LinAlgError as err:
        raise ModelError("singular hitting system; ray is not o-recurrent") from err
    if not np.all(np.isfinite(phi)):
        raise ModelError("non-finite hitting transform; ray is not o-recurrent")
    return phi


def mean_hitting(ray: RaySpec) -> np.ndarray:
    """E_x[tau_o] per ray state, from q(x) h(x) = 1 + sum_y q(x, y) h(y)."""
    try:
        h = np.linalg.solve(_hitting_system(ray, 0.0), np.ones(ray.n_states))
    except np.linalg.LinAlgError as err:
        raise ModelError("singular mean-hitting system; ray is not o-recurrent") from err
    if not np.all(np.isfinite(h)) or np.any(h <= 0):
        raise ModelError("mean hitting times must be positive and finite")
    return h


def class_lifetime_exponent(model: StarChainModel, i: int, q):
    """Levy exponent of the class-i cumulative excursion lifetime.

    Returns r_i * sum_x mu_i(x) (1 - phi_x(q)); concave, nondecreasing,
    and 0 at q = 0.  Accepts scalar or array q.
    """
    ray = model.rays[i - 1]
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    out = np.empty_like(qs)
    for j, qj in enumerate(qs):
        phi = hitting_laplace(ray, qj)
        out[j] = ray.r * float(ray.mu @ (1.0 - phi))
    return out if np.ndim(q) else float(out[0])


def lifetime_mean_measure(model: StarChainModel, i: int) -> float:
    """m_i = r_i * E_{mu_i}[tau_o], the mean lifetime mass of class i."""
    ray = model.rays[i - 1]
    return ray.r * float(ray.mu @ mean_hitting(ray))


def sample_hitting_times(model: StarChainModel, i: int, n: int, rng: RngStream) -> np.ndarray:
    """n independent draws of tau_o started from the entrance law mu_i."""
    ray = model.rays[i - 1]
    off = model.ray_offset(i)
    mu_cum = np.cumsum(ray.mu)
    mu_cum[-1] = 1.0
    rate_of = model._rate_of
    out = np.empty(n)
    for m in range(n):
        u = rng.uniform()
        k = int(np.searchsorted(mu_cum, u))
        g = off + k
        t = 0.0
        while g != 0:
            t += rng.exponential() / rate_of[g]
            g = model._pick(g, rng.uniform())
        out[m] = t
    return out


def single_state_ray(entry_rate: float, exit_rate: float) -> RaySpec:
    """Convenience: a ray with one transient state (entry r, exit mu)."""
    return RaySpec(
        internal_rates=np.zeros((1, 1)),
        exit_rates=np.array([exit_rate]),
        entry_rates=np.array([entry_rate]),
    )
