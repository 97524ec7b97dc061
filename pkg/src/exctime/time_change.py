"""Excursion-class-dependent inverse-subordinator time change.

Two equivalent routes implement the time change of a star-chain path:

* the direct route (:func:`build_clock_and_transform`) replaces every
  sojourn duration by an independent subordinator increment of the class's
  subordinator, yielding the transformed path and the random clock, and
* the atom route (:func:`mark_lifetimes` + :func:`gamma_family` +
  :func:`occupation_via_williams`) marks each excursion's lifetime with the
  matching increment and reconstructs occupation times through Williams'
  formula: the inverse class-i occupation at t equals t plus the other
  classes' cumulative marked lifetimes at the inverse of class i's.

When both routes consume the same stream (with retained sojourn
breakdowns) they are coupled draw-by-draw, so their occupation curves agree
to float accumulation error; this is the package's central structural test.

Class 0 is the stagnancy at o.  Mapping it to ``None`` erases the time at
o in the transformed process (the zero-stagnancy regime); mapping it to a
subordinator marks each holding with an increment over its duration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ledger import ExcursionLedger
from .star_chain import Path, StarChainModel, class_lifetime_exponent, sample_hitting_times
from .stepped import SteppedProcess
from .streams import RngStream
from .subordinators import (
    SubordinatorSpec,
    laplace_exponent,
    subordinator_increment,
    subordinator_increments,
)


@dataclass(frozen=True)
class ClassMap:
    """Assign a subordinator label to every class 0..n.

    ``assign`` maps class index to a label in ``specs``; class 0 (and only
    class 0) may map to ``None``, meaning the o-stagnancy is erased in the
    transformed process.  Classes sharing a label share one logical
    subordinator; since the marks are increments over disjoint stretches
    of that subordinator's clock, they remain independent across atoms.
    """

    assign: dict[int, str | None]
    specs: dict[str, SubordinatorSpec]

    def __post_init__(self):
        for i, label in self.assign.items():
            if label is None:
                if i != 0:
                    raise ValueError("only class 0 may map to the zero clock")
            elif label not in self.specs:
                raise ValueError(f"class {i} maps to unknown subordinator {label!r}")

    def validate_for(self, n_classes: int):
        missing = [i for i in range(n_classes + 1) if i not in self.assign]
        if missing:
            raise ValueError(f"class map must cover classes 0..{n_classes}; missing {missing}")

    def spec_for(self, i: int) -> SubordinatorSpec | None:
        label = self.assign[i]
        return None if label is None else self.specs[label]

    @property
    def zero_stagnancy(self) -> bool:
        return self.assign.get(0) is None


def mark_lifetimes(ledger: ExcursionLedger, class_map: ClassMap, rng: RngStream) -> ExcursionLedger:
    """Fill zeta_star and the holding marks; returns a new marked ledger.

    Atom k's marked lifetime is the increment of its class's subordinator
    over an interval of length zeta_k, so E[exp(-q zeta*) | zeta] =
    exp(-zeta psi(q)).  When the ledger retains sojourn breakdowns the
    increment is drawn sojourn by sojourn and summed (the same law, and
    the exact draw sequence used by the direct path transform, which is
    what makes the two routes bit-coupled on a shared stream).  Marks are
    independent across atoms because they read disjoint increment
    stretches.  Draw order: per atom, holding mark then lifetime mark(s),
    then the trailing holding mark.
    """
    class_map.validate_for(ledger.n_classes)
    spec0 = class_map.spec_for(0)
    zs = np.empty(len(ledger))
    hm = np.empty(len(ledger))
    for k in range(len(ledger)):
        hm[k] = 0.0 if spec0 is None else subordinator_increment(spec0, ledger.holding_before[k], rng)
        spec = class_map.spec_for(int(ledger.class_id[k]))
        if ledger.sojourns is not None:
            # scalar draws in sojourn order: the exact call sequence the
            # direct path transform makes, so shared streams stay coupled
            zs[k] = sum(subordinator_increment(spec, float(d), rng) for d in ledger.sojourns[k])
        else:
            zs[k] = subordinator_increment(spec, float(ledger.zeta[k]), rng)
    if spec0 is None or ledger.trailing_holding == 0.0:
        trail = 0.0
    else:
        trail = subordinator_increment(spec0, ledger.trailing_holding, rng)
    return replace(ledger, zeta_star=zs, holding_mark=hm, trailing_mark=trail)


def build_clock_and_transform(
    path: Path, model: StarChainModel, class_map: ClassMap, rng: RngStream
) -> tuple[SteppedProcess, Path]:
    """Direct route: random clock T over path time, and the transformed path.

    Every sojourn of duration d in a class-i state is replaced by an
    independent increment of class i's subordinator over d; T records the
    cumulative transformed time at the sojourn boundaries, where it is
    exact (the clock's interior over a sojourn is never needed because the
    path is piecewise constant).  With the zero clock on class 0 the
    transformed path keeps its o entries with duration zero.
    """
    class_map.validate_for(model.n_rays)
    cls = model.class_of_state[path.states]
    marked = np.empty(path.durations.size)
    spec0 = class_map.spec_for(0)
    for j in range(path.durations.size):
        c = int(cls[j])
        if c == 0:
            marked[j] = 0.0 if spec0 is None else subordinator_increment(spec0, float(path.durations[j]), rng)
        else:
            marked[j] = subordinator_increment(class_map.spec_for(c), float(path.durations[j]), rng)
    knots = np.concatenate(([0.0], np.cumsum(path.durations)))
    values = np.concatenate(([0.0], np.cumsum(marked)))
    clock = SteppedProcess(knots, values, np.zeros_like(knots), float(knots[-1]))
    x_star = Path(path.states, marked, path.final_complete)
    return clock, x_star


@dataclass(frozen=True)
class GammaFamily:
    """Cumulative marked lifetimes per class, in local time.

    ``processes[i]`` is a pure-jump step process: class i >= 1 jumps by
    zeta*_k at the atom local times s_k of its class; class 0 jumps by the
    holding marks at every atom's s_k (each holding ends exactly where its
    atom starts, so values at atom local times are exact) plus the
    trailing mark at the ledger's end.  The identity
    sum_i processes[i](s) = T(eta_s) holds at every atom time.
    """

    processes: tuple[SteppedProcess, ...]
    s: np.ndarray
    class_id: np.ndarray
    zeta_star: np.ndarray
    holding_mark: np.ndarray
    trailing_mark: float
    s_end: float
    n_classes: int

    def total_marked(self, s_query) -> np.ndarray:
        """T(eta_s): total transformed time at local time s (atom-exact)."""
        vals = [p(s_query) for p in self.processes]
        return np.sum(vals, axis=0)

    @property
    def total_duration(self) -> float:
        """Transformed time spanned by the whole ledger."""
        return float(self.holding_mark.sum() + self.zeta_star.sum() + self.trailing_mark)


def gamma_family(ledger: ExcursionLedger) -> GammaFamily:
    """Build the per-class cumulative marked lifetime processes."""
    if not ledger.marked and len(ledger) > 0:
        raise ValueError("ledger is not marked; run mark_lifetimes first")
    s_end = ledger.total_local_time
    if len(ledger):
        # guard against accumulation-order float drift past the last atom
        s_end = max(s_end, float(ledger.s[-1]))
    procs = []
    jump_times = list(ledger.s) + ([s_end] if ledger.trailing_mark > 0 else [])
    jump_sizes = list(ledger.holding_mark) + ([ledger.trailing_mark] if ledger.trailing_mark > 0 else [])
    procs.append(SteppedProcess.pure_jump(jump_times, jump_sizes, s_end))
    for i in range(1, ledger.n_classes + 1):
        mask = ledger.class_id == i
        procs.append(SteppedProcess.pure_jump(ledger.s[mask], ledger.zeta_star[mask], s_end))
    return GammaFamily(
        processes=tuple(procs),
        s=ledger.s.copy(),
        class_id=ledger.class_id.copy(),
        zeta_star=ledger.zeta_star.copy(),
        holding_mark=ledger.holding_mark.copy(),
        trailing_mark=float(ledger.trailing_mark) if np.isfinite(ledger.trailing_mark) else 0.0,
        s_end=s_end,
        n_classes=ledger.n_classes,
    )


def occupation_from_path(x_star: Path, model: StarChainModel, t_grid) -> np.ndarray:
    """Per-class occupation of the transformed path on a time grid.

    Returns an array of shape (len(t_grid), n_classes + 1); column i is
    the Lebesgue time spent in class i (0 = at o) up to t.  Rows sum to t
    exactly up to float accumulation.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    cum = np.concatenate(([0.0], np.cumsum(x_star.durations)))
    # pairwise vs sequential summation of the durations may differ in the
    # last ulp; tolerate queries at the nominal endpoint
    if np.any(t_grid < 0) or np.any(t_grid > cum[-1] * (1.0 + 1e-12)):
        raise ValueError("t_grid must lie within [0, duration]")
    t_grid = np.minimum(t_grid, cum[-1])
    cls = model.class_of_state[x_star.states]
    j = np.clip(np.searchsorted(cum, t_grid, side="right") - 1, 0, x_star.states.size - 1)
    partial = t_grid - cum[j]
    out = np.empty((t_grid.size, model.n_rays + 1))
    for c in range(model.n_rays + 1):
        ccum = np.concatenate(([0.0], np.cumsum(np.where(cls == c, x_star.durations, 0.0))))
        out[:, c] = ccum[j] + np.where(cls[j] == c, partial, 0.0)
    return out


def williams_inverse_occupation(gamma: GammaFamily, i: int) -> SteppedProcess:
    """The slope-one-with-jumps process W whose inverse is O*(i).

    For a ray class, W(u) = u + (other classes' cumulative marked time up
    to the (j+1)-th class-i atom) for u between the j-th and (j+1)-th
    cumulative class-i lifetimes.  For class 0, W jumps by each atom's
    zeta* at the cumulative holding marks.  Defined on [0, total class-i
    marked time of the sample].
    """
    if i == 0:
        total_own = float(gamma.holding_mark.sum() + gamma.trailing_mark)
        if total_own == 0.0:
            raise ValueError("class 0 has zero stagnancy; its occupation is identically 0")
        own_cum = np.cumsum(gamma.holding_mark)
        return SteppedProcess.slope_one_with_jumps(own_cum, gamma.zeta_star, total_own)
    mask = gamma.class_id == i
    own = gamma.zeta_star[mask]
    if own.size == 0:
        raise ValueError(f"no class-{i} atoms in the sample")
    own_cum = np.cumsum(own)
    other = gamma.holding_mark + np.where(mask, 0.0, gamma.zeta_star)
    other_cum = np.cumsum(other)
    v = other_cum[np.flatnonzero(mask)]
    times = np.concatenate(([0.0], own_cum[:-1]))
    sizes = np.concatenate(([v[0]], np.diff(v)))
    return SteppedProcess.slope_one_with_jumps(times, sizes, float(own_cum[-1]))


def occupation_via_williams(gamma: GammaFamily, i: int, t) -> np.ndarray:
    """O*(i)(t) reconstructed from the marked atoms via Williams' formula.

    ``t`` is transformed time (scalar or array) and must not exceed the
    sample's total transformed duration.  Beyond the end of the last
    class-i excursion the curve sits at the class's total marked time.
    """
    t = np.asarray(t, dtype=float)
    total = gamma.total_duration
    if np.any(t < 0) or np.any(t > total * (1 + 1e-12)):
        raise ValueError("t beyond the sample's transformed duration")
    if i == 0 and float(gamma.holding_mark.sum() + gamma.trailing_mark) == 0.0:
        out = np.zeros_like(t)
        return out if out.ndim else float(out)
    w = williams_inverse_occupation(gamma, i)
    saturation = w.t_max
    end_of_last = w.final_value
    tt = np.atleast_1d(t)
    out = np.empty_like(tt)
    inside = tt < end_of_last
    if np.any(inside):
        out[inside] = w.inverse(tt[inside])
    out[~inside] = saturation
    return out.reshape(t.shape) if t.ndim else float(out[0])


def composed_exponent_oracle(model: StarChainModel, class_map: ClassMap, i: int, q):
    """Exact Levy exponent of the marked class-i cumulative lifetime:
    the class exponent composed with the subordinator's exponent."""
    spec = class_map.spec_for(i)
    if spec is None:
        raise ValueError("class 0 with the zero clock has no exponent")
    return class_lifetime_exponent(model, i, laplace_exponent(spec, q))


def full_clock_exponent_oracle(model: StarChainModel, class_map: ClassMap, q):
    """Exact Levy exponent of the transformed inverse local time T(eta).

    Equals c * psi_0(q) + sum_i Psi_i(psi_{f(i)}(q)) with c = 1 (or 0 for
    the zero clock on class 0).
    """
    class_map.validate_for(model.n_rays)
    spec0 = class_map.spec_for(0)
    out = 0.0 if spec0 is None else laplace_exponent(spec0, q)
    for i in range(1, model.n_rays + 1):
        out = out + composed_exponent_oracle(model, class_map, i, q)
    return out


def transformed_tail_oracle(
    model: StarChainModel,
    class_map: ClassMap,
    i: int,
    h: float,
    n_samples: int,
    rng: RngStream,
) -> tuple[float, float]:
    """Monte Carlo estimate (with s.e.) of the marked tail mass
    n*(i)(zeta > h) = r_i P(Z(zeta) > h), zeta the mu_i-started hitting time."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    spec = class_map.spec_for(i)
    r_i = model.rays[i - 1].r
    taus = sample_hitting_times(model, i, n_samples, rng)
    marks = subordinator_increments(spec, taus, rng)
    p = float(np.mean(marks > h))
    se = r_i * np.sqrt(p * (1.0 - p) / n_samples)
    return r_i * p, se
