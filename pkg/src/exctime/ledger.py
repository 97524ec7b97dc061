"""Excursion decomposition of star-chain paths.

A path alternating between o and ray states decomposes into atoms
(s, class, lifetime) where s is the local time (cumulative time at o) at
which the excursion starts.  With the stagnancy normalization c = 1, the
atoms of a path form the empirical excursion point process: counts in
disjoint local-time windows are Poisson with intensity ds x n.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .star_chain import ModelError, Path, StarChainModel


@dataclass
class ExcursionLedger:
    """Ordered excursion atoms plus the marks added by the time change.

    ``s[k]`` is the local time at which atom k starts and equals the sum
    of ``holding_before[: k + 1]``.  ``zeta_star`` and ``holding_mark``
    are NaN until :func:`exctime.time_change.mark_lifetimes` fills them.
    ``sojourns`` (optional) keeps each atom's within-excursion sojourn
    durations for exact route coupling.
    """

    s: np.ndarray
    class_id: np.ndarray
    zeta: np.ndarray
    holding_before: np.ndarray
    n_classes: int
    trailing_holding: float = 0.0
    dropped_incomplete: int = 0
    c: float = 1.0
    zeta_star: np.ndarray = field(default=None)
    holding_mark: np.ndarray = field(default=None)
    trailing_mark: float = float("nan")
    sojourns: list[np.ndarray] | None = None

    def __post_init__(self):
        if self.zeta_star is None:
            self.zeta_star = np.full(self.s.shape, np.nan)
        if self.holding_mark is None:
            self.holding_mark = np.full(self.s.shape, np.nan)

    def __len__(self) -> int:
        return self.s.size

    @property
    def marked(self) -> bool:
        return self.s.size > 0 and not np.any(np.isnan(self.zeta_star))

    @property
    def total_local_time(self) -> float:
        """Local time spanned by the ledger (holdings plus trailing)."""
        return float(self.holding_before.sum() + self.trailing_holding)

    def reconstruct_duration(self) -> float:
        """Total path duration implied by the atoms: sum of holdings,
        lifetimes, and the trailing holding."""
        return float(self.holding_before.sum() + self.zeta.sum() + self.trailing_holding)

    def to_csv(self, fileobj: io.TextIOBase | None = None) -> str:
        """Write atoms as CSV (index, s, class, zeta, zeta_star,
        holding_before) with %.17g floats, ordered by s."""
        buf = fileobj if fileobj is not None else io.StringIO()
        buf.write("index,s,class,zeta,zeta_star,holding_before\n")
        for k in range(len(self)):
            buf.write(
                "%d,%.17g,%d,%.17g,%.17g,%.17g\n"
                % (k, self.s[k], self.class_id[k], self.zeta[k], self.zeta_star[k], self.holding_before[k])
            )
        return buf.getvalue() if fileobj is None else ""


def extract_excursions(
    path: Path, model: StarChainModel, retain_subpaths: bool = False
) -> ExcursionLedger:
    """Split a path into its excursion atoms.

    Every maximal run away from o becomes one atom with class equal to
    the ray visited.  A final unfinished excursion (horizon truncation)
    is dropped from the atoms but counted in ``dropped_incomplete`` so
    totals remain auditable.
    """
    states = path.states
    if states.size == 0 or states[0] != 0:
        raise ValueError("path must start at o")
    cls = model.class_of_state[states]
    durs = path.durations

    # o entries are singletons (no o -> o transition), so each o position
    # is one holding; excursions live strictly between consecutive o's.
    o_pos = np.flatnonzero(cls == 0)
    s_list, class_list, zeta_list, hold_list = [], [], [], []
    sub: list[np.ndarray] | None = [] if retain_subpaths else None
    local = 0.0
    trailing = 0.0
    dropped = 0
    for j, p in enumerate(o_pos):
        end = int(o_pos[j + 1]) if j + 1 < o_pos.size else states.size
        if end == p + 1:
            # final entry is a (possibly truncated) holding: trailing o-time
            trailing = float(durs[p])
            break
        if end == states.size and not path.final_complete:
            # unfinished excursion at a horizon cut: drop it, keep the
            # preceding o-time as trailing so local time stays auditable
            trailing = float(durs[p])
            dropped = 1
            break
        seg_cls = cls[p + 1 : end]
        if np.any(seg_cls != seg_cls[0]):
            raise ModelError("excursion visits two rays; invalid star-chain path")
        local += float(durs[p])
        s_list.append(local)
        class_list.append(int(seg_cls[0]))
        zeta_list.append(float(durs[p + 1 : end].sum()))
        hold_list.append(float(durs[p]))
        if sub is not None:
            sub.append(np.array(durs[p + 1 : end]))
    return ExcursionLedger(
        s=np.array(s_list, dtype=float),
        class_id=np.array(class_list, dtype=np.int64),
        zeta=np.array(zeta_list, dtype=float),
        holding_before=np.array(hold_list, dtype=float),
        n_classes=model.n_rays,
        trailing_holding=trailing,
        dropped_incomplete=dropped,
        sojourns=sub,
    )


def window_counts(
    ledger: ExcursionLedger,
    windows: np.ndarray,
    h: float = 0.0,
    use_marked: bool = False,
) -> np.ndarray:
    """Atom counts exceeding lifetime threshold h, per window per class.

    ``windows`` is an (m, 2) array of disjoint local-time intervals
    [a, b).  Returns an (m, n_classes) integer matrix; column i holds
    class i + 1.
    """
    windows = np.asarray(windows, dtype=float)
    if windows.ndim != 2 or windows.shape[1] != 2:
        raise ValueError("windows must be an (m, 2) array")
    if np.any(windows[:, 1] <= windows[:, 0]):
        raise ValueError("windows must have positive length")
    order = np.argsort(windows[:, 0])
    w = windows[order]
    if np.any(w[1:, 0] < w[:-1, 1]):
        raise ValueError("windows must be disjoint")
    if h < 0:
        raise ValueError("threshold h must be nonnegative")
    life = ledger.zeta_star if use_marked else ledger.zeta
    if use_marked and ledger.s.size and np.any(np.isnan(life)):
        raise ValueError("ledger is not marked; run mark_lifetimes first")
    out = np.zeros((windows.shape[0], ledger.n_classes), dtype=np.int64)
    keep = life > h
    s = ledger.s[keep]
    cls = ledger.class_id[keep]
    for row, (a, b) in zip(order, w):
        in_w = (s >= a) & (s < b)
        if np.any(in_w):
            out[row] = np.bincount(cls[in_w], minlength=ledger.n_classes + 1)[1:]
    return out
