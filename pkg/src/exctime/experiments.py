"""Replication-level experiment drivers behind the CLI and the
acceptance suite.

Each experiment maps replication index r to streams derived purely from
(master_seed, purpose, r), runs workers in replication order (serially or
in a process pool), and reduces results in index order, so outputs are
byte-identical for any worker count.

The limits experiments require the o-clock to be exactly readable at atom
granularity, which holds for the zero clock (no time at o in the
transformed process) and for a pure-drift class-0 subordinator; a stable
class-0 clock is fully supported by the structure experiments but
rejected here, since local time inside a holding would need the
subordinator's interior path.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ledger import extract_excursions, window_counts
from .limit_laws import (
    ScalingSpec,
    derive_scaling,
    dynkin_lamperti_cdf,
    inverse_stable_moment,
    mittag_leffler,
    sample_last_next_zero,
    sample_occupation_fractions,
)
from .star_chain import RaySpec, StarChainModel, simulate_path, single_state_ray
from .stat_tests import TestReport, band_report, dispersion_independence, empirical_laplace, ks_test
from .streams import RngStream, derive_stream
from .subordinators import SubordinatorSpec, laplace_exponent
from .time_change import (
    ClassMap,
    build_clock_and_transform,
    composed_exponent_oracle,
    full_clock_exponent_oracle,
    gamma_family,
    mark_lifetimes,
    occupation_from_path,
    occupation_via_williams,
)

_STREAM_ROUTE = 0
_STREAM_GAMMA = 1
_STREAM_WINDOWS = 2
_STREAM_LIMITS = 3
_STREAM_ORACLE = 4


# ---------------------------------------------------------------------------
# canonical setups (also shipped as JSON examples in docs/)
# ---------------------------------------------------------------------------


def two_ray_structure_setup() -> tuple[StarChainModel, ClassMap]:
    """Two rays (single-state and two-state birth-death), stable clocks on
    all classes including the stagnancy at o."""
    model = StarChainModel(
        (
            single_state_ray(1.0, 1.0),
            RaySpec(internal_rates=[[0.0, 1.0], [1.0, 0.0]], exit_rates=[1.0, 0.0], entry_rates=[1.0, 0.0]),
        )
    )
    cmap = ClassMap(
        assign={0: "hold", 1: "ray1", 2: "ray2"},
        specs={
            "hold": SubordinatorSpec(0.0, 1.0, 0.6),
            "ray1": SubordinatorSpec(0.0, 1.0, 0.5),
            "ray2": SubordinatorSpec(0.0, 1.0, 0.7),
        },
    )
    return model, cmap


def symmetric_arcsine_setup() -> tuple[StarChainModel, ClassMap]:
    """Two identical single-state rays, index-1/2 clocks, zero o-clock:
    the occupation fraction limit is the classical arcsine law."""
    model = StarChainModel((single_state_ray(1.0, 1.0), single_state_ray(1.0, 1.0)))
    cmap = ClassMap(
        assign={0: None, 1: "a", 2: "b"},
        specs={"a": SubordinatorSpec(0.0, 1.0, 0.5), "b": SubordinatorSpec(0.0, 1.0, 0.5)},
    )
    return model, cmap


def mixed_index_setup() -> tuple[StarChainModel, ClassMap]:
    """Two single-state rays with indices (1/2, 7/10) and zero o-clock:
    ray 1 dominant, ray 2 subdominant with a Mittag-Leffler limit.

    Ray 2 exits at rate 5, keeping the subdominant time share at the
    default scale inside its asymptotic regime (the share decays like
    lambda**(-2/7), so a unit-mass subdominant ray is still ~10% of the
    total at lambda = 1e4, visibly biasing transform comparisons).
    """
    model = StarChainModel((single_state_ray(1.0, 1.0), single_state_ray(1.0, 5.0)))
    cmap = ClassMap(
        assign={0: None, 1: "a", 2: "b"},
        specs={"a": SubordinatorSpec(0.0, 1.0, 0.5), "b": SubordinatorSpec(0.0, 1.0, 0.7)},
    )
    return model, cmap


# ---------------------------------------------------------------------------
# parallel map
# ---------------------------------------------------------------------------


def _chunks(n: int, pieces: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(n / pieces))
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def _run_chunked(worker, common, n_reps: int, threads: int):
    tasks = [(common, lo, hi) for lo, hi in _chunks(n_reps, max(4 * threads, 1))]
    if threads <= 1:
        parts = [worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(worker, tasks))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# cumulative lifetimes at a fixed local time
# ---------------------------------------------------------------------------


def _worker_gamma(task) -> np.ndarray:
    (model, cmap, seed, s_target), lo, hi = task
    n = model.n_rays
    out = np.empty((hi - lo, n + 1))
    for r in range(lo, hi):
        rng = derive_stream(seed, _STREAM_GAMMA).child(r)
        path = simulate_path(model, rng, local_time=s_target)
        marked = mark_lifetimes(extract_excursions(path, model), cmap, rng)
        g0 = float(marked.holding_mark.sum())
        if np.isfinite(marked.trailing_mark):
            g0 += marked.trailing_mark
        out[r - lo, 0] = g0
        for i in range(1, n + 1):
            out[r - lo, i] = float(marked.zeta_star[marked.class_id == i].sum())
    return out


def sample_gamma_at(
    model: StarChainModel,
    cmap: ClassMap,
    *,
    master_seed: int,
    replications: int,
    s_target: float = 1.0,
    threads: int = 1,
) -> np.ndarray:
    """Per-replication cumulative marked lifetimes Gamma^(i)(s_target),
    i = 0..n, shape (replications, n + 1)."""
    return _run_chunked(_worker_gamma, (model, cmap, master_seed, s_target), replications, threads)


# ---------------------------------------------------------------------------
# marked runs to a transformed-time target (limits experiments)
# ---------------------------------------------------------------------------


@dataclass
class MarkedRun:
    """Concatenated marked atoms of one replication, in atom order."""

    s: np.ndarray
    class_id: np.ndarray
    zeta_star: np.ndarray
    holding_mark: np.ndarray

    @property
    def exc_end(self) -> np.ndarray:
        return np.cumsum(self.holding_mark + self.zeta_star)

    @property
    def exc_start(self) -> np.ndarray:
        return self.exc_end - self.zeta_star


def simulate_marked_run(
    model: StarChainModel,
    cmap: ClassMap,
    rng: RngStream,
    target_duration: float,
    chunk: int = 128,
) -> MarkedRun:
    """Simulate and mark excursions until the transformed time spanned by
    the atoms exceeds ``target_duration``.

    Excursions are generated in chunks; each chunk is a fresh start at o,
    which has the same law as continuing the path because o is a
    regeneration point.
    """
    parts_s, parts_c, parts_z, parts_h = [], [], [], []
    s_off = 0.0
    total = 0.0
    while total <= target_duration:
        path = simulate_path(model, rng, n_excursions=chunk)
        marked = mark_lifetimes(extract_excursions(path, model), cmap, rng)
        parts_s.append(marked.s + s_off)
        parts_c.append(marked.class_id)
        parts_z.append(marked.zeta_star)
        parts_h.append(marked.holding_mark)
        s_off += marked.holding_before.sum()
        total += float(marked.holding_mark.sum() + marked.zeta_star.sum())
        chunk = min(2 * chunk, 4096)
    return MarkedRun(
        np.concatenate(parts_s),
        np.concatenate(parts_c),
        np.concatenate(parts_z),
        np.concatenate(parts_h),
    )


def _require_exact_o_clock(cmap: ClassMap):
    spec0 = cmap.spec_for(0)
    if spec0 is not None and not spec0.is_pure_drift:
        raise ValueError(
            "limits experiments need the o-clock readable at atom granularity: "
            "map class 0 to None (zero clock) or to a pure-drift subordinator"
        )


def run_readouts(run: MarkedRun, n_classes: int, drift0: float, t_query) -> dict[str, np.ndarray]:
    """Occupations, local time, and straddling zeros of one marked run.

    ``drift0`` is the class-0 drift coefficient (0 for the zero clock).
    Returns occupation O_i(t) for i = 0..n, local time L at the inverse
    clock, and the last/next zero around each query time.
    """
    t_query = np.atleast_1d(np.asarray(t_query, dtype=float))
    end = run.exc_end
    start = run.exc_start
    if t_query.max() >= end[-1]:
        raise ValueError("marked run is shorter than a query time")
    j = np.searchsorted(end, t_query, side="right")
    occ = np.zeros((t_query.size, n_classes + 1))
    for i in range(1, n_classes + 1):
        ccum = np.concatenate(([0.0], np.cumsum(np.where(run.class_id == i, run.zeta_star, 0.0))))
        occ[:, i] = ccum[j] + np.where(run.class_id[j] == i, np.maximum(t_query - start[j], 0.0), 0.0)
    occ[:, 0] = t_query - occ[:, 1:].sum(axis=1)
    in_excursion = t_query >= start[j]
    g_star = np.where(in_excursion, start[j], t_query)
    d_star = np.where(in_excursion, end[j], t_query)
    local = run.s[j].copy()
    if drift0 > 0.0:
        hold_end = np.concatenate(([0.0], end))[j] + run.holding_mark[j]
        inside_holding = ~in_excursion
        local[inside_holding] -= (hold_end[inside_holding] - t_query[inside_holding]) / drift0
    return {"occupation": occ, "local_time": local, "g_star": g_star, "d_star": d_star}


def _worker_limits(task) -> np.ndarray:
    (model, cmap, seed, lambda_grid, t_grid), lo, hi = task
    n = model.n_rays
    lam = np.asarray(lambda_grid, dtype=float)
    tg = np.asarray(t_grid, dtype=float)
    queries = np.unique(np.outer(lam, tg).ravel())
    target = float(queries.max()) * 1.0000001
    spec0 = cmap.spec_for(0)
    drift0 = 0.0 if spec0 is None else spec0.drift
    width = queries.size * (n + 1 + 3)
    out = np.empty((hi - lo, width))
    for r in range(lo, hi):
        rng = derive_stream(seed, _STREAM_LIMITS).child(r)
        run = simulate_marked_run(model, cmap, rng, target)
        res = run_readouts(run, n, drift0, queries)
        out[r - lo] = np.concatenate(
            [res["occupation"].ravel(), res["local_time"], res["g_star"], res["d_star"]]
        )
    return out


@dataclass
class LimitsTable:
    """Per-replication limit readouts on the (lambda, t) query grid."""

    lambda_grid: np.ndarray
    t_grid: np.ndarray
    queries: np.ndarray
    occupation: np.ndarray  # (R, n_queries, n_classes + 1)
    local_time: np.ndarray  # (R, n_queries)
    g_star: np.ndarray
    d_star: np.ndarray

    def at(self, lam: float, t: float = 1.0) -> int:
        q = float(lam) * float(t)
        idx = int(np.argmin(np.abs(self.queries - q)))
        return idx


def sample_limits(
    model: StarChainModel,
    cmap: ClassMap,
    *,
    master_seed: int,
    replications: int,
    lambda_grid,
    t_grid=(1.0,),
    threads: int = 1,
) -> LimitsTable:
    """Per-replication occupation / local-time / straddling-zero readouts
    at every lambda * t query point."""
    _require_exact_o_clock(cmap)
    lam = np.asarray(lambda_grid, dtype=float)
    tg = np.asarray(t_grid, dtype=float)
    queries = np.unique(np.outer(lam, tg).ravel())
    flat = _run_chunked(
        _worker_limits, (model, cmap, master_seed, tuple(lam), tuple(tg)), replications, threads
    )
    nq = queries.size
    n1 = model.n_rays + 1
    occ = flat[:, : nq * n1].reshape(-1, nq, n1)
    rest = flat[:, nq * n1 :]
    return LimitsTable(
        lambda_grid=lam,
        t_grid=tg,
        queries=queries,
        occupation=occ,
        local_time=rest[:, :nq],
        g_star=rest[:, nq : 2 * nq],
        d_star=rest[:, 2 * nq :],
    )


# ---------------------------------------------------------------------------
# window counts for the Poisson-structure experiment
# ---------------------------------------------------------------------------


def _worker_windows(task) -> np.ndarray:
    (model, cmap, seed, m_windows, length, threshold), lo, hi = task
    windows = np.column_stack(
        (np.arange(m_windows) * length, (np.arange(m_windows) + 1) * length)
    )
    out = np.empty((hi - lo, m_windows), dtype=np.int64)
    for r in range(lo, hi):
        rng = derive_stream(seed, _STREAM_WINDOWS).child(r)
        path = simulate_path(model, rng, local_time=m_windows * length)
        marked = mark_lifetimes(extract_excursions(path, model), cmap, rng)
        out[r - lo] = window_counts(marked, windows, h=threshold, use_marked=True).sum(axis=1)
    return out


def sample_window_counts(
    model: StarChainModel,
    cmap: ClassMap,
    *,
    master_seed: int,
    replications: int,
    m_windows: int = 200,
    window_length: float = 1.0,
    threshold: float = 1.0,
    threads: int = 1,
) -> np.ndarray:
    """Marked-atom counts above a lifetime threshold, per replication and
    per local-time window: shape (replications, m_windows)."""
    return _run_chunked(
        _worker_windows,
        (model, cmap, master_seed, m_windows, window_length, threshold),
        replications,
        threads,
    )


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def run_route_equivalence(
    model: StarChainModel,
    cmap: ClassMap,
    *,
    master_seed: int,
    n_excursions: int = 100_000,
    grid_points: int = 1000,
    tolerance: float = 1e-9,
) -> TestReport:
    """Couple the direct path transform with the Williams reconstruction
    on one long run and report the worst relative occupation gap."""
    rng = derive_stream(master_seed, _STREAM_ROUTE)
    path = simulate_path(model, rng.child(0), n_excursions=n_excursions)
    ledger = extract_excursions(path, model, retain_subpaths=True)
    marked = mark_lifetimes(ledger, cmap, rng.child(1))
    _, x_star = build_clock_and_transform(path, model, cmap, rng.child(1))
    gam = gamma_family(marked)
    duration = float(x_star.durations.sum())
    grid = np.linspace(0.0, duration * (1.0 - 1e-9), grid_points)
    direct = occupation_from_path(x_star, model, grid)
    worst = 0.0
    for i in range(model.n_rays + 1):
        if i == 0 and cmap.zero_stagnancy:
            gap = float(np.max(np.abs(direct[:, 0])))
        else:
            gap = float(np.max(np.abs(occupation_via_williams(gam, i, grid) - direct[:, i])))
        worst = max(worst, gap / duration)
    return band_report("route_equivalence:max_rel_gap", worst, 0.0, tolerance, n_excursions)


def run_structure_suite(
    model: StarChainModel,
    cmap: ClassMap,
    *,
    master_seed: int,
    replications: int = 100_000,
    q_grid=(0.25, 0.5, 1.0, 2.0, 4.0),
    route_excursions: int = 100_000,
    window_replications: int = 2000,
    m_windows: int = 200,
    window_length: float = 1.0,
    window_threshold: float = 1.0,
    threads: int = 1,
) -> list[TestReport]:
    """The structural verification bundle: route equivalence, the
    subordination identity for every ray class, the law and independence
    of the o-clock component, the full-clock exponent, and the Poisson
    structure of marked window counts."""
    reports = [
        run_route_equivalence(model, cmap, master_seed=master_seed, n_excursions=route_excursions)
    ]
    gam = sample_gamma_at(
        model, cmap, master_seed=master_seed, replications=replications, s_target=1.0, threads=threads
    )
    r = gam.shape[0]
    for i in range(1, model.n_rays + 1):
        for q in q_grid:
            mean, se = empirical_laplace(gam[:, i], q)
            emp = -math.log(mean)
            oracle = float(composed_exponent_oracle(model, cmap, i, q))
            reports.append(
                band_report(f"subordination:class{i}:q={q:g}", emp, oracle, 4.0 * se / mean, r)
            )
    spec0 = cmap.spec_for(0)
    if spec0 is not None:
        for q in q_grid:
            mean, se = empirical_laplace(gam[:, 0], q)
            target = math.exp(-float(laplace_exponent(spec0, q)))
            reports.append(band_report(f"gamma0_law:q={q:g}", mean, target, 4.0 * se, r))
        g0 = gam[:, 0]
        g_rays = gam[:, 1:].sum(axis=1)
        corr = float(np.corrcoef(g0, g_rays)[0, 1])
        reports.append(band_report("gamma0_independence:corr", corr, 0.0, 4.0 / math.sqrt(r), r))
    total = gam.sum(axis=1)
    for q in q_grid:
        mean, se = empirical_laplace(total, q)
        emp = -math.log(mean)
        oracle = float(full_clock_exponent_oracle(model, cmap, q))
        reports.append(band_report(f"full_clock:q={q:g}", emp, oracle, 4.0 * se / mean, r))
    counts = sample_window_counts(
        model,
        cmap,
        master_seed=master_seed,
        replications=window_replications,
        m_windows=m_windows,
        window_length=window_length,
        threshold=window_threshold,
        threads=threads,
    )
    disp, corr_rep = dispersion_independence(counts, name="poisson")
    reports.append(disp)
    if corr_rep is not None:
        reports.append(corr_rep)
    return reports


def run_limits_suite(
    model: StarChainModel,
    cmap: ClassMap,
    *,
    master_seed: int,
    replications: int = 2000,
    lambda_grid=(100.0, 1000.0, 10_000.0),
    t_grid=(1.0,),
    q_grid=(0.5, 1.0, 2.0),
    threads: int = 1,
) -> tuple[LimitsTable, ScalingSpec, list[TestReport]]:
    """The occupation-time limit bundle at the largest lambda: dominant
    fractions against the generalized arcsine sampler, subdominant
    transforms against Mittag-Leffler values, Darling-Kac local-time
    moments, and the Dynkin-Lamperti straddling-zero laws."""
    scaling = derive_scaling(model, cmap)
    table = sample_limits(
        model,
        cmap,
        master_seed=master_seed,
        replications=replications,
        lambda_grid=lambda_grid,
        t_grid=t_grid,
        threads=threads,
    )
    lam = float(np.max(table.lambda_grid))
    idx = table.at(lam)
    r = table.occupation.shape[0]
    reports: list[TestReport] = []
    oracle_rng = derive_stream(master_seed, _STREAM_ORACLE)

    dom = scaling.dominant
    beta_vec = scaling.beta_vector
    frac_oracle = sample_occupation_fractions(scaling.alpha, beta_vec, oracle_rng, size=10 * r)
    for pos, i in enumerate(dom):
        frac = table.occupation[:, idx, i] / lam
        reports.append(
            ks_test(frac, frac_oracle[:, pos], name=f"arcsine:class{i}:lambda={lam:g}")
        )
    h_lam = float(scaling.h(lam))
    for i, cs in scaling.classes.items():
        if cs.role != "subdominant":
            continue
        scale = float(scaling.g_sub(i, h_lam))
        for t_k in table.t_grid:
            vals = table.occupation[:, table.at(lam, t_k), i] / scale
            for q in q_grid:
                mean, se = empirical_laplace(vals, q)
                # the limit is tail_const * q**index composed with the
                # inverse stable clock, a Mittag-Leffler transform; the
                # index-1 endpoint (Darling-Kac drift) is the same formula
                target = float(
                    mittag_leffler(
                        scaling.alpha,
                        -cs.tail_const * q ** min(cs.index, 1.0) * t_k**scaling.alpha,
                    )
                )
                reports.append(
                    band_report(
                        f"mittag_leffler:class{i}:t={t_k:g}:q={q:g}",
                        mean,
                        target,
                        max(4.0 * se, 0.01),
                        r,
                    )
                )
    scaled_local = table.local_time[:, idx] / h_lam
    for m in (1, 2):
        mom = float(np.mean(scaled_local**m))
        se = float(np.std(scaled_local**m, ddof=1) / math.sqrt(r))
        reports.append(
            band_report(
                f"darling_kac:moment{m}",
                mom,
                inverse_stable_moment(scaling.alpha, 1.0, m),
                4.0 * se,
                r,
            )
        )
    g_scaled = table.g_star[:, idx] / lam
    d_scaled = table.d_star[:, idx] / lam
    reports.append(
        ks_test(g_scaled, lambda x: dynkin_lamperti_cdf(scaling.alpha, np.clip(x, 0.0, 1.0)), name="dynkin_lamperti:G")
    )
    frac_above_one = float(np.mean(d_scaled >= 1.0))
    reports.append(band_report("dynkin_lamperti:D_at_least_1", frac_above_one, 1.0, 0.0, r))
    _, d_oracle = sample_last_next_zero(scaling.alpha, oracle_rng, size=10 * r)
    reports.append(ks_test(d_scaled, d_oracle, name="dynkin_lamperti:D"))
    for i, cs in scaling.classes.items():
        if cs.role != "residual":
            continue
        frac = table.occupation[:, idx, i] / lam
        se = float(np.std(frac, ddof=1) / math.sqrt(r)) if r > 1 else 0.0
        reports.append(
            band_report(f"residual:class{i}:mean_fraction", float(np.mean(frac)), 0.0, max(4.0 * se, 1e-12), r)
        )
    return table, scaling, reports
