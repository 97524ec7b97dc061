"""Command-line entry point.

    exctime simulate        --config FILE --out DIR [--seed N] [--threads K]
    exctime verify-structure --config FILE --out DIR [--seed N] [--threads K]
    exctime limits           --config FILE --out DIR [--seed N] [--threads K]
    exctime plot CSV [CSV ...] --out DIR

Outputs are deterministic functions of (config, seed): CSV floats use
%.17g, reports are JSON lines, rows are ordered by replication index, and
the thread count changes wall time only, never a byte.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path as FsPath

import numpy as np

from .config import ExperimentConfig, load_config
from .experiments import run_limits_suite, run_structure_suite
from .ledger import extract_excursions
from .star_chain import simulate_path
from .stat_tests import write_reports_jsonl
from .streams import derive_stream
from .time_change import build_clock_and_transform, mark_lifetimes


def _default_threads() -> int:
    env = os.environ.get("EXCTIME_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _write_text(path: FsPath, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_simulate(cfg: ExperimentConfig, out_dir: FsPath) -> int:
    rng = derive_stream(cfg.master_seed, 0)
    path = simulate_path(cfg.model, rng.child(0), n_excursions=cfg.n_excursions)
    ledger = extract_excursions(path, cfg.model, retain_subpaths=True)
    marked = mark_lifetimes(ledger, cfg.class_map, rng.child(1))
    _, x_star = build_clock_and_transform(path, cfg.model, cfg.class_map, rng.child(1))
    _write_text(out_dir / "ledger.csv", marked.to_csv())

    # transformed-path summary: one row per excursion interval of X*
    starts = np.cumsum(marked.holding_mark + marked.zeta_star) - marked.zeta_star
    ends = starts + marked.zeta_star
    lines = ["index,start,end,class,zeta_star"]
    for k in range(len(marked)):
        lines.append(
            "%d,%.17g,%.17g,%d,%.17g" % (k, starts[k], ends[k], marked.class_id[k], marked.zeta_star[k])
        )
    _write_text(out_dir / "xstar_summary.csv", "\n".join(lines) + "\n")
    print(f"wrote {out_dir / 'ledger.csv'} ({len(marked)} atoms)")
    print(f"wrote {out_dir / 'xstar_summary.csv'}")
    return 0


def _emit_reports(reports, out_path: FsPath) -> int:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        write_reports_jsonl(reports, fh)
    ok = True
    for rep in reports:
        print(("PASS" if rep.passed else "FAIL"), rep.name)
        ok = ok and rep.passed
    return 0 if ok else 1


def cmd_verify_structure(cfg: ExperimentConfig, out_dir: FsPath, threads: int) -> int:
    reports = run_structure_suite(
        cfg.model,
        cfg.class_map,
        master_seed=cfg.master_seed,
        replications=cfg.replications,
        q_grid=cfg.q_grid,
        route_excursions=cfg.n_excursions,
        window_replications=cfg.replications,
        m_windows=cfg.windows["count"],
        window_length=cfg.windows["length"],
        window_threshold=cfg.windows["threshold"],
        threads=threads,
    )
    return _emit_reports(reports, out_dir / "structure_reports.jsonl")


def cmd_limits(cfg: ExperimentConfig, out_dir: FsPath, threads: int) -> int:
    table, scaling, reports = run_limits_suite(
        cfg.model,
        cfg.class_map,
        master_seed=cfg.master_seed,
        replications=cfg.replications,
        lambda_grid=cfg.lambda_grid,
        t_grid=cfg.t_grid,
        q_grid=tuple(q for q in cfg.q_grid if q <= 2.0) or (1.0,),
        threads=threads,
    )
    n1 = cfg.model.n_rays + 1
    for lam in table.lambda_grid:
        idx = table.at(lam)
        h_lam = float(scaling.h(lam))
        cols = [f"O{i}_over_lambda" for i in range(n1)]
        block = [table.occupation[:, idx, i] / lam for i in range(n1)]
        for i, cs in scaling.classes.items():
            if cs.role == "subdominant":
                cols.append(f"O{i}_subdominant_scaled")
                block.append(table.occupation[:, idx, i] / float(scaling.g_sub(i, h_lam)))
        cols += ["local_time_scaled", "g_star_over_lambda", "d_star_over_lambda"]
        block += [table.local_time[:, idx] / h_lam, table.g_star[:, idx] / lam, table.d_star[:, idx] / lam]
        lines = [",".join(cols)]
        mat = np.column_stack(block)
        for row in mat:
            lines.append(",".join("%.17g" % v for v in row))
        _write_text(out_dir / f"limits_lambda_{lam:g}.csv", "\n".join(lines) + "\n")
        print(f"wrote {out_dir / f'limits_lambda_{lam:g}.csv'}")
    return _emit_reports(reports, out_dir / "limits_reports.jsonl")


def cmd_plot(csv_paths, out_dir: FsPath) -> int:
    from .plotting import plot_csvs

    written = plot_csvs(csv_paths, out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="exctime", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify-structure", "limits"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
    p = sub.add_parser("plot")
    p.add_argument("csvs", nargs="+")
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "plot":
        return cmd_plot(args.csvs, FsPath(args.out))

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    threads = args.threads if args.threads is not None else _default_threads()
    out_dir = FsPath(args.out)
    if args.command == "simulate":
        return cmd_simulate(cfg, out_dir)
    if args.command == "verify-structure":
        return cmd_verify_structure(cfg, out_dir, threads)
    return cmd_limits(cfg, out_dir, threads)


if __name__ == "__main__":
    sys.exit(main())
