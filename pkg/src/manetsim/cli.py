"""Command-line entry points: run, sweep, verify."""

from __future__ import annotations

import argparse
import copy
import csv
import os
import sys

from .config import ConfigError, PROTOCOLS, load_config, set_axis
from .metrics import (aggregate, report_json, write_runs_csv,
                      write_timeline_csv, AGGREGATE_METRICS)
from .simulation import Simulation
from .world import load_topology_file


def _outdir(args):
    path = args.out or os.environ.get("MANETSIM_OUTDIR") or "out"
    os.makedirs(path, exist_ok=True)
    return path


def _build_sim(cfg, trace=False):
    topo = load_topology_file(cfg.topology_file) if cfg.topology_file else None
    return Simulation(cfg, topology=topo, trace=trace)


def cmd_run(args):
    cfg = load_config(args.config)
    sim = _build_sim(cfg, trace=args.trace)
    report = sim.run()
    out = _outdir(args)
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report_json(report))
    write_runs_csv(os.path.join(out, "runs.csv"), [report])
    write_timeline_csv(os.path.join(out, "timeline.csv"), report)
    if args.trace:
        with open(os.path.join(out, "trace.log"), "w", encoding="utf-8") as fh:
            fh.write(sim.trace.text())
    print(f"run: protocol={report['protocol']} seed={report['seed']} "
          f"offered={report['offered']} delivered={report['delivered']} "
          f"pdr={report['pdr']} mean_delay_s={report['mean_delay_s']} "
          f"overhead={report['overhead_ratio']} -> {out}/report.json")
    return 0


def cmd_sweep(args):
    base = load_config(args.config)
    values = [v for v in (tok.strip() for tok in args.values.split(",")) if v]
    if not values:
        raise ConfigError("sweep: empty values list")
    if args.seeds < 1:
        raise ConfigError("sweep: need at least one seed")
    out = _outdir(args)
    rows = []
    summary = []
    for value in values:
        for protocol in PROTOCOLS:
            reports = []
            for i in range(args.seeds):
                cfg = copy.deepcopy(base)
                cfg.protocol = protocol
                cfg.seed = base.seed + i
                set_axis(cfg, args.axis, float(value))
                report = _build_sim(cfg).run()
                reports.append(report)
                rows.append((value, protocol, report))
            agg = aggregate(reports)
            summary.append((value, protocol, args.seeds, agg))
            print(f"sweep: {args.axis}={value} protocol={protocol} "
                  f"pdr={agg['pdr']['mean']} delay={agg['mean_delay_s']['mean']} "
                  f"overhead={agg['overhead_ratio']['mean']}")

    with open(os.path.join(out, "sweep_runs.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "value", "protocol", "seed", "pdr", "mean_delay_s",
                    "overhead_ratio", "energy_total_j", "energy_sd_j",
                    "dead_nodes", "lifetime_s"])
        for value, protocol, r in rows:
            w.writerow([args.axis, value, protocol, r["seed"], r["pdr"],
                        r["mean_delay_s"], r["overhead_ratio"], r["energy_total_j"],
                        r["energy_sd_j"], r["dead_nodes"], r["lifetime_s"]])
    with open(os.path.join(out, "sweep_summary.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = ["axis", "value", "protocol", "runs"]
        for m in AGGREGATE_METRICS:
            header += [f"{m}_mean", f"{m}_sd", f"{m}_ci95"]
        w.writerow(header)
        for value, protocol, n, agg in summary:
            row = [args.axis, value, protocol, n]
            for m in AGGREGATE_METRICS:
                row += [agg[m]["mean"], agg[m]["sd"], agg[m]["ci95"]]
            w.writerow(row)
    print(f"sweep: {len(rows)} runs, {len(summary)} aggregate rows -> {out}/sweep_summary.csv")
    return 0


def cmd_verify(args):
    from .verification import run_all

    failed = False
    for name, ok, detail in run_all():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed = failed or not ok
    return 1 if failed else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="manetsim",
        description="Deterministic MANET simulator: zone-disjoint multipath routing vs AOMDV")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute one seeded run")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--trace", action="store_true", help="write per-event trace.log")
    p_run.add_argument("--out", default=None, help="output dir (or $MANETSIM_OUTDIR)")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one numeric parameter over seeds and protocols")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, help="config key, e.g. mobility.v_max")
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--seeds", type=int, required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_verify = sub.add_parser("verify", help="golden trace, oracle equivalence, MAC sanity")
    p_verify.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
