"""Run metrics: delivery, delay, routing overhead, energy spread, lifetime.

The collector is fed by the MAC (transmissions, collisions) and the routers
(deliveries, drops); ``finalize`` folds in the energy ledger and produces a
plain-dict report that serializes byte-identically for a given run.
"""

from __future__ import annotations

import csv
import json
import math
import statistics

from .packets import control_kind

US = 1_000_000


class Collector:
    def __init__(self):
        self.offered = 0
        self.delivered = 0
        self.delay_sum_us = 0
        self.control_tx = {"rreq": 0, "rrep": 0, "query": 0, "query_reply": 0, "rerr": 0}
        self.data_tx_hops = 0
        self.drops = {}
        self.counters = {}
        self.collisions = []            # (t, node, kind_a, kind_b)
        self.deaths = []                # (t, node)
        self.first_delivery_us = None

    # --- feed ----------------------------------------------------------

    def on_payload_tx(self, node, payload):
        kind = control_kind(payload)
        if kind is None:
            self.data_tx_hops += 1
        else:
            self.control_tx[kind] += 1

    def on_collision(self, node, kind_a, kind_b, t):
        self.collisions.append((t, node, *sorted((kind_a, kind_b))))

    def on_offered(self, pkt):
        self.offered += 1

    def on_delivered(self, pkt, now):
        self.delivered += 1
        self.delay_sum_us += now - pkt.created_us
        if self.first_delivery_us is None:
            self.first_delivery_us = now

    def count(self, name, n=1):
        self.counters[name] = self.counters.get(name, 0) + n

    def drop(self, cause):
        self.drops[cause] = self.drops.get(cause, 0) + 1

    def on_death(self, node, t):
        self.deaths.append((t, node))

    # --- derived ---------------------------------------------------------

    def collision_count(self, node=None, kinds=None):
        n = 0
        for t, at, ka, kb in self.collisions:
            if node is not None and at != node:
                continue
            if kinds is not None and (ka, kb) != tuple(sorted(kinds)):
                continue
            n += 1
        return n

    def finalize(self, cfg, energy, horizon_us):
        control_total = sum(self.control_tx.values())
        pdr = self.delivered / self.offered if self.offered > 0 else None
        mean_delay = (self.delay_sum_us / self.delivered / US) if self.delivered > 0 else None
        overhead = control_total / self.delivered if self.delivered > 0 else None

        per_node = energy.consumed_by_node() if energy is not None else {}
        timeline = []
        count = 0
        for t, _node in self.deaths:
            count += 1
            timeline.append((t / US, count))
        n_nodes = len(per_node) if per_node else cfg.nodes
        lifetime_us = lifetime(self.deaths, n_nodes, horizon_us)

        values = list(per_node.values())
        report = {
            "protocol": cfg.protocol,
            "seed": cfg.seed,
            "horizon_s": horizon_us / US,
            "offered": self.offered,
            "delivered": self.delivered,
            "pdr": pdr,
            "mean_delay_s": mean_delay,
            "control_tx": dict(self.control_tx),
            "control_tx_total": control_total,
            "data_tx_hops": self.data_tx_hops,
            "overhead_ratio": overhead,
            "energy_total_j": sum(values) if values else 0.0,
            "energy_per_node_j": per_node,
            "energy_sd_j": statistics.pstdev(values) if len(values) > 1 else 0.0,
            "dead_nodes": len(self.deaths),
            "dead_node_timeline": timeline,
            "lifetime_s": lifetime_us / US,
            "collision_count": len(self.collisions),
            "drops": dict(sorted(self.drops.items())),
            "counters": dict(sorted(self.counters.items())),
        }
        return report


def lifetime(deaths, n_nodes, horizon_us):
    """First instant the alive count falls below ceil(n/2), else the horizon."""
    threshold = math.ceil(n_nodes / 2)
    alive = n_nodes
    for t, _node in deaths:
        alive -= 1
        if alive < threshold:
            return t
    return horizon_us


def report_json(report):
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


RUN_CSV_COLUMNS = [
    "seed", "protocol", "offered", "delivered", "pdr", "mean_delay_s",
    "control_tx_total", "overhead_ratio", "data_tx_hops", "energy_total_j",
    "energy_sd_j", "dead_nodes", "lifetime_s", "collision_count",
]


def run_csv_row(report):
    return [report[c] if report[c] is not None else "" for c in RUN_CSV_COLUMNS]


def write_runs_csv(path, reports):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(RUN_CSV_COLUMNS)
        for r in reports:
            w.writerow(run_csv_row(r))


def write_timeline_csv(path, report):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "dead_count"])
        for t, count in report["dead_node_timeline"]:
            w.writerow([t, count])


AGGREGATE_METRICS = ["pdr", "mean_delay_s", "overhead_ratio", "energy_total_j",
                     "energy_sd_j", "dead_nodes", "lifetime_s"]


def aggregate(reports):
    """Across-run mean, sample sd, and 95% normal CI half-width per metric.

    Metrics absent in a run (e.g. pdr with zero offered) are skipped; a
    single surviving sample yields sd/ci of None (degenerate, flagged).
    """
    out = {}
    for metric in AGGREGATE_METRICS:
        vals = [r[metric] for r in reports if r.get(metric) is not None]
        if not vals:
            out[metric] = {"n": 0, "mean": None, "sd": None, "ci95": None}
            continue
        mean = statistics.fmean(vals)
        if len(vals) > 1:
            sd = statistics.stdev(vals)
            ci = 1.96 * sd / math.sqrt(len(vals))
        else:
            sd = None
            ci = None
        out[metric] = {"n": len(vals), "mean": mean, "sd": sd, "ci95": ci}
    return out


class Trace:
    """Append-only textual event log; byte-stable for a given run."""

    def __init__(self):
        self.lines = []

    def emit(self, t, node, ev, **fields):
        parts = [f"t={t}", f"node={node}", f"ev={ev}"]
        parts.extend(f"{k}={v}" for k, v in fields.items())
        self.lines.append(" ".join(parts))

    def text(self):
        return "\n".join(self.lines) + ("\n" if self.lines else "")
