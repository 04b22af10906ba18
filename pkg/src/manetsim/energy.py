"""Per-node energy budgets and dead-node handling.

Charges are power x duration; a node whose budget hits zero dies on the
spot: death callbacks cancel its pending transmissions and take it out of
every protocol table.  The per-role ledgers exist so tests can recompute
consumption independently and check conservation.
"""

from __future__ import annotations

US = 1_000_000

ROLES = ("tx", "rx", "overhear", "idle")


class EnergyModel:
    def __init__(self, cfg, node_ids):
        self.cfg = cfg
        self.power = {
            "tx": cfg.p_tx_w,
            "rx": cfg.p_rx_w,
            "overhear": cfg.p_overhear_w,
            "idle": cfg.p_idle_w,
        }
        self.remaining = {n: cfg.initial_j for n in node_ids}
        self.alive_nodes = {n: True for n in node_ids}
        self.durations = {n: {r: 0 for r in ROLES} for n in node_ids}
        self.death_hooks = []

    def on_death(self, hook):
        self.death_hooks.append(hook)

    def alive(self, node):
        return self.alive_nodes[node]

    def charge(self, node, role, duration_us):
        if not self.alive_nodes[node]:
            return
        cost = self.power[role] * duration_us / US
        self.durations[node][role] += duration_us
        left = self.remaining[node] - cost
        if left > 0:
            self.remaining[node] = left
            return
        self.remaining[node] = 0.0
        self.alive_nodes[node] = False
        for hook in self.death_hooks:
            hook(node)

    def consumed_by_node(self):
        return {n: self.cfg.initial_j - self.remaining[n] for n in sorted(self.remaining)}

    def idle_tick(self, duration_us):
        for n in sorted(self.alive_nodes):
            if self.alive_nodes[n]:
                self.charge(n, "idle", duration_us)
