"""One seeded run: wires engine, world, MAC, routers, traffic, energy, metrics."""

from __future__ import annotations

from .aomdv import AomdvRouter
from .config import ConfigError, flat_dict, parse_flow_spec
from .energy import EnergyModel
from .engine import Scheduler, substream
from .mac import Mac
from .metrics import Collector, Trace
from .routing_base import RouterContext
from .traffic import CbrFlow, TrafficApp
from .world import Arena, World
from .zd_aomdv import ZdAomdvRouter

US = 1_000_000

ROUTERS = {"zd-aomdv": ZdAomdvRouter, "aomdv": AomdvRouter}


class Simulation:
    def __init__(self, cfg, topology=None, trace=False, audit=False):
        cfg.validate()
        self.cfg = cfg
        self.sched = Scheduler()
        self.trace = Trace() if trace else None
        self.audit = {} if audit else None
        self.metrics = Collector()

        arena = Arena(cfg.arena_width, cfg.arena_height, cfg.radio_range)
        if topology is not None:
            nodes, edges, positions, latencies = topology
            self.world = World(arena, nodes, positions=positions or None,
                               edges=edges, latencies=latencies)
        else:
            nodes = [f"n{i:03d}" for i in range(cfg.nodes)]
            mob = cfg.mobility if cfg.mobility.v_max > 0 else None
            self.world = World(arena, nodes, seed=cfg.seed, mobility=mob)
        self.nodes = self.world.nodes

        ideal = cfg.mac.ideal_channel
        self.energy = None if ideal else EnergyModel(cfg.energy, self.nodes)
        self.mac = Mac(self.sched, self.world, cfg.mac, cfg.sizes,
                       energy=self.energy, metrics=self.metrics,
                       rng_factory=lambda node: substream(cfg.seed, "mac", node),
                       trace=self.trace, audit=self.audit)

        ctx = RouterContext(self.sched, self.mac, cfg, self.metrics,
                            trace=self.trace, audit=self.audit)
        router_cls = ROUTERS[cfg.protocol]
        self.routers = {}
        for n in self.nodes:
            router = router_cls(n, ctx)
            self.routers[n] = router
            self.mac.attach(n, router.on_packet)

        if self.energy is not None:
            self.energy.on_death(self._node_died)
        self.world.on_topology_change(self._link_change)

        self.flows = self._resolve_flows()
        self.traffic = TrafficApp(self.sched, self.routers, self.metrics, self._node_alive)
        self._idle_last = 0

    # --- wiring callbacks ---------------------------------------------------

    def _node_alive(self, node):
        return self.energy.alive(node) if self.energy is not None else True

    def _node_died(self, node):
        self.mac.node_died(node)
        self.routers[node].on_death()
        self.metrics.on_death(node, self.sched.now)
        if self.trace is not None:
            self.trace.emit(self.sched.now, node, "node_dead")

    def _link_change(self, a, b, up):
        if self.trace is not None:
            self.trace.emit(self.sched.now, a, "link_up" if up else "link_down", peer=b)
        if not up:
            self.routers[a].on_link_down(b)
            self.routers[b].on_link_down(a)

    def _resolve_flows(self):
        cfg = self.cfg
        stop_s = cfg.traffic.stop_s if cfg.traffic.stop_s >= 0 else cfg.horizon_s
        start_us = int(round(cfg.traffic.start_s * US))
        stop_us = int(round(stop_s * US))
        flows = []
        for i, spec in enumerate(cfg.traffic.flows):
            src, dst, rate, start = parse_flow_spec(spec)
            for node in (src, dst):
                if node not in self.routers:
                    raise ConfigError(f"traffic.flows: unknown node {node!r}")
            f_start = int(round(start * US)) if start is not None else start_us
            flows.append(CbrFlow(f"f{i}", src, dst, rate,
                                 cfg.sizes.data_payload, f_start, stop_us))
        rng = substream(cfg.seed, "flows")
        for i in range(cfg.traffic.random_flows):
            src, dst = rng.sample(self.nodes, 2)
            flows.append(CbrFlow(f"r{i}", src, dst, cfg.traffic.rate_bps,
                                 cfg.sizes.data_payload, start_us, stop_us))
        return flows

    # --- execution --------------------------------------------------------------

    def _idle_tick(self, tick_us, horizon_us):
        self.energy.idle_tick(self.sched.now - self._idle_last)
        self._idle_last = self.sched.now
        nxt = self.sched.now + tick_us
        if nxt <= horizon_us:
            self.sched.schedule(nxt, self._idle_tick, tick_us, horizon_us)

    def run(self):
        cfg = self.cfg
        horizon = cfg.horizon_us
        self.traffic.start(self.flows)
        self.world.start_link_watch(self.sched, int(round(cfg.mobility.link_sample_s * US)))
        if self.energy is not None:
            tick_us = int(round(cfg.energy.idle_tick_s * US))
            if tick_us <= horizon:
                self.sched.schedule(tick_us, self._idle_tick, tick_us, horizon)
        self.sched.run_until(horizon)
        if self.energy is not None and horizon > self._idle_last:
            self.energy.idle_tick(horizon - self._idle_last)
        report = self.metrics.finalize(cfg, self.energy, horizon)
        report["config"] = flat_dict(cfg)
        return report
