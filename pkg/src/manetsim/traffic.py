"""Constant-bit-rate traffic sources feeding the routing layer."""

from __future__ import annotations

from dataclasses import dataclass

from .packets import DataPacket

US = 1_000_000


@dataclass(frozen=True)
class CbrFlow:
    name: str
    src: str
    dst: str
    rate_bps: int
    payload_bytes: int
    start_us: int
    stop_us: int

    @property
    def interval_us(self):
        # constant spacing: size*8 / rate
        return max(1, int(round(self.payload_bytes * 8 * US / self.rate_bps)))


class TrafficApp:
    def __init__(self, sched, routers, metrics, alive_fn):
        self.sched = sched
        self.routers = routers
        self.metrics = metrics
        self.alive_fn = alive_fn
        self._seq = {}

    def start(self, flows):
        for flow in flows:
            self.sched.schedule(flow.start_us, self._tick, flow)

    def _tick(self, flow):
        now = self.sched.now
        if now >= flow.stop_us:
            return
        if self.alive_fn(flow.src):
            seq = self._seq.get(flow.name, 0)
            self._seq[flow.name] = seq + 1
            pkt = DataPacket(flow=flow.name, seq=seq, src=flow.src, dst=flow.dst,
                             created_us=now, payload_bytes=flow.payload_bytes)
            self.metrics.on_offered(pkt)
            self.routers[flow.src].send_data(pkt)
            self.sched.schedule(now + flow.interval_us, self._tick, flow)
        # a dead source stops offering
