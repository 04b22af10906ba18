"""Node positions, random-waypoint mobility, and unit-disk connectivity.

Two modes:

* geometric -- nodes live in a rectangular arena; connectivity is Euclidean
  distance <= radio range.  Waypoint legs are drawn lazily per node from
  that node's own seeded stream, so query order never changes trajectories.
* explicit  -- a static topology loaded from an adjacency fixture file;
  connectivity is exactly the listed edge set and mobility is bypassed.

Per-link latencies (fixture ``latency`` lines, or a uniform default) order
frame propagation; the protocol fixtures rely on them to pin event order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import substream

US = 1_000_000


@dataclass(frozen=True)
class Arena:
    width: float = 750.0
    height: float = 750.0
    radio_range: float = 250.0


class _Leg:
    __slots__ = ("t0", "x0", "y0", "x1", "y1", "arrive", "depart")

    def __init__(self, t0, x0, y0, x1, y1, arrive, depart):
        self.t0 = t0
        self.x0 = x0
        self.y0 = y0
        self.x1 = x1
        self.y1 = y1
        self.arrive = arrive    # reaches target
        self.depart = depart    # pause over, next leg begins


class World:
    def __init__(self, arena, node_ids, seed=0, positions=None, mobility=None,
                 edges=None, latencies=None, default_latency_us=1):
        self.arena = arena
        self.nodes = sorted(node_ids)
        self.default_latency_us = int(default_latency_us)
        self._latency = {}
        if latencies:
            for pair, us in latencies.items():
                a, b = tuple(pair)
                self._latency[frozenset((a, b))] = int(us)
        self._hooks = []

        if edges is not None:
            # explicit static graph
            self._edges = {frozenset(e) for e in edges}
            self._adj = {n: [] for n in self.nodes}
            for e in self._edges:
                a, b = sorted(e)
                self._adj[a].append(b)
                self._adj[b].append(a)
            for n in self.nodes:
                self._adj[n].sort()
            self._pos = dict(positions) if positions else None
            self._mob = None
        else:
            self._edges = None
            self._adj = None
            self._mob = mobility
            self._pos = {}
            rngs = {}
            for n in self.nodes:
                rngs[n] = substream(seed, "mobility", n)
                if positions and n in positions:
                    self._pos[n] = positions[n]
                else:
                    r = rngs[n]
                    self._pos[n] = (r.uniform(0.0, arena.width), r.uniform(0.0, arena.height))
            self._rngs = rngs
            self._legs = {n: [] for n in self.nodes}
            self._cursor = {n: 0 for n in self.nodes}

    # --- geometry -------------------------------------------------------

    @property
    def static(self):
        return self._edges is not None or self._mob is None or self._mob.v_max <= 0

    def _extend_legs(self, node, t):
        legs = self._legs[node]
        rng = self._rngs[node]
        pause_us = int(round(self._mob.pause_s * US))
        while not legs or legs[-1].depart <= t:
            if legs:
                t0 = legs[-1].depart
                x0, y0 = legs[-1].x1, legs[-1].y1
            else:
                t0 = 0
                x0, y0 = self._pos[node]
            x1 = rng.uniform(0.0, self.arena.width)
            y1 = rng.uniform(0.0, self.arena.height)
            speed = rng.uniform(self._mob.v_min, self._mob.v_max)
            dist = math.hypot(x1 - x0, y1 - y0)
            travel_us = int(round(dist / speed * US)) if speed > 0 else 0
            arrive = t0 + max(travel_us, 1)
            legs.append(_Leg(t0, x0, y0, x1, y1, arrive, arrive + pause_us))

    def position_at(self, node, t):
        if self._edges is not None:
            if self._pos is None or node not in self._pos:
                raise KeyError(f"no coordinates for {node} in explicit topology")
            return self._pos[node]
        if self._mob is None or self._mob.v_max <= 0:
            return self._pos[node]
        self._extend_legs(node, t)
        legs = self._legs[node]
        i = self._cursor[node]
        if i >= len(legs) or legs[i].t0 > t:
            i = 0
        while legs[i].depart <= t:
            i += 1
        self._cursor[node] = i
        leg = legs[i]
        if t >= leg.arrive:
            return (leg.x1, leg.y1)
        frac = (t - leg.t0) / (leg.arrive - leg.t0)
        return (leg.x0 + (leg.x1 - leg.x0) * frac, leg.y0 + (leg.y1 - leg.y0) * frac)

    def in_range(self, a, b, t):
        if a == b:
            return False
        if self._edges is not None:
            return frozenset((a, b)) in self._edges
        xa, ya = self.position_at(a, t)
        xb, yb = self.position_at(b, t)
        return math.hypot(xa - xb, ya - yb) <= self.arena.radio_range

    def neighbors_of(self, node, t):
        if self._edges is not None:
            return list(self._adj[node])
        out = []
        for other in self.nodes:
            if other != node and self.in_range(node, other, t):
                out.append(other)
        return out

    def latency_us(self, a, b):
        return self._latency.get(frozenset((a, b)), self.default_latency_us)

    def max_latency_us(self):
        if self._latency:
            return max(max(self._latency.values()), self.default_latency_us)
        return self.default_latency_us

    # --- topology-change watching ----------------------------------------

    def on_topology_change(self, hook):
        """hook(a, b, up: bool) fires when a link crosses the range threshold."""
        self._hooks.append(hook)

    def start_link_watch(self, scheduler, sample_us):
        """Begin periodic link sampling.  No-op for constant topologies."""
        if self.static or not self._hooks:
            return
        self._link_state = self._edge_snapshot(scheduler.now)
        scheduler.schedule_in(sample_us, self._link_tick, scheduler, sample_us)

    def _edge_snapshot(self, t):
        edges = set()
        n = self.nodes
        for i, a in enumerate(n):
            for b in n[i + 1:]:
                if self.in_range(a, b, t):
                    edges.add((a, b))
        return edges

    def _link_tick(self, scheduler, sample_us):
        current = self._edge_snapshot(scheduler.now)
        for pair in sorted(self._link_state - current):
            for hook in self._hooks:
                hook(pair[0], pair[1], False)
        for pair in sorted(current - self._link_state):
            for hook in self._hooks:
                hook(pair[0], pair[1], True)
        self._link_state = current
        scheduler.schedule_in(sample_us, self._link_tick, scheduler, sample_us)


def load_topology_file(path):
    """Parse an adjacency fixture.

    Line forms (whitespace separated, '#' comments):
        A B             undirected edge
        A x y           node coordinates (optional)
        latency A B us  per-link propagation latency in microseconds
    Returns (nodes, edges, positions, latencies).
    """
    nodes = set()
    edges = set()
    positions = {}
    latencies = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if toks[0] == "latency":
                if len(toks) != 4:
                    raise ValueError(f"{path}:{lineno}: latency wants 'latency A B us'")
                a, b, us = toks[1], toks[2], int(toks[3])
                latencies[frozenset((a, b))] = us
                nodes.update((a, b))
            elif len(toks) == 2:
                a, b = toks
                if a == b:
                    raise ValueError(f"{path}:{lineno}: self edge {a}")
                edges.add(frozenset((a, b)))
                nodes.update((a, b))
            elif len(toks) == 3:
                name, x, y = toks[0], float(toks[1]), float(toks[2])
                positions[name] = (x, y)
                nodes.add(name)
            else:
                raise ValueError(f"{path}:{lineno}: unparseable line {line!r}")
    return sorted(nodes), edges, positions, latencies
