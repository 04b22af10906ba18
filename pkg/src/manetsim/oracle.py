"""Independent oracles for the neighbor-count arithmetic and zone disjointness.

``oracle_anc`` recomputes, from first principles, what every route reply's
final active-neighbor count must be on a frozen graph with pinned per-link
latencies and a lossless channel.  It never touches packets, MAC state, or
the event engine: flood propagation is a plain shortest-arrival expansion,
query bookkeeping is direct arithmetic over landing times, and the reply
walk sums per-node after-counts with timestamp cutoffs.  Agreement between
this and the packet-level implementation is the protocol's main
correctness gate.

Counting rules applied directly (same statement as the router docstring):
origin excluded, predecessor excluded on both sides, only first query per
(querier, flood) noticed anywhere, after-counts gated on the responder
having rebroadcast, snapshots at reply-arrival instants.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

US = 1_000_000


@dataclass(frozen=True)
class FrozenGraph:
    nodes: tuple
    edges: frozenset          # of frozenset pairs
    src: str
    dst: str

    def neighbors(self, n):
        out = [b for e in self.edges for b in e if n in e and b != n]
        return sorted(set(out))

    def adjacent(self, a, b):
        return frozenset((a, b)) in self.edges


@dataclass
class OracleParams:
    query_timer_us: int = 15_000
    rebroadcast_cap: int = 3
    ttl_max: int = 16
    bitrate: int = 2_000_000
    header_bytes: int = 28
    rreq_base: int = 44
    rreq_per_hop: int = 4
    query_bytes: int = 24
    reply_bytes: int = 20
    rrep_bytes: int = 36

    @classmethod
    def from_config(cls, cfg):
        return cls(
            query_timer_us=int(round(cfg.routing.query_timer_s * US)),
            rebroadcast_cap=cfg.routing.rebroadcast_cap,
            ttl_max=cfg.routing.ttl_max,
            bitrate=cfg.mac.bitrate,
            header_bytes=cfg.mac.header_bytes,
            rreq_base=cfg.sizes.rreq_base,
            rreq_per_hop=cfg.sizes.rreq_per_hop,
            query_bytes=cfg.sizes.query,
            reply_bytes=cfg.sizes.query_reply,
            rrep_bytes=cfg.sizes.rrep,
        )

    def air(self, payload_bytes):
        return ((payload_bytes + self.header_bytes) * 8 * US) // self.bitrate

    def air_rreq(self, traversed):
        return self.air(self.rreq_base + self.rreq_per_hop * traversed)


@dataclass
class _Copy:
    node: str
    prev: str | None
    path: tuple               # forwarders from src inclusive, excluding node
    t: int
    parent: object
    reserved: bool = False
    gain: int = 0
    anc_in: int = 0


@dataclass
class _NodeLedger:
    prevs: set = field(default_factory=set)
    firsts: set = field(default_factory=set)
    min_hop: int = 10 ** 9
    first_arrival: int | None = None
    rb_firsts: set = field(default_factory=set)
    first_rb: int | None = None
    copies: list = field(default_factory=list)
    after_landings: list = field(default_factory=list)


def oracle_anc(graph, latencies, params):
    """Expected final neighbor count per source-to-destination route.

    ``latencies`` maps frozenset edge pairs to microseconds; they pin the
    propagation order.  Returns {} when src and dst are disconnected.
    """
    lat = {frozenset(k): v for k, v in latencies.items()}

    def L(a, b):
        return lat[frozenset((a, b))]

    Q = params.query_timer_us
    ledgers = {n: _NodeLedger() for n in graph.nodes}
    dst_copies = []
    heap = []
    seq = 0
    for m in graph.neighbors(graph.src):
        t = params.air_rreq(0) + L(graph.src, m)
        heapq.heappush(heap, (t, 0, graph.src, seq, m, None, (graph.src,)))
        seq += 1

    # pass 1: flood propagation under the duplicate rule and rebroadcast cap
    all_copies = []
    while heap:
        t, _rb, prev_holder, _s, node, parent, path = heapq.heappop(heap)
        if node == graph.src or node in path:
            continue
        led = ledgers[node]
        first = path[1] if len(path) > 1 else node
        dist = len(path)
        if led.copies and prev_holder in led.prevs and first in led.firsts \
                and dist >= led.min_hop:
            continue
        if led.first_arrival is None:
            led.first_arrival = t
        led.prevs.add(prev_holder)
        led.firsts.add(first)
        led.min_hop = min(led.min_hop, dist)
        copy = _Copy(node, prev_holder, path, t, parent)
        led.copies.append(copy)
        all_copies.append(copy)
        if node == graph.dst:
            dst_copies.append(copy)
            continue
        if dist > params.ttl_max or first in led.rb_firsts \
                or len(led.rb_firsts) >= params.rebroadcast_cap:
            continue
        led.rb_firsts.add(first)
        copy.reserved = True
        rb = t + Q
        if led.first_rb is None or rb < led.first_rb:
            led.first_rb = rb
        air = params.air_rreq(dist)
        for m in graph.neighbors(node):
            heapq.heappush(heap, (rb + air + L(node, m), rb, node, seq, m, copy, path + (node,)))
            seq += 1

    if not dst_copies:
        return {}

    # pass 2: query arithmetic.  Only a querier's first query phase draws
    # answers (every neighbor records the pair then), so later phases are
    # inert on a static graph.
    air_q = params.air(params.query_bytes)
    air_r = params.air(params.reply_bytes)
    for node in graph.nodes:
        led = ledgers[node]
        reserved = [c for c in led.copies if c.reserved]
        if not reserved:
            continue
        c0 = reserved[0]
        for m in graph.neighbors(node):
            land = c0.t + air_q + L(node, m)
            if m == graph.src:
                continue
            ml = ledgers[m]
            if ml.first_arrival is None or ml.first_arrival > land:
                continue
            if (land + air_r + L(node, m)) >= c0.t + Q:
                raise ValueError("latencies too large: reply misses the query timer")
            if m != c0.prev:
                c0.gain += 1
            if ml.first_rb is not None and ml.first_rb <= land and m != c0.prev:
                ml.after_landings.append(land)
    for led in ledgers.values():
        led.after_landings.sort()

    # carried counts accumulate along each copy's parent chain
    for c in all_copies:
        c.anc_in = 0 if c.parent is None else c.parent.anc_in + c.parent.gain

    # pass 3: walk each reply back, snapshotting after-counts on arrival
    air_rrep = params.air(params.rrep_bytes)
    result = {}
    for copy in dst_copies:
        route = copy.path + (graph.dst,)
        t = copy.t
        anc = copy.anc_in
        for i in range(len(route) - 2, 0, -1):
            t += air_rrep + L(route[i + 1], route[i])
            landings = ledgers[route[i]].after_landings
            anc += sum(1 for x in landings if x <= t)
        result[route] = anc
    return result


# --- zone disjointness --------------------------------------------------------


def zone_disjoint(graph, path1, path2):
    """True iff no interior node of one path equals or neighbors one of the other."""
    if tuple(path1) == tuple(path2):
        return False
    for u in path1[1:-1]:
        for v in path2[1:-1]:
            if u == v or graph.adjacent(u, v):
                return False
    return True


def interference_degree(graph, paths):
    """Count distinct interior node pairs across different paths that touch."""
    pairs = set()
    paths = [tuple(p) for p in paths]
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            for u in paths[i][1:-1]:
                for v in paths[j][1:-1]:
                    if u == v or graph.adjacent(u, v):
                        pairs.add(frozenset((u, v)))
    return len(pairs)


# --- fixtures -------------------------------------------------------------------


def fig5_fixture():
    """The 7-node worked-example topology with order-pinning link latencies.

    The latencies make the flood reach the hub's two flanks first, keep the
    far corner quiet until each flank finishes its query round, and land the
    two flank-side queries at the hub before the hub forwards any reply.
    """
    edges = {frozenset(e) for e in [
        ("S", "A"), ("S", "B"), ("S", "C"), ("A", "B"), ("B", "C"),
        ("A", "E"), ("C", "F"), ("B", "E"), ("B", "F"), ("B", "D"),
        ("E", "D"), ("F", "D"),
    ]}
    latencies = {
        frozenset(("S", "A")): 100,
        frozenset(("S", "B")): 300,
        frozenset(("S", "C")): 100,
        frozenset(("A", "B")): 350,
        frozenset(("B", "C")): 350,
        frozenset(("A", "E")): 100,
        frozenset(("C", "F")): 100,
        frozenset(("B", "E")): 400,
        frozenset(("B", "F")): 400,
        frozenset(("B", "D")): 700,
        frozenset(("E", "D")): 150,
        frozenset(("F", "D")): 150,
    }
    graph = FrozenGraph(tuple(sorted("SABCDEF")), frozenset(edges), "S", "D")
    return graph, latencies


def random_connected_graph(seed, n_lo=6, n_hi=12, extra_edge_p=0.3):
    """Seeded random connected graph with distinct per-link latencies."""
    rng = random.Random(seed)
    n = rng.randint(n_lo, n_hi)
    names = [f"n{i}" for i in range(n)]
    edges = set()
    order = names[:]
    rng.shuffle(order)
    for i in range(1, n):
        edges.add(frozenset((order[i], rng.choice(order[:i]))))
    for i in range(n):
        for j in range(i + 1, n):
            e = frozenset((names[i], names[j]))
            if e not in edges and rng.random() < extra_edge_p:
                edges.add(e)
    src, dst = rng.sample(names, 2)
    edge_list = sorted(tuple(sorted(e)) for e in edges)
    values = rng.sample(range(100, 6000), len(edge_list))
    latencies = {frozenset(e): v for e, v in zip(edge_list, values)}
    return FrozenGraph(tuple(names), frozenset(edges), src, dst), latencies
