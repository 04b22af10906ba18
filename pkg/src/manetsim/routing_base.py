"""Shared multipath routing machinery.

Both protocols flood route requests, let the destination answer every
accepted request copy with a reply that retraces the copy's recorded
route, install forward/reverse hops as the reply travels back, and pick k
paths at the source once a wait timer (armed by the first reply) expires.
Data is then round-robined over the selected paths; a MAC-level send
failure marks the path broken and raises a route error toward the source.
Only discovery propagation and the selection ordering differ between the
two protocols, so the comparison isolates path choice.

Duplicate-request acceptance (both protocols): a copy is acceptable iff
the node is not the flood origin, does not already appear in the copy's
traversed list, and at least one of (a) new previous hop, (b) new path
founder, (c) strictly fewer hops than any stored copy, holds.  Per-node
rebroadcast budget per flood is capped; the budget slot is reserved at
acceptance so a copy either propagates or quietly fills the tables.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .engine import substream
from .packets import (DataPacket, Rerr, Rrep, Rreq, RreqId, RreqQuery,
                      RreqQueryReply)


class RouterContext:
    """Everything a router needs from the surrounding simulation."""

    def __init__(self, sched, mac, cfg, metrics, trace=None, audit=None):
        self.sched = sched
        self.mac = mac
        self.cfg = cfg
        self.metrics = metrics
        self.trace = trace
        self.audit = audit

    def us(self, seconds):
        return int(round(seconds * 1_000_000))


@dataclass
class RreqSeenEntry:
    rid: RreqId
    receive_us: int
    expires_us: int
    after_anc: int = 0
    rebroadcast_done: bool = False
    reservations: int = 0
    phase_counter: int = 0
    dst_copy_count: int = 0
    min_hop: int = 10 ** 9
    prev_hops: set = field(default_factory=set)
    first_hops: set = field(default_factory=set)
    rebroadcast_firsts: set = field(default_factory=set)
    counted_queriers: set = field(default_factory=set)


@dataclass
class PathRecord:
    rid: RreqId
    key: tuple
    next_hop: str
    prev_hop: str | None
    hop_count: int
    anc: int
    state: str              # selected | candidate | broken
    last_used: int


@dataclass
class Candidate:
    key: tuple
    first_hop: str
    anc: int
    hop_count: int
    order: int              # arrival sequence at the source
    path: tuple


@dataclass
class Discovery:
    rid: RreqId
    dst: str
    attempts: int
    candidates: list = field(default_factory=list)
    select_timer: object = None
    retry_timer: object = None


@dataclass
class SelectedPath:
    rid: RreqId
    key: tuple
    next_hop: str
    path: tuple
    anc: int
    hop_count: int
    state: str = "selected"
    last_used: int = 0


class SelectedSet:
    def __init__(self, dst, paths):
        self.dst = dst
        self.paths = paths
        self.rr = 0

    def live(self, now, idle_limit_us):
        return [p for p in self.paths
                if p.state == "selected" and now - p.last_used <= idle_limit_us]


class BaseRouter:
    def __init__(self, node, ctx):
        self.node = node
        self.ctx = ctx
        self.alive = True
        r = ctx.cfg.routing
        self._query_timer_us = ctx.us(r.query_timer_s)
        self._rrep_wait_us = ctx.us(r.rrep_wait_s)
        self._retry_timeout_us = ctx.us(r.rreq_retry_timeout_s)
        self._seen_lifetime_us = ctx.us(r.rreq_seen_lifetime_s)
        self._idle_lifetime_us = ctx.us(r.path_idle_lifetime_s)
        self._holddown_us = ctx.us(r.rediscovery_holddown_s)
        self._flush_spacing_us = 0 if ctx.cfg.mac.ideal_channel \
            else ctx.us(r.flush_spacing_s)
        self._reply_jitter_us = 0 if ctx.cfg.mac.ideal_channel \
            else ctx.us(r.reply_jitter_s)
        self.rng = substream(ctx.cfg.seed, "routing", node)
        self.seen = {}                  # rid -> RreqSeenEntry
        self.query_seen = set()         # (querier, rid)
        self.paths = {}                 # (rid, key) -> PathRecord
        self.selected = {}              # dst -> SelectedSet
        self.discovery = {}             # dst -> Discovery
        self.buffers = {}               # dst -> deque[DataPacket]
        self._origin_seq = 0
        self._cand_seq = 0
        self._last_originate = {}       # dst -> time of newest flood
        self._holddown_timer = {}
        self._drain_timer = {}

    # --- plumbing ---------------------------------------------------------

    @property
    def now(self):
        return self.ctx.sched.now

    def _trace(self, ev, **fields):
        if self.ctx.trace is not None:
            self.ctx.trace.emit(self.now, self.node, ev, **fields)

    def on_death(self):
        self.alive = False

    def on_packet(self, payload, frm):
        if not self.alive:
            return
        t = type(payload)
        if t is Rreq:
            self._on_rreq(payload, frm)
        elif t is Rrep:
            self._on_rrep(payload, frm)
        elif t is RreqQuery:
            self.handle_query(payload, frm)
        elif t is RreqQueryReply:
            self.handle_query_reply(payload, frm)
        elif t is Rerr:
            self._on_rerr(payload, frm)
        elif t is DataPacket:
            self.forward_data(payload, frm)

    # hooks the two protocols specialize ------------------------------------

    def _on_rreq(self, rreq, frm):
        raise NotImplementedError

    def handle_query(self, query, frm):
        pass

    def handle_query_reply(self, reply, frm):
        pass

    def _rrep_bump(self, entry):
        raise NotImplementedError

    def _order_candidates(self, cands):
        raise NotImplementedError

    # --- request acceptance -------------------------------------------------

    def _fresh_entry(self, rid):
        entry = self.seen.get(rid)
        if entry is not None and entry.expires_us < self.now:
            del self.seen[rid]
            return None
        return entry

    def _accept(self, rreq, frm):
        """Apply the duplicate rule.  Returns (entry, first_hop, dist) or None."""
        if rreq.src == self.node or self.node in rreq.traversed:
            return None
        first = rreq.first_hop if rreq.first_hop is not None else self.node
        dist = rreq.hop_count + 1
        entry = self._fresh_entry(rreq.rid)
        if entry is None:
            entry = RreqSeenEntry(rreq.rid, self.now, self.now + self._seen_lifetime_us)
            self.seen[rreq.rid] = entry
        elif frm in entry.prev_hops and first in entry.first_hops and dist >= entry.min_hop:
            return None
        entry.prev_hops.add(frm)
        entry.first_hops.add(first)
        entry.min_hop = min(entry.min_hop, dist)
        return entry, first, dist

    def _may_rebroadcast(self, entry, first, dist):
        # budget is spent per distinct founder: same-founder duplicates fill
        # the tables but never the air, so late founders still propagate
        r = self.ctx.cfg.routing
        if dist > r.ttl_max or first in entry.rebroadcast_firsts \
                or len(entry.rebroadcast_firsts) >= r.rebroadcast_cap:
            return False
        entry.rebroadcast_firsts.add(first)
        return True

    def _reply_as_destination(self, entry, rreq, frm, first):
        idx = entry.dst_copy_count
        entry.dst_copy_count += 1
        path = (rreq.src,) + rreq.traversed + (self.node,)
        rrep = Rrep(rreq.rid, path, (first, idx), rreq.anc, len(path) - 2)
        self._trace("rrep_send", path="-".join(path), anc=rreq.anc)
        self.ctx.mac.send_unicast(self.node, frm, rrep)

    # --- reply path ----------------------------------------------------------

    def _on_rrep(self, rrep, frm):
        if rrep.path[rrep.cursor] != self.node:
            self.ctx.metrics.drop("rrep_misrouted")
            return
        if rrep.cursor == 0:
            self._rrep_at_source(rrep)
            return
        entry = self._fresh_entry(rrep.rid)
        if entry is None:
            self.ctx.metrics.drop("rrep_no_reverse")
            return
        bump = self._rrep_bump(entry)
        anc_out = rrep.anc + bump
        prev_hop = rrep.path[rrep.cursor - 1]
        self.paths[(rrep.rid, rrep.key)] = PathRecord(
            rrep.rid, rrep.key, next_hop=frm, prev_hop=prev_hop,
            hop_count=rrep.hop_count, anc=anc_out, state="candidate",
            last_used=self.now)
        self._trace("rrep_fwd", anc_in=rrep.anc, anc_out=anc_out,
                    path="-".join(rrep.path))
        self.ctx.mac.send_unicast(
            self.node, prev_hop, replace(rrep, anc=anc_out, cursor=rrep.cursor - 1))

    def _rrep_at_source(self, rrep):
        dst = rrep.path[-1]
        disc = self.discovery.get(dst)
        if disc is None or disc.rid != rrep.rid:
            self.ctx.metrics.drop("stale_rrep")
            return
        self._cand_seq += 1
        cand = Candidate(rrep.key, rrep.path[1], rrep.anc,
                         rrep.hop_count, self._cand_seq, rrep.path)
        disc.candidates.append(cand)
        self._trace("rrep_recv", anc=rrep.anc, path="-".join(rrep.path))
        if self.ctx.audit is not None:
            self.ctx.audit.setdefault("rrep_delivered", []).append(
                (self.node, rrep.path, rrep.anc))
        if len(disc.candidates) == 1:
            self.ctx.sched.cancel(disc.retry_timer)
            disc.select_timer = self.ctx.sched.schedule_in(
                self._rrep_wait_us, self._on_select_timer, dst, disc.rid)

    # --- discovery ------------------------------------------------------------

    def _ensure_discovery(self, dst):
        if dst in self.discovery or not self.alive:
            return
        gap = self.now - self._last_originate.get(dst, -10 ** 15)
        if gap >= self._holddown_us:
            self._originate(dst, attempts=0)
        elif dst not in self._holddown_timer:
            # hold down rediscovery so a burst of breaks floods only once
            self._holddown_timer[dst] = self.ctx.sched.schedule_in(
                self._holddown_us - gap, self._holddown_fire, dst)

    def _holddown_fire(self, dst):
        self._holddown_timer.pop(dst, None)
        if self.buffers.get(dst) or dst not in self.selected:
            self._ensure_discovery(dst)

    def _originate(self, dst, attempts):
        self._last_originate[dst] = self.now
        self._origin_seq += 1
        rid = RreqId(self.node, self._origin_seq)
        disc = Discovery(rid, dst, attempts)
        self.discovery[dst] = disc
        rreq = Rreq(rid, self.node, dst, hop_count=0, anc=0, first_hop=None)
        self.ctx.metrics.count("rreq_originate")
        self._trace("rreq_originate", dst=dst, seq=self._origin_seq)
        self.ctx.mac.send_broadcast(self.node, rreq)
        disc.retry_timer = self.ctx.sched.schedule_in(
            self._retry_timeout_us, self._on_retry_timer, dst, rid)

    def _on_retry_timer(self, dst, rid):
        disc = self.discovery.get(dst)
        if disc is None or disc.rid != rid or disc.candidates or not self.alive:
            return
        if disc.attempts + 1 > self.ctx.cfg.routing.rreq_retries:
            del self.discovery[dst]
            dropped = len(self.buffers.get(dst, ()))
            if dropped:
                self.buffers[dst].clear()
                for _ in range(dropped):
                    self.ctx.metrics.drop("discovery_failed")
            self._trace("discovery_abandoned", dst=dst)
            return
        self._originate(dst, disc.attempts + 1)

    def _on_select_timer(self, dst, rid):
        disc = self.discovery.get(dst)
        if disc is None or disc.rid != rid or not self.alive:
            return
        del self.discovery[dst]
        if self.ctx.audit is not None:
            self.ctx.audit.setdefault("candidates", []).append(
                (self.node, dst, [(c.path, c.anc) for c in disc.candidates]))
        chosen = self._order_candidates(disc.candidates)[:self.ctx.cfg.routing.k_paths]
        paths = [SelectedPath(rid, c.key, c.path[1], c.path, c.anc,
                              c.hop_count, last_used=self.now)
                 for c in chosen]
        self.selected[dst] = SelectedSet(dst, paths)
        self._trace("paths_selected", dst=dst,
                    paths=";".join("-".join(p.path) for p in paths),
                    ancs=";".join(str(p.anc) for p in paths))
        if self.ctx.audit is not None:
            self.ctx.audit.setdefault("selected", []).append(
                (self.node, dst, [p.path for p in paths], [p.anc for p in paths]))
        self._drain_step(dst)

    # --- data plane -------------------------------------------------------------

    def send_data(self, pkt):
        if not self.alive:
            return
        sel = self.selected.get(pkt.dst)
        if sel is not None and sel.live(self.now, self._idle_lifetime_us):
            if self.buffers.get(pkt.dst):
                self._enqueue_data(pkt)      # keep order behind the draining backlog
                self._drain_step(pkt.dst)
            else:
                self._dispatch(pkt.dst, pkt)
            return
        self._enqueue_data(pkt)
        self._ensure_discovery(pkt.dst)

    def _enqueue_data(self, pkt):
        buf = self.buffers.setdefault(pkt.dst, deque())
        if len(buf) >= self.ctx.cfg.routing.buffer_limit:
            self.ctx.metrics.drop("buffer_full")
        else:
            buf.append(pkt)

    def _drain_step(self, dst):
        # backlog drains one packet per spacing: a fresh route never gets the
        # whole buffer slammed into its own first-hop zone at once
        if dst in self._drain_timer or not self.alive:
            return
        buf = self.buffers.get(dst)
        if not buf:
            return
        sel = self.selected.get(dst)
        if sel is None or not sel.live(self.now, self._idle_lifetime_us):
            return
        if self._flush_spacing_us == 0:
            while buf:
                self._dispatch(dst, buf.popleft())
            return
        self._dispatch(dst, buf.popleft())
        if buf:
            self._drain_timer[dst] = self.ctx.sched.schedule_in(
                self._flush_spacing_us, self._drain_fire, dst)

    def _drain_fire(self, dst):
        self._drain_timer.pop(dst, None)
        self._drain_step(dst)

    def _dispatch(self, dst, pkt):
        sel = self.selected.get(dst)
        live = sel.live(self.now, self._idle_lifetime_us) if sel else []
        if not live:
            self.send_data(pkt)  # re-buffers and rediscovers
            return
        path = live[sel.rr % len(live)]
        sel.rr += 1
        path.last_used = self.now
        out = replace(pkt, rid=path.rid, key=path.key, route=(self.node,))
        self.ctx.mac.send_unicast(
            self.node, path.next_hop, out,
            on_done=lambda ok, why, p=path, d=dst: self._source_send_done(ok, why, d, p))

    def _source_send_done(self, ok, why, dst, path):
        if ok or not self.alive:
            return
        self.ctx.metrics.drop(f"data_mac_fail_{why}")
        path.state = "broken"
        self.handle_route_error(path.rid, path.key)

    def forward_data(self, pkt, frm):
        pkt = replace(pkt, route=pkt.route + (self.node,))
        if pkt.dst == self.node:
            self.ctx.metrics.on_delivered(pkt, self.now)
            self._trace("data_delivered", flow=pkt.flow, seq=pkt.seq,
                        delay_us=self.now - pkt.created_us)
            if self.ctx.audit is not None:
                self.ctx.audit.setdefault("delivered_routes", []).append(pkt.route)
            return
        rec = self.paths.get((pkt.rid, pkt.key))
        if rec is None or self.now - rec.last_used > self._idle_lifetime_us:
            self.ctx.metrics.drop("no_route")
            return
        if rec.state == "broken":
            self.ctx.metrics.drop("no_route")
            if rec.prev_hop is not None:
                self.ctx.mac.send_unicast(self.node, rec.prev_hop,
                                          Rerr(rec.rid, rec.key, pkt.src, self.node))
            return
        rec.last_used = self.now
        self.ctx.mac.send_unicast(
            self.node, rec.next_hop, pkt,
            on_done=lambda ok, why, p=pkt, r=rec: self._relay_send_done(ok, why, p, r))

    def _relay_send_done(self, ok, why, pkt, rec):
        if ok or not self.alive:
            return
        self.ctx.metrics.drop(f"data_mac_fail_{why}")
        rec.state = "broken"
        if rec.prev_hop is not None:
            rerr = Rerr(rec.rid, rec.key, pkt.src, self.node)
            self.ctx.mac.send_unicast(self.node, rec.prev_hop, rerr)

    # --- maintenance ----------------------------------------------------------------

    def _on_rerr(self, rerr, frm):
        if rerr.flow_src == self.node:
            self.handle_route_error(rerr.rid, rerr.key)
            return
        rec = self.paths.get((rerr.rid, rerr.key))
        if rec is None:
            return
        rec.state = "broken"
        if rec.prev_hop is not None:
            self.ctx.mac.send_unicast(self.node, rec.prev_hop, rerr)

    def handle_route_error(self, rid, key):
        for dst, sel in list(self.selected.items()):
            if all(p.rid != rid for p in sel.paths):
                continue
            for p in sel.paths:
                if p.key == key and p.rid == rid:
                    p.state = "broken"
            self.ctx.metrics.count("route_error")
            if not sel.live(self.now, self._idle_lifetime_us):
                del self.selected[dst]
                self._trace("paths_exhausted", dst=dst)
                self._ensure_discovery(dst)
            return

    def on_link_down(self, neighbor):
        if not self.alive:
            return
        for rec in self.paths.values():
            if neighbor in (rec.next_hop, rec.prev_hop):
                rec.state = "broken"
        for sel in list(self.selected.values()):
            for p in list(sel.paths):
                if p.next_hop == neighbor and p.state == "selected":
                    p.state = "broken"
                    self.handle_route_error(p.rid, p.key)
