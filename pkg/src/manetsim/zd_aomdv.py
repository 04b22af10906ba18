"""Zone-disjoint multipath routing via active-neighbor counting.

The request flood carries an ActiveNeighborCount.  Before rebroadcasting an
accepted copy, a node broadcasts "have you seen this request?" to its
neighbors, waits one query timer, and adds one to the copy's count per
positive answer (answers from the copy's own previous hop are discarded).
Nodes answer positively whenever the request sits in their seen-table, and
once they have themselves rebroadcast it they also tally each later query
in the entry's after-count.  Every route reply picks up the after-count of
each node it passes, so the count reaching the source is the number of
flood-holding neighbors along the path; the source sorts replies by that
count ascending and transmits over the k smallest concurrently.

Counting rules that the worked-example arithmetic pins down:

* the flood origin never answers queries about its own flood (it keeps no
  seen-entry for it);
* a query from the node one learned the request from is answered but never
  counted, on either side;
* only queries arriving after the node's own rebroadcast enter the
  after-count (earlier queriers already counted us themselves);
* a repeated query from the same node for the same flood is ignored
  outright, tracked in a per-(querier, flood) table;
* the after-count is snapshotted into each passing reply and never reset,
  so later replies see the more current value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .packets import RreqQuery, RreqQueryReply
from .routing_base import BaseRouter


@dataclass
class _PendingPhase:
    rreq: object            # the accepted copy, as received
    prev_hop: str
    first_hop: str
    dist: int
    gained: int = 0


class ZdAomdvRouter(BaseRouter):
    def __init__(self, node, ctx):
        super().__init__(node, ctx)
        self.pending = {}       # (rid, phase) -> _PendingPhase

    def _on_rreq(self, rreq, frm):
        got = self._accept(rreq, frm)
        if got is None:
            self.ctx.metrics.drop("rreq_dup")
            return
        entry, first, dist = got
        if self.node == rreq.dst:
            self._reply_as_destination(entry, rreq, frm, first)
            return
        if not self._may_rebroadcast(entry, first, dist):
            return
        phase = entry.phase_counter
        entry.phase_counter += 1
        self.pending[(rreq.rid, phase)] = _PendingPhase(rreq, frm, first, dist)
        self._trace("query_start", origin=rreq.rid.origin, seq=rreq.rid.seq, phase=phase)
        self.ctx.mac.send_broadcast(
            self.node, RreqQuery(rreq.rid, self.node, frm, phase))
        self.ctx.sched.schedule_in(
            self._query_timer_us, self._on_query_timer, rreq.rid, phase)

    def handle_query(self, query, frm):
        mark = (query.querier, query.rid)
        if mark in self.query_seen:
            return
        self.query_seen.add(mark)
        entry = self._fresh_entry(query.rid)
        if entry is None:
            return  # never saw that flood: stay silent
        reply = RreqQueryReply(query.rid, self.node, query.querier, query.phase)
        if self._reply_jitter_us > 0:
            self.ctx.sched.schedule_in(self.rng.randint(0, self._reply_jitter_us),
                                       self._send_reply, query.querier, reply)
        else:
            self.ctx.mac.send_unicast(self.node, query.querier, reply)
        if entry.rebroadcast_done and query.prev_hop != self.node:
            entry.after_anc += 1
            entry.counted_queriers.add(query.querier)
            self._trace("after_anc", origin=query.rid.origin, seq=query.rid.seq,
                        value=entry.after_anc, querier=query.querier)

    def _send_reply(self, querier, reply):
        if self.alive:
            self.ctx.mac.send_unicast(self.node, querier, reply)

    def handle_query_reply(self, reply, frm):
        pend = self.pending.get((reply.rid, reply.phase))
        if pend is None:
            self.ctx.metrics.count("late_reply")
            return
        if reply.responder == pend.prev_hop:
            return  # our own predecessor is not a new neighbor of this path
        pend.gained += 1

    def _on_query_timer(self, rid, phase):
        pend = self.pending.pop((rid, phase), None)
        if pend is None or not self.alive:
            return
        entry = self._fresh_entry(rid)
        if entry is None:
            return
        rreq = pend.rreq
        out = replace(rreq,
                      hop_count=pend.dist,
                      anc=rreq.anc + pend.gained,
                      first_hop=pend.first_hop,
                      traversed=rreq.traversed + (self.node,))
        entry.rebroadcast_done = True
        self._trace("rreq_rebroadcast", origin=rid.origin, seq=rid.seq,
                    anc=out.anc, hops=out.hop_count)
        self.ctx.mac.send_broadcast(self.node, out)

    def _rrep_bump(self, entry):
        return entry.after_anc

    def _order_candidates(self, cands):
        # quietest counts first; one path per founder, like the rest of the
        # family -- without it the k lowest counts are usually one corridor
        # and its own sub-variants
        out = []
        firsts = set()
        for c in sorted(cands, key=lambda c: (c.anc, c.hop_count, c.order)):
            if c.first_hop in firsts:
                continue
            firsts.add(c.first_hop)
            out.append(c)
        return out
