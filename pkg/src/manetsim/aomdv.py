"""Multipath distance-vector baseline: same flood, no query phase.

Accepted request copies are rebroadcast immediately, replies carry no
neighbor counts, and the source picks the k shortest candidate paths with
distinct founders.  Everything else (MAC, mobility, data dispatch, error
handling) is shared with the zone-disjoint protocol so that pairing runs
by seed compares path selection and nothing else.
"""

from __future__ import annotations

from dataclasses import replace

from .routing_base import BaseRouter


class AomdvRouter(BaseRouter):
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
        entry.rebroadcast_done = True
        out = replace(rreq, hop_count=dist, anc=0, first_hop=first,
                      traversed=rreq.traversed + (self.node,))
        self._trace("rreq_rebroadcast", origin=rreq.rid.origin, seq=rreq.rid.seq,
                    hops=out.hop_count)
        self.ctx.mac.send_broadcast(self.node, out)

    def _rrep_bump(self, entry):
        return 0

    def _order_candidates(self, cands):
        # shortest first; at most one path per founder
        out = []
        firsts = set()
        for c in sorted(cands, key=lambda c: (c.hop_count, c.order)):
            if c.first_hop in firsts:
                continue
            firsts.add(c.first_hop)
            out.append(c)
        return out
