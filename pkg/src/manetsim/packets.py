"""Routing packet types and their simulated wire sizes.

Packets are frozen dataclasses: handlers never mutate one in place, they
build the altered copy they forward (dataclasses.replace), because a
broadcast hands the same object to several receivers.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class RreqId:
    origin: str
    seq: int


@dataclass(frozen=True)
class Rreq:
    rid: RreqId
    src: str
    dst: str
    hop_count: int                 # hops already traversed when transmitted
    anc: int                       # active-neighbor count accumulated so far
    first_hop: str | None          # path founder; None until the first hop sets itself
    traversed: tuple = ()          # forwarding nodes in order (origin excluded)

    def wire_size(self, sizes):
        return sizes.rreq_base + sizes.rreq_per_hop * len(self.traversed)


@dataclass(frozen=True)
class RreqQuery:
    rid: RreqId
    querier: str
    prev_hop: str | None           # whom the querier got this copy from
    phase: int                     # querier-local query-phase number for rid

    def wire_size(self, sizes):
        return sizes.query


@dataclass(frozen=True)
class RreqQueryReply:
    rid: RreqId
    responder: str
    querier: str
    phase: int

    def wire_size(self, sizes):
        return sizes.query_reply


@dataclass(frozen=True)
class Rrep:
    rid: RreqId
    path: tuple                    # full route (src, ..., dst)
    key: tuple                     # (first_hop, copy index at destination)
    anc: int
    cursor: int                    # index in path of the node this hop addresses

    @property
    def hop_count(self):
        return len(self.path) - 1

    def wire_size(self, sizes):
        return sizes.rrep


@dataclass(frozen=True)
class Rerr:
    rid: RreqId
    key: tuple
    flow_src: str
    broken_at: str

    def wire_size(self, sizes):
        return sizes.query_reply   # same tiny control frame class


@dataclass(frozen=True)
class DataPacket:
    flow: str
    seq: int
    src: str
    dst: str
    created_us: int
    payload_bytes: int
    rid: RreqId | None = None
    key: tuple | None = None
    route: tuple = field(default=())   # nodes visited so far (diagnostics)

    def wire_size(self, sizes):
        return sizes.data_header + self.payload_bytes


CONTROL_KINDS = {
    Rreq: "rreq",
    Rrep: "rrep",
    RreqQuery: "query",
    RreqQueryReply: "query_reply",
    Rerr: "rerr",
}


def control_kind(payload):
    """Routing-control kind name, or None for data."""
    return CONTROL_KINDS.get(type(payload))
