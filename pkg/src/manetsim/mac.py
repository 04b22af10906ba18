"""Simplified IEEE 802.11 DCF over a unit-disk channel.

Model, in one paragraph: a transmission occupies the air at every node in
range of the sender for its full airtime (connectivity sampled at transmit
start and held).  A reception decodes iff no other arrival overlaps it and
the receiver never transmits during it (half duplex, no capture).  Unicasts
run carrier sense + binary exponential backoff, then RTS/CTS/DATA/ACK or
DATA/ACK below the RTS threshold; timeouts double the contention window up
to a retry limit, then the send fails (routing treats that as a link
break).  Overheard RTS/CTS set the NAV of third parties.  Broadcasts take
a random jitter then a single unacknowledged frame.

The ``ideal_channel`` switch replaces all of this with lossless ordered
delivery (airtime + per-link latency, no contention, no energy): protocol
arithmetic tests need a channel that cannot reorder or drop.
"""

from __future__ import annotations

from collections import OrderedDict, deque

from .packets import control_kind

RTS, CTS, DATA, ACK, BCAST = "RTS", "CTS", "DATA", "ACK", "BCAST"


class Frame:
    __slots__ = ("kind", "src", "dst", "payload", "size", "dur", "fid")

    def __init__(self, kind, src, dst, payload, size, dur, fid):
        self.kind = kind
        self.src = src
        self.dst = dst          # None for broadcast
        self.payload = payload
        self.size = size        # bytes on air
        self.dur = dur          # NAV remaining after this frame, us
        self.fid = fid


class _Arrival:
    __slots__ = ("frame", "t0", "t1", "ok", "during_own_tx")

    def __init__(self, frame, t0, t1):
        self.frame = frame
        self.t0 = t0
        self.t1 = t1
        self.ok = True
        self.during_own_tx = False


class _Job:
    __slots__ = ("dst", "payload", "size", "use_rts", "on_done", "attempts",
                 "cw", "state", "timer", "timeout", "fid")

    def __init__(self, dst, payload, size, use_rts, on_done, cw, fid):
        self.dst = dst          # None = broadcast
        self.payload = payload
        self.size = size
        self.use_rts = use_rts
        self.on_done = on_done
        self.attempts = 0
        self.cw = cw
        self.state = "queued"
        self.timer = None
        self.timeout = None
        self.fid = fid


class _NodeState:
    __slots__ = ("rx_hook", "alive", "queue", "job", "nav_until", "tx_until",
                 "hold_until", "arrivals", "rng", "seen_fids")

    def __init__(self, rx_hook, rng):
        self.rx_hook = rx_hook
        self.alive = True
        self.queue = deque()
        self.job = None
        self.nav_until = 0
        self.tx_until = 0
        self.hold_until = 0   # responder-side reservation around a granted exchange
        self.arrivals = []
        self.rng = rng
        self.seen_fids = OrderedDict()


class Mac:
    def __init__(self, sched, world, cfg, sizes, energy=None, metrics=None,
                 rng_factory=None, trace=None, audit=None):
        self.sched = sched
        self.world = world
        self.cfg = cfg
        self.sizes = sizes
        self.energy = energy
        self.metrics = metrics
        self.trace = trace
        self.audit = audit
        self._rng_factory = rng_factory or (lambda node: None)
        self._state = {}
        self._fid = 0
        lat = world.max_latency_us()
        self._cts_timeout = cfg.sifs_us + self._air(cfg.cts_bytes) + 2 * lat + 2 * cfg.slot_us
        self._ack_timeout = cfg.sifs_us + self._air(cfg.ack_bytes) + 2 * lat + 2 * cfg.slot_us
        self._jitter_us = int(round(cfg.broadcast_jitter_s * 1_000_000))

    # --- public API -------------------------------------------------------

    def attach(self, node, rx_hook):
        self._state[node] = _NodeState(rx_hook, self._rng_factory(node))

    def node_died(self, node):
        ns = self._state[node]
        ns.alive = False
        if ns.job is not None:
            self.sched.cancel(ns.job.timer)
            self.sched.cancel(ns.job.timeout)
            ns.job = None
        ns.queue.clear()

    def alive(self, node):
        return self._state[node].alive

    def payload_air_us(self, payload):
        return self._air(payload.wire_size(self.sizes) + self.cfg.header_bytes)

    def send_unicast(self, src, dst, payload, on_done=None):
        ns = self._state[src]
        if not ns.alive:
            return
        if self.cfg.ideal_channel:
            self._ideal_unicast(src, dst, payload, on_done)
            return
        size = payload.wire_size(self.sizes) + self.cfg.header_bytes
        job = _Job(dst, payload, size, self._arm_rts(payload), on_done, self.cfg.cw_min, self._next_fid())
        ns.queue.append(job)
        self._maybe_start(src)

    def send_broadcast(self, src, payload):
        ns = self._state[src]
        if not ns.alive:
            return
        if self.cfg.ideal_channel:
            self._ideal_broadcast(src, payload)
            return
        size = payload.wire_size(self.sizes) + self.cfg.header_bytes
        job = _Job(None, payload, size, False, None, self.cfg.cw_min, self._next_fid())
        ns.queue.append(job)
        self._maybe_start(src)

    # --- ideal channel ------------------------------------------------------

    def _ideal_unicast(self, src, dst, payload, on_done):
        air = self.payload_air_us(payload)
        self._count_tx(src, payload)
        if self.world.in_range(src, dst, self.sched.now) and self._state[dst].alive:
            at = self.sched.now + air + self.world.latency_us(src, dst)
            self.sched.schedule(at, self._ideal_deliver, dst, payload, src)
            if on_done:
                self.sched.schedule(at, on_done, True, None)
        elif on_done:
            self.sched.schedule(self.sched.now + air, on_done, False, "no_cts")

    def _ideal_broadcast(self, src, payload):
        air = self.payload_air_us(payload)
        self._count_tx(src, payload)
        for nbr in self.world.neighbors_of(src, self.sched.now):
            if self._state[nbr].alive:
                at = self.sched.now + air + self.world.latency_us(src, nbr)
                self.sched.schedule(at, self._ideal_deliver, nbr, payload, src)

    def _ideal_deliver(self, node, payload, frm):
        ns = self._state[node]
        if ns.alive:
            ns.rx_hook(payload, frm)

    # --- DCF: queueing and contention ---------------------------------------

    def _next_fid(self):
        self._fid += 1
        return self._fid

    def _air(self, size_bytes):
        return (size_bytes * 8 * 1_000_000) // self.cfg.bitrate

    def _arm_rts(self, payload):
        mode = self.cfg.rts_cts
        if mode == "on":
            return True
        if mode == "off":
            return False
        return payload.wire_size(self.sizes) > self.cfg.rts_threshold

    def _maybe_start(self, node):
        ns = self._state[node]
        if ns.job is not None or not ns.queue:
            return
        ns.job = ns.queue.popleft()
        ns.job.state = "contend"
        if ns.job.dst is None and self._jitter_us > 0:
            delay = ns.rng.randint(0, self._jitter_us)
            ns.job.timer = self.sched.schedule_in(delay, self._begin_contend, node)
        else:
            self._begin_contend(node)

    def _busy_horizon(self, ns):
        busy = ns.tx_until
        for a in ns.arrivals:
            if a.t1 > busy:
                busy = a.t1
        return busy

    def _medium_busy(self, ns, now):
        if ns.tx_until > now:
            return True
        for a in ns.arrivals:
            if a.t0 <= now < a.t1:
                return True
        return False

    def _begin_contend(self, node):
        ns = self._state[node]
        if not ns.alive or ns.job is None:
            return
        start = max(self.sched.now, ns.nav_until, ns.hold_until, self._busy_horizon(ns))
        slots = ns.rng.randint(0, ns.job.cw)
        at = start + self.cfg.difs_us + slots * self.cfg.slot_us
        ns.job.state = "backoff"
        ns.job.timer = self.sched.schedule(at, self._tx_attempt, node)

    def _tx_attempt(self, node):
        ns = self._state[node]
        if not ns.alive or ns.job is None:
            return
        now = self.sched.now
        if now < ns.nav_until or now < ns.hold_until or self._medium_busy(ns, now):
            self._begin_contend(node)  # deferral: fresh backoff, same window
            return
        job = ns.job
        job.attempts += 1
        if self.audit is not None:
            self.audit.setdefault("initiations", []).append((node, now, ns.nav_until))
        if job.dst is None:
            frame = Frame(BCAST, node, None, job.payload, job.size, 0, job.fid)
            self._transmit(node, frame)
            end = now + self._air(job.size)
            self.sched.schedule(end, self._complete, node, True, None)
        elif job.use_rts:
            data_air = self._air(job.size)
            dur = (3 * self.cfg.sifs_us + self._air(self.cfg.cts_bytes)
                   + data_air + self._air(self.cfg.ack_bytes))
            frame = Frame(RTS, node, job.dst, None, self.cfg.rts_bytes, dur, job.fid)
            self._transmit(node, frame)
            job.state = "await_cts"
            end = now + self._air(self.cfg.rts_bytes)
            job.timeout = self.sched.schedule(end + self._cts_timeout, self._no_cts, node)
        else:
            frame = Frame(DATA, node, job.dst, job.payload, job.size,
                          self.cfg.sifs_us + self._air(self.cfg.ack_bytes), job.fid)
            self._transmit(node, frame)
            job.state = "await_ack"
            end = now + self._air(job.size)
            job.timeout = self.sched.schedule(end + self._ack_timeout, self._no_ack, node)

    # --- the air ------------------------------------------------------------

    def _transmit(self, node, frame):
        ns = self._state[node]
        now = self.sched.now
        air = self._air(frame.size)
        t1 = now + air
        ns.tx_until = max(ns.tx_until, t1)
        # half duplex: anything arriving during our own transmission is lost
        for a in ns.arrivals:
            if a.t0 < t1 and now < a.t1:
                a.ok = False
                a.during_own_tx = True
        if self.energy is not None:
            self.energy.charge(node, "tx", air)
        if frame.payload is not None:
            self._count_tx(node, frame.payload)
        if self.trace is not None:
            self.trace.emit(now, node, "mac_tx", kind=frame.kind, dst=frame.dst or "*",
                            size=frame.size)
        if self.audit is not None:
            self.audit.setdefault("tx", []).append((node, now, t1, frame.kind))
        for rcv in self.world.neighbors_of(node, now):
            rs = self._state[rcv]
            if not rs.alive:
                continue
            lat = self.world.latency_us(node, rcv)
            arr = _Arrival(frame, now + lat, t1 + lat)
            if rs.tx_until > arr.t0:
                arr.ok = False
                arr.during_own_tx = True
            for other in rs.arrivals:
                if other.t0 < arr.t1 and arr.t0 < other.t1:
                    if other.ok and self.metrics is not None:
                        self.metrics.on_collision(rcv, other.frame.kind, frame.kind, arr.t0)
                    other.ok = False
                    arr.ok = False
            rs.arrivals.append(arr)
            self.sched.schedule(arr.t1, self._arrival_end, rcv, arr)

    def _count_tx(self, node, payload):
        if self.metrics is not None:
            self.metrics.on_payload_tx(node, payload)

    def _arrival_end(self, rcv, arr):
        rs = self._state[rcv]
        rs.arrivals.remove(arr)
        if not rs.alive:
            return
        if arr.during_own_tx:
            return  # radio was talking; no decode, no extra charge
        decoded = arr.ok
        if self.energy is not None:
            frame = arr.frame
            to_me = frame.dst == rcv or frame.kind == BCAST
            role = "rx" if (decoded and to_me) else "overhear"
            self.energy.charge(rcv, role, arr.t1 - arr.t0)
            if not self._state[rcv].alive:
                return  # the charge killed it mid-listen
        if decoded:
            self._decode(rcv, arr)

    # --- frame handling -------------------------------------------------------

    def _decode(self, rcv, arr):
        frame = arr.frame
        ns = self._state[rcv]
        now = self.sched.now
        if self.audit is not None:
            self.audit.setdefault("decoded", []).append((rcv, arr.t0, arr.t1, frame.kind))
        if frame.kind in (RTS, CTS) and frame.dst != rcv:
            ns.nav_until = max(ns.nav_until, now + frame.dur)
            return
        if frame.kind == BCAST:
            ns.rx_hook(frame.payload, frame.src)
            return
        if frame.dst != rcv:
            return  # promiscuous overhearing is not delivered upward
        if frame.kind == RTS:
            if ns.nav_until > now or ns.tx_until > now:
                return  # virtual carrier sense forbids the CTS
            dur = max(frame.dur - self.cfg.sifs_us - self._air(self.cfg.cts_bytes), 0)
            cts = Frame(CTS, rcv, frame.src, None, self.cfg.cts_bytes, dur, frame.fid)
            # having granted the exchange, sit out its whole window
            ns.hold_until = max(ns.hold_until,
                                now + self.cfg.sifs_us + self._air(self.cfg.cts_bytes) + dur)
            self.sched.schedule(now + self.cfg.sifs_us, self._respond, rcv, cts)
        elif frame.kind == CTS:
            job = ns.job
            if job is not None and job.state == "await_cts" and frame.src == job.dst:
                self.sched.cancel(job.timeout)
                data_air = self._air(job.size)
                data = Frame(DATA, rcv, job.dst, job.payload, job.size,
                             self.cfg.sifs_us + self._air(self.cfg.ack_bytes), job.fid)
                self.sched.schedule(now + self.cfg.sifs_us, self._send_job_data, rcv, data, data_air)
        elif frame.kind == DATA:
            ack = Frame(ACK, rcv, frame.src, None, self.cfg.ack_bytes, 0, frame.fid)
            ns.hold_until = max(ns.hold_until,
                                now + self.cfg.sifs_us + self._air(self.cfg.ack_bytes))
            self.sched.schedule(now + self.cfg.sifs_us, self._respond, rcv, ack)
            if frame.fid not in ns.seen_fids:
                ns.seen_fids[frame.fid] = True
                if len(ns.seen_fids) > 512:
                    ns.seen_fids.popitem(last=False)
                ns.rx_hook(frame.payload, frame.src)
        elif frame.kind == ACK:
            job = ns.job
            if job is not None and job.state == "await_ack" and frame.src == job.dst:
                self.sched.cancel(job.timeout)
                self._complete(rcv, True, None)

    def _respond(self, node, frame):
        # SIFS responses skip carrier sense, but a busy radio cannot answer
        ns = self._state[node]
        if not ns.alive or ns.tx_until > self.sched.now:
            return
        self._transmit(node, frame)

    def _send_job_data(self, node, frame, data_air):
        ns = self._state[node]
        if not ns.alive or ns.job is None or ns.tx_until > self.sched.now:
            return
        self._transmit(node, frame)
        ns.job.state = "await_ack"
        ns.job.timeout = self.sched.schedule(
            self.sched.now + data_air + self._ack_timeout, self._no_ack, node)

    # --- retries and completion -----------------------------------------------

    def _no_cts(self, node):
        self._retry_or_fail(node, "no_cts")

    def _no_ack(self, node):
        self._retry_or_fail(node, "no_ack")

    def _retry_or_fail(self, node, reason):
        ns = self._state[node]
        job = ns.job
        if not ns.alive or job is None:
            return
        if job.attempts > self.cfg.retry_limit:
            self._complete(node, False, reason)
            return
        job.cw = min(job.cw * 2 + 1, self.cfg.cw_max)
        job.state = "contend"
        self._begin_contend(node)

    def _complete(self, node, ok, reason):
        ns = self._state[node]
        job = ns.job
        if job is None:
            return
        self.sched.cancel(job.timer)
        self.sched.cancel(job.timeout)
        ns.job = None
        if self.audit is not None:
            self.audit.setdefault("attempts", []).append((node, job.attempts))
        if job.on_done is not None:
            job.on_done(ok, reason)
        self._maybe_start(node)
