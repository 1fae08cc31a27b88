"""One simulation run: store-and-forward bundle delivery over the field.

Per hop the life of a bundle is: the custodian picks a next hop (greedy,
cached per radio neighborhood), books a slot on the right transmit
pipeline, and starts a retry timer.  At service start the link is checked
again; a hop that broke while the packet queued is re-stored silently.  A
hop that breaks mid-flight is a routing-layer drop.  On arrival the
receiver either delivers (it is the destination) or accepts custody, and
in both cases returns a one-hop custody acknowledgment that releases the
sender's shadow copy and its window slot.  A sender whose acknowledgment
never comes retries with doubled backoff; if custody has meanwhile moved
on, the retry releases the shadow without resending.

Trace policy: bundle and acknowledgment sends are agent-level records at
service start; receives are agent-level at the final destination and
routing-layer at intermediate custodians; route evaluations appear as
routing-control pairs; drops carry the layer that discarded the packet
(RTR for broken links, MAC for full queues).
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Set, Tuple

import numpy as np

from . import engine as ev
from .bundles import Bundle, CustodyStore, segment_message
from .config import SimConfig
from .engine import Engine, RunSummary
from .mobility import MOBILE, WIRED, Topology
from .scenarios import ScenarioSpec
from .stack import CACK, DATA, GreedyRouter, Iface, Packet, service_us
from .trace import NullSink


@dataclass
class RunResult:
    """Outcome of one run: dispatch summary and per-flow accounting."""

    summary: RunSummary
    created: Dict[int, int]
    delivered: Dict[int, Set[int]]
    trace_emitted: int
    final_clock_us: int


class Simulation:
    """Deterministic run of one scenario cell."""

    def __init__(self, spec: ScenarioSpec, config: Optional[SimConfig] = None,
                 sink=None, invariant_hook: Optional[Callable] = None) -> None:
        self.spec = spec
        self.config = config or SimConfig()
        self.config.validate()
        self.sink = sink if sink is not None else NullSink()
        self.invariant_hook = invariant_hook

        cfg = self.config
        self.topo = Topology(spec.mobile_count, spec.pause_s, spec.seed,
                             cfg, spec.fixed_positions)
        self.router = GreedyRouter(self.topo, cfg)
        self.engine = Engine()

        n = self.topo.n_nodes
        self.stores: List[CustodyStore] = [CustodyStore() for _ in range(n)]
        self.wired_if: List[Iface] = [Iface(cfg.queue_capacity) for _ in range(n)]
        self.radio_if: List[Iface] = [Iface(cfg.queue_capacity) for _ in range(n)]
        self.watch: Set[int] = set()
        self._masks: Dict[int, Tuple[np.ndarray, bool]] = {}
        self._link_up: Set[Tuple[int, int]] = set()

        self.created: Dict[int, int] = {}
        self.delivered: Dict[int, Set[int]] = {}
        self.active: Dict[int, bool] = {}
        self.bundles: List[Bundle] = []
        self._pid = 0
        self._bid = 0

        eng = self.engine
        eng.register(ev.MOBILITY_UPDATE, self._on_tick)
        eng.register(ev.TRAFFIC_START, self._on_traffic_start)
        eng.register(ev.TRAFFIC_STOP, self._on_traffic_stop)
        eng.register(ev.QUEUE_SERVICE, self._on_service)
        eng.register(ev.PACKET_ARRIVAL, self._on_arrival)
        eng.register(ev.CUSTODY_TIMER, self._on_retry)
        eng.register(ev.TRACE_FLUSH, self._on_flush)

        tick = cfg.tick_us
        horizon = cfg.horizon_us
        for k in range(horizon // tick + 1):
            eng.schedule(k * tick, ev.MOBILITY_UPDATE, k)
        for ci, conn in enumerate(spec.connections):
            eng.schedule(int(round(conn.start_s * 1_000_000)), ev.TRAFFIC_START, ci)
            eng.schedule(int(round(conn.stop_s * 1_000_000)), ev.TRAFFIC_STOP, ci)
        eng.schedule(horizon, ev.TRACE_FLUSH)

        # Geometry caches for the tick handler.
        self._grid = self.topo.tick_grid()
        self._cluster_idx = (
            np.array([g - 4 for g in self.topo.mobile_gids(1)], dtype=np.intp),
            np.array([g - 4 for g in self.topo.mobile_gids(2)], dtype=np.intp),
        )
        self._r2 = cfg.tx_range * cfg.tx_range
        self._labels = self.topo.labels
        self._kinds = self.topo.kinds

    # -- plumbing ---------------------------------------------------------

    def _next_pid(self) -> int:
        pid = self._pid
        self._pid = pid + 1
        return pid

    def _iface(self, a: int, b: int) -> Iface:
        if self._kinds[a] == MOBILE or self._kinds[b] == MOBILE:
            return self.radio_if[a]
        return self.wired_if[a]

    def _dur(self, size: int) -> int:
        return size * 8 * 1_000_000 // self.config.service_rate_bps

    def _watch_push(self, gid: int, bundle: Bundle) -> None:
        self.stores[gid].push(bundle)
        if self._kinds[gid] != WIRED:
            self.watch.add(gid)

    def _watch_sync(self, gid: int) -> None:
        if not self.stores[gid].pending:
            self.watch.discard(gid)
            self._masks.pop(gid, None)

    def _emit_probe(self, gid: int, found: Optional[int], flow: int) -> None:
        t = self.engine.now_us
        pid = self._next_pid()
        size = self.config.route_ctl_bytes
        emit = self.sink.emit
        emit("s", t, self._labels[gid], "RTR", pid, "rtc", size, flow)
        if found is not None:
            emit("r", t, self._labels[found], "RTR", pid, "rtc", size, flow)

    # -- handlers ---------------------------------------------------------

    def _on_tick(self, t: int, k: int, _b) -> None:
        if not self.watch:
            return
        grid_k = self._grid[k]
        topo = self.topo
        r2 = self._r2
        for gid in sorted(self.watch):
            cluster = topo.cluster_of(gid)
            idx = self._cluster_idx[cluster - 1]
            if self._kinds[gid] == MOBILE:
                px, py = grid_k[gid - 4]
            else:
                px, py = topo.static_pos[gid]
            xs = grid_k[idx, 0]
            ys = grid_k[idx, 1]
            mask = ((xs - px) ** 2 + (ys - py) ** 2 <= r2)
            if self._kinds[gid] == MOBILE:
                bx, by = topo.static_pos[topo.base_of_cluster(cluster)]
                near_base = bool((bx - px) ** 2 + (by - py) ** 2 <= r2)
            else:
                near_base = True
            old = self._masks.get(gid)
            if old is not None and old[1] == near_base \
                    and np.array_equal(old[0], mask):
                continue
            self._masks[gid] = (mask, near_base)
            self.router.invalidate(gid)
            self._forward(gid, t)

    def _link_break(self, gid: int, nh: int, t: int, pkt: Packet) -> None:
        """Charge a contact break to the first frame that dies on it.

        Later frames caught on the same dead link are reclaimed quietly;
        the link must prove itself up again before another break counts.
        """
        key = (gid, nh)
        if key not in self._link_up:
            return
        self._link_up.remove(key)
        ptype = "dtn" if pkt.kind == DATA else "ack"
        self.sink.emit("d", t, self._labels[gid], "RTR", pkt.pid, ptype,
                       pkt.size, pkt.flow)

    def _on_traffic_start(self, t: int, ci: int, _b) -> None:
        conn = self.spec.connections[ci]
        cfg = self.config
        sizes = segment_message(cfg.message_bytes, cfg.data_payload_bytes)
        src = conn.src_gid
        store = self.stores[src]
        for seq, payload in enumerate(sizes):
            bundle = Bundle(self._bid, conn.flow_id, seq, payload,
                            cfg.data_header_bytes, src, conn.dst_gid)
            self._bid += 1
            bundle.chain.append((src, t))
            store.push(bundle)
            self.bundles.append(bundle)
        if self._kinds[src] != WIRED:
            self.watch.add(src)
        self.created[conn.flow_id] = len(sizes)
        self.delivered.setdefault(conn.flow_id, set())
        self.active[conn.flow_id] = True
        self._forward(src, t)

    def _on_traffic_stop(self, t: int, ci: int, _b) -> None:
        self.active[self.spec.connections[ci].flow_id] = False

    def _forward(self, gid: int, t: int) -> None:
        """Push out as much pending custody as window, queue, and radio allow."""
        store = self.stores[gid]
        if not store.pending:
            return
        topo = self.topo
        router = self.router
        window = self.config.custody_window
        kinds = self._kinds
        for flow in store.flows():
            while True:
                bundle = store.peek(flow)
                if bundle is None:
                    break
                if store.window_used(flow) >= window:
                    break
                nh = router.next_hop(gid, bundle.dst_gid, flow, t, self._emit_probe)
                if nh is None:
                    break
                iface = self._iface(gid, nh)
                if iface.waiting >= iface.capacity:
                    self._watch_sync(gid)
                    return
                if (kinds[gid] == MOBILE or kinds[nh] == MOBILE) \
                        and not topo.in_range(gid, nh, t):
                    break
                store.pop(flow)
                if not self._initiate(gid, nh, bundle, t,
                                      self.config.retry_initial_us):
                    return
        self._watch_sync(gid)

    def _initiate(self, gid: int, nh: int, bundle: Bundle, t: int,
                  backoff_us: int) -> bool:
        """Commit one transmission attempt; False when drop-tail refused it."""
        pid = self._next_pid()
        store = self.stores[gid]
        store.open_attempt(bundle, pid, nh, pid, backoff_us)
        pkt = Packet(pid, DATA, bundle.wire_size, bundle.flow, gid, nh, bundle)
        iface = self._iface(gid, nh)
        start = iface.admit(t, self._dur(pkt.size))
        if start is None:
            self.sink.emit("d", t, self._labels[gid], "MAC", pid, "dtn",
                           pkt.size, pkt.flow)
            store.close_attempt(bundle)
            self._watch_push(gid, bundle)
            return False
        self.engine.schedule(start, ev.QUEUE_SERVICE, gid, pkt)
        self.engine.schedule(t + backoff_us, ev.CUSTODY_TIMER, gid,
                             (bundle, pid))
        return True

    def _on_service(self, t: int, gid: int, pkt: Packet) -> None:
        nh = pkt.hop_dst
        kinds = self._kinds
        radio = kinds[gid] == MOBILE or kinds[nh] == MOBILE
        iface = self.radio_if[gid] if radio else self.wired_if[gid]
        iface.waiting -= 1
        if radio and not self.topo.in_range(gid, nh, t):
            # Link went away while the packet queued: the first frame to
            # hit the dead link is charged, the rest of the queue pulls
            # its custody copies back quietly.
            self._link_break(gid, nh, t, pkt)
            if pkt.kind == DATA:
                store = self.stores[gid]
                att = store.get_attempt(pkt.bundle)
                if att is not None and att.pid == pkt.pid:
                    store.close_attempt(pkt.bundle)
                    self._watch_push(gid, pkt.bundle)
            return
        if radio:
            self._link_up.add((gid, nh))
        ptype = "dtn" if pkt.kind == DATA else "ack"
        self.sink.emit("s", t, self._labels[gid], "AGT", pkt.pid, ptype,
                       pkt.size, pkt.flow)
        self.engine.schedule(t + self._dur(pkt.size) + self.config.propagation_us,
                             ev.PACKET_ARRIVAL, pkt)

    def _on_arrival(self, t: int, pkt: Packet, _b) -> None:
        gid = pkt.hop_dst
        src = pkt.hop_src
        kinds = self._kinds
        radio = kinds[gid] == MOBILE or kinds[src] == MOBILE
        if radio and not self.topo.in_range(src, gid, t - self.config.propagation_us):
            # Receiver slipped out of range mid-flight: drop at the sender.
            self._link_break(src, gid, t, pkt)
            return
        if pkt.kind == DATA:
            self._receive_data(t, gid, src, pkt)
        else:
            self._receive_cack(t, gid, pkt)

    def _receive_data(self, t: int, gid: int, src: int, pkt: Packet) -> None:
        bundle = pkt.bundle
        if bundle.delivered or bundle.custodian != src:
            # Duplicate of a bundle that already moved on; just re-ack so
            # the sender clears its shadow copy.
            self._send_cack(gid, src, pkt.flow, bundle, t)
            return
        if gid == bundle.dst_gid:
            bundle.delivered = True
            bundle.custodian = gid
            bundle.chain.append((gid, t))
            self.delivered[pkt.flow].add(bundle.seq)
            self.sink.emit("r", t, self._labels[gid], "AGT", pkt.pid, "dtn",
                           pkt.size, pkt.flow)
            self._send_cack(gid, src, pkt.flow, bundle, t)
        else:
            bundle.custodian = gid
            bundle.chain.append((gid, t))
            self.sink.emit("r", t, self._labels[gid], "RTR", pkt.pid, "dtn",
                           pkt.size, pkt.flow)
            self._watch_push(gid, bundle)
            self._send_cack(gid, src, pkt.flow, bundle, t)
            self._forward(gid, t)

    def _receive_cack(self, t: int, gid: int, pkt: Packet) -> None:
        self.sink.emit("r", t, self._labels[gid], "AGT", pkt.pid, "ack",
                       pkt.size, pkt.flow)
        store = self.stores[gid]
        if store.get_attempt(pkt.bundle) is not None:
            store.close_attempt(pkt.bundle)
            self._forward(gid, t)

    def _send_cack(self, gid: int, to: int, flow: int, bundle: Bundle,
                   t: int) -> None:
        pid = self._next_pid()
        size = self.config.custody_ack_bytes
        pkt = Packet(pid, CACK, size, flow, gid, to, bundle)
        iface = self._iface(gid, to)
        start = iface.admit(t, self._dur(size), priority=True)
        if start is None:
            self.sink.emit("d", t, self._labels[gid], "MAC", pid, "ack",
                           size, flow)
            return
        self.engine.schedule(start, ev.QUEUE_SERVICE, gid, pkt)

    def _on_retry(self, t: int, gid: int, payload: Tuple[Bundle, int]) -> None:
        bundle, token = payload
        store = self.stores[gid]
        att = store.get_attempt(bundle)
        if att is None or att.token != token:
            return
        if bundle.delivered or bundle.custodian != gid:
            # Custody moved on but the ack never made it back; the shadow
            # copy has nothing left to guarantee.
            store.close_attempt(bundle)
            self._forward(gid, t)
            return
        store.close_attempt(bundle)
        backoff = att.backoff_us * 2
        cap = self.config.retry_cap_us
        if backoff > cap:
            backoff = cap
        nh = self.router.next_hop(gid, bundle.dst_gid, bundle.flow, t,
                                  self._emit_probe)
        kinds = self._kinds
        if nh is None or ((kinds[gid] == MOBILE or kinds[nh] == MOBILE)
                          and not self.topo.in_range(gid, nh, t)):
            self._watch_push(gid, bundle)
            return
        self._initiate(gid, nh, bundle, t, backoff)

    def _on_flush(self, t: int, _a, _b) -> None:
        self.sink.flush()

    # -- entry ------------------------------------------------------------

    def run(self) -> RunResult:
        hook = None
        if self.invariant_hook is not None:
            checker = self.invariant_hook
            hook = lambda t: checker(self, t)
        summary = self.engine.run_until(self.config.horizon_us, hook)
        self.sink.flush()
        return RunResult(
            summary=summary,
            created=dict(self.created),
            delivered={f: set(s) for f, s in self.delivered.items()},
            trace_emitted=self.sink.emitted,
            final_clock_us=summary.final_clock_us,
        )
