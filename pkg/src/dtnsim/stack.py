"""Link queues, packet framing, and next-hop selection.

Every node owns two transmit pipelines: a wired one for backbone hops and a
radio one for anything touching a mobile.  Both are drop-tail with the same
capacity and service rate; a packet admitted while the pipeline is busy
waits its turn, and a packet arriving at a full pipeline is dropped at the
MAC layer.

Routing is hop-by-hop.  Backbone hops are static; wireless hops are chosen
greedily: among in-range same-cluster candidates strictly closer to the
geographic target, take the closest (lowest node id on ties).  Next-hop
choices are cached per node and invalidated whenever that node's radio
neighborhood changes; each fresh evaluation is accounted as one routing
control exchange.
"""

from typing import Callable, List, Optional

from .config import SimConfig, US_PER_S
from .mobility import MOBILE, WIRED, Topology

# Queued packet kinds.
DATA = 0
CACK = 1

PTYPES = ("dtn", "ack")


class Packet:
    """One framed transmission: a bundle copy or a custody acknowledgment."""

    __slots__ = ("pid", "kind", "size", "flow", "hop_src", "hop_dst", "bundle")

    def __init__(self, pid: int, kind: int, size: int, flow: int,
                 hop_src: int, hop_dst: int, bundle) -> None:
        self.pid = pid
        self.kind = kind
        self.size = size
        self.flow = flow
        self.hop_src = hop_src
        self.hop_dst = hop_dst
        self.bundle = bundle


def service_us(size_bytes: int, rate_bps: int) -> int:
    """Transmission time of a frame, floored to whole microseconds."""
    return size_bytes * 8 * US_PER_S // rate_bps


class Iface:
    """Drop-tail transmit pipeline: admission either books a start slot or drops.

    Only data frames count against the drop-tail depth.  Control frames
    (tiny, fixed-size) ride the same transmitter but are never refused,
    mirroring a priority discipline with a separate control queue.
    """

    __slots__ = ("free_at_us", "waiting", "capacity")

    def __init__(self, capacity: int) -> None:
        self.free_at_us = 0
        self.waiting = 0
        self.capacity = capacity

    def admit(self, now_us: int, duration_us: int,
              priority: bool = False) -> Optional[int]:
        """Book a service slot; returns its start time, or None on drop-tail."""
        if not priority and self.waiting >= self.capacity:
            return None
        self.waiting += 1
        start = self.free_at_us
        if start < now_us:
            start = now_us
        self.free_at_us = start + duration_us
        return start


class GreedyRouter:
    """Distance-greedy wireless forwarding over a static backbone."""

    def __init__(self, topo: Topology, config: SimConfig) -> None:
        self.topo = topo
        self.config = config
        n = topo.n_nodes
        # Neighborhood epoch per node; bumped by the mobility tick when the
        # node's radio contact set changes.  Cache entries from an older
        # epoch are stale.
        self.epochs = [0] * n
        self._cache: List[dict] = [dict() for _ in range(n)]
        self._cand = [topo.mobile_gids(1) + [topo.base_of_cluster(1)],
                      topo.mobile_gids(2) + [topo.base_of_cluster(2)]]

    def invalidate(self, gid: int) -> None:
        self.epochs[gid] += 1

    def next_hop(self, gid: int, dst: int, flow: int, t_us: int,
                 on_probe: Optional[Callable] = None) -> Optional[int]:
        """Pick the next hop from gid toward dst, or None when stranded.

        on_probe(gid, found, flow) is invoked once per fresh wireless
        evaluation, after the candidate scan.
        """
        topo = self.topo
        kinds = topo.kinds
        mobile_dst = kinds[dst] == MOBILE
        if mobile_dst:
            target_cluster = topo.cluster_of(dst)
        else:
            if kinds[gid] != MOBILE:
                return dst          # backbone hop, always up
            # Mobile aiming at the backbone: route toward its own gateway.
            target_cluster = topo.cluster_of(gid)
        gateway = topo.base_of_cluster(target_cluster)

        if kinds[gid] != MOBILE and gid != gateway:
            return gateway          # wired host or far-side base station
        # From here the hop is a radio scan into the target cluster.

        cache = self._cache[gid]
        epoch = self.epochs[gid]
        hit = cache.get(dst)
        if hit is not None and hit[0] == epoch:
            return hit[1]

        anchor = dst if kinds[dst] == MOBILE else gateway
        ax, ay = topo.position(anchor, t_us)
        px, py = topo.position(gid, t_us)
        best_d = (px - ax) ** 2 + (py - ay) ** 2
        best = None
        r2 = self.config.tx_range ** 2
        for c in self._cand[target_cluster - 1]:
            if c == gid:
                continue
            cx, cy = topo.position(c, t_us)
            if (cx - px) ** 2 + (cy - py) ** 2 > r2:
                continue
            d = (cx - ax) ** 2 + (cy - ay) ** 2
            if d < best_d:
                best_d = d
                best = c
        cache[dst] = (epoch, best)
        if on_probe is not None:
            on_probe(gid, best, flow)
        return best
