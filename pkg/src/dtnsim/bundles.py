"""Bundle records, message segmentation, and per-node custody state.

A bundle is the unit of custody.  Exactly one node is custodian of an
undelivered bundle at any instant; a transfer only commits when the
receiver's acknowledgment is implied by its acceptance, and the sender
keeps a shadow copy until the one-hop custody acknowledgment arrives.  The
chain records every custodian in order with the acceptance time.
"""

import heapq
from typing import Dict, List, Optional, Tuple


def segment_message(total_bytes: int, segment_bytes: int = 1460) -> List[int]:
    """Split a message into bundle payload sizes; the tail may run short."""
    if total_bytes <= 0:
        raise ValueError("message must carry at least one byte")
    if segment_bytes <= 0:
        raise ValueError("segment size must be positive")
    full, rest = divmod(total_bytes, segment_bytes)
    sizes = [segment_bytes] * full
    if rest:
        sizes.append(rest)
    return sizes


class Bundle:
    """One custody-transferred segment of a flow's message."""

    __slots__ = ("bundle_id", "flow", "seq", "payload", "wire_size",
                 "src_gid", "dst_gid", "custodian", "delivered", "chain")

    def __init__(self, bundle_id: int, flow: int, seq: int, payload: int,
                 header: int, src_gid: int, dst_gid: int) -> None:
        self.bundle_id = bundle_id
        self.flow = flow
        self.seq = seq
        self.payload = payload
        self.wire_size = payload + header
        self.src_gid = src_gid
        self.dst_gid = dst_gid
        self.custodian = src_gid
        self.delivered = False
        self.chain: List[Tuple[int, int]] = []  # (gid, accept_time_us)

    def __repr__(self) -> str:
        return f"Bundle(flow={self.flow}, seq={self.seq}, custodian={self.custodian})"


class Attempt:
    """A transmission awaiting its custody ack at the sending node."""

    __slots__ = ("bundle", "pid", "next_gid", "token", "backoff_us")

    def __init__(self, bundle: Bundle, pid: int, next_gid: int,
                 token: int, backoff_us: int) -> None:
        self.bundle = bundle
        self.pid = pid
        self.next_gid = next_gid
        self.token = token
        self.backoff_us = backoff_us


class CustodyStore:
    """Bundles a node is responsible for, ordered for fair forwarding.

    pending holds accepted bundles not yet handed to the link layer, kept
    per flow in seq order; attempts holds shadow copies awaiting a custody
    ack.  The in-flight window counts attempts per flow.
    """

    __slots__ = ("pending", "attempts", "inflight")

    def __init__(self) -> None:
        self.pending: Dict[int, List[Tuple[int, Bundle]]] = {}
        self.attempts: Dict[Tuple[int, int], Attempt] = {}
        self.inflight: Dict[int, int] = {}

    def push(self, bundle: Bundle) -> None:
        heapq.heappush(self.pending.setdefault(bundle.flow, []),
                       (bundle.seq, bundle))

    def peek(self, flow: int) -> Optional[Bundle]:
        heap = self.pending.get(flow)
        return heap[0][1] if heap else None

    def pop(self, flow: int) -> Bundle:
        heap = self.pending[flow]
        _, bundle = heapq.heappop(heap)
        if not heap:
            del self.pending[flow]
        return bundle

    def has_pending(self) -> bool:
        return bool(self.pending)

    def flows(self) -> List[int]:
        return sorted(self.pending)

    def window_used(self, flow: int) -> int:
        return self.inflight.get(flow, 0)

    def open_attempt(self, bundle: Bundle, pid: int, next_gid: int,
                     token: int, backoff_us: int) -> Attempt:
        att = Attempt(bundle, pid, next_gid, token, backoff_us)
        self.attempts[(bundle.flow, bundle.seq)] = att
        self.inflight[bundle.flow] = self.inflight.get(bundle.flow, 0) + 1
        return att

    def close_attempt(self, bundle: Bundle) -> Optional[Attempt]:
        att = self.attempts.pop((bundle.flow, bundle.seq), None)
        if att is not None:
            left = self.inflight[bundle.flow] - 1
            if left:
                self.inflight[bundle.flow] = left
            else:
                del self.inflight[bundle.flow]
        return att

    def get_attempt(self, bundle: Bundle) -> Optional[Attempt]:
        return self.attempts.get((bundle.flow, bundle.seq))
