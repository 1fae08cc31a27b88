"""Topology layout, random-waypoint motion, and the connectivity predicate.

The field is a flat rectangle split into a left and a right cluster.  Each
cluster is served by one base station on the wired backbone; the two wired
hosts sit at the outer edges.  Mobile nodes roam their own cluster half
under the random-waypoint model: pause, pick a waypoint and speed, travel,
pause again.  A pause time equal to the horizon therefore freezes a node at
its initial position for the whole run.
"""

import math
from bisect import bisect_right
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import SimConfig, US_PER_S
from .engine import stream_rng

WIRED = 0
BASE = 1
MOBILE = 2

KIND_PREFIX = ("W", "B", "M")

# Plan segments are (t0_us, t1_us, x0, y0, sx, sy) with slopes in m/us;
# pauses have zero slope so the position stays bit-identical while parked.
Segment = Tuple[int, int, float, float, float, float]


def plan_from_waypoints(points: Sequence[Tuple[float, float, float]]) -> List[Segment]:
    """Build a plan from (t_s, x, y) knots; motion is linear between knots."""
    segs: List[Segment] = []
    for (t0, x0, y0), (t1, x1, y1) in zip(points, points[1:]):
        t0_us = int(round(t0 * US_PER_S))
        t1_us = int(round(t1 * US_PER_S))
        if t1_us <= t0_us:
            raise ValueError("waypoint times must strictly increase")
        dur = t1_us - t0_us
        segs.append((t0_us, t1_us, x0, y0, (x1 - x0) / dur, (y1 - y0) / dur))
    if not segs:
        t0, x0, y0 = points[0]
        t0_us = int(round(t0 * US_PER_S))
        segs.append((t0_us, t0_us + 1, x0, y0, 0.0, 0.0))
    return segs


def build_waypoint_plan(rng, rect: Tuple[float, float, float, float],
                        pause_us: int, horizon_us: int,
                        speed_min: float, speed_max: float) -> List[Segment]:
    """Random-waypoint plan covering [0, horizon]; the node pauses first."""
    x0, x1, y0, y1 = rect
    x = rng.uniform(x0, x1)
    y = rng.uniform(y0, y1)
    segs: List[Segment] = []
    t = 0
    while t < horizon_us:
        if pause_us > 0:
            segs.append((t, t + pause_us, x, y, 0.0, 0.0))
            t += pause_us
            if t >= horizon_us:
                break
        wx = rng.uniform(x0, x1)
        wy = rng.uniform(y0, y1)
        speed = rng.uniform(speed_min, speed_max)
        dist = math.hypot(wx - x, wy - y)
        dur = max(1, round(dist / speed * US_PER_S))
        segs.append((t, t + dur, x, y, (wx - x) / dur, (wy - y) / dur))
        t += dur
        x, y = wx, wy
    return segs


class Topology:
    """Node placement plus position and range queries for one run.

    Global node ids: 0..1 wired, 2..3 base stations, 4.. mobiles.  Mobile
    index i belongs to cluster 1 when 2*i < mobile_count, else cluster 2;
    each base station serves one cluster.
    """

    def __init__(self, mobile_count: int, pause_s: float, seed: int,
                 config: Optional[SimConfig] = None,
                 fixed_positions: Optional[Dict[int, Tuple[float, float]]] = None) -> None:
        if mobile_count < 1:
            raise ValueError("need at least one mobile node")
        self.config = config or SimConfig()
        cfg = self.config
        self.mobile_count = mobile_count
        self.n_nodes = 4 + mobile_count
        self.seed = seed
        self.pause_us = int(round(pause_s * US_PER_S))

        w, h = cfg.field_width, cfg.field_height
        mid = w / 2.0
        # Backbone hosts at the outer edges, one base station per cluster.
        self.static_pos: Dict[int, Tuple[float, float]] = {
            0: (0.0, h / 2.0),
            1: (w, h / 2.0),
            2: (mid / 2.0, h / 2.0),
            3: (mid + mid / 2.0, h / 2.0),
        }
        self.labels = ["W0", "W1", "B0", "B1"] + [f"M{i}" for i in range(mobile_count)]
        self.kinds = [WIRED, WIRED, BASE, BASE] + [MOBILE] * mobile_count

        self.plans: List[List[Segment]] = []
        self._plan_starts: List[List[int]] = []
        horizon_us = cfg.horizon_us
        for i in range(mobile_count):
            rect = self.cluster_rect(self.cluster_of_mobile(i))
            rng = stream_rng(seed, 1 + i)
            plan = build_waypoint_plan(rng, rect, self.pause_us, horizon_us,
                                       cfg.speed_min, cfg.speed_max)
            if fixed_positions and (4 + i) in fixed_positions:
                fx, fy = fixed_positions[4 + i]
                plan = [(0, horizon_us, fx, fy, 0.0, 0.0)]
            self.plans.append(plan)
            self._plan_starts.append([s[0] for s in plan])

        self._grid: Optional[np.ndarray] = None

    # -- cluster geometry -------------------------------------------------

    def cluster_of_mobile(self, index: int) -> int:
        return 1 if 2 * index < self.mobile_count else 2

    def cluster_of(self, gid: int) -> int:
        kind = self.kinds[gid]
        if kind == MOBILE:
            return self.cluster_of_mobile(gid - 4)
        if kind == BASE:
            return 1 if gid == 2 else 2
        return 0  # wired hosts sit on the backbone, outside both clusters

    def base_of_cluster(self, cluster: int) -> int:
        return 2 if cluster == 1 else 3

    def cluster_rect(self, cluster: int) -> Tuple[float, float, float, float]:
        w, h = self.config.field_width, self.config.field_height
        mid = w / 2.0
        if cluster == 1:
            return (0.0, mid, 0.0, h)
        return (mid, w, 0.0, h)

    def mobile_gids(self, cluster: int) -> List[int]:
        return [4 + i for i in range(self.mobile_count)
                if self.cluster_of_mobile(i) == cluster]

    # -- positions --------------------------------------------------------

    def position(self, gid: int, t_us: int) -> Tuple[float, float]:
        """Location of a node at an exact time, clamped to its plan."""
        if gid < 4:
            return self.static_pos[gid]
        plan = self.plans[gid - 4]
        starts = self._plan_starts[gid - 4]
        i = bisect_right(starts, t_us) - 1
        if i < 0:
            i = 0
        t0, t1, x0, y0, sx, sy = plan[i]
        dt = min(t_us, t1) - t0
        if dt < 0:
            dt = 0
        return (x0 + dt * sx, y0 + dt * sy)

    def replace_plan(self, mobile_index: int, plan: List[Segment]) -> None:
        """Swap in a scripted plan (test hook); invalidates the tick grid."""
        self.plans[mobile_index] = plan
        self._plan_starts[mobile_index] = [s[0] for s in plan]
        self._grid = None

    def tick_grid(self) -> np.ndarray:
        """Mobile positions sampled on the mobility tick lattice.

        Shape (n_ticks + 1, mobile_count, 2).  Built lazily, once per run.
        """
        if self._grid is not None:
            return self._grid
        cfg = self.config
        tick = cfg.tick_us
        n_ticks = cfg.horizon_us // tick
        grid = np.empty((n_ticks + 1, self.mobile_count, 2), dtype=np.float64)
        for m, plan in enumerate(self.plans):
            # Ticks before the first segment hold its start position.
            first_t0, _, fx, fy, _, _ = plan[0]
            lead = min(-(-first_t0 // tick), n_ticks + 1)
            if lead > 0:
                grid[:lead, m, 0] = fx
                grid[:lead, m, 1] = fy
            for t0, t1, x0, y0, sx, sy in plan:
                k0 = -(-t0 // tick)            # ceil
                k1 = min((t1 - 1) // tick, n_ticks)
                if k1 < k0:
                    continue
                ks = np.arange(k0, k1 + 1, dtype=np.float64)
                dt = ks * tick - t0
                grid[k0:k1 + 1, m, 0] = x0 + dt * sx
                grid[k0:k1 + 1, m, 1] = y0 + dt * sy
            # Ticks past the final segment hold its end position.
            t0, t1, x0, y0, sx, sy = plan[-1]
            k0 = max(-(-t1 // tick), 0)
            if k0 <= n_ticks:
                grid[k0:, m, 0] = x0 + (t1 - t0) * sx
                grid[k0:, m, 1] = y0 + (t1 - t0) * sy
        self._grid = grid
        return grid

    # -- connectivity -----------------------------------------------------

    def in_range(self, a: int, b: int, t_us: int) -> bool:
        """Symmetric link predicate at time t.

        Backbone pairs (wired/base) are always connected; a wired host
        never talks radio, so wired-mobile is never connected.  Radio pairs
        are connected within the configured disk.
        """
        if a == b:
            return True
        ka, kb = self.kinds[a], self.kinds[b]
        if ka != MOBILE and kb != MOBILE:
            return True
        if ka == WIRED or kb == WIRED:
            return False
        ax, ay = self.position(a, t_us)
        bx, by = self.position(b, t_us)
        r = self.config.tx_range
        return (ax - bx) ** 2 + (ay - by) ** 2 <= r * r

    def is_wireless_pair(self, a: int, b: int) -> bool:
        return self.kinds[a] == MOBILE or self.kinds[b] == MOBILE

    # -- export -----------------------------------------------------------

    def export_waypoints(self) -> List[str]:
        """One line per plan segment: node, arrival time, target, speed."""
        lines = []
        for i, plan in enumerate(self.plans):
            for t0, t1, x0, y0, sx, sy in plan:
                dur = t1 - t0
                ex, ey = x0 + dur * sx, y0 + dur * sy
                speed = math.hypot(ex - x0, ey - y0) / (dur / US_PER_S)
                lines.append(f"M{i} {t1 / US_PER_S:.6f} {ex:.3f} {ey:.3f} "
                             f"{speed:.3f} {'pause' if sx == 0.0 and sy == 0.0 else 'move'}")
        return lines
