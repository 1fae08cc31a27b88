"""Trace analysis: packet counts, derived indices, and report tables.

Count columns, applied uniformly to every trace:

* dtn       - agent-layer sends of bundle data
* overall   - sends at any layer, control included
* received  - receives at any layer
* send      - agent-layer sends of any packet type
* drop      - drops at any layer (queue overflow and broken links)

Derived indices use exact rational arithmetic and truncation, never
rounding: the connection density is the connection count over the node
count cut to two decimals, and the per-thousand and per-ten load indices
scale a column total by that density.  Throughput is reported per half
second window at the nominal 1540-byte frame size.
"""

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

DATA_FRAME_BYTES = 1540
DEFAULT_WINDOW_US = 500_000
COLUMNS = ("dtn", "overall", "received", "send", "drop")


class MetricsError(ValueError):
    """Inconsistent inputs to an aggregate computation."""


def truncate(value: Fraction, places: int) -> Fraction:
    """Cut toward zero at the given number of decimals."""
    scale = 10 ** places
    scaled = value * scale
    whole = scaled.numerator // scaled.denominator
    if scaled < 0 and whole * scaled.denominator != scaled.numerator:
        whole += 1
    return Fraction(whole, scale)


def fmt_trunc(value: Fraction, places: int) -> str:
    """Fixed-point text of a truncated value, e.g. 13.109."""
    cut = truncate(value, places)
    scaled = cut * 10 ** places
    n = scaled.numerator // scaled.denominator
    sign = "-" if n < 0 else ""
    n = abs(n)
    return f"{sign}{n // 10 ** places}.{n % 10 ** places:0{places}d}"


def connection_density(connections: int, nodes: int) -> Fraction:
    """Connections per node, truncated to two decimals."""
    if nodes <= 0:
        raise MetricsError("node count must be positive")
    if connections < 0:
        raise MetricsError("connection count cannot be negative")
    return truncate(Fraction(connections, nodes), 2)


def load_index_sent(total: int, density: Fraction) -> Fraction:
    """Scaled send volume: column total times density, per thousand."""
    return Fraction(total) * density / 1000


def load_index_dropped(total: int, density: Fraction) -> Fraction:
    """Scaled drop volume: column total times density, per ten."""
    return Fraction(total) * density / 10


def traffic_share(sent_at_pause: int, density: Fraction) -> Fraction:
    """Per-pause share of scaled traffic, per hundred."""
    return Fraction(sent_at_pause) * density / 100


@dataclass
class PauseTimeCounts:
    """One analyzed run, keyed by its pause time."""

    pause: int
    dtn: int = 0
    overall: int = 0
    received: int = 0
    send: int = 0
    drop: int = 0


class TraceTally:
    """Streaming record consumer; usable directly as a simulation sink."""

    def __init__(self, pause: int = 0, window_us: int = DEFAULT_WINDOW_US) -> None:
        self.pause = pause
        self.window_us = window_us
        self.dtn = 0
        self.overall = 0
        self.received = 0
        self.send = 0
        self.drop = 0
        self.emitted = 0
        self.win_recv: Dict[int, int] = {}
        self.win_sends: Dict[int, int] = {}
        self.win_dtn_sends: Dict[int, int] = {}
        self.last_time_us = 0

    def emit(self, event: str, time_us: int, node: str, layer: str,
             pid: int, ptype: str, size: int, flow: int) -> None:
        self.emitted += 1
        if time_us > self.last_time_us:
            self.last_time_us = time_us
        if event == "s":
            self.overall += 1
            w = time_us // self.window_us
            self.win_sends[w] = self.win_sends.get(w, 0) + 1
            if layer == "AGT":
                self.send += 1
                if ptype == "dtn":
                    self.dtn += 1
                    self.win_dtn_sends[w] = self.win_dtn_sends.get(w, 0) + 1
        elif event == "r":
            self.received += 1
            if layer == "AGT" and ptype == "dtn":
                w = time_us // self.window_us
                self.win_recv[w] = self.win_recv.get(w, 0) + 1
        elif event == "d":
            self.drop += 1

    def flush(self) -> None:
        pass

    def close(self) -> None:
        pass

    def consume(self, records: Iterable) -> "TraceTally":
        for rec in records:
            self.emit(rec.event, rec.time_us, rec.node, rec.layer,
                      rec.pid, rec.ptype, rec.size, rec.flow)
        return self

    def counts(self) -> PauseTimeCounts:
        return PauseTimeCounts(self.pause, self.dtn, self.overall,
                               self.received, self.send, self.drop)

    def _span_windows(self, span_us: Optional[int]) -> int:
        if span_us is None:
            keys = [0]
            for d in (self.win_recv, self.win_sends):
                if d:
                    keys.append(max(d) + 1)
            return max(keys)
        return -(-span_us // self.window_us)

    def throughput_series(self, span_us: Optional[int] = None) -> List[Tuple[int, int]]:
        """(window_start_us, bits_per_second) at the nominal frame size."""
        n = self._span_windows(span_us)
        out = []
        per_packet = DATA_FRAME_BYTES * 8 * 1_000_000
        for w in range(n):
            k = self.win_recv.get(w, 0)
            bits = k * per_packet
            out.append((w * self.window_us, bits // self.window_us))
        return out

    def overhead_series(self, span_us: Optional[int] = None) -> List[Tuple[int, float]]:
        """(window_start_us, control share of sends in percent)."""
        n = self._span_windows(span_us)
        out = []
        for w in range(n):
            sends = self.win_sends.get(w, 0)
            if sends == 0:
                out.append((w * self.window_us, 0.0))
            else:
                ctl = sends - self.win_dtn_sends.get(w, 0)
                out.append((w * self.window_us, 100.0 * ctl / sends))
        return out

    def mean_throughput(self, span_us: Optional[int] = None) -> float:
        series = self.throughput_series(span_us)
        if not series:
            return 0.0
        return sum(v for _, v in series) / len(series)

    def mean_overhead(self) -> float:
        """Average control share over windows that carried any send."""
        active = [(w, s) for w, s in self.win_sends.items() if s > 0]
        if not active:
            return 0.0
        total = 0.0
        for w, sends in active:
            ctl = sends - self.win_dtn_sends.get(w, 0)
            total += 100.0 * ctl / sends
        return total / len(active)


def count_packets(records: Iterable, pause: int = 0) -> PauseTimeCounts:
    """Collapse a record stream into the five count columns."""
    return TraceTally(pause).consume(records).counts()


def sum_column(rows: Dict[int, PauseTimeCounts], column: str) -> int:
    """Total one column over the full pause sweep 10..100 step 10.

    Refuses partial sweeps so an aggregate never silently mixes grids.
    """
    if column not in COLUMNS:
        raise MetricsError(f"unknown column {column!r}; pick from {COLUMNS}")
    expected = list(range(10, 101, 10))
    missing = [p for p in expected if p not in rows]
    extra = [p for p in rows if p not in expected]
    if missing or extra:
        raise MetricsError(
            f"pause sweep mismatch: missing {missing}, unexpected {extra}")
    return sum(getattr(rows[p], column) for p in expected)


@dataclass
class ScenarioSummary:
    """Sweep-level aggregates for one scenario."""

    number: int
    nodes: int
    connections: int
    total_dtn: int
    total_drop: int
    density: Fraction
    sent_index: Fraction
    drop_index: Fraction


def summarize_scenario(number: int, nodes: int, connections: int,
                       rows: Dict[int, PauseTimeCounts]) -> ScenarioSummary:
    total_dtn = sum_column(rows, "dtn")
    total_drop = sum_column(rows, "drop")
    density = connection_density(connections, nodes)
    return ScenarioSummary(
        number=number,
        nodes=nodes,
        connections=connections,
        total_dtn=total_dtn,
        total_drop=total_drop,
        density=density,
        sent_index=load_index_sent(total_dtn, density),
        drop_index=load_index_dropped(total_drop, density),
    )


# -- text and CSV output --------------------------------------------------

def render_counts_table(scenario: int, rows: Dict[int, PauseTimeCounts]) -> str:
    lines = [f"Packet counts, scenario {scenario}",
             f"{'pause':>6} {'dtn':>9} {'overall':>9} {'received':>9} "
             f"{'send':>9} {'drop':>9}"]
    for pause in sorted(rows):
        c = rows[pause]
        lines.append(f"{pause:>6} {c.dtn:>9} {c.overall:>9} {c.received:>9} "
                     f"{c.send:>9} {c.drop:>9}")
    return "\n".join(lines) + "\n"


def render_summary(summaries: Sequence[ScenarioSummary]) -> str:
    lines = ["Bundle sends over the pause sweep",
             f"{'scenario':>8} {'nodes':>6} {'conns':>6} {'dtn total':>10} "
             f"{'density':>8} {'sent index':>11}"]
    for s in summaries:
        lines.append(f"{s.number:>8} {s.nodes:>6} {s.connections:>6} "
                     f"{s.total_dtn:>10} {fmt_trunc(s.density, 2):>8} "
                     f"{fmt_trunc(s.sent_index, 3):>11}")
    lines.append("")
    lines.append("Drops over the pause sweep")
    lines.append(f"{'scenario':>8} {'nodes':>6} {'conns':>6} {'drop total':>10} "
                 f"{'density':>8} {'drop index':>11}")
    for s in summaries:
        lines.append(f"{s.number:>8} {s.nodes:>6} {s.connections:>6} "
                     f"{s.total_drop:>10} {fmt_trunc(s.density, 2):>8} "
                     f"{fmt_trunc(s.drop_index, 3):>11}")
    return "\n".join(lines) + "\n"


def write_counts_csv(path: str, rows_by_scenario: Dict[int, Dict[int, PauseTimeCounts]]) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(("scenario", "pause") + COLUMNS)
        for scenario in sorted(rows_by_scenario):
            rows = rows_by_scenario[scenario]
            for pause in sorted(rows):
                c = rows[pause]
                writer.writerow((scenario, pause, c.dtn, c.overall,
                                 c.received, c.send, c.drop))


def load_counts_csv(path: str) -> Dict[int, Dict[int, PauseTimeCounts]]:
    """Read a counts table; header must name scenario, pause, and columns."""
    out: Dict[int, Dict[int, PauseTimeCounts]] = {}
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        need = {"scenario", "pause", *COLUMNS}
        have = set(reader.fieldnames or [])
        if not need <= have:
            raise MetricsError(f"counts csv missing columns {sorted(need - have)}")
        for row in reader:
            scenario = int(row["scenario"])
            pause = int(row["pause"])
            out.setdefault(scenario, {})[pause] = PauseTimeCounts(
                pause=pause,
                dtn=int(row["dtn"]),
                overall=int(row["overall"]),
                received=int(row["received"]),
                send=int(row["send"]),
                drop=int(row["drop"]),
            )
    return out
