"""Trace records: one line per protocol event, bit-exact either direction.

Line grammar, space separated, newline terminated:

    <event> <time> <node> <layer> <pkt_id> <ptype> <size> <flow>

event is s (send), r (receive) or d (drop); time is seconds with exactly
six decimals; node is W<i>, B<i> or M<i>; layer is AGT, RTR or MAC; ptype
is dtn, ack or rtc.  Times never decrease in file order.  Formatting goes
through integer microseconds only, so format(parse(line)) == line.
"""

from dataclasses import dataclass
from typing import IO, Iterable, Iterator, List, Optional

EVENTS = ("s", "r", "d")
LAYERS = ("AGT", "RTR", "MAC")
PTYPES = ("dtn", "ack", "rtc")

_EVENT_SET = frozenset(EVENTS)
_LAYER_SET = frozenset(LAYERS)
_PTYPE_SET = frozenset(PTYPES)
_NODE_PREFIX = frozenset("WBM")


class TraceParseError(ValueError):
    """Malformed trace input; carries the line number and field column."""

    def __init__(self, lineno: int, column: int, message: str) -> None:
        super().__init__(f"line {lineno}, field {column}: {message}")
        self.lineno = lineno
        self.column = column


@dataclass(frozen=True)
class TraceRecord:
    """One protocol event; time is kept in integer microseconds."""

    event: str
    time_us: int
    node: str
    layer: str
    pid: int
    ptype: str
    size: int
    flow: int

    @property
    def time_s(self) -> float:
        return self.time_us / 1_000_000

    def line(self) -> str:
        return (f"{self.event} {self.time_us // 1_000_000}."
                f"{self.time_us % 1_000_000:06d} {self.node} {self.layer} "
                f"{self.pid} {self.ptype} {self.size} {self.flow}\n")


def format_record(rec: TraceRecord) -> str:
    return rec.line()


def parse_line(line: str, lineno: int = 1) -> TraceRecord:
    """Decode one trace line, validating every field."""
    parts = line.split()
    if len(parts) != 8:
        raise TraceParseError(lineno, len(parts) + 1,
                              f"expected 8 fields, got {len(parts)}")
    ev, t_text, node, layer, pid_text, ptype, size_text, flow_text = parts
    if ev not in _EVENT_SET:
        raise TraceParseError(lineno, 1, f"unknown event {ev!r}")
    whole, dot, frac = t_text.partition(".")
    if dot != "." or len(frac) != 6 or not whole.isdigit() or not frac.isdigit():
        raise TraceParseError(lineno, 2, f"bad time {t_text!r}")
    time_us = int(whole) * 1_000_000 + int(frac)
    if not node or node[0] not in _NODE_PREFIX or not node[1:].isdigit():
        raise TraceParseError(lineno, 3, f"bad node {node!r}")
    if layer not in _LAYER_SET:
        raise TraceParseError(lineno, 4, f"unknown layer {layer!r}")
    if not pid_text.isdigit():
        raise TraceParseError(lineno, 5, f"bad packet id {pid_text!r}")
    if ptype not in _PTYPE_SET:
        raise TraceParseError(lineno, 6, f"unknown packet type {ptype!r}")
    if not size_text.isdigit():
        raise TraceParseError(lineno, 7, f"bad size {size_text!r}")
    if not flow_text.isdigit():
        raise TraceParseError(lineno, 8, f"bad flow {flow_text!r}")
    return TraceRecord(ev, time_us, node, layer, int(pid_text), ptype,
                       int(size_text), int(flow_text))


def parse_lines(lines: Iterable[str]) -> Iterator[TraceRecord]:
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            yield parse_line(line, lineno)


def read_trace(path: str) -> Iterator[TraceRecord]:
    with open(path, "r", encoding="ascii") as fh:
        for rec in parse_lines(fh):
            yield rec


class TraceWriter:
    """Buffered line sink; identical bytes regardless of flush timing."""

    FLUSH_EVERY = 65536

    def __init__(self, fh: IO[str]) -> None:
        self._fh = fh
        self._buf: List[str] = []
        self.emitted = 0

    def emit(self, event: str, time_us: int, node: str, layer: str,
             pid: int, ptype: str, size: int, flow: int) -> None:
        self._buf.append(f"{event} {time_us // 1_000_000}."
                         f"{time_us % 1_000_000:06d} {node} {layer} "
                         f"{pid} {ptype} {size} {flow}\n")
        self.emitted += 1
        if len(self._buf) >= self.FLUSH_EVERY:
            self.flush()

    def flush(self) -> None:
        if self._buf:
            self._fh.write("".join(self._buf))
            self._buf.clear()

    def close(self) -> None:
        self.flush()


class RecordCollector:
    """In-memory sink used by tests and in-process analysis."""

    def __init__(self) -> None:
        self.records: List[TraceRecord] = []
        self.emitted = 0

    def emit(self, event: str, time_us: int, node: str, layer: str,
             pid: int, ptype: str, size: int, flow: int) -> None:
        self.records.append(TraceRecord(event, time_us, node, layer,
                                        pid, ptype, size, flow))
        self.emitted += 1

    def flush(self) -> None:
        pass

    def close(self) -> None:
        pass


class NullSink:
    """Discards every record; for runs measured by internal stats alone."""

    def __init__(self) -> None:
        self.emitted = 0

    def emit(self, event: str, time_us: int, node: str, layer: str,
             pid: int, ptype: str, size: int, flow: int) -> None:
        self.emitted += 1

    def flush(self) -> None:
        pass

    def close(self) -> None:
        pass
