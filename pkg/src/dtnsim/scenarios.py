"""Scenario catalog and per-run traffic plans.

The catalog pins six reference setups.  Each file-transfer connection
pushes one fixed-size message from a wired host to a mobile destination;
the whole message is segmented into bundles when the connection starts,
and the stop time only marks the connection inactive.  Connection flow ids
double as the destination mobile index, mirroring how the setups are
generated: cluster-1 destinations count up by twos from zero, cluster-2
destinations start at the cluster boundary and stride wider as the field
gets denser.
"""

from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Tuple

PAUSE_TIMES = tuple(range(10, 101, 10))


@dataclass(frozen=True)
class FtpConnection:
    """One wired-to-mobile file transfer."""

    flow_id: int
    cluster: int
    src_label: str      # "W0" or "W1"
    dst_index: int      # mobile node index
    start_s: float
    stop_s: float

    @property
    def src_gid(self) -> int:
        return 0 if self.src_label == "W0" else 1

    @property
    def dst_gid(self) -> int:
        return 4 + self.dst_index


@dataclass(frozen=True)
class CatalogEntry:
    number: int
    mobile_count: int
    connections: Tuple[FtpConnection, ...]


@dataclass
class ScenarioSpec:
    """Everything a run needs beyond the physical configuration."""

    number: int
    mobile_count: int
    connections: Tuple[FtpConnection, ...]
    pause_s: float
    seed: int
    fixed_positions: Optional[Dict[int, Tuple[float, float]]] = field(default=None)

    @property
    def connection_count(self) -> int:
        return len(self.connections)


class CatalogError(ValueError):
    """Malformed catalog file or unknown scenario."""


def _parse_kv(token: str, lineno: int) -> Tuple[str, str]:
    key, sep, value = token.partition("=")
    if sep != "=" or not key or not value:
        raise CatalogError(f"catalog line {lineno}: bad field {token!r}")
    return key, value


def parse_catalog(text: str) -> Dict[int, CatalogEntry]:
    """Read the key-value catalog format into per-scenario entries."""
    entries: Dict[int, CatalogEntry] = {}
    current: Optional[int] = None
    nodes = 0
    conns: List[FtpConnection] = []
    version_seen = False

    def close() -> None:
        nonlocal current
        if current is not None:
            if not conns:
                raise CatalogError(f"scenario {current} has no connections")
            entries[current] = CatalogEntry(current, nodes, tuple(conns))
            current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "version":
            version_seen = True
        elif parts[0] == "scenario":
            close()
            if len(parts) != 4 or parts[2] != "nodes":
                raise CatalogError(f"catalog line {lineno}: bad scenario header")
            current = int(parts[1])
            nodes = int(parts[3])
            conns = []
            if current in entries:
                raise CatalogError(f"scenario {current} defined twice")
        elif parts[0] == "conn":
            if current is None:
                raise CatalogError(f"catalog line {lineno}: conn outside scenario")
            kv = dict(_parse_kv(tok, lineno) for tok in parts[1:])
            missing = {"flow", "cluster", "src", "dst", "start", "stop"} - set(kv)
            if missing:
                raise CatalogError(
                    f"catalog line {lineno}: missing {sorted(missing)}")
            if kv["src"] not in ("W0", "W1"):
                raise CatalogError(f"catalog line {lineno}: bad src {kv['src']!r}")
            conns.append(FtpConnection(
                flow_id=int(kv["flow"]),
                cluster=int(kv["cluster"]),
                src_label=kv["src"],
                dst_index=int(kv["dst"]),
                start_s=float(kv["start"]),
                stop_s=float(kv["stop"]),
            ))
        else:
            raise CatalogError(f"catalog line {lineno}: unknown directive {parts[0]!r}")
    close()
    if not version_seen:
        raise CatalogError("catalog missing version line")
    return entries


def load_catalog(path: Optional[str] = None) -> Dict[int, CatalogEntry]:
    """Load the packaged catalog, or a replacement from an explicit path."""
    if path is not None:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    else:
        text = (resources.files("dtnsim") / "data" / "catalog.txt").read_text("ascii")
    catalog = parse_catalog(text)
    for entry in catalog.values():
        _check_entry(entry)
    return catalog


def _check_entry(entry: CatalogEntry) -> None:
    seen = set()
    for conn in entry.connections:
        if conn.dst_index < 0 or conn.dst_index >= entry.mobile_count:
            raise CatalogError(
                f"scenario {entry.number}: destination {conn.dst_index} "
                f"outside 0..{entry.mobile_count - 1}")
        if conn.flow_id in seen:
            raise CatalogError(
                f"scenario {entry.number}: duplicate flow {conn.flow_id}")
        seen.add(conn.flow_id)
        if conn.stop_s <= conn.start_s:
            raise CatalogError(
                f"scenario {entry.number}, flow {conn.flow_id}: "
                "stop must follow start")


def build_scenario(number: int, pause_s: float, seed: int,
                   catalog: Optional[Dict[int, CatalogEntry]] = None) -> ScenarioSpec:
    """Instantiate a catalog scenario for one (pause, seed) cell."""
    if catalog is None:
        catalog = load_catalog()
    if number not in catalog:
        raise CatalogError(
            f"unknown scenario {number}; catalog has {sorted(catalog)}")
    if pause_s not in PAUSE_TIMES:
        raise CatalogError(
            f"pause time {pause_s} not in {list(PAUSE_TIMES)}")
    entry = catalog[number]
    return ScenarioSpec(
        number=entry.number,
        mobile_count=entry.mobile_count,
        connections=entry.connections,
        pause_s=float(pause_s),
        seed=seed,
    )
