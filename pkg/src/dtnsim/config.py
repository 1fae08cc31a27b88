"""Run-wide physical and protocol constants, all overridable per run."""

from dataclasses import dataclass

US_PER_S = 1_000_000

DECIMAL_MB = 1_000_000
BINARY_MB = 1_048_576


@dataclass
class SimConfig:
    """Tunable parameters shared by every component of one run.

    Defaults describe the reference setup: an 800 x 800 m field, two wired
    hosts bridged by two base stations, 250 m radio range, an 11 Mb/s
    service rate with 100-packet drop-tail queues, and 10 MB file transfers
    segmented into 1460-byte bundle payloads.
    """

    horizon_s: float = 100.0
    mobility_tick_s: float = 0.1
    field_width: float = 800.0
    field_height: float = 800.0
    tx_range: float = 250.0
    speed_min: float = 1.0          # m/s
    speed_max: float = 20.0         # m/s
    service_rate_bps: int = 11_000_000
    queue_capacity: int = 100       # packets, drop-tail
    custody_window: int = 100       # unacked bundles per flow per custodian
    retry_initial_s: float = 2.0
    retry_cap_s: float = 16.0
    data_payload_bytes: int = 1460
    data_header_bytes: int = 80
    custody_ack_bytes: int = 40
    route_ctl_bytes: int = 48
    propagation_us: int = 2
    message_mb: int = 10            # bytes per file transfer, in MB
    mb_convention: str = "decimal"  # decimal: 1 MB = 10**6 B; binary: 2**20 B

    @property
    def horizon_us(self) -> int:
        return int(round(self.horizon_s * US_PER_S))

    @property
    def tick_us(self) -> int:
        return int(round(self.mobility_tick_s * US_PER_S))

    @property
    def data_packet_bytes(self) -> int:
        return self.data_payload_bytes + self.data_header_bytes

    @property
    def message_bytes(self) -> int:
        if self.mb_convention == "decimal":
            return int(self.message_mb * DECIMAL_MB)
        if self.mb_convention == "binary":
            return int(self.message_mb * BINARY_MB)
        raise ValueError(f"unknown mb convention: {self.mb_convention!r}")

    @property
    def retry_initial_us(self) -> int:
        return int(round(self.retry_initial_s * US_PER_S))

    @property
    def retry_cap_us(self) -> int:
        return int(round(self.retry_cap_s * US_PER_S))

    def validate(self) -> None:
        if self.speed_min <= 0 or self.speed_max < self.speed_min:
            raise ValueError("speed range must satisfy 0 < min <= max")
        if self.tx_range <= 0:
            raise ValueError("radio range must be positive")
        if self.queue_capacity < 1:
            raise ValueError("queue capacity must be at least 1")
        if self.horizon_s <= 0:
            raise ValueError("horizon must be positive")
        if self.mb_convention not in ("decimal", "binary"):
            raise ValueError(f"unknown mb convention: {self.mb_convention!r}")
