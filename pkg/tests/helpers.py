"""Builders for small hand-made scenarios used across test modules."""

from dtnsim.config import SimConfig
from dtnsim.scenarios import FtpConnection, ScenarioSpec


def make_static_spec(mobile_count=4, positions=None, connections=None,
                     pause_s=100.0, seed=1):
    """A scenario whose mobiles sit still at chosen positions."""
    if connections is None:
        connections = (FtpConnection(0, 1, "W0", 0, 1.0, 90.0),)
    return ScenarioSpec(
        number=99,
        mobile_count=mobile_count,
        connections=tuple(connections),
        pause_s=pause_s,
        seed=seed,
        fixed_positions=positions,
    )


def small_config(**kw):
    """Config for quick runs: short horizon, tiny message."""
    defaults = dict(horizon_s=30.0, message_mb=0.01)
    defaults.update(kw)
    cfg = SimConfig(**defaults)
    cfg.validate()
    return cfg


# Everyone in range of their base station and each other.
CONNECTED_POSITIONS = {
    4: (210.0, 420.0),
    5: (260.0, 380.0),
    6: (610.0, 420.0),
    7: (640.0, 380.0),
}
