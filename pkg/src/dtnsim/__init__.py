"""Store-and-forward bundle simulator with custody transfer and analysis."""

from .config import SimConfig
from .scenarios import ScenarioSpec, build_scenario, load_catalog
from .simulation import RunResult, Simulation

__version__ = "0.1.0"

__all__ = [
    "RunResult",
    "ScenarioSpec",
    "SimConfig",
    "Simulation",
    "build_scenario",
    "load_catalog",
    "__version__",
]
