"""manetsim: deterministic MANET simulation of zone-disjoint multipath routing."""

from .config import ConfigError, RunConfig, load_config, parse_config_text
from .oracle import (FrozenGraph, OracleParams, fig5_fixture,
                     interference_degree, oracle_anc, zone_disjoint)
from .simulation import Simulation

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "RunConfig", "load_config", "parse_config_text",
    "FrozenGraph", "OracleParams", "fig5_fixture", "interference_degree",
    "oracle_anc", "zone_disjoint", "Simulation", "__version__",
]
