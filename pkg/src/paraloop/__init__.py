"""Parametrically loaded small-loop receivers: frequency- and time-domain simulation."""

from .antenna import LoopGeometry, build_receivers, calibrated_antenna, loop_equivalent
from .circuit import (MatchingNetwork, MeshCircuit, ReceiverConfig, ReceiverKind,
                      TimeVaryingCap, table_config)
from .errors import ConfigError, ParaloopError, SolverError
from .frequency import (ac_response, conversion_matrix_solve, fractional_bandwidth,
                        received_power_sweep)
from .transient import Excitation, Waveform, simulate

__all__ = [
    "ConfigError", "Excitation", "LoopGeometry", "MatchingNetwork", "MeshCircuit",
    "ParaloopError", "ReceiverConfig", "ReceiverKind", "SolverError", "TimeVaryingCap",
    "Waveform", "ac_response", "build_receivers", "calibrated_antenna",
    "conversion_matrix_solve", "fractional_bandwidth", "loop_equivalent",
    "received_power_sweep", "simulate", "table_config",
]
__version__ = "0.1.0"
