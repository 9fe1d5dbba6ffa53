"""Entanglement-distribution network simulator."""

from ._core import (
    QnetError,
    Report,
    ScenarioError,
    SimConfig,
    Topology,
    TopologyParseError,
    TopologyValidationError,
    __version__,
    expected_coincidences,
    noise_ratio_check,
    run,
    scan_delay,
    shortest_path,
    solve_rwa,
    transmittance,
)

__all__ = [
    "QnetError",
    "Report",
    "ScenarioError",
    "SimConfig",
    "Topology",
    "TopologyParseError",
    "TopologyValidationError",
    "__version__",
    "expected_coincidences",
    "noise_ratio_check",
    "run",
    "scan_delay",
    "shortest_path",
    "solve_rwa",
    "transmittance",
]
