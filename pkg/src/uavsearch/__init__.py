"""Cooperative multi-UAV search over terrain with potential-field guidance and MPC."""

from .fields import ConfigError, HedacParams, ScalarField, solve_potential
from .motion import PRESETS, UAV_A, UAV_B, UAV_C, UAVSpec, UAVState, step_state
from .sim import ScenarioConfig, load_config, prepare, run
from .terrain import Terrain, TerrainMesh, load_mesh

__all__ = [
    "ConfigError", "HedacParams", "ScalarField", "solve_potential", "PRESETS", "UAV_A", "UAV_B", "UAV_C",
    "UAVSpec", "UAVState", "step_state", "ScenarioConfig", "load_config", "prepare", "run",
    "Terrain", "TerrainMesh", "load_mesh",
]
