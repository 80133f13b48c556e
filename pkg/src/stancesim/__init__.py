"""Agent-based simulator of stance and theme diffusion with bots on a follower graph."""

from .engine import Simulation, initialize, run
from .metrics import RunMetrics, ScenarioSummary, engagement_ratios, welch_t_test
from .scenario import ConfigError, ScenarioConfig, parse_config, preset, run_scenario

__version__ = "0.1.0"

__all__ = [
    "Simulation", "initialize", "run", "RunMetrics", "ScenarioSummary", "engagement_ratios",
    "welch_t_test", "ConfigError", "ScenarioConfig", "parse_config", "preset", "run_scenario",
]
