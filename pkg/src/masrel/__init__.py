"""Monte Carlo reliability estimation for mobile agents roaming a MANET."""
from .config import ScenarioConfig, load_config, parse_config
from .estimator import ReliabilityReport, monte_carlo, run_episode

__all__ = ["ScenarioConfig", "load_config", "parse_config", "ReliabilityReport",
           "monte_carlo", "run_episode"]
__version__ = "0.1.0"
