from cli.schemas import ExperimentConfig
from cli.experiments import MODE_RUNNERS, ModeResult, build_constraint, build_from_config, execute
from cli.main import describe, load_config, run

__all__ = [
    "ExperimentConfig", "MODE_RUNNERS", "ModeResult", "build_constraint", "build_from_config", "execute",
    "describe", "load_config", "run",
]
