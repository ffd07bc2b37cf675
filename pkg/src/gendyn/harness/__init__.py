"""Configuration, figure recipes, CLI and run bookkeeping."""

from .config import ExperimentConfig, RunManifest, load_config
from .recipes import RECIPES
from .runner import reproduce, run

__all__ = ["ExperimentConfig", "RunManifest", "load_config", "RECIPES", "reproduce", "run"]
