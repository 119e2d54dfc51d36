"""Command-line experiments and their configuration."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import EXPERIMENTS, ExperimentResult
