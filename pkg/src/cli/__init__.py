"""
Command-line interface
"""

from .run_config import RunConfig, load_run_config
from .main import main

__all__ = ["RunConfig", "load_run_config", "main"]
