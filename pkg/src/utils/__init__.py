"""
Utility functions and helpers
"""

from .logger import setup_logger, get_logger, set_log_level
from .helpers import (
    load_yaml,
    save_yaml,
    load_json,
    save_json,
    config_hash,
    write_csv,
    read_csv,
    ensure_dir,
)
from .seeding import make_rng

__all__ = [
    "setup_logger",
    "get_logger",
    "set_log_level",
    "load_yaml",
    "save_yaml",
    "load_json",
    "save_json",
    "config_hash",
    "write_csv",
    "read_csv",
    "ensure_dir",
    "make_rng",
]
