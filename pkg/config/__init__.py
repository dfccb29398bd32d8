# config/__init__.py
"""
Default run configuration
"""

from pathlib import Path

DEFAULT_CONFIG = Path(__file__).parent / "config.yaml"

__all__ = ["DEFAULT_CONFIG"]
