"""
Common utility functions used across the Evidence Network toolkit
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import pandas as pd
import yaml


def load_yaml(filepath: Union[str, Path]) -> Dict[str, Any]:
    """
    Load YAML configuration file

    Args:
        filepath: Path to YAML file

    Returns:
        Dictionary of configuration values (empty dict for an empty file)
    """
    with open(filepath, 'r') as f:
        return yaml.safe_load(f) or {}


def save_yaml(data: Mapping[str, Any], filepath: Union[str, Path]) -> None:
    """Save a mapping as block-style YAML, keys in insertion order"""
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, 'w') as f:
        yaml.safe_dump(dict(data), f, sort_keys=False, default_flow_style=False)


def load_json(filepath: Union[str, Path]) -> Union[Dict, List]:
    """
    Load JSON file

    Args:
        filepath: Path to JSON file

    Returns:
        Parsed JSON data
    """
    with open(filepath, 'r') as f:
        return json.load(f)


def save_json(data: Union[Dict, List], filepath: Union[str, Path], indent: int = 2) -> None:
    """
    Save data to JSON file

    Args:
        data: Data to save
        filepath: Output path
        indent: JSON indentation level
    """
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, 'w') as f:
        json.dump(data, f, indent=indent, default=str)


def config_hash(config: Mapping[str, Any]) -> str:
    """
    Stable hash of a resolved configuration

    Args:
        config: Nested configuration mapping

    Returns:
        sha256 hex digest of the canonical (sorted-key) JSON encoding
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_csv(
    frame: pd.DataFrame,
    filepath: Union[str, Path],
    header: Optional[Mapping[str, Any]] = None,
    float_format: str = "%.10g",
) -> Path:
    """
    Write a DataFrame as CSV with optional '# key=value' provenance lines

    Args:
        frame: Table to write
        filepath: Output path (parent directories are created)
        header: Provenance fields (seed, config hash) written as comment lines
        float_format: printf-style format for floats

    Returns:
        Path written
    """
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        for key, value in (header or {}).items():
            f.write(f"# {key}={value}\n")
        frame.to_csv(f, index=False, float_format=float_format)
    return path


def read_csv(filepath: Union[str, Path]) -> pd.DataFrame:
    """Read a CSV written by write_csv, skipping provenance lines"""
    return pd.read_csv(filepath, comment='#')


def ensure_dir(directory: Union[str, Path]) -> Path:
    """
    Create directory if it doesn't exist

    Args:
        directory: Directory path

    Returns:
        Path object
    """
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path
