# src/__init__.py
"""
Evidence Networks - amortized Bayesian model comparison with designer losses
"""

__version__ = "0.1.0"
