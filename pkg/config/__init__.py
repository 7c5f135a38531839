"""
Configuration module for the Green's function toolkit
"""

from .settings import settings
from .experiments import ExperimentConfig

__all__ = ['settings', 'ExperimentConfig']
