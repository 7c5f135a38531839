"""
Shared fixtures for the test suite
"""

import os
import sys

import numpy as np
import pytest

# Add project root to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    """Route all artifact output of a test into a temporary directory"""
    from config.settings import settings

    monkeypatch.setattr(settings, 'output_dir', str(tmp_path))
    return tmp_path
