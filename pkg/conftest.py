import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from market_model import MarketParams  # noqa: E402


@pytest.fixture
def headline_params():
    """The headline market: M=500 buyers, N=2000 variants, p=0.05, Z=5"""
    return MarketParams()


@pytest.fixture
def small_params():
    return MarketParams(M=60, N=120, p=0.05, Z=1.0)


@pytest.fixture
def single_thread(monkeypatch):
    monkeypatch.setenv('HETMARKET_THREADS', '1')
