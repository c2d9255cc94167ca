"""Shared fixtures and small-world builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from modetrack.data import PriceBar, PriceTable
from modetrack.pipeline import RunConfig


def small_config(state_dir, **overrides) -> RunConfig:
    """A fast mock-source config: 8 days, 6 stocks, 3 modes."""
    synth = {
        "n_days": 8,
        "n_stocks": 6,
        "args_min": 2,
        "args_max": 3,
    }
    synth.update(overrides.pop("synthetic", {}))
    base = {
        "state_dir": str(state_dir),
        "source": "mock",
        "encoder": "hash",
        "encoder_dim": 48,
        "n_modes": 3,
        "seed": 7,
        "synthetic": synth,
    }
    base.update(overrides)
    return RunConfig.from_doc(base)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def price_table(rows) -> PriceTable:
    """Build a PriceTable from (day, ticker, open, close) tuples."""
    return PriceTable([PriceBar(day=d, ticker=t, open=o, close=c)
                       for d, t, o, c in rows])


def flat_prices(days, tickers, level=100.0) -> PriceTable:
    return price_table([(d, t, level, level) for d in days for t in tickers])
