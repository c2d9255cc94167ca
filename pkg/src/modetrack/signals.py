"""From mode performance to stock signals and portfolio weights.

A new argument's predicted score is its posterior over yesterday's modes
dotted with those modes' performance values. A stock's signal contrasts the
average predicted score of its bullish arguments against that of its bearish
ones, each side damped by a small epsilon so thin sides stay bounded:

    signal = sum(pos) / (n_pos + eps) - sum(neg) / (n_neg + eps)

Stocks without arguments keep signal 0 and stay in the universe. The
portfolio holds the top ``ceil(top_fraction * N)`` stocks by signal
(lexicographic ticker tie-break), equally weighted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyUniverse, ShapeMismatch

log = logging.getLogger(__name__)

DEFAULT_COUNT_EPS = 1e-5
DEFAULT_TOP_FRACTION = 0.2


@dataclass(frozen=True)
class ScoredArgument:
    """A new argument's polarity plus its model-predicted score."""

    argument_id: str
    ticker: str
    polarity: int
    predicted_score: float


def predict_argument_score(posterior: np.ndarray, perf: np.ndarray) -> float:
    """Posterior-weighted mode performance.

    Summed over products sorted by value, so the result is independent of the
    mode labelling (bit-for-bit).
    """
    posterior = np.asarray(posterior, dtype=np.float64)
    perf = np.asarray(perf, dtype=np.float64)
    if posterior.shape != perf.shape or posterior.ndim != 1:
        raise ShapeMismatch("posterior and perf must be aligned 1-D arrays")
    return float(np.sum(np.sort(posterior * perf)))


def stock_signal(scored: list[ScoredArgument], eps: float = DEFAULT_COUNT_EPS) -> float:
    """Bullish-minus-bearish contrast of average predicted scores."""
    pos = [s.predicted_score for s in scored if s.polarity > 0]
    neg = [s.predicted_score for s in scored if s.polarity < 0]
    pos_part = math.fsum(pos) / (len(pos) + eps) if pos else 0.0
    neg_part = math.fsum(neg) / (len(neg) + eps) if neg else 0.0
    return pos_part - neg_part


def build_signals(universe: list[str], scored: list[ScoredArgument],
                  eps: float = DEFAULT_COUNT_EPS) -> dict[str, float]:
    """Signal per universe ticker; tickers without arguments get 0."""
    if not universe:
        raise EmptyUniverse("universe is empty")
    by_ticker: dict[str, list[ScoredArgument]] = {t: [] for t in universe}
    for s in scored:
        if s.ticker in by_ticker:
            by_ticker[s.ticker].append(s)
        else:
            log.warning("scored argument %s for %s outside universe; ignored",
                        s.argument_id, s.ticker)
    return {t: stock_signal(args, eps) for t, args in by_ticker.items()}


def build_portfolio(signals: dict[str, float],
                    top_fraction: float = DEFAULT_TOP_FRACTION) -> dict[str, float]:
    """Equal-weight portfolio over the top fraction of the universe by signal.

    Selection size is ``ceil(top_fraction * N)`` computed with a small slack
    so float products an ulp above an integer do not over-select; ties on the
    signal value break lexicographically by ticker.
    """
    if not signals:
        raise EmptyUniverse("cannot build a portfolio from an empty universe")
    if not 0.0 < top_fraction <= 1.0:
        raise ValueError("top_fraction must lie in (0, 1]")
    n = len(signals)
    n_sel = max(1, math.ceil(top_fraction * n - 1e-9))
    ranked = sorted(signals.items(), key=lambda kv: (-kv[1], kv[0]))
    chosen = [t for t, _ in ranked[:n_sel]]
    w = 1.0 / len(chosen)
    return {t: w for t in sorted(chosen)}


def equal_weight_portfolio(universe: list[str]) -> dict[str, float]:
    """Day-zero fallback: equal weight across the whole universe."""
    if not universe:
        raise EmptyUniverse("universe is empty")
    w = 1.0 / len(universe)
    return {t: w for t in sorted(universe)}
