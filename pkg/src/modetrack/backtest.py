"""Portfolio simulation and evaluation metrics.

Execution follows the delayed-fill convention: weights decided on day t are
entered at the next trading day's open and held until the following decision's
entry (open(t+1) -> open(t+2) for daily decisions). A close-to-close
convention is available for comparison. Turnover compares target weights with
the previous weights drifted by realised returns; each unit of turnover costs
``cost_rate``.

Metrics: IC/ICIR (daily cross-sectional Pearson vs next-day forward returns),
RIC/RICIR (Spearman with average ranks on ties), annualised return, maximum
drawdown and Sharpe ratio. Standard deviations are population standard
deviations throughout; a zero-dispersion Sharpe is reported as explicitly
undefined rather than infinite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .data import PriceTable
from .errors import ShapeMismatch

log = logging.getLogger(__name__)

DEFAULT_COST_RATE = 1.5e-4
PERIODS_PER_YEAR = 252


@dataclass
class SimulationResult:
    days: list[str]              # decision days with a realised period
    returns: np.ndarray          # net period return per decision day
    turnover: np.ndarray
    wealth: np.ndarray           # compounded, starts from the first period
    events: list[str] = field(default_factory=list)
    skipped_days: list[str] = field(default_factory=list)  # no realisable period


def _entry_exit_days(decision_days: list[str], prices: PriceTable,
                     execution: str) -> list[tuple[str, str | None, str | None]]:
    """Per decision day: (day, entry day, exit day) under the execution rule."""
    out = []
    for idx, day in enumerate(decision_days):
        if execution == "close":
            entry = day if prices.has_day(day) else None
            exit_ = prices.next_day(day) if entry else None
        else:  # open_next
            entry = prices.next_day(day)
            if entry is None:
                exit_ = None
            elif idx + 1 < len(decision_days):
                exit_ = prices.next_day(decision_days[idx + 1])
            else:
                exit_ = prices.next_day(entry)
        out.append((day, entry, exit_))
    return out


def _period_price(prices: PriceTable, day: str, ticker: str, execution: str,
                  allow_fallback: bool, events: list[str]) -> float | None:
    if execution == "close":
        if prices.has(day, ticker):
            return prices.close_price(day, ticker)
    else:
        if prices.has(day, ticker):
            return prices.open_price(day, ticker)
    if allow_fallback:
        last = prices.last_open_at_or_before(day, ticker)
        if last is not None:
            events.append(f"{day}:{ticker}: exited at last available price")
            return last
    return None


def _period_returns(prices: PriceTable, entry: str, exit_: str, tickers: list[str],
                    execution: str, events: list[str]) -> dict[str, float]:
    rets = {}
    for t in tickers:
        p0 = _period_price(prices, entry, t, execution, False, events)
        if p0 is None:
            events.append(f"{entry}:{t}: no entry price, held as cash")
            rets[t] = 0.0
            continue
        p1 = _period_price(prices, exit_, t, execution, True, events)
        if p1 is None:
            events.append(f"{exit_}:{t}: no exit price at all, held as cash")
            rets[t] = 0.0
            continue
        rets[t] = p1 / p0 - 1.0
    return rets


def simulate(weights_by_day: dict[str, dict[str, float]], prices: PriceTable,
             cost_rate: float = DEFAULT_COST_RATE,
             execution: str = "open_next") -> SimulationResult:
    """Run the portfolio through the price table.

    Decision days whose period cannot be realised (no next bars yet) are
    reported in ``skipped_days`` rather than simulated.
    """
    if execution not in ("open_next", "close"):
        raise ValueError(f"unknown execution convention {execution!r}")
    decision_days = sorted(weights_by_day)
    events: list[str] = []
    days, returns, turnovers = [], [], []
    prev_weights: dict[str, float] = {}
    prev_rets: dict[str, float] = {}
    skipped = []
    for day, entry, exit_ in _entry_exit_days(decision_days, prices, execution):
        weights = weights_by_day[day]
        if entry is None or exit_ is None:
            skipped.append(day)
            continue
        if abs(sum(weights.values()) - 1.0) > 1e-9:
            raise ShapeMismatch(f"weights on {day} do not sum to 1")
        rets = _period_returns(prices, entry, exit_, sorted(weights), execution, events)

        # drift the previous weights by their realised returns, renormalise
        if prev_weights:
            drifted_raw = {t: w * (1.0 + prev_rets.get(t, 0.0))
                           for t, w in prev_weights.items()}
            total = sum(drifted_raw.values())
            drifted = {t: v / total for t, v in drifted_raw.items()} if total > 0 \
                else dict(prev_weights)
        else:
            drifted = {}
        all_tickers = set(weights) | set(drifted)
        turnover = sum(abs(weights.get(t, 0.0) - drifted.get(t, 0.0))
                       for t in sorted(all_tickers))

        gross = sum(weights[t] * rets[t] for t in sorted(weights))
        net = gross - cost_rate * turnover
        days.append(day)
        returns.append(net)
        turnovers.append(turnover)
        prev_weights = weights
        prev_rets = rets
    returns_arr = np.asarray(returns, dtype=np.float64)
    wealth = np.cumprod(1.0 + returns_arr) if returns else np.array([])
    return SimulationResult(days=days, returns=returns_arr,
                            turnover=np.asarray(turnovers, dtype=np.float64),
                            wealth=wealth, events=events, skipped_days=skipped)


# --- correlation metrics ------------------------------------------------------


@dataclass
class CorrelationReport:
    ic: float | None
    icir: float | None
    ric: float | None
    ricir: float | None
    daily_days: list[str]
    daily_pearson: np.ndarray
    daily_spearman: np.ndarray
    skipped_constant_signal: int = 0
    skipped_degenerate_returns: int = 0
    skipped_small: int = 0


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.sum(xc * xc) * np.sum(yc * yc))
    return float(np.sum(xc * yc) / denom)


def _mean_over_std(values: np.ndarray) -> tuple[float | None, float | None]:
    if values.size == 0:
        return None, None
    mean = float(values.mean())
    std = float(values.std())  # population
    return mean, (mean / std if std > 0.0 else None)


def correlation_metrics(signals_by_day: dict[str, dict[str, float]],
                        forward_returns_by_day: dict[str, dict[str, float]]
                        ) -> CorrelationReport:
    """Daily cross-sectional correlation of signals with forward returns."""
    kept_days, pearsons, spearmans = [], [], []
    const_sig = degen = small = 0
    for day in sorted(signals_by_day):
        fwd = forward_returns_by_day.get(day)
        if not fwd:
            continue
        tickers = sorted(set(signals_by_day[day]) & set(fwd))
        if len(tickers) < 2:
            small += 1
            continue
        sig = np.array([signals_by_day[day][t] for t in tickers])
        ret = np.array([fwd[t] for t in tickers])
        if np.all(sig == sig[0]):
            const_sig += 1
            continue
        if np.all(ret == ret[0]):
            degen += 1
            log.warning("degenerate return cross-section on %s; day skipped", day)
            continue
        kept_days.append(day)
        pearsons.append(_pearson(sig, ret))
        spearmans.append(_pearson(rankdata(sig, method="average"),
                                  rankdata(ret, method="average")))
    p = np.asarray(pearsons)
    s = np.asarray(spearmans)
    ic, icir = _mean_over_std(p)
    ric, ricir = _mean_over_std(s)
    return CorrelationReport(ic=ic, icir=icir, ric=ric, ricir=ricir,
                             daily_days=kept_days, daily_pearson=p, daily_spearman=s,
                             skipped_constant_signal=const_sig,
                             skipped_degenerate_returns=degen, skipped_small=small)


def forward_returns(prices: PriceTable, universe: list[str]) -> dict[str, dict[str, float]]:
    """Next-day close-to-close return per (day, ticker)."""
    out: dict[str, dict[str, float]] = {}
    for day in prices.days:
        nxt = prices.next_day(day)
        if nxt is None:
            continue
        rets = prices.close_returns(day, nxt, universe)
        if rets:
            out[day] = rets
    return out


# --- portfolio metrics --------------------------------------------------------


@dataclass
class PortfolioReport:
    n_periods: int
    mean_return: float | None
    annualized_return: float | None
    max_drawdown: float | None
    sharpe: float | None
    sharpe_defined: bool
    mean_turnover: float | None


def max_drawdown(wealth: np.ndarray) -> float:
    """Largest peak-to-trough loss fraction over a wealth path."""
    wealth = np.asarray(wealth, dtype=np.float64)
    if wealth.size == 0:
        raise ShapeMismatch("empty wealth path")
    peaks = np.maximum.accumulate(wealth)
    return float(np.max(1.0 - wealth / peaks))


def portfolio_metrics(returns: np.ndarray, turnover: np.ndarray | None = None,
                      periods_per_year: int = PERIODS_PER_YEAR,
                      risk_free: float = 0.0) -> PortfolioReport:
    returns = np.asarray(returns, dtype=np.float64)
    if returns.size == 0:
        return PortfolioReport(n_periods=0, mean_return=None, annualized_return=None,
                               max_drawdown=None, sharpe=None, sharpe_defined=False,
                               mean_turnover=None)
    wealth = np.concatenate(([1.0], np.cumprod(1.0 + returns)))
    excess = returns - risk_free
    std = float(excess.std())  # population
    sharpe = float(excess.mean() / std * np.sqrt(periods_per_year)) if std > 0.0 else None
    return PortfolioReport(
        n_periods=int(returns.size),
        mean_return=float(returns.mean()),
        annualized_return=float(periods_per_year * returns.mean()),
        max_drawdown=max_drawdown(wealth),
        sharpe=sharpe,
        sharpe_defined=std > 0.0,
        mean_turnover=float(np.mean(turnover)) if turnover is not None
        and len(turnover) else None)
