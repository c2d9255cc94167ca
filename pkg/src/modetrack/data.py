"""Market data containers and file formats.

Prices arrive as a CSV with header ``day,ticker,open,close`` (days ISO-8601,
so lexicographic order is chronological); the universe file lists one ticker
per line. A regime calendar labels spans of days ``bull`` or ``bear`` for the
lifecycle analysis.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyUniverse, MissingPrice, NumericalFailure, UncoveredDays

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PriceBar:
    day: str
    ticker: str
    open: float
    close: float

    def __post_init__(self):
        if not (self.open > 0.0 and self.close > 0.0):
            raise NumericalFailure(f"non-positive price for {self.ticker} on {self.day}")


class PriceTable:
    """Indexed (day, ticker) -> bar lookups over a bar list."""

    def __init__(self, bars: list[PriceBar]):
        self._bars: dict[tuple[str, str], PriceBar] = {}
        days: set[str] = set()
        for bar in bars:
            self._bars[(bar.day, bar.ticker)] = bar
            days.add(bar.day)
        self.days: list[str] = sorted(days)
        self._day_pos = {d: i for i, d in enumerate(self.days)}

    def __len__(self) -> int:
        return len(self._bars)

    def has(self, day: str, ticker: str) -> bool:
        return (day, ticker) in self._bars

    def has_day(self, day: str) -> bool:
        return day in self._day_pos

    def bar(self, day: str, ticker: str) -> PriceBar:
        try:
            return self._bars[(day, ticker)]
        except KeyError:
            raise MissingPrice(f"no bar for {ticker} on {day}") from None

    def open_price(self, day: str, ticker: str) -> float:
        return self.bar(day, ticker).open

    def close_price(self, day: str, ticker: str) -> float:
        return self.bar(day, ticker).close

    def last_open_at_or_before(self, day: str, ticker: str) -> float | None:
        """Most recent open at or before ``day`` (exit price for gapped bars)."""
        pos = self._day_pos.get(day)
        if pos is None:
            # day outside the known calendar: scan the calendar up to it
            pos = int(np.searchsorted(np.array(self.days), day, side="right")) - 1
        for i in range(pos, -1, -1):
            bar = self._bars.get((self.days[i], ticker))
            if bar is not None:
                return bar.open
        return None

    def next_day(self, day: str) -> str | None:
        pos = self._day_pos.get(day)
        if pos is None or pos + 1 >= len(self.days):
            return None
        return self.days[pos + 1]

    def tickers_on(self, day: str) -> list[str]:
        return sorted(t for (d, t) in self._bars if d == day)

    def close_returns(self, day_prev: str, day_now: str,
                      tickers: list[str]) -> dict[str, float]:
        """Simple close-to-close returns for tickers priced on both days."""
        out = {}
        for t in tickers:
            if self.has(day_prev, t) and self.has(day_now, t):
                out[t] = self.close_price(day_now, t) / self.close_price(day_prev, t) - 1.0
        return out


def read_price_csv(path) -> PriceTable:
    bars: list[PriceBar] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"day", "ticker", "open", "close"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise NumericalFailure(f"price CSV must have header day,ticker,open,close, "
                                   f"got {reader.fieldnames}")
        for row in reader:
            bars.append(PriceBar(day=row["day"], ticker=row["ticker"],
                                 open=float(row["open"]), close=float(row["close"])))
    return PriceTable(bars)


def write_price_csv(path, bars: list[PriceBar]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "ticker", "open", "close"])
        for bar in bars:
            writer.writerow([bar.day, bar.ticker, repr(bar.open), repr(bar.close)])


def read_universe(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        tickers = [line.strip() for line in fh if line.strip()]
    if not tickers:
        raise EmptyUniverse(f"universe file {path} is empty")
    if len(set(tickers)) != len(tickers):
        raise EmptyUniverse(f"universe file {path} contains duplicates")
    return tickers


def write_universe(path, tickers: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tickers:
            fh.write(t + "\n")


@dataclass(frozen=True)
class RegimeSpan:
    start: str  # inclusive
    end: str    # inclusive
    label: str  # "bull" | "bear"

    def __post_init__(self):
        if self.label not in ("bull", "bear"):
            raise ValueError(f"regime label must be bull or bear, got {self.label!r}")
        if self.end < self.start:
            raise ValueError("regime span end before start")


class RegimeCalendar:
    """Non-overlapping bull/bear spans; every queried day must be covered."""

    def __init__(self, spans: list[RegimeSpan]):
        self.spans = sorted(spans, key=lambda s: s.start)
        for a, b in zip(self.spans, self.spans[1:]):
            if b.start <= a.end:
                raise ValueError(f"regime spans overlap: {a} / {b}")

    def label(self, day: str) -> str:
        for span in self.spans:
            if span.start <= day <= span.end:
                return span.label
        raise UncoveredDays(f"day {day} not covered by the regime calendar")

    def validate_covers(self, days: list[str]) -> None:
        missing = []
        for day in days:
            try:
                self.label(day)
            except UncoveredDays:
                missing.append(day)
        if missing:
            raise UncoveredDays(f"calendar gaps on {len(missing)} day(s), "
                                f"first: {missing[0]}")

    @classmethod
    def single(cls, start: str, end: str, label: str = "bull") -> "RegimeCalendar":
        return cls([RegimeSpan(start=start, end=end, label=label)])

    @classmethod
    def from_doc(cls, doc: list[dict]) -> "RegimeCalendar":
        return cls([RegimeSpan(start=d["start"], end=d["end"], label=d["label"])
                    for d in doc])

    def to_doc(self) -> list[dict]:
        return [{"start": s.start, "end": s.end, "label": s.label} for s in self.spans]
