"""Mode lifecycle analysis: classify lineages and compute daily dominance shares.

A lineage's per-day performance history is judged against a bull/bear regime
calendar with ordered, strictly-greater rules:

1. ``long_term``      — perf > 0 on more than 65% of its observed days;
2. ``bull_effective`` — otherwise, perf > 0 on more than 70% of its bull days;
3. ``bear_effective`` — otherwise, perf > 0 on more than 70% of its bear days;
4. ``ineffective``    — otherwise.

Fractions over an empty day set count as 0, so a rule with no qualifying days
simply cannot fire. Daily dominance shares are the softmax of the day's perf
vector (max subtracted before exponentiation), optionally aggregated by the
lineage's category for stacked plotting.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .data import RegimeCalendar
from .errors import EmptyInput
from .evaluation import PerfState

log = logging.getLogger(__name__)

LONG_TERM_THRESHOLD = 0.65
REGIME_THRESHOLD = 0.70

#: most to least effective; classification never moves right when a day's
#: perf flips from non-positive to positive
CATEGORIES = ("long_term", "bull_effective", "bear_effective", "ineffective")


@dataclass
class ModeLifecycleRecord:
    lineage_id: str
    category: str
    first_day: str
    last_day: str
    n_days: int
    positive_fraction: float
    bull_positive_fraction: float
    bear_positive_fraction: float


def lineage_histories(perf_states: list[PerfState]) -> dict[str, dict[str, float]]:
    """lineage id -> {day -> perf}, built from per-day perf snapshots."""
    out: dict[str, dict[str, float]] = {}
    for state in perf_states:
        for lid, value in zip(state.lineage_ids, state.perf):
            out.setdefault(lid, {})[state.day] = float(value)
    return out


def _positive_fraction(history: dict[str, float], days: list[str]) -> float:
    if not days:
        return 0.0
    positive = sum(1 for d in days if history[d] > 0.0)
    return positive / len(days)


def classify_lineage(history: dict[str, float], calendar: RegimeCalendar) -> ModeLifecycleRecord:
    """Apply the ordered rules to one lineage's day -> perf history."""
    if not history:
        raise EmptyInput("cannot classify an empty history")
    days = sorted(history)
    calendar.validate_covers(days)
    bull_days = [d for d in days if calendar.label(d) == "bull"]
    bear_days = [d for d in days if calendar.label(d) == "bear"]
    frac_all = _positive_fraction(history, days)
    frac_bull = _positive_fraction(history, bull_days)
    frac_bear = _positive_fraction(history, bear_days)
    if frac_all > LONG_TERM_THRESHOLD:
        category = "long_term"
    elif frac_bull > REGIME_THRESHOLD:
        category = "bull_effective"
    elif frac_bear > REGIME_THRESHOLD:
        category = "bear_effective"
    else:
        category = "ineffective"
    return ModeLifecycleRecord(
        lineage_id="", category=category, first_day=days[0], last_day=days[-1],
        n_days=len(days), positive_fraction=frac_all,
        bull_positive_fraction=frac_bull, bear_positive_fraction=frac_bear)


def classify_modes(perf_states: list[PerfState],
                   calendar: RegimeCalendar) -> list[ModeLifecycleRecord]:
    """Classify every lineage seen in the run (archived ones included)."""
    records = []
    for lid, history in sorted(lineage_histories(perf_states).items()):
        rec = classify_lineage(history, calendar)
        rec.lineage_id = lid
        records.append(rec)
    return records


def daily_shares(perf: np.ndarray) -> np.ndarray:
    """Softmax of one day's perf vector; max is subtracted for stability."""
    perf = np.asarray(perf, dtype=np.float64)
    if perf.ndim != 1 or perf.size == 0:
        raise EmptyInput("daily shares need at least one active mode")
    z = np.exp(perf - perf.max())
    return z / z.sum()


def category_share_table(perf_states: list[PerfState],
                         records: list[ModeLifecycleRecord]
                         ) -> tuple[list[str], dict[str, np.ndarray]]:
    """Per-day share of each lifecycle category (softmax mass of its modes)."""
    category_of = {r.lineage_id: r.category for r in records}
    days = [s.day for s in perf_states]
    table = {c: np.zeros(len(days)) for c in CATEGORIES}
    for i, state in enumerate(perf_states):
        shares = daily_shares(state.perf)
        for lid, share in zip(state.lineage_ids, shares):
            table[category_of[lid]][i] += share
    return days, table


def write_lineage_csv(path, records: list[ModeLifecycleRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lineage_id", "category", "first_day", "last_day", "n_days",
                         "positive_fraction", "bull_positive_fraction",
                         "bear_positive_fraction"])
        for r in records:
            writer.writerow([r.lineage_id, r.category, r.first_day, r.last_day,
                             r.n_days, repr(r.positive_fraction),
                             repr(r.bull_positive_fraction),
                             repr(r.bear_positive_fraction)])


def write_share_csv(path, days: list[str], table: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day"] + list(CATEGORIES))
        for i, day in enumerate(days):
            writer.writerow([day] + [repr(float(table[c][i])) for c in CATEGORIES])
