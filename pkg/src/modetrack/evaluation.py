"""Scoring fitted modes against realised returns.

The day-t cross-section of close-to-close returns is demeaned to an excess
return per stock; each of the previous day's arguments earns
``polarity * excess`` on its stock; a mode's aggregate score is the
responsibility-weighted mean of its arguments' scores; and each mode's
long-run performance is an EMA carried along the mode-alignment chain:

    perf_new = smoothing * perf_prev + (1 - smoothing) * agg_score

Newborn modes (no aligned ancestor) start from an implicit previous value of
zero, i.e. ``(1 - smoothing) * agg_score``. Retired modes are archived with
their final value.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .alignment import ModeAlignment
from .errors import NumericalFailure, ShapeMismatch

log = logging.getLogger(__name__)

#: a mode whose total responsibility mass falls below this is scored 0
DEAD_MODE_MASS = 1e-12

DEFAULT_SMOOTHING = 0.5


@dataclass
class PerfState:
    """Per-mode performance for one day's mode labels.

    ``day`` is the label day: the day whose mode set the entries index.
    ``lineage_ids`` parallel the perf array and name each mode's alignment
    chain; ``archived`` accumulates final values of retired lineages.
    """

    day: str
    perf: np.ndarray
    lineage_ids: list[str]
    archived: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.perf = np.asarray(self.perf, dtype=np.float64)
        if self.perf.ndim != 1 or len(self.lineage_ids) != self.perf.shape[0]:
            raise ShapeMismatch("perf and lineage_ids lengths disagree")
        if not np.all(np.isfinite(self.perf)):
            raise NumericalFailure("perf entries must be finite")
        self.perf.setflags(write=False)

    def to_doc(self) -> dict:
        return {"day": self.day, "perf": self.perf.tolist(),
                "lineage": list(self.lineage_ids), "archived": dict(self.archived)}

    @classmethod
    def from_doc(cls, doc: dict) -> "PerfState":
        return cls(day=doc["day"], perf=np.array(doc["perf"], dtype=np.float64),
                   lineage_ids=list(doc["lineage"]), archived=dict(doc["archived"]))


def excess_returns(closes_now: np.ndarray, closes_prev: np.ndarray) -> np.ndarray:
    """Cross-sectionally demeaned simple returns; sums to ~0 by construction."""
    closes_now = np.asarray(closes_now, dtype=np.float64)
    closes_prev = np.asarray(closes_prev, dtype=np.float64)
    if closes_now.shape != closes_prev.shape or closes_now.ndim != 1:
        raise ShapeMismatch("close arrays must be 1-D and aligned")
    if closes_now.size == 0:
        raise ShapeMismatch("empty cross-section")
    if np.any(closes_prev <= 0.0) or np.any(closes_now <= 0.0):
        raise NumericalFailure("prices must be positive")
    raw = closes_now / closes_prev - 1.0
    return raw - raw.mean()


def realized_score(polarity: int, excess: float) -> float:
    """A +1 argument earns the stock's excess return; a -1 argument its negative."""
    if polarity not in (-1, 1):
        raise ValueError(f"polarity must be +1 or -1, got {polarity!r}")
    return polarity * excess


def aggregate_mode_scores(responsibilities: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Responsibility-weighted mean score per mode.

    ``responsibilities`` is (n_args, k); ``scores`` is (n_args,). Modes with
    negligible total mass (below ``DEAD_MODE_MASS``) score exactly 0.
    """
    responsibilities = np.asarray(responsibilities, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if responsibilities.ndim != 2 or scores.ndim != 1 \
            or responsibilities.shape[0] != scores.shape[0]:
        raise ShapeMismatch("responsibilities and scores disagree in length")
    mass = responsibilities.sum(axis=0)
    weighted = responsibilities.T @ scores
    out = np.zeros(responsibilities.shape[1])
    alive = mass >= DEAD_MODE_MASS
    out[alive] = weighted[alive] / mass[alive]
    return out


def update_perf(prev: PerfState | None, alignment: ModeAlignment | None,
                agg_scores: np.ndarray, smoothing: float = DEFAULT_SMOOTHING, *,
                day: str) -> PerfState:
    """EMA update through the alignment chain.

    ``alignment`` maps previous-day mode index -> current-day mode index; a
    current mode k matched to previous mode j inherits its memory, an
    unmatched (newborn) mode starts from zero. Previous modes with no
    successor are archived at their final value. With no previous state at
    all (first scored day) every mode is newborn.
    """
    agg_scores = np.asarray(agg_scores, dtype=np.float64)
    if not 0.0 <= smoothing <= 1.0:
        raise ValueError("smoothing must lie in [0, 1]")
    k = agg_scores.shape[0]
    ancestor: dict[int, int] = {}
    if alignment is not None:
        if prev is None:
            raise ShapeMismatch("alignment given without a previous perf state")
        if alignment.to_day != day:
            raise ShapeMismatch(f"alignment targets {alignment.to_day}, expected {day}")
        ancestor = {curr: prev_idx for prev_idx, curr in alignment.mapping.items()}

    perf = np.empty(k)
    lineage: list[str] = []
    for mode in range(k):
        j = ancestor.get(mode)
        if j is None:
            perf[mode] = (1.0 - smoothing) * agg_scores[mode]
            lineage.append(f"{day}:m{mode}")
        else:
            perf[mode] = smoothing * prev.perf[j] + (1.0 - smoothing) * agg_scores[mode]
            lineage.append(prev.lineage_ids[j])

    archived = dict(prev.archived) if prev is not None else {}
    if prev is not None:
        matched_prev = set(ancestor.values())
        for j in range(prev.perf.shape[0]):
            if j not in matched_prev:
                archived[prev.lineage_ids[j]] = float(prev.perf[j])
    return PerfState(day=day, perf=perf, lineage_ids=lineage, archived=archived)


def score_prev_day_arguments(prev_args, excess_by_ticker: dict[str, float]) -> tuple[np.ndarray, list[int]]:
    """Realised score per previous-day argument.

    Arguments whose ticker has no excess return (missing price) are excluded;
    returns (scores, kept_row_indices) so callers can drop the matching
    responsibility rows.
    """
    scores: list[float] = []
    kept: list[int] = []
    for i, arg in enumerate(prev_args):
        exc = excess_by_ticker.get(arg.ticker)
        if exc is None:
            log.warning("argument %s skipped in evaluation: no price for %s",
                        arg.argument_id, arg.ticker)
            continue
        scores.append(realized_score(arg.polarity, exc))
        kept.append(i)
    return np.asarray(scores, dtype=np.float64), kept
