"""Cross-day mode alignment as a minimum-cost assignment on centroid distances.

``align_modes`` matches the previous day's mode centroids to the current
day's at minimal total Euclidean distance. Rectangular cases match
``min(k_prev, k_curr)`` pairs: previous modes left unmatched retire, current
modes left unmatched are newborn.

Determinism contract: among equal-cost optima the lexicographically smallest
mapping wins (pairs sorted by previous index, then current index). Costs are
combined with ``math.fsum`` — a correctly-rounded, order-independent sum — so
equal-cost candidates compare identically here and in the brute-force oracle,
and the reported cost is invariant under relabelling. The canonical tie
search is exact but exhaustive-ish, so it runs only when the smaller side has
at most ``CANONICAL_TIE_LIMIT`` modes; above that (far beyond the usual mode
counts, ties measure-zero for continuous embeddings) the solver's own
deterministic optimum is returned.

``brute_force_align`` is an independent oracle: it enumerates every injective
map with ``itertools`` and applies the same tie-break. It shares only the
distance-matrix helper with the solver, never the optimisation logic.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch, ShapeMismatch, SizeLimitExceeded

log = logging.getLogger(__name__)

CANONICAL_TIE_LIMIT = 16
BRUTE_FORCE_LIMIT = 8


@dataclass
class ModeAlignment:
    """Result of aligning ``from_day`` modes onto ``to_day`` modes."""

    from_day: str
    to_day: str
    mapping: dict[int, int]          # previous index -> current index
    retired: list[int]               # previous indices with no successor
    born: list[int]                  # current indices with no ancestor
    total_cost: float
    pair_costs: dict[int, float] = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {"from_day": self.from_day, "to_day": self.to_day,
                "pairs": [[int(i), int(j)] for i, j in sorted(self.mapping.items())],
                "retired": [int(i) for i in self.retired],
                "born": [int(j) for j in self.born],
                "cost": self.total_cost}

    @classmethod
    def from_doc(cls, doc: dict) -> "ModeAlignment":
        mapping = {int(i): int(j) for i, j in doc["pairs"]}
        return cls(from_day=doc["from_day"], to_day=doc["to_day"], mapping=mapping,
                   retired=[int(i) for i in doc["retired"]],
                   born=[int(j) for j in doc["born"]], total_cost=doc["cost"])


def distance_matrix(prev_means: np.ndarray, curr_means: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between centroid rows."""
    prev_means = np.asarray(prev_means, dtype=np.float64)
    curr_means = np.asarray(curr_means, dtype=np.float64)
    if prev_means.ndim != 2 or curr_means.ndim != 2:
        raise ShapeMismatch("centroid arrays must be 2-D")
    if prev_means.shape[1] != curr_means.shape[1]:
        raise DimensionMismatch("centroid dimensions differ between days")
    diff = prev_means[:, None, :] - curr_means[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def _pairs_cost(cost: np.ndarray, pairs) -> float:
    return math.fsum(float(cost[i, j]) for i, j in pairs)


def _lex_min_optimal(cost: np.ndarray, best_cost: float) -> list[tuple[int, int]]:
    """Lexicographically smallest optimal mapping, built greedily.

    Position by position (pairs sorted by previous index) we fix the smallest
    candidate pair that still admits a completion achieving ``best_cost``;
    completions are valued with the assignment solver and compared with
    correctly-rounded sums, so the comparison is exact in real arithmetic.
    """
    kp, kc = cost.shape
    size = min(kp, kc)
    chosen: list[tuple[int, int]] = []
    used_curr: set[int] = set()
    p_start = 0
    for pos in range(size):
        remaining = size - pos - 1
        accepted = False
        for p in range(p_start, kp - remaining):
            for c in range(kc):
                if c in used_curr:
                    continue
                cand = chosen + [(p, c)]
                rem_rows = list(range(p + 1, kp))
                rem_cols = [cc for cc in range(kc) if cc not in used_curr and cc != c]
                if remaining == 0:
                    total = _pairs_cost(cost, cand)
                else:
                    if min(len(rem_rows), len(rem_cols)) < remaining:
                        continue
                    sub = cost[np.ix_(rem_rows, rem_cols)]
                    ri, ci = linear_sum_assignment(sub)
                    completion = [(rem_rows[a], rem_cols[b]) for a, b in zip(ri, ci)]
                    total = _pairs_cost(cost, cand + completion)
                if total == best_cost:
                    chosen = cand
                    used_curr.add(c)
                    p_start = p + 1
                    accepted = True
                    break
            if accepted:
                break
        if not accepted:  # pragma: no cover - best_cost always admits a completion
            raise RuntimeError("canonical tie search failed to complete")
    return chosen


def align_modes(prev_means: np.ndarray, curr_means: np.ndarray, *,
                from_day: str = "", to_day: str = "") -> ModeAlignment:
    """Minimum-cost matching of previous onto current mode centroids."""
    cost = distance_matrix(prev_means, curr_means)
    kp, kc = cost.shape
    ri, ci = linear_sum_assignment(cost)
    best_cost = _pairs_cost(cost, zip(ri, ci))
    if min(kp, kc) <= CANONICAL_TIE_LIMIT:
        pairs = _lex_min_optimal(cost, best_cost)
    else:
        pairs = sorted(zip(ri.tolist(), ci.tolist()))
    mapping = {int(i): int(j) for i, j in pairs}
    matched_curr = set(mapping.values())
    return ModeAlignment(
        from_day=from_day, to_day=to_day, mapping=mapping,
        retired=[i for i in range(kp) if i not in mapping],
        born=[j for j in range(kc) if j not in matched_curr],
        total_cost=_pairs_cost(cost, pairs),
        pair_costs={int(i): float(cost[i, j]) for i, j in pairs})


def brute_force_align(prev_means: np.ndarray, curr_means: np.ndarray, *,
                      from_day: str = "", to_day: str = "") -> ModeAlignment:
    """Exhaustive oracle: every injective map, same tie-break as align_modes.

    Only for small instances (min side <= ``BRUTE_FORCE_LIMIT``).
    """
    cost = distance_matrix(prev_means, curr_means)
    kp, kc = cost.shape
    if min(kp, kc) > BRUTE_FORCE_LIMIT:
        raise SizeLimitExceeded(
            f"brute force capped at min side {BRUTE_FORCE_LIMIT}, got {min(kp, kc)}")

    best_cost = math.inf
    best_pairs: tuple[tuple[int, int], ...] | None = None
    if kp <= kc:
        row_sets = [tuple(range(kp))]
    else:
        row_sets = [rows for rows in itertools.combinations(range(kp), kc)]
    for rows in row_sets:
        for cols in itertools.permutations(range(kc), len(rows)):
            pairs = tuple(zip(rows, cols))
            total = math.fsum(float(cost[i, j]) for i, j in pairs)
            if total < best_cost or (total == best_cost and pairs < best_pairs):
                best_cost = total
                best_pairs = pairs
    assert best_pairs is not None
    mapping = {int(i): int(j) for i, j in best_pairs}
    matched_curr = set(mapping.values())
    return ModeAlignment(
        from_day=from_day, to_day=to_day, mapping=mapping,
        retired=[i for i in range(kp) if i not in mapping],
        born=[j for j in range(kc) if j not in matched_curr],
        total_cost=best_cost,
        pair_costs={int(i): float(cost[i, j]) for i, j in best_pairs})


def identity_alignment(k_prev: int, k_curr: int, prev_means=None, curr_means=None, *,
                       from_day: str = "", to_day: str = "") -> ModeAlignment:
    """Degenerate alignment used when temporal alignment is ablated.

    Index-identity when the mode counts match; otherwise every previous mode
    retires and every current mode is newborn.
    """
    if k_prev == k_curr:
        mapping = {i: i for i in range(k_prev)}
        retired: list[int] = []
        born: list[int] = []
    else:
        mapping = {}
        retired = list(range(k_prev))
        born = list(range(k_curr))
    total = 0.0
    pair_costs = {}
    if mapping and prev_means is not None and curr_means is not None:
        cost = distance_matrix(prev_means, curr_means)
        total = math.fsum(float(cost[i, i]) for i in mapping)
        pair_costs = {i: float(cost[i, i]) for i in mapping}
    return ModeAlignment(from_day=from_day, to_day=to_day, mapping=mapping,
                         retired=retired, born=born, total_cost=total,
                         pair_costs=pair_costs)
