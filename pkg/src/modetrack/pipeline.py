"""The sequential day loop tying every stage together.

Per trading day, in order: gather the day's arguments, embed them, fit the
day's modes (warm-started from yesterday's means); align yesterday's modes
onto today's; score yesterday's modes on the returns realised overnight and
fold them into the EMA performance ledger through the alignment chain; score
today's arguments under *yesterday's* modes and performance (nothing fitted
today feeds today's trade); form per-stock signals and the top-fraction
portfolio. The first day holds the equal-weight portfolio. A day with no
arguments anywhere carries the previous mode set and portfolio forward and
logs the gap.

Each day's state is one JSON document written atomically (tmp + rename), so
a failed day leaves no partial state. Reruns skip days whose state already
exists and rebuild the in-memory context from the stored document plus the
re-embedded stored inputs; the rebuild is verified against the stored
responsibility digest, so a resumed run reproduces an uninterrupted run bit
for bit. "Previous day" always means the previous trading day present in
the price file; calendar gaps are invisible to the engine.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .alignment import ModeAlignment, align_modes, identity_alignment
from .arguments import (InvestmentArgument, RawDataPoint, extract_day,
                        group_by_day, read_arguments_jsonl, read_raw_jsonl,
                        write_arguments_jsonl)
from .backends import HashEncoder, HttpChatAgent, HttpEncoder
from .data import PriceTable, read_price_csv, read_universe, write_price_csv, write_universe
from .embedding import ArgumentEmbedding, Embedder, EmbeddingCache
from .errors import EmptyInput, NumericalFailure, ShapeMismatch
from .evaluation import (PerfState, aggregate_mode_scores, excess_returns,
                         score_prev_day_arguments, update_perf)
from .modes import (DailyModeSet, Projection, ResponsibilityMatrix,
                    fit_daily_modes, fit_projection, posterior_matrix)
from .signals import (ScoredArgument, build_portfolio, build_signals,
                      equal_weight_portfolio, predict_argument_score)
from .synthetic import SyntheticDataset, SyntheticSpec, pseudo_raw_arguments, synthesize

log = logging.getLogger(__name__)

# test hook: called as permuter(day, k) -> permutation of range(k), or None
ModePermuter = Callable[[str, int], Optional[np.ndarray]]


@dataclass
class RunConfig:
    """Everything a run needs; mirrors the JSON config file field for field."""

    state_dir: str = "state"
    universe_file: str | None = None
    price_file: str | None = None
    argument_file: str | None = None
    raw_file: str | None = None
    calendar_file: str | None = None
    source: str = "file"             # file | mock | live
    encoder: str = "hash"            # hash | http
    encoder_dim: int = 64
    normalize_embeddings: bool = True
    n_modes: int = 20
    smoothing: float = 0.5
    count_eps: float = 1e-5
    top_fraction: float = 0.2
    cost_rate: float = 1.5e-4
    periods_per_year: int = 252
    risk_free: float = 0.0
    execution: str = "open_next"     # open_next | close
    seed: int = 0
    warm_start: bool = True
    projection: str = "off"          # off | auto | on
    projection_dim: int = 32
    projection_burn_in: int = 5
    max_reprompts: int = 2
    max_workers: int = 1
    use_structured_arguments: bool = True
    use_mode_clustering: bool = True
    use_probabilistic_membership: bool = True
    use_temporal_alignment: bool = True
    synthetic: dict | None = None

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ValueError("smoothing must lie in [0, 1]")
        if self.count_eps <= 0.0:
            raise ValueError("count_eps must be positive")
        if not 0.0 < self.top_fraction <= 1.0:
            raise ValueError("top_fraction must lie in (0, 1]")
        if self.source not in ("file", "mock", "live"):
            raise ValueError(f"unknown argument source {self.source!r}")
        if self.encoder not in ("hash", "http"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if self.execution not in ("open_next", "close"):
            raise ValueError(f"unknown execution convention {self.execution!r}")
        if self.projection not in ("off", "auto", "on"):
            raise ValueError(f"unknown projection mode {self.projection!r}")
        if self.projection_burn_in < 1:
            raise ValueError("projection_burn_in must be >= 1")

    def to_doc(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_doc(cls, doc: dict) -> RunConfig:
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> RunConfig:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if overrides:
            doc.update(overrides)
        return cls.from_doc(doc)


@dataclass(frozen=True)
class StageWiring:
    """Resolved ablation switches consumed by the day loop."""

    collapse_arguments: bool = False    # one pseudo-argument per stock-day
    singleton_modes: bool = False       # every argument becomes its own mode
    harden_membership: bool = False     # one-hot memberships instead of soft
    index_alignment: bool = False       # identity mapping instead of matching


def apply_ablation(config: RunConfig) -> StageWiring:
    return StageWiring(
        collapse_arguments=not config.use_structured_arguments,
        singleton_modes=not config.use_mode_clustering,
        harden_membership=not config.use_probabilistic_membership,
        index_alignment=not config.use_temporal_alignment)


def one_hot_rows(matrix: np.ndarray) -> np.ndarray:
    """Harden each row of a membership matrix to its argmax."""
    hard = np.zeros_like(matrix)
    if matrix.size:
        hard[np.arange(matrix.shape[0]), np.argmax(matrix, axis=1)] = 1.0
    return hard


def collapse_to_pseudo_arguments(args: Sequence[InvestmentArgument]) -> list[InvestmentArgument]:
    """Merge each stock-day's arguments into a single unstructured one.

    Stand-in for skipping structured extraction when the raw source documents
    themselves are unavailable: texts are concatenated and the polarity is
    the sign of the polarity sum (ties go long).
    """
    by_key: dict[tuple[str, str], list[InvestmentArgument]] = {}
    for arg in args:
        by_key.setdefault((arg.day, arg.ticker), []).append(arg)
    collapsed = []
    for (day, ticker), group in sorted(by_key.items()):
        polarity = 1 if sum(a.polarity for a in group) >= 0 else -1
        collapsed.append(InvestmentArgument(
            argument_id=f"{day}:{ticker}:raw", day=day, ticker=ticker,
            polarity=polarity,
            rationale=" ".join(a.rationale for a in group),
            evidence=" ".join(a.evidence for a in group)))
    return collapsed


# ---------------------------------------------------------------------------
# persisted per-day state


@dataclass
class DailyState:
    """One persisted day: everything needed to continue or audit the run."""

    day: str
    modes: DailyModeSet | None
    responsibilities_digest: str | None
    alignment: ModeAlignment | None     # previous trading day -> this day
    perf: PerfState | None              # labelled by the previous trading day
    signals: dict[str, float]
    weights: dict[str, float]

    def to_doc(self) -> dict:
        return {
            "day": self.day,
            "modes": self.modes.to_doc() if self.modes else None,
            "responsibilities_digest": self.responsibilities_digest,
            "alignment": self.alignment.to_doc() if self.alignment else None,
            "perf": self.perf.to_doc() if self.perf else None,
            "signals": {t: self.signals[t] for t in sorted(self.signals)},
            "weights": {t: self.weights[t] for t in sorted(self.weights)},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> DailyState:
        return cls(
            day=doc["day"],
            modes=DailyModeSet.from_doc(doc["modes"]) if doc["modes"] else None,
            responsibilities_digest=doc["responsibilities_digest"],
            alignment=ModeAlignment.from_doc(doc["alignment"]) if doc["alignment"] else None,
            perf=PerfState.from_doc(doc["perf"]) if doc["perf"] else None,
            signals={t: float(v) for t, v in doc["signals"].items()},
            weights={t: float(v) for t, v in doc["weights"].items()})


def state_path(state_dir, day: str) -> Path:
    return Path(state_dir) / f"state_{day}.json"


def write_state(state_dir, state: DailyState) -> Path:
    """Write the day's document atomically: tmp file, then rename."""
    path = state_path(state_dir, state.day)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(state.to_doc(), sort_keys=True, indent=1),
                   encoding="utf-8")
    os.replace(tmp, path)
    return path


def read_state(state_dir, day: str) -> DailyState:
    raw = state_path(state_dir, day).read_text(encoding="utf-8")
    return DailyState.from_doc(json.loads(raw))


@dataclass
class DayContext:
    """In-memory carry between consecutive days (re-derivable from state)."""

    day: str
    args: list[InvestmentArgument]
    vectors: np.ndarray                      # working-space rows, one per argument
    mode_set: DailyModeSet | None
    responsibilities: ResponsibilityMatrix | None
    alignment: ModeAlignment | None
    perf: PerfState | None
    weights: dict[str, float]


def day_seed(seed: int, day: str) -> int:
    """Stable per-day RNG seed (independent of the interpreter hash salt)."""
    digest = hashlib.blake2b(f"{seed}:{day}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def _permute_fit(mode_set: DailyModeSet, resp: ResponsibilityMatrix,
                 perm: np.ndarray) -> tuple[DailyModeSet, ResponsibilityMatrix]:
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(mode_set.k_actual)):
        raise ShapeMismatch("permutation does not cover the mode indices")
    permuted = DailyModeSet(
        day=mode_set.day, k_target=mode_set.k_target, k_actual=mode_set.k_actual,
        weights=mode_set.weights[perm], means=mode_set.means[perm],
        variances=mode_set.variances[perm], log_likelihood=mode_set.log_likelihood,
        loglik_history=list(mode_set.loglik_history))
    shuffled = ResponsibilityMatrix(day=resp.day, argument_ids=list(resp.argument_ids),
                                    matrix=resp.matrix[:, perm])
    return permuted, shuffled


def _singleton_modes(day: str, args: Sequence[InvestmentArgument],
                     vectors: np.ndarray) -> tuple[DailyModeSet, ResponsibilityMatrix]:
    """Clustering switched off: one unit-variance mode per argument."""
    n = len(args)
    mode_set = DailyModeSet(
        day=day, k_target=n, k_actual=n,
        weights=np.full(n, 1.0 / n), means=vectors.copy(),
        variances=np.ones_like(vectors), log_likelihood=0.0)
    resp = ResponsibilityMatrix(day=day, argument_ids=[a.argument_id for a in args],
                                matrix=np.eye(n))
    return mode_set, resp


def _rebuild_responsibilities(state: DailyState, args: Sequence[InvestmentArgument],
                              vectors: np.ndarray,
                              wiring: StageWiring) -> ResponsibilityMatrix | None:
    """Recompute a day's membership matrix from its persisted parameters."""
    if state.modes is None:
        return None
    if not args:
        return ResponsibilityMatrix(day=state.day, argument_ids=[],
                                    matrix=np.zeros((0, state.modes.k_actual)))
    if wiring.singleton_modes:
        return _singleton_modes(state.day, args, vectors)[1]
    matrix = posterior_matrix(state.modes, vectors)
    if wiring.harden_membership:
        matrix = one_hot_rows(matrix)
    return ResponsibilityMatrix(day=state.day,
                                argument_ids=[a.argument_id for a in args],
                                matrix=matrix)


# ---------------------------------------------------------------------------
# one day


def run_day(prev: DayContext | None, day: str, args: list[InvestmentArgument],
            vectors: np.ndarray, prices: PriceTable, universe: list[str],
            config: RunConfig, wiring: StageWiring = StageWiring(),
            mode_permuter: ModePermuter | None = None) -> tuple[DailyState, DayContext]:
    """Advance the engine by one trading day and return (state, context).

    ``vectors`` holds the day's working-space embeddings, one row per
    argument, already projected if a projection is active. ``mode_permuter``
    is a test hook applied to the freshly fitted modes; production runs
    leave it None.
    """
    n_rows = vectors.shape[0] if vectors.ndim == 2 else 0
    if len(args) != n_rows:
        raise ShapeMismatch(f"{len(args)} arguments but {n_rows} embedding rows")

    # fit today's modes (or carry yesterday's through an empty day)
    mode_set: DailyModeSet | None = None
    resp: ResponsibilityMatrix | None = None
    carried = False
    if args:
        if wiring.singleton_modes:
            mode_set, resp = _singleton_modes(day, args, vectors)
        else:
            embeds = [ArgumentEmbedding(argument_id=a.argument_id, day=a.day,
                                        ticker=a.ticker, vector=vectors[i])
                      for i, a in enumerate(args)]
            init = prev.mode_set if (prev is not None and config.warm_start) else None
            mode_set, resp = fit_daily_modes(embeds, config.n_modes, init=init,
                                             rng_seed=day_seed(config.seed, day))
        if wiring.harden_membership:
            resp = ResponsibilityMatrix(day=day, argument_ids=list(resp.argument_ids),
                                        matrix=one_hot_rows(resp.matrix))
        if mode_permuter is not None:
            perm = mode_permuter(day, mode_set.k_actual)
            if perm is not None:
                mode_set, resp = _permute_fit(mode_set, resp, perm)
    elif prev is not None and prev.mode_set is not None:
        carried = True
        log.warning("day %s has no arguments; carrying modes and portfolio forward", day)
        old = prev.mode_set
        mode_set = DailyModeSet(day=day, k_target=old.k_target, k_actual=old.k_actual,
                                weights=old.weights, means=old.means,
                                variances=old.variances,
                                log_likelihood=old.log_likelihood,
                                loglik_history=list(old.loglik_history))
        resp = ResponsibilityMatrix(day=day, argument_ids=[],
                                    matrix=np.zeros((0, old.k_actual)))

    # align yesterday's modes onto today's
    alignment: ModeAlignment | None = None
    if prev is not None and prev.mode_set is not None and mode_set is not None:
        if carried or wiring.index_alignment:
            alignment = identity_alignment(prev.mode_set.k_actual, mode_set.k_actual,
                                           prev.mode_set.means, mode_set.means,
                                           from_day=prev.day, to_day=day)
        else:
            alignment = align_modes(prev.mode_set.means, mode_set.means,
                                    from_day=prev.day, to_day=day)

    # realise yesterday's argument scores and update the performance ledger
    perf: PerfState | None = prev.perf if prev is not None else None
    if prev is not None and prev.mode_set is not None:
        priced = [t for t in universe
                  if prices.has(day, t) and prices.has(prev.day, t)]
        if priced:
            closes_now = np.array([prices.close_price(day, t) for t in priced])
            closes_prev = np.array([prices.close_price(prev.day, t) for t in priced])
            excess = excess_returns(closes_now, closes_prev)
            excess_by_ticker = dict(zip(priced, (float(x) for x in excess)))
        else:
            log.warning("no overlapping prices between %s and %s; "
                        "mode performance decays this step", prev.day, day)
            excess_by_ticker = {}
        scores, kept = score_prev_day_arguments(prev.args, excess_by_ticker)
        if prev.responsibilities is not None and kept:
            prev_rows = prev.responsibilities.matrix[kept]
        else:
            prev_rows = np.zeros((0, prev.mode_set.k_actual))
        agg = aggregate_mode_scores(prev_rows, scores)
        perf = update_perf(prev.perf, prev.alignment, agg,
                           smoothing=config.smoothing, day=prev.day)

    # score today's arguments under yesterday's modes and performance
    if prev is not None and prev.mode_set is not None and args:
        assert perf is not None
        post = posterior_matrix(prev.mode_set, vectors)
        if wiring.harden_membership:
            post = one_hot_rows(post)
        scored = [ScoredArgument(argument_id=a.argument_id, ticker=a.ticker,
                                 polarity=a.polarity,
                                 predicted_score=predict_argument_score(post[i], perf.perf))
                  for i, a in enumerate(args)]
        signals = build_signals(universe, scored, config.count_eps)
        weights = build_portfolio(signals, config.top_fraction)
    elif carried:
        signals = {t: 0.0 for t in universe}
        weights = dict(prev.weights)
    else:
        # first tradable day (or no prior modes yet): hold the market equally
        signals = {t: 0.0 for t in universe}
        weights = equal_weight_portfolio(universe)

    state = DailyState(day=day, modes=mode_set,
                       responsibilities_digest=resp.digest() if resp else None,
                       alignment=alignment, perf=perf,
                       signals=signals, weights=weights)
    ctx = DayContext(day=day, args=list(args), vectors=vectors, mode_set=mode_set,
                     responsibilities=resp, alignment=alignment, perf=perf,
                     weights=weights)
    return state, ctx


# ---------------------------------------------------------------------------
# the run


@dataclass
class RunResult:
    """Everything downstream consumers (backtest, report, tests) need."""

    config: RunConfig
    universe: list[str]
    prices: PriceTable
    days: list[str]
    states: list[DailyState]
    signals_by_day: dict[str, dict[str, float]]
    weights_by_day: dict[str, dict[str, float]]
    perf_by_day: dict[str, PerfState]        # keyed by the day the labels refer to
    mode_sets: dict[str, DailyModeSet]
    responsibilities: dict[str, ResponsibilityMatrix]
    args_by_day: dict[str, list[InvestmentArgument]]
    dataset: SyntheticDataset | None = None
    projection: Projection | None = None

    def perf_states(self) -> list[PerfState]:
        return [self.perf_by_day[d] for d in sorted(self.perf_by_day)]


def _materialize_mock_inputs(config: RunConfig, state_dir: Path) -> SyntheticDataset:
    spec = SyntheticSpec.from_doc(config.synthetic) if config.synthetic else SyntheticSpec()
    dataset = synthesize(spec, rng_seed=config.seed)
    inputs = state_dir / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    if not (inputs / "arguments.jsonl").exists():
        write_arguments_jsonl(inputs / "arguments.jsonl", dataset.arguments)
    if not (inputs / "prices.csv").exists():
        write_price_csv(inputs / "prices.csv", dataset.bars)
    if not (inputs / "universe.txt").exists():
        write_universe(inputs / "universe.txt", dataset.universe)
    return dataset


def _load_file_inputs(config: RunConfig) -> tuple[list[str], PriceTable]:
    if not config.universe_file:
        raise EmptyInput("config.universe_file is required for this source")
    if not config.price_file:
        raise EmptyInput("config.price_file is required for this source")
    return read_universe(config.universe_file), read_price_csv(config.price_file)


def _extract_live_arguments(config: RunConfig, days: Sequence[str], state_dir: Path,
                            agent=None) -> dict[str, list[InvestmentArgument]]:
    """Pull arguments through the extraction agent, one cached file per day."""
    if not config.raw_file:
        raise EmptyInput("config.raw_file is required when source is 'live'")
    raw_by_day: dict[str, list[RawDataPoint]] = {}
    for point in read_raw_jsonl(config.raw_file):
        raw_by_day.setdefault(point.day, []).append(point)
    backend = agent if agent is not None else HttpChatAgent()
    out_dir = state_dir / "extracted"
    out_dir.mkdir(parents=True, exist_ok=True)
    args_by_day: dict[str, list[InvestmentArgument]] = {}
    for day in days:
        cache_file = out_dir / f"{day}.jsonl"
        if cache_file.exists():
            args_by_day[day] = read_arguments_jsonl(cache_file)
            continue
        points = raw_by_day.get(day, [])
        if not points:
            args_by_day[day] = []
            continue
        result = extract_day(day, points, backend, max_workers=config.max_workers,
                             max_reprompts=config.max_reprompts)
        for failure in result.failures:
            log.warning("extraction failed for %s on %s at %s stage: %s",
                        failure.ticker, day, failure.stage, failure.error)
        write_arguments_jsonl(cache_file, result.arguments)
        args_by_day[day] = result.arguments
    return args_by_day


def _make_embedder(config: RunConfig, state_dir: Path) -> Embedder:
    if config.encoder == "hash":
        backend = HashEncoder(dim=config.encoder_dim)
    else:
        backend = HttpEncoder()
    return Embedder(backend, normalize=config.normalize_embeddings,
                    cache=EmbeddingCache(state_dir / "cache"))


def _resolve_projection(config: RunConfig, state_dir: Path, days: Sequence[str],
                        args_by_day: dict[str, list[InvestmentArgument]],
                        embedder: Embedder) -> tuple[Projection | None, list[str]]:
    """Fit (or reload) the dimensionality reduction on the burn-in prefix.

    The map is estimated once, on the first ``projection_burn_in`` trading
    days only, and those days emit no trading state: later days never see
    information from their own future. Returns the projection (or None) and
    the days left for the trading loop.
    """
    want = config.projection == "on" or (
        config.projection == "auto" and config.projection_dim < config.encoder_dim)
    if not want:
        return None, list(days)
    if len(days) <= config.projection_burn_in:
        raise EmptyInput("not enough trading days to cover the projection burn-in")
    proj_path = state_dir / "projection.json"
    if proj_path.exists():
        projection = Projection.from_doc(json.loads(proj_path.read_text(encoding="utf-8")))
    else:
        rows = [embedder.embed_texts([a.text for a in args_by_day[day]])
                for day in list(days)[:config.projection_burn_in]
                if args_by_day.get(day)]
        if not rows:
            raise EmptyInput("projection burn-in days contain no arguments")
        projection = fit_projection(np.vstack(rows), config.projection_dim)
        tmp = proj_path.with_name(proj_path.name + ".tmp")
        tmp.write_text(json.dumps(projection.to_doc(), sort_keys=True), encoding="utf-8")
        os.replace(tmp, proj_path)
    return projection, list(days)[config.projection_burn_in:]


def run_range(config: RunConfig, start: str | None = None, end: str | None = None,
              *, agent=None, mode_permuter: ModePermuter | None = None,
              reuse_existing: bool = True) -> RunResult:
    """Run the engine over the price file's trading days within [start, end].

    Existing per-day state files are verified and reused (set
    ``reuse_existing=False`` to recompute everything); the first missing day
    picks up from the rebuilt context. A failure propagates after the last
    completed day's state is on disk, leaving a resumable checkpoint.
    """
    state_dir = Path(config.state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    wiring = apply_ablation(config)

    dataset: SyntheticDataset | None = None
    if config.source == "mock":
        dataset = _materialize_mock_inputs(config, state_dir)
        universe, prices = list(dataset.universe), PriceTable(list(dataset.bars))
        all_args = list(dataset.arguments)
    elif config.source == "file":
        universe, prices = _load_file_inputs(config)
        if not config.argument_file:
            raise EmptyInput("config.argument_file is required when source is 'file'")
        all_args = read_arguments_jsonl(config.argument_file)
    else:  # live
        universe, prices = _load_file_inputs(config)
        all_args = []

    days = [d for d in prices.days
            if (start is None or d >= start) and (end is None or d <= end)]
    if not days:
        raise EmptyInput(f"no trading days in range [{start!r}, {end!r}]")

    if config.source == "live":
        args_by_day = _extract_live_arguments(config, days, state_dir, agent=agent)
    else:
        args_by_day = group_by_day(all_args)
    if wiring.collapse_arguments:
        if dataset is not None:
            args_by_day = group_by_day(pseudo_raw_arguments(dataset))
        else:
            args_by_day = {day: collapse_to_pseudo_arguments(day_args)
                           for day, day_args in args_by_day.items()}
    orphans = sorted(set(args_by_day) - set(prices.days))
    if orphans:
        log.warning("ignoring arguments on %d day(s) absent from the price file: %s",
                    len(orphans), ", ".join(orphans[:5]))

    embedder = _make_embedder(config, state_dir)
    projection, loop_days = _resolve_projection(config, state_dir, days,
                                                args_by_day, embedder)
    working_dim = projection.basis.shape[0] if projection else config.encoder_dim

    def day_vectors(day_args: list[InvestmentArgument]) -> np.ndarray:
        if not day_args:
            return np.zeros((0, working_dim))
        X = embedder.embed_texts([a.text for a in day_args])
        return projection.apply(X) if projection is not None else X

    states: list[DailyState] = []
    responsibilities: dict[str, ResponsibilityMatrix] = {}
    ctx: DayContext | None = None
    for day in loop_days:
        day_args = args_by_day.get(day, [])
        vectors = day_vectors(day_args)
        if reuse_existing and state_path(state_dir, day).exists():
            state = read_state(state_dir, day)
            resp = _rebuild_responsibilities(state, day_args, vectors, wiring)
            digest = resp.digest() if resp is not None else None
            if digest != state.responsibilities_digest:
                raise NumericalFailure(
                    f"stored responsibilities for {day} do not match a recompute "
                    "from the stored mode parameters; refusing to resume")
            ctx = DayContext(day=day, args=list(day_args), vectors=vectors,
                             mode_set=state.modes, responsibilities=resp,
                             alignment=state.alignment, perf=state.perf,
                             weights=dict(state.weights))
        else:
            try:
                state, ctx = run_day(ctx, day, day_args, vectors, prices, universe,
                                     config, wiring, mode_permuter)
            except Exception:
                log.error("day %s failed; run halted, earlier days remain on disk", day)
                raise
            write_state(state_dir, state)
        states.append(state)
        if ctx.responsibilities is not None:
            responsibilities[day] = ctx.responsibilities

    perf_by_day = {s.perf.day: s.perf for s in states if s.perf is not None}
    return RunResult(
        config=config, universe=universe, prices=prices, days=list(loop_days),
        states=states,
        signals_by_day={s.day: dict(s.signals) for s in states},
        weights_by_day={s.day: dict(s.weights) for s in states},
        perf_by_day=perf_by_day,
        mode_sets={s.day: s.modes for s in states if s.modes is not None},
        responsibilities=responsibilities, args_by_day=args_by_day,
        dataset=dataset, projection=projection)
