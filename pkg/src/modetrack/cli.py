"""Command-line entry points.

Subcommands:

* ``extract``      turn raw market text into structured argument JSONL
* ``run``          advance the daily engine over a date range, persisting state
* ``backtest``     evaluate persisted (or freshly computed) portfolios
* ``report``       write the full report bundle (JSON, text, CSVs, figures)
* ``align-check``  self-test the mode matcher against exhaustive search

Backend endpoints and credentials are taken from environment variables (see
``modetrack.backends``); nothing secret lives in config files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .alignment import align_modes, brute_force_align
from .arguments import (extract_day, group_by_day, read_raw_jsonl,
                        write_arguments_jsonl)
from .backends import HttpChatAgent, ScriptedAgent
from .errors import ModetrackError
from .pipeline import RunConfig, run_range
from .reporting import generate_report, render_text_summary

log = logging.getLogger(__name__)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run config JSON file")
    parser.add_argument("--state-dir", help="override config.state_dir")
    parser.add_argument("--seed", type=int, help="override config.seed")
    parser.add_argument("--start", help="first trading day (inclusive)")
    parser.add_argument("--end", help="last trading day (inclusive)")


def _load_config(ns: argparse.Namespace) -> RunConfig:
    overrides = {}
    if ns.state_dir is not None:
        overrides["state_dir"] = ns.state_dir
    if ns.seed is not None:
        overrides["seed"] = ns.seed
    return RunConfig.from_file(ns.config, overrides)


def _cmd_extract(ns: argparse.Namespace) -> int:
    raw = read_raw_jsonl(ns.raw)
    by_day: dict[str, list] = {}
    for point in raw:
        if ns.day and point.day != ns.day:
            continue
        by_day.setdefault(point.day, []).append(point)
    if not by_day:
        print("no raw records selected", file=sys.stderr)
        return 1
    if ns.canned_replies:
        replies = [json.loads(line)["reply"]
                   for line in Path(ns.canned_replies).read_text(encoding="utf-8").splitlines()
                   if line.strip()]
        backend = ScriptedAgent(replies)
    else:
        backend = HttpChatAgent()
    arguments, failures = [], []
    for day in sorted(by_day):
        result = extract_day(day, by_day[day], backend,
                             max_workers=ns.max_workers,
                             max_reprompts=ns.max_reprompts)
        arguments.extend(result.arguments)
        failures.extend(result.failures)
    write_arguments_jsonl(ns.out, arguments)
    print(f"extracted {len(arguments)} argument(s) over {len(by_day)} day(s) "
          f"-> {ns.out}")
    for failure in failures:
        print(f"  failed {failure.ticker} {failure.day} [{failure.stage}]: "
              f"{failure.error}", file=sys.stderr)
    return 0 if not failures else 1


def _cmd_run(ns: argparse.Namespace) -> int:
    config = _load_config(ns)
    result = run_range(config, ns.start, ns.end,
                       reuse_existing=not ns.recompute)
    last = result.states[-1]
    held = sum(1 for w in last.weights.values() if w > 0)
    print(f"ran {len(result.days)} day(s) {result.days[0]} .. {result.days[-1]}; "
          f"state in {config.state_dir}")
    print(f"last day holds {held} name(s); "
          f"modes fitted on {len(result.mode_sets)} day(s)")
    return 0


def _cmd_backtest(ns: argparse.Namespace) -> int:
    from .backtest import (correlation_metrics, forward_returns,
                           portfolio_metrics, simulate)
    config = _load_config(ns)
    result = run_range(config, ns.start, ns.end)
    sim = simulate(result.weights_by_day, result.prices,
                   cost_rate=config.cost_rate, execution=config.execution)
    port = portfolio_metrics(sim.returns, sim.turnover,
                             periods_per_year=config.periods_per_year,
                             risk_free=config.risk_free)
    corr = correlation_metrics(result.signals_by_day,
                               forward_returns(result.prices, result.universe))
    rows = [
        ("periods", port.n_periods),
        ("mean_return", port.mean_return),
        ("annualized_return", port.annualized_return),
        ("sharpe", port.sharpe if port.sharpe_defined else None),
        ("max_drawdown", port.max_drawdown),
        ("mean_turnover", port.mean_turnover),
        ("ic", corr.ic), ("icir", corr.icir),
        ("rank_ic", corr.ric), ("rank_icir", corr.ricir),
    ]
    for name, value in rows:
        shown = "undefined" if value is None else (
            f"{value:+.6f}" if isinstance(value, float) else str(value))
        print(f"{name:<20}{shown:>14}")
    if ns.out:
        from .reporting import _write_wealth_csv
        _write_wealth_csv(Path(ns.out), sim)
        print(f"wealth series -> {ns.out}")
    return 0


def _cmd_report(ns: argparse.Namespace) -> int:
    config = _load_config(ns)
    result = run_range(config, ns.start, ns.end)
    bundle = generate_report(result, ns.out, make_figures=not ns.no_figures)
    sys.stdout.write(render_text_summary(bundle.summary))
    print(f"report bundle -> {ns.out} ({len(bundle.paths)} file(s))")
    return 0


def _cmd_align_check(ns: argparse.Namespace) -> int:
    rng = np.random.default_rng(ns.seed)
    worst = 0.0
    started = time.perf_counter()
    for i in range(ns.instances):
        kp = int(rng.integers(2, ns.max_k + 1))
        kc = int(rng.integers(2, ns.max_k + 1))
        dim = int(rng.integers(2, 9))
        prev = rng.normal(size=(kp, dim))
        curr = rng.normal(size=(kc, dim))
        fast = align_modes(prev, curr, from_day="a", to_day="b")
        slow = brute_force_align(prev, curr, from_day="a", to_day="b")
        gap = abs(fast.total_cost - slow.total_cost)
        worst = max(worst, gap)
        if gap != 0.0:
            print(f"align-check FAILED on instance {i}: "
                  f"fast {fast.total_cost!r} vs exhaustive {slow.total_cost!r}")
            return 1
    elapsed = time.perf_counter() - started
    print(f"align-check passed: {ns.instances} instance(s), max cost gap {worst!r}, "
          f"{elapsed:.2f}s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modetrack",
        description="daily market mode reconstruction and tracking engine")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="structured arguments from raw text")
    p.add_argument("--raw", required=True, help="raw JSONL (day/ticker/modality/body)")
    p.add_argument("--out", required=True, help="argument JSONL to write")
    p.add_argument("--day", help="only this day")
    p.add_argument("--max-workers", type=int, default=1)
    p.add_argument("--max-reprompts", type=int, default=2)
    p.add_argument("--canned-replies", help="JSONL of {'reply': ...} for offline use")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("run", help="advance the engine over a date range")
    _add_config_arguments(p)
    p.add_argument("--recompute", action="store_true",
                   help="ignore existing per-day state files")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("backtest", help="evaluate portfolios and signals")
    _add_config_arguments(p)
    p.add_argument("--out", help="optional wealth CSV path")
    p.set_defaults(func=_cmd_backtest)

    p = sub.add_parser("report", help="write the full report bundle")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("align-check", help="verify matching against brute force")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--max-k", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_align_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if ns.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except ModetrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
