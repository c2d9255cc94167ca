"""Run reports: summary JSON, aligned text, CSV series and PNG figures.

``generate_report`` takes a finished run, evaluates the signal and the
portfolio, classifies mode lineages over the regime calendar, and writes
everything into one directory: ``report.json`` (machine-readable summary),
``report.txt`` (aligned columns for the terminal), the delimited series
(wealth, daily correlations, signals, weights, lineages, category shares) and
matplotlib figures next to them (wealth curve, daily rank correlation bars,
stacked category shares).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backtest import (CorrelationReport, PortfolioReport, SimulationResult,
                       correlation_metrics, forward_returns, portfolio_metrics,
                       simulate)
from .data import RegimeCalendar
from .lifecycle import (CATEGORIES, ModeLifecycleRecord, category_share_table,
                        classify_modes, write_lineage_csv, write_share_csv)
from .pipeline import RunResult

log = logging.getLogger(__name__)


@dataclass
class ReportBundle:
    summary: dict
    simulation: SimulationResult
    correlations: CorrelationReport
    portfolio: PortfolioReport
    lineages: list[ModeLifecycleRecord]
    paths: dict[str, Path] = field(default_factory=dict)


def _fmt(value, width: int = 12) -> str:
    if value is None:
        return "undefined".rjust(width)
    if isinstance(value, float):
        return f"{value:+.6f}".rjust(width)
    return str(value).rjust(width)


def render_text_summary(summary: dict) -> str:
    """Aligned two-column rendering of the summary document."""
    lines = []
    lines.append(f"run of {summary['n_days']} trading day(s): "
                 f"{summary['first_day']} .. {summary['last_day']}")
    lines.append(f"universe of {summary['n_tickers']} ticker(s)")
    lines.append("")
    lines.append("signal quality")
    for key in ("ic", "icir", "rank_ic", "rank_icir"):
        lines.append(f"  {key:<24}{_fmt(summary['signal'][key])}")
    lines.append(f"  {'days_used':<24}{_fmt(summary['signal']['days_used'])}")
    lines.append("")
    lines.append("portfolio")
    for key in ("mean_return", "annualized_return", "sharpe", "max_drawdown",
                "mean_turnover"):
        lines.append(f"  {key:<24}{_fmt(summary['portfolio'][key])}")
    lines.append(f"  {'periods':<24}{_fmt(summary['portfolio']['periods'])}")
    lines.append("")
    lines.append("mode lineages")
    for cat in CATEGORIES:
        lines.append(f"  {cat:<24}{_fmt(summary['lifecycle'][cat])}")
    return "\n".join(lines) + "\n"


def _write_wealth_csv(path: Path, sim: SimulationResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "net_return", "turnover", "wealth"])
        for i, day in enumerate(sim.days):
            writer.writerow([day, repr(float(sim.returns[i])),
                             repr(float(sim.turnover[i])), repr(float(sim.wealth[i]))])


def _write_daily_ic_csv(path: Path, corr: CorrelationReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "pearson", "spearman"])
        for i, day in enumerate(corr.daily_days):
            writer.writerow([day, repr(float(corr.daily_pearson[i])),
                             repr(float(corr.daily_spearman[i]))])


def _write_per_ticker_csv(path: Path, series: dict[str, dict[str, float]],
                          value_name: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "ticker", value_name])
        for day in sorted(series):
            row = series[day]
            for ticker in sorted(row):
                writer.writerow([day, ticker, repr(float(row[ticker]))])


def _render_figures(out: Path, sim: SimulationResult, corr: CorrelationReport,
                    share_days: list[str], share_table: dict[str, np.ndarray]
                    ) -> dict[str, Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths: dict[str, Path] = {}

    if sim.days:
        fig, ax = plt.subplots(figsize=(9, 4.5))
        ax.plot(range(len(sim.wealth)), sim.wealth, lw=1.5)
        step = max(1, len(sim.days) // 8)
        ax.set_xticks(range(0, len(sim.days), step))
        ax.set_xticklabels(sim.days[::step], rotation=30, ha="right", fontsize=8)
        ax.set_ylabel("wealth (start = 1)")
        ax.set_title("net wealth curve")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        paths["wealth_png"] = out / "wealth.png"
        fig.savefig(paths["wealth_png"], dpi=120)
        plt.close(fig)

    if corr.daily_days:
        fig, ax = plt.subplots(figsize=(9, 4.5))
        x = np.arange(len(corr.daily_days))
        ax.bar(x, corr.daily_spearman, width=0.8,
               color=np.where(corr.daily_spearman >= 0, "#2a7", "#c33"))
        step = max(1, len(corr.daily_days) // 8)
        ax.set_xticks(x[::step])
        ax.set_xticklabels(corr.daily_days[::step], rotation=30, ha="right", fontsize=8)
        ax.axhline(0.0, color="black", lw=0.8)
        ax.set_ylabel("daily rank correlation")
        ax.set_title("signal vs next-day returns")
        fig.tight_layout()
        paths["daily_ic_png"] = out / "daily_ic.png"
        fig.savefig(paths["daily_ic_png"], dpi=120)
        plt.close(fig)

    if share_days:
        fig, ax = plt.subplots(figsize=(9, 4.5))
        x = np.arange(len(share_days))
        ax.stackplot(x, [share_table[c] for c in CATEGORIES], labels=list(CATEGORIES),
                     alpha=0.85)
        step = max(1, len(share_days) // 8)
        ax.set_xticks(x[::step])
        ax.set_xticklabels(share_days[::step], rotation=30, ha="right", fontsize=8)
        ax.set_ylim(0, 1)
        ax.set_ylabel("share of daily mode mass")
        ax.set_title("mode lifecycle mix")
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
        paths["shares_png"] = out / "category_shares.png"
        fig.savefig(paths["shares_png"], dpi=120)
        plt.close(fig)

    return paths


def generate_report(result: RunResult, out_dir,
                    calendar: RegimeCalendar | None = None,
                    *, make_figures: bool = True) -> ReportBundle:
    """Evaluate a finished run and write the full report bundle to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = result.config

    fwd = forward_returns(result.prices, result.universe)
    corr = correlation_metrics(result.signals_by_day, fwd)
    sim = simulate(result.weights_by_day, result.prices,
                   cost_rate=config.cost_rate, execution=config.execution)
    port = portfolio_metrics(sim.returns, sim.turnover,
                             periods_per_year=config.periods_per_year,
                             risk_free=config.risk_free)

    perf_states = result.perf_states()
    if calendar is None:
        if config.calendar_file:
            doc = json.loads(Path(config.calendar_file).read_text(encoding="utf-8"))
            calendar = RegimeCalendar.from_doc(doc)
        elif result.days:
            calendar = RegimeCalendar.single(result.days[0], result.days[-1])
    records: list[ModeLifecycleRecord] = []
    share_days: list[str] = []
    share_table: dict[str, np.ndarray] = {}
    if perf_states and calendar is not None:
        records = classify_modes(perf_states, calendar)
        share_days, share_table = category_share_table(perf_states, records)

    category_counts = {c: sum(1 for r in records if r.category == c)
                       for c in CATEGORIES}
    summary = {
        "n_days": len(result.days),
        "first_day": result.days[0] if result.days else None,
        "last_day": result.days[-1] if result.days else None,
        "n_tickers": len(result.universe),
        "signal": {
            "ic": corr.ic, "icir": corr.icir,
            "rank_ic": corr.ric, "rank_icir": corr.ricir,
            "days_used": len(corr.daily_days),
            "days_skipped_constant_signal": corr.skipped_constant_signal,
            "days_skipped_degenerate_returns": corr.skipped_degenerate_returns,
            "days_skipped_small_cross_section": corr.skipped_small,
        },
        "portfolio": {
            "periods": port.n_periods,
            "mean_return": port.mean_return,
            "annualized_return": port.annualized_return,
            "sharpe": port.sharpe,
            "sharpe_defined": port.sharpe_defined,
            "max_drawdown": port.max_drawdown,
            "mean_turnover": port.mean_turnover,
            "execution": config.execution,
            "cost_rate": config.cost_rate,
            "events": list(sim.events),
            "skipped_days": list(sim.skipped_days),
        },
        "lifecycle": category_counts,
        "config": config.to_doc(),
    }

    paths: dict[str, Path] = {}
    paths["report_json"] = out / "report.json"
    paths["report_json"].write_text(json.dumps(summary, indent=2, sort_keys=True),
                                    encoding="utf-8")
    paths["report_txt"] = out / "report.txt"
    paths["report_txt"].write_text(render_text_summary(summary), encoding="utf-8")

    paths["wealth_csv"] = out / "wealth.csv"
    _write_wealth_csv(paths["wealth_csv"], sim)
    paths["daily_ic_csv"] = out / "daily_ic.csv"
    _write_daily_ic_csv(paths["daily_ic_csv"], corr)
    paths["signals_csv"] = out / "signals.csv"
    _write_per_ticker_csv(paths["signals_csv"], result.signals_by_day, "signal")
    paths["weights_csv"] = out / "weights.csv"
    _write_per_ticker_csv(paths["weights_csv"], result.weights_by_day, "weight")
    paths["lineages_csv"] = out / "lineages.csv"
    write_lineage_csv(paths["lineages_csv"], records)
    paths["shares_csv"] = out / "category_shares.csv"
    write_share_csv(paths["shares_csv"], share_days, share_table)

    if make_figures:
        paths.update(_render_figures(out, sim, corr, share_days, share_table))

    log.info("report written to %s (%d file(s))", out, len(paths))
    return ReportBundle(summary=summary, simulation=sim, correlations=corr,
                        portfolio=port, lineages=records, paths=paths)
