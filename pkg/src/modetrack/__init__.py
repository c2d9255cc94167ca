"""Daily reconstruction and tracking of market-wide modes of reasoning.

The package turns raw market text into polarised investment arguments,
embeds them, clusters each day's arguments into a soft mixture of "modes",
matches modes across consecutive days, keeps an exponentially smoothed
performance ledger per mode lineage, and turns tomorrow's arguments into
stock signals and a top-fraction portfolio — plus the backtest and lifecycle
reporting around it.
"""

from .alignment import ModeAlignment, align_modes, brute_force_align, identity_alignment
from .arguments import (ExtractionResult, InvestmentArgument, RawDataPoint,
                        extract_day, parse_argument_json, read_arguments_jsonl,
                        write_arguments_jsonl)
from .backends import (CallableAgent, HashEncoder, HttpChatAgent, HttpEncoder,
                       ScriptedAgent)
from .backtest import (correlation_metrics, forward_returns, max_drawdown,
                       portfolio_metrics, simulate)
from .data import (PriceBar, PriceTable, RegimeCalendar, RegimeSpan,
                   read_price_csv, read_universe)
from .embedding import ArgumentEmbedding, Embedder, EmbeddingCache
from .errors import (BackendUnavailable, DimensionMismatch, EmptyInput,
                     ModetrackError, NumericalFailure, SchemaViolation)
from .evaluation import PerfState, aggregate_mode_scores, excess_returns, update_perf
from .lifecycle import classify_modes, daily_shares
from .modes import (DailyModeSet, Projection, ResponsibilityMatrix,
                    fit_daily_modes, fit_projection, posterior_matrix, posterior_under)
from .pipeline import (DailyState, DayContext, RunConfig, RunResult, run_day,
                       run_range)
from .reporting import ReportBundle, generate_report
from .signals import (ScoredArgument, build_portfolio, build_signals,
                      equal_weight_portfolio, predict_argument_score, stock_signal)
from .synthetic import SyntheticDataset, SyntheticSpec, synthesize

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
