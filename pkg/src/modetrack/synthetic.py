"""Deterministic synthetic corpus with planted themes.

Each trading day every stock is assigned one theme and one hidden stance
(long or short). The stock emits a few arguments whose wording is dominated
by the theme's vocabulary (with a little cross-theme chatter so clusters
genuinely overlap) and whose polarity usually matches the stance. The
stock's next-day excess return is the theme's alpha *in the argued
direction*: a +50 bps theme moves the way its arguments say, a -50 bps theme
reliably moves against them, and a 0 bps theme ignores them. Mode-level
realized scores (polarity x excess) therefore have a stable sign per theme,
while per-stock direction is only recoverable from argument polarity — which
is exactly the structure the engine is supposed to exploit.

The matching price path sets each day's open to the previous close, so the
planted alpha is visible under both the close-to-close prediction target and
the open-to-open execution convention. Everything is drawn from one seeded
generator in a fixed iteration order (day, then ticker, then argument), so a
given (spec, seed) always produces the same corpus byte for byte.
"""

from __future__ import annotations

import datetime as _dt
import logging
from dataclasses import dataclass, field

import numpy as np

from .arguments import InvestmentArgument
from .data import PriceBar

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThemeSpec:
    name: str
    tokens: tuple[str, ...]
    alpha_bps: float = 0.0       # next-day excess return of stance-aligned moves
    polarity_bias: float = 0.9   # probability an argument agrees with the stance


def default_themes() -> tuple[ThemeSpec, ...]:
    """Three planted themes: one whose arguments are right (+50 bps in the
    argued direction), one uninformative, one reliably wrong (-50 bps)."""
    return (
        ThemeSpec(name="valuation-reversion", alpha_bps=50.0, tokens=(
            "undervalued", "bookvalue", "margin", "buyback", "yield",
            "discount", "reversion", "cashflow")),
        ThemeSpec(name="policy-catalyst", alpha_bps=0.0, tokens=(
            "regulation", "subsidy", "approval", "tariff", "policy",
            "hearing", "mandate", "compliance")),
        ThemeSpec(name="momentum-chase", alpha_bps=-50.0, tokens=(
            "breakout", "momentum", "rally", "overbought", "volume",
            "squeeze", "uptrend", "chasing")),
    )


_FILLER = ("report", "quarter", "session", "desk", "note", "update", "flow",
           "print", "tape", "guide", "macro", "level")

# All forms share one glue-word multiset (order varies, words do not) so a
# bag-of-words encoder sees no template signature, only theme tokens.
_RATIONALE_FORMS = (
    "{t0} {t1} regime for {ticker}: {t2} building with {t3}",
    "{ticker} regime: {t0} building for {t1} with {t2} {t3}",
    "building {t0} with {t1} regime for {ticker}: {t2} {t3}",
)

_EVIDENCE_FORMS = (
    "{f0} cites {t4} over {t5} for {ticker}",
    "for {ticker} {f0} cites {t5} over {t4}",
)


@dataclass
class SyntheticSpec:
    """Shape of the planted world. Defaults match the planted-mode experiment."""

    n_days: int = 60
    n_stocks: int = 30
    themes: tuple[ThemeSpec, ...] = field(default_factory=default_themes)
    args_min: int = 3
    args_max: int = 5
    noise_bps: float = 70.0     # idiosyncratic daily return noise
    market_bps: float = 30.0    # common daily shock (demeaned away downstream)
    cross_talk: float = 0.15   # chance an argument borrows another theme's words
    theme_tokens_per_arg: int = 6
    filler_tokens_per_arg: int = 1
    start_day: str = "2024-01-02"
    base_price: float = 100.0

    def tickers(self) -> list[str]:
        return [f"S{i:03d}" for i in range(self.n_stocks)]

    def to_doc(self) -> dict:
        return {
            "n_days": self.n_days, "n_stocks": self.n_stocks,
            "themes": [{"name": t.name, "tokens": list(t.tokens),
                        "alpha_bps": t.alpha_bps, "polarity_bias": t.polarity_bias}
                       for t in self.themes],
            "args_min": self.args_min, "args_max": self.args_max,
            "noise_bps": self.noise_bps, "market_bps": self.market_bps,
            "cross_talk": self.cross_talk,
            "theme_tokens_per_arg": self.theme_tokens_per_arg,
            "filler_tokens_per_arg": self.filler_tokens_per_arg,
            "start_day": self.start_day, "base_price": self.base_price,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SyntheticSpec":
        kwargs = dict(doc)
        if "themes" in kwargs:
            kwargs["themes"] = tuple(
                ThemeSpec(name=t["name"], tokens=tuple(t["tokens"]),
                          alpha_bps=t.get("alpha_bps", 0.0),
                          polarity_bias=t.get("polarity_bias", 0.9))
                for t in kwargs["themes"])
        return cls(**kwargs)


@dataclass
class SyntheticDataset:
    spec: SyntheticSpec
    seed: int
    days: list[str]
    universe: list[str]
    arguments: list[InvestmentArgument]
    bars: list[PriceBar]
    theme_of: dict[tuple[str, str], str]       # (day, ticker) -> theme name
    stance_of: dict[tuple[str, str], int]      # (day, ticker) -> argued direction
    argument_theme: dict[str, str]             # argument id -> theme name

    def arguments_by_day(self) -> dict[str, list[InvestmentArgument]]:
        out: dict[str, list[InvestmentArgument]] = {d: [] for d in self.days}
        for a in self.arguments:
            out[a.day].append(a)
        return out


def _trading_days(start_day: str, n: int) -> list[str]:
    day = _dt.date.fromisoformat(start_day)
    out = []
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += _dt.timedelta(days=1)
    return out


def _argument_text(rng: np.random.Generator, spec: SyntheticSpec, theme: ThemeSpec,
                   ticker: str) -> tuple[str, str]:
    pool = list(theme.tokens)
    if len(spec.themes) > 1 and rng.random() < spec.cross_talk:
        others = [t for t in spec.themes if t.name != theme.name]
        other = others[int(rng.integers(len(others)))]
        picks = rng.choice(len(other.tokens), size=2, replace=False)
        pool = pool + [other.tokens[int(i)] for i in picks]
    n_theme = min(len(pool), max(4, spec.theme_tokens_per_arg))
    t_idx = rng.choice(len(pool), size=n_theme, replace=False)
    toks = [pool[int(i)] for i in t_idx]
    toks = (toks + toks)[:6]  # six template slots, cycling when the draw is short
    f_idx = rng.choice(len(_FILLER), size=max(1, spec.filler_tokens_per_arg), replace=False)
    fill = [_FILLER[int(i)] for i in f_idx]
    r_form = _RATIONALE_FORMS[int(rng.integers(len(_RATIONALE_FORMS)))]
    e_form = _EVIDENCE_FORMS[int(rng.integers(len(_EVIDENCE_FORMS)))]
    rationale = r_form.format(t0=toks[0], t1=toks[1], t2=toks[2], t3=toks[3],
                              ticker=ticker)
    evidence = e_form.format(t4=toks[4], t5=toks[5], f0=fill[0], ticker=ticker)
    return rationale, evidence


def synthesize(spec: SyntheticSpec, rng_seed: int = 0) -> SyntheticDataset:
    """Build the full corpus: arguments, prices and ground truth."""
    rng = np.random.default_rng(rng_seed)
    days = _trading_days(spec.start_day, spec.n_days)
    tickers = spec.tickers()
    themes = spec.themes

    arguments: list[InvestmentArgument] = []
    theme_of: dict[tuple[str, str], str] = {}
    stance_of: dict[tuple[str, str], int] = {}
    argument_theme: dict[str, str] = {}
    assignment = np.zeros((len(days), len(tickers)), dtype=int)
    stances = np.zeros((len(days), len(tickers)), dtype=int)

    for di, day in enumerate(days):
        for si, ticker in enumerate(tickers):
            theme_idx = int(rng.integers(len(themes)))
            theme = themes[theme_idx]
            stance = 1 if rng.random() < 0.5 else -1
            assignment[di, si] = theme_idx
            stances[di, si] = stance
            theme_of[(day, ticker)] = theme.name
            stance_of[(day, ticker)] = stance
            n_args = int(rng.integers(spec.args_min, spec.args_max + 1))
            for ai in range(n_args):
                polarity = stance if rng.random() < theme.polarity_bias else -stance
                rationale, evidence = _argument_text(rng, spec, theme, ticker)
                arg = InvestmentArgument(
                    day=day, ticker=ticker, polarity=polarity, rationale=rationale,
                    evidence=evidence, argument_id=f"{day}:{ticker}:{ai:03d}")
                arguments.append(arg)
                argument_theme[arg.argument_id] = theme.name

    # price path: the close-to-close return over (day i -> i+1) moves by day
    # i's theme alpha in the argued direction, plus noise
    alphas = np.array([t.alpha_bps for t in themes]) * 1e-4
    closes = np.empty((len(days), len(tickers)))
    closes[0] = spec.base_price * (1.0 + 0.001 * np.arange(len(tickers)))
    for di in range(len(days) - 1):
        common = rng.normal(0.0, spec.market_bps * 1e-4)
        noise = rng.normal(0.0, spec.noise_bps * 1e-4, size=len(tickers))
        rets = common + alphas[assignment[di]] * stances[di] + noise
        closes[di + 1] = closes[di] * (1.0 + rets)

    bars: list[PriceBar] = []
    for di, day in enumerate(days):
        for si, ticker in enumerate(tickers):
            open_ = closes[di - 1, si] if di > 0 else closes[0, si]
            bars.append(PriceBar(day=day, ticker=ticker, open=float(open_),
                                 close=float(closes[di, si])))

    return SyntheticDataset(spec=spec, seed=rng_seed, days=days, universe=tickers,
                            arguments=arguments, bars=bars, theme_of=theme_of,
                            stance_of=stance_of, argument_theme=argument_theme)


def pseudo_raw_arguments(dataset: SyntheticDataset) -> list[InvestmentArgument]:
    """Structured-argument ablation: one pseudo-argument per stock-day document.

    Without extraction there is no per-argument stance, so the document is
    read at face value: texts concatenated, polarity fixed bullish. The theme
    vocabulary survives (clusters still form); the directional information
    carried by argument polarity is gone.
    """
    by_key: dict[tuple[str, str], list[InvestmentArgument]] = {}
    for a in dataset.arguments:
        by_key.setdefault((a.day, a.ticker), []).append(a)
    out = []
    for (day, ticker), group in sorted(by_key.items()):
        out.append(InvestmentArgument(
            day=day, ticker=ticker, polarity=1,
            rationale=" ".join(a.rationale for a in group),
            evidence=" ".join(a.evidence for a in group),
            argument_id=f"{day}:{ticker}:raw"))
    return out
