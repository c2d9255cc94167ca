"""Structured investment-argument extraction.

Raw per-stock documents (fundamental / technical / news modalities) are
condensed by a filter agent into per-modality summaries, which a generator
agent then turns into structured arguments: a polarity (+1 bullish / -1
bearish), an analytical rationale and the supporting evidence.

Replies are parsed strictly: code fences are tolerated and stripped, anything
else non-conforming raises :class:`SchemaViolation` with the byte offset of
the first offending position. A malformed generator reply is re-prompted a
bounded number of times; after that the (day, ticker) yields no arguments and
the failure is recorded. Nothing is ever silently dropped.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .backends import AgentBackend, with_retries
from .errors import BackendUnavailable, SchemaViolation

log = logging.getLogger(__name__)

MODALITIES = ("fundamental", "technical", "news")

#: slot used by the generator template for each modality summary
_MODALITY_SLOTS = {
    "fundamental": "[fundamental_output]",
    "technical": "[technical_output]",
    "news": "[news_output]",
}

#: the raw-data slot in the filter template is the full bracketed sentence
RAW_DATA_SLOT = ("[Raw Data for the specified modality, e.g., a table of fundamental "
                 "ratios, a list of recent news headlines, or a time-series of "
                 "technical indicators]")

@dataclass(frozen=True)
class RawDataPoint:
    """One raw document for (day, ticker, modality)."""

    day: str
    ticker: str
    modality: str
    body: str

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")


@dataclass(frozen=True)
class FilteredInfo:
    """Filter-agent output: a condensed view of one raw document."""

    day: str
    ticker: str
    modality: str
    summary: str


@dataclass(frozen=True)
class InvestmentArgument:
    """One structured argument about a stock on a day."""

    day: str
    ticker: str
    polarity: int  # +1 bullish, -1 bearish
    rationale: str
    evidence: str
    argument_id: str

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity!r}")
        if not self.rationale or not self.evidence:
            raise ValueError("rationale and evidence must be non-empty")

    @property
    def text(self) -> str:
        """Embedding input: rationale and evidence joined by one newline."""
        return f"{self.rationale}\n{self.evidence}"


@dataclass(frozen=True)
class ExtractionFailure:
    """Record of a skipped item (never silently dropped)."""

    day: str
    ticker: str
    stage: str  # "filter" or "generate"
    modality: str | None
    error: str


def _load_template(name: str) -> str:
    return resources.files("modetrack.prompts").joinpath(name).read_text(encoding="utf-8")


def system_prompt() -> str:
    return _load_template("system.txt")


def render_filter_prompt(raw: RawDataPoint, asset_name: str | None = None) -> str:
    tpl = _load_template("filter_user.txt")
    tpl = tpl.replace("[Asset Name]", asset_name or raw.ticker)
    tpl = tpl.replace("[Asset Ticker]", raw.ticker)
    tpl = tpl.replace("[Analysis Date]", raw.day)
    tpl = tpl.replace("[Modality Name]", raw.modality)
    return tpl.replace(RAW_DATA_SLOT, raw.body)


def render_generate_prompt(day: str, ticker: str, infos: Sequence[FilteredInfo],
                           asset_name: str | None = None) -> str:
    tpl = _load_template("generate_user.txt")
    tpl = tpl.replace("[Asset Name]", asset_name or ticker)
    tpl = tpl.replace("[Asset Ticker]", ticker)
    tpl = tpl.replace("[Analysis Date]", day)
    by_modality = {i.modality: i.summary for i in infos}
    for modality, slot in _MODALITY_SLOTS.items():
        tpl = tpl.replace(slot, by_modality.get(modality, "(no data)"))
    return tpl


def strip_code_fences(text: str) -> tuple[str, int]:
    """Remove a leading/trailing markdown fence; return (body, offset of body)."""
    stripped = text
    offset = 0
    m = re.match(r"\s*```[a-zA-Z0-9_-]*[ \t]*\r?\n?", stripped)
    if m:
        offset = m.end()
        stripped = stripped[m.end():]
        m2 = re.search(r"\r?\n?[ \t]*```\s*$", stripped)
        if m2:
            stripped = stripped[:m2.start()]
    return stripped, offset


def _decode_json(text: str, base_offset: int):
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc.msg}", base_offset + exc.pos) from exc
    return value


def _array_element_offsets(text: str) -> list[int]:
    """Byte-ish (character) offsets of each element of a top-level JSON array."""
    dec = json.JSONDecoder()
    i = text.index("[") + 1
    offsets = []
    n = len(text)
    while True:
        while i < n and text[i] in " \t\r\n,":
            i += 1
        if i >= n or text[i] == "]":
            break
        offsets.append(i)
        _, i = dec.raw_decode(text, i)
    return offsets


def parse_argument_json(text: str, *, day: str, ticker: str) -> list[InvestmentArgument]:
    """Strictly parse a generator reply into arguments.

    The reply must be a JSON array of objects with exactly the keys
    ``p`` (int, +1 or -1), ``a`` and ``e`` (non-empty strings). Code fences
    are stripped first. Any violation raises ``SchemaViolation`` pointing at
    the first offending offset; no partial list is ever returned.
    """
    body, base = strip_code_fences(text)
    if not body.strip():
        raise SchemaViolation("empty reply", base)
    value = _decode_json(body, base)
    if not isinstance(value, list):
        raise SchemaViolation("top-level value must be a JSON array",
                              base + len(body) - len(body.lstrip()))
    offsets = _array_element_offsets(body)
    out: list[InvestmentArgument] = []
    for i, item in enumerate(value):
        at = base + offsets[i]
        if not isinstance(item, dict):
            raise SchemaViolation(f"element {i} is not an object", at)
        extra = set(item) - {"p", "a", "e"}
        missing = {"p", "a", "e"} - set(item)
        if missing:
            raise SchemaViolation(f"element {i} missing keys {sorted(missing)}", at)
        if extra:
            raise SchemaViolation(f"element {i} has unexpected keys {sorted(extra)}", at)
        p, a, e = item["p"], item["a"], item["e"]
        if isinstance(p, bool) or not isinstance(p, int) or p not in (-1, 1):
            raise SchemaViolation(f"element {i}: p must be the integer 1 or -1", at)
        if not isinstance(a, str) or not a.strip():
            raise SchemaViolation(f"element {i}: a must be a non-empty string", at)
        if not isinstance(e, str) or not e.strip():
            raise SchemaViolation(f"element {i}: e must be a non-empty string", at)
        out.append(InvestmentArgument(
            day=day, ticker=ticker, polarity=p, rationale=a, evidence=e,
            argument_id=f"{day}:{ticker}:{i:03d}"))
    return out


def render_arguments(args: Sequence[InvestmentArgument]) -> str:
    """Inverse of ``parse_argument_json`` (wire keys p/a/e)."""
    return json.dumps([{"p": a.polarity, "a": a.rationale, "e": a.evidence} for a in args])


def parse_filter_json(text: str, *, expected_ticker: str) -> dict:
    """Strictly parse a filter reply; Asset_code must echo the ticker."""
    body, base = strip_code_fences(text)
    if not body.strip():
        raise SchemaViolation("empty reply", base)
    value = _decode_json(body, base)
    if not isinstance(value, dict):
        raise SchemaViolation("top-level value must be a JSON object", base)
    required = {"Modality_name", "Analysis_summary", "Asset_code"}
    missing = required - set(value)
    if missing:
        raise SchemaViolation(f"missing keys {sorted(missing)}", base)
    if not isinstance(value["Analysis_summary"], str) or not value["Analysis_summary"].strip():
        raise SchemaViolation("Analysis_summary must be a non-empty string", base)
    if value["Asset_code"] != expected_ticker:
        raise SchemaViolation(
            f"Asset_code {value['Asset_code']!r} does not match ticker {expected_ticker!r}", base)
    return value


def filter_information(raw: RawDataPoint, backend: AgentBackend,
                       asset_name: str | None = None) -> FilteredInfo:
    """Run the filter agent on one raw document."""
    reply = backend.complete(system_prompt(), render_filter_prompt(raw, asset_name))
    parsed = parse_filter_json(reply, expected_ticker=raw.ticker)
    return FilteredInfo(day=raw.day, ticker=raw.ticker, modality=raw.modality,
                        summary=parsed["Analysis_summary"])


_REPROMPT_SUFFIX = ("\n\nYour previous reply could not be parsed ({error}). "
                    "Reply again following the Output Format exactly.")


def generate_arguments(day: str, ticker: str, infos: Sequence[FilteredInfo],
                       backend: AgentBackend, *, max_reprompts: int = 2,
                       asset_name: str | None = None) -> list[InvestmentArgument]:
    """Run the generator agent for one (day, ticker).

    A malformed reply is re-prompted up to ``max_reprompts`` times with the
    parse error appended; if every attempt fails the last ``SchemaViolation``
    propagates to the caller (the extraction driver records it and moves on).
    """
    user = render_generate_prompt(day, ticker, infos, asset_name)
    prompt = user
    last: SchemaViolation | None = None
    for attempt in range(1 + max_reprompts):
        reply = backend.complete(system_prompt(), prompt)
        try:
            return parse_argument_json(reply, day=day, ticker=ticker)
        except SchemaViolation as exc:
            last = exc
            log.warning("generator reply invalid for %s %s (attempt %d): %s",
                        day, ticker, attempt + 1, exc)
            prompt = user + _REPROMPT_SUFFIX.format(error=exc)
    assert last is not None
    raise last


@dataclass
class ExtractionResult:
    day: str
    arguments: list[InvestmentArgument]
    failures: list[ExtractionFailure]


def extract_day(day: str, raw_points: Sequence[RawDataPoint], backend: AgentBackend,
                *, max_workers: int = 1, max_reprompts: int = 2,
                retry_attempts: int = 3,
                asset_names: dict[str, str] | None = None) -> ExtractionResult:
    """Filter + generate for every ticker with raw data on ``day``.

    Agent calls may fan out over a thread pool; results are gathered and
    sorted deterministically regardless of completion order. Transport errors
    are retried with backoff, then recorded as failures.
    """
    names = asset_names or {}
    points = [p for p in raw_points if p.day == day]
    failures: list[ExtractionFailure] = []
    infos: list[FilteredInfo] = []

    def run_filter(raw: RawDataPoint):
        return filter_information(raw, backend, names.get(raw.ticker))

    def guarded_filter(raw: RawDataPoint):
        try:
            return with_retries(lambda: run_filter(raw), attempts=retry_attempts)
        except (SchemaViolation, BackendUnavailable) as exc:
            return ExtractionFailure(day=day, ticker=raw.ticker, stage="filter",
                                     modality=raw.modality, error=str(exc))

    if max_workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(guarded_filter, points))
    else:
        results = [guarded_filter(p) for p in points]
    for res in results:
        (failures if isinstance(res, ExtractionFailure) else infos).append(res)

    by_ticker: dict[str, list[FilteredInfo]] = {}
    for info in infos:
        by_ticker.setdefault(info.ticker, []).append(info)

    def guarded_generate(ticker: str):
        ticker_infos = sorted(by_ticker[ticker], key=lambda i: MODALITIES.index(i.modality))
        try:
            return with_retries(
                lambda: generate_arguments(day, ticker, ticker_infos, backend,
                                           max_reprompts=max_reprompts,
                                           asset_name=names.get(ticker)),
                attempts=retry_attempts)
        except (SchemaViolation, BackendUnavailable) as exc:
            return ExtractionFailure(day=day, ticker=ticker, stage="generate",
                                     modality=None, error=str(exc))

    tickers = sorted(by_ticker)
    if max_workers > 1 and len(tickers) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            gen_results = list(pool.map(guarded_generate, tickers))
    else:
        gen_results = [guarded_generate(t) for t in tickers]

    arguments: list[InvestmentArgument] = []
    for res in gen_results:
        if isinstance(res, ExtractionFailure):
            failures.append(res)
            log.warning("extraction failure %s %s [%s]: %s", res.day, res.ticker,
                        res.stage, res.error)
        else:
            arguments.extend(res)
    arguments.sort(key=lambda a: (a.ticker, a.argument_id))
    return ExtractionResult(day=day, arguments=arguments, failures=failures)


# --- JSONL persistence ------------------------------------------------------

def write_arguments_jsonl(path, args: Iterable[InvestmentArgument]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in args:
            fh.write(json.dumps({"day": a.day, "ticker": a.ticker, "p": a.polarity,
                                 "a": a.rationale, "e": a.evidence, "id": a.argument_id},
                                ensure_ascii=False) + "\n")


def read_arguments_jsonl(path) -> list[InvestmentArgument]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                out.append(InvestmentArgument(
                    day=doc["day"], ticker=doc["ticker"], polarity=doc["p"],
                    rationale=doc["a"], evidence=doc["e"], argument_id=doc["id"]))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise SchemaViolation(f"bad argument record at line {line_no}: {exc}") from exc
    return out


def read_raw_jsonl(path) -> list[RawDataPoint]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                out.append(RawDataPoint(day=doc["day"], ticker=doc["ticker"],
                                        modality=doc["modality"], body=doc["body"]))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise SchemaViolation(f"bad raw record at line {line_no}: {exc}") from exc
    return out


def group_by_day(args: Sequence[InvestmentArgument]) -> dict[str, list[InvestmentArgument]]:
    """Group arguments by day, each day ordered by (ticker, argument_id)."""
    grouped: dict[str, list[InvestmentArgument]] = {}
    for a in args:
        grouped.setdefault(a.day, []).append(a)
    for day_args in grouped.values():
        day_args.sort(key=lambda a: (a.ticker, a.argument_id))
    return grouped
