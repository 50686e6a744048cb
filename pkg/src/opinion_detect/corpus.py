"""Corpus ingestion and the selection funnel.

Raw posts are read from JSON Lines, then narrowed by a fixed sequence of
filters: deduplication, Persian-language detection, non-zero engagement,
keyword relevance and a minimum influence score.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from opinion_detect.preprocess import DEFAULT_CONFIG, NormalizationConfig, normalize

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 600
COUNT_FIELDS = ("likes", "comments", "retweets")
PERSIAN_LETTERS = frozenset("پچژگ")
PERSIAN_SHARE = 0.6
STAGES = ("dedup", "language", "engagement", "keywords", "influence")

_ARABIC_RANGES = (
    (0x0600, 0x06FF),
    (0x0750, 0x077F),
    (0x08A0, 0x08FF),
    (0xFB50, 0xFDFF),
    (0xFE70, 0xFEFF),
)


class CorpusError(ValueError):
    """A corpus line that does not match the record schema."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class TweetRecord:
    id: str
    text: str
    likes: int = 0
    comments: int = 0
    retweets: int = 0
    lang: str | None = None
    created_at: str | None = None
    user_id: str | None = None

    def __post_init__(self) -> None:
        for name in COUNT_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.text.strip():
            raise ValueError("text is empty")

    def to_json(self) -> str:
        data = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(data, ensure_ascii=False)


@dataclass(frozen=True)
class KeywordSet:
    keywords: tuple[str, ...]

    def __post_init__(self) -> None:
        if any(not kw for kw in self.keywords):
            raise ValueError("empty keyword")
        if len(set(self.keywords)) != len(self.keywords):
            raise ValueError("duplicate keyword")

    @classmethod
    def from_strings(cls, words: Iterable[str], config: NormalizationConfig = DEFAULT_CONFIG) -> "KeywordSet":
        """Normalize ``words``, dropping blanks and later duplicates."""
        seen: dict[str, None] = {}
        for word in words:
            kw = normalize(word, config)
            if kw:
                seen.setdefault(kw, None)
        return cls(tuple(seen))

    def __iter__(self):
        return iter(self.keywords)

    def __len__(self) -> int:
        return len(self.keywords)


@dataclass(frozen=True)
class StageCount:
    name: str
    n_in: int
    n_out: int


@dataclass
class FunnelReport:
    stages: list[StageCount] = field(default_factory=list)
    keyword_frequencies: dict[str, int] = field(default_factory=dict)

    @property
    def final_count(self) -> int:
        return self.stages[-1].n_out if self.stages else 0

    def to_dict(self) -> dict:
        return {
            "stages": [asdict(s) for s in self.stages],
            "keyword_frequencies": [{"keyword": k, "count": n} for k, n in self.keyword_frequencies.items()],
        }

    def to_text(self) -> str:
        lines = ["Stage\tIn\tOut"]
        lines += [f"{s.name}\t{s.n_in}\t{s.n_out}" for s in self.stages]
        lines += ["", "Keyword\tNumber"]
        lines += [f"{k}\t{n}" for k, n in self.keyword_frequencies.items()]
        lines.append(f"Total\t{sum(self.keyword_frequencies.values())}")
        return "\n".join(lines) + "\n"


def _parse_record(data: object, lineno: int) -> TweetRecord:
    if not isinstance(data, dict):
        raise CorpusError(lineno, "record is not an object")
    for name in ("id", "text"):
        if name not in data or data[name] is None:
            raise CorpusError(lineno, f"missing field {name!r}")
    rid = data["id"]
    if isinstance(rid, bool) or not isinstance(rid, (str, int)):
        raise CorpusError(lineno, "id must be a string")
    text = data["text"]
    if not isinstance(text, str):
        raise CorpusError(lineno, "text must be a string")
    if not text.strip():
        raise CorpusError(lineno, "text is empty")
    counts = {}
    for name in COUNT_FIELDS:
        value = data.get(name, 0)
        if isinstance(value, bool) or not isinstance(value, int):
            raise CorpusError(lineno, f"{name} must be an integer, got {value!r}")
        if value < 0:
            raise CorpusError(lineno, f"{name} is negative ({value})")
        counts[name] = value
    optional = {}
    for name in ("lang", "created_at", "user_id"):
        value = data.get(name)
        if value is not None and (isinstance(value, bool) or not isinstance(value, (str, int))):
            raise CorpusError(lineno, f"{name} must be a string")
        optional[name] = None if value is None else str(value)
    if optional["created_at"] is not None:
        try:
            datetime.fromisoformat(optional["created_at"].replace("Z", "+00:00"))
        except ValueError:
            raise CorpusError(lineno, f"created_at is not ISO-8601: {optional['created_at']!r}") from None
    return TweetRecord(id=str(rid), text=text, **counts, **optional)


def parse_corpus(lines: Iterable[str], strict: bool = True) -> list[TweetRecord]:
    """Parse JSON Lines records in input order.

    Blank lines are ignored. In strict mode the first bad line raises
    :class:`CorpusError`; otherwise it is logged and skipped.
    """
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(lineno, f"invalid JSON ({exc.msg})") from None
            records.append(_parse_record(data, lineno))
        except CorpusError as exc:
            if strict:
                raise
            logger.warning("skipping %s", exc)
    return records


def read_corpus(path: str | Path, strict: bool = True) -> list[TweetRecord]:
    with open(path, encoding="utf-8") as handle:
        return parse_corpus(handle, strict=strict)


def write_corpus(records: Iterable[TweetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(record.to_json() + "\n")


def load_keywords(path: str | Path, config: NormalizationConfig = DEFAULT_CONFIG) -> KeywordSet:
    """One keyword per line; blank lines and ``#`` comments are skipped."""
    with open(path, encoding="utf-8") as handle:
        words = [line.strip() for line in handle if line.strip() and not line.lstrip().startswith("#")]
    return KeywordSet.from_strings(words, config)


@lru_cache(maxsize=1)
def persian_stopwords() -> frozenset[str]:
    text = resources.files("opinion_detect").joinpath("data/persian_stopwords.txt").read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#"))


def is_arabic_script(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _ARABIC_RANGES)


def influence_score(t: TweetRecord) -> int:
    return t.likes + 2 * t.comments + 3 * t.retweets


def has_engagement(t: TweetRecord) -> bool:
    return t.likes + t.comments + t.retweets > 0


def _looks_persian(normalized: str) -> bool:
    letters = [ch for ch in normalized if ch.isalpha()]
    if not letters:
        return False
    arabic = sum(1 for ch in letters if is_arabic_script(ch))
    if arabic < PERSIAN_SHARE * len(letters):
        return False
    if PERSIAN_LETTERS.intersection(normalized):
        return True
    return not persian_stopwords().isdisjoint(normalized.split())


def is_persian(t: TweetRecord, config: NormalizationConfig = DEFAULT_CONFIG) -> bool:
    """``lang == "fa"``, or a mostly Arabic-script text with a Persian marker.

    A Persian marker is one of the letters پ چ ژ گ or a bundled Persian
    function word. Script shares are measured on the normalized text.
    """
    if t.lang is not None and t.lang.lower() == "fa":
        return True
    return _looks_persian(normalize(t.text, config))


def _matches(normalized: str, keywords: KeywordSet) -> frozenset[str]:
    return frozenset(kw for kw in keywords if kw in normalized)


def match_keywords(t: TweetRecord, keywords: KeywordSet, config: NormalizationConfig = DEFAULT_CONFIG) -> frozenset[str]:
    """Keywords occurring as substrings of the normalized text."""
    return _matches(normalize(t.text, config), keywords)


def dedup(corpus: Sequence[TweetRecord], config: NormalizationConfig = DEFAULT_CONFIG) -> list[TweetRecord]:
    """Drop repeated ids, then repeated normalized texts; first occurrence wins."""
    seen_ids: set[str] = set()
    by_id = []
    for record in corpus:
        if record.id not in seen_ids:
            seen_ids.add(record.id)
            by_id.append(record)
    seen_texts: set[str] = set()
    out = []
    for record in by_id:
        key = normalize(record.text, config)
        if key not in seen_texts:
            seen_texts.add(key)
            out.append(record)
    return out


def filter_influential(corpus: Sequence[TweetRecord], threshold: int = DEFAULT_THRESHOLD) -> list[TweetRecord]:
    """Keep records with ``influence_score >= threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return [t for t in corpus if influence_score(t) >= threshold]


@dataclass(frozen=True)
class FunnelConfig:
    threshold: int = DEFAULT_THRESHOLD
    normalization: NormalizationConfig = DEFAULT_CONFIG


def run_funnel(
    corpus: Sequence[TweetRecord],
    keywords: KeywordSet,
    config: FunnelConfig = FunnelConfig(),
) -> tuple[list[TweetRecord], FunnelReport]:
    """Apply dedup, language, engagement, keyword and influence filters in order.

    The report's keyword table counts each surviving record once per matched
    keyword.
    """
    if config.threshold < 0:
        raise ValueError("threshold must be non-negative")
    report = FunnelReport()

    def stage(name, records, keep):
        kept = [t for t in records if keep(t)]
        report.stages.append(StageCount(name, len(records), len(kept)))
        return kept

    current = dedup(corpus, config.normalization)
    report.stages.append(StageCount("dedup", len(corpus), len(current)))
    norm = {id(t): normalize(t.text, config.normalization) for t in current}
    current = stage(
        "language",
        current,
        lambda t: (t.lang is not None and t.lang.lower() == "fa") or _looks_persian(norm[id(t)]),
    )
    current = stage("engagement", current, has_engagement)
    current = stage("keywords", current, lambda t: bool(_matches(norm[id(t)], keywords)))
    current = stage("influence", current, lambda t: influence_score(t) >= config.threshold)

    report.keyword_frequencies = {kw: 0 for kw in keywords}
    for t in current:
        for kw in _matches(norm[id(t)], keywords):
            report.keyword_frequencies[kw] += 1
    if not current:
        logger.warning("funnel left no records")
    return current, report
