"""Persian-aware text normalization, tokenization and lexicon substitution.

Every rule here is deterministic; the same (text, config, lexicon) always
produces the same token sequence.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

ZWNJ = "\u200c"

URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"@\w+")
HASHTAG_RE = re.compile(r"#(\w+)")
DIACRITICS_RE = re.compile("[\u064b-\u065f]")
ZWNJ_RUN_RE = re.compile(ZWNJ + "+")
WHITESPACE_RE = re.compile(r"\s+")

# Arabic code points folded onto their Persian counterparts, plus both
# Arabic-Indic digit blocks folded onto ASCII.
_UNIFY = {
    "\u064a": "\u06cc",  # ARABIC YEH -> FARSI YEH
    "\u0643": "\u06a9",  # ARABIC KAF -> KEHEH
    "\u0629": "\u0647",  # TEH MARBUTA -> HEH
}
_UNIFY.update({chr(0x0660 + i): str(i) for i in range(10)})
_UNIFY.update({chr(0x06F0 + i): str(i) for i in range(10)})
UNIFY_TABLE = str.maketrans(_UNIFY)


@dataclass(frozen=True)
class NormalizationConfig:
    unify_arabic_chars: bool = True
    strip_diacritics: bool = True
    normalize_zwnj: bool = True
    strip_urls: bool = True
    strip_mentions: bool = True
    unwrap_hashtags: bool = True
    collapse_whitespace: bool = True
    lexicon_path: str | None = None


DEFAULT_CONFIG = NormalizationConfig()


@dataclass(frozen=True)
class Token:
    """A token and its UTF-8 byte span ``[start, end)`` in the normalized text."""

    text: str
    start: int
    end: int


@dataclass(frozen=True)
class ReplacementLexicon:
    """Surface form -> replacement form.

    A key containing whitespace is matched against a run of consecutive
    tokens, so keys written before normalization (``"ج.ا"`` becomes
    ``"ج ا"``) still apply to normalized text.
    """

    entries: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: dict[tuple[str, ...], str] = {}
        for key, value in self.entries.items():
            parts = tuple(key.split())
            if not parts:
                raise ValueError("lexicon key is empty")
            if key == value:
                raise ValueError(f"lexicon key {key!r} maps to itself")
            if parts in seen:
                raise ValueError(f"lexicon keys {seen[parts]!r} and {key!r} collide")
            seen[parts] = key

    def __len__(self) -> int:
        return len(self.entries)


def _strip_markup(text: str, config: NormalizationConfig) -> str:
    # Unwrapping a hashtag can expose a URL or a mention ("#www" + ".x"), so
    # the three rules run to a fixpoint. Each round that changes the text
    # makes it shorter, which bounds the loop.
    while True:
        before = text
        if config.strip_urls:
            text = URL_RE.sub(" ", text)
        if config.strip_mentions:
            text = MENTION_RE.sub(" ", text)
        if config.unwrap_hashtags:
            text = HASHTAG_RE.sub(r"\1", text)
        if text == before:
            return text


def _normalize_zwnj(text: str) -> str:
    text = ZWNJ_RUN_RE.sub(ZWNJ, text)
    if ZWNJ not in text:
        return text
    # A ZWNJ survives only strictly inside a word: between two alphanumerics.
    out = []
    last = len(text) - 1
    for i, ch in enumerate(text):
        if ch == ZWNJ and not (0 < i < last and text[i - 1].isalnum() and text[i + 1].isalnum()):
            continue
        out.append(ch)
    return "".join(out)


def _punctuation_to_space(text: str) -> str:
    return "".join(" " if unicodedata.category(ch)[0] == "P" else ch for ch in text)


def normalize(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> str:
    """Normalize a post for matching, deduplication and embedding lookup.

    Steps, in order: URL removal, mention removal, hashtag unwrapping,
    Arabic-to-Persian code point unification (including digits), diacritic
    stripping, ZWNJ cleanup, punctuation to spaces, whitespace collapse and
    trimming. Each step except punctuation mapping can be disabled in
    ``config``.
    """
    text = _strip_markup(text, config)
    if config.unify_arabic_chars:
        text = text.translate(UNIFY_TABLE)
    if config.strip_diacritics:
        text = DIACRITICS_RE.sub("", text)
    if config.normalize_zwnj:
        text = _normalize_zwnj(text)
    text = _punctuation_to_space(text)
    if config.collapse_whitespace:
        text = WHITESPACE_RE.sub(" ", text)
    return text.strip()


def tokenize(normalized_text: str) -> list[Token]:
    """Split on whitespace. ZWNJ is not whitespace, so ``می‌شود`` stays whole."""
    tokens = []
    for match in re.finditer(r"\S+", normalized_text):
        start = len(normalized_text[: match.start()].encode("utf-8"))
        end = start + len(match.group().encode("utf-8"))
        tokens.append(Token(match.group(), start, end))
    return tokens


def apply_lexicon(tokens: Sequence[Token], lexicon: ReplacementLexicon) -> list[Token]:
    """Replace tokens (or token runs) equal to a lexicon key, in one pass.

    Longer keys win over shorter ones starting at the same token. Replacement
    output is never re-examined. A multi-word replacement is split into
    several tokens; the first carries the matched span and the rest get an
    empty span at its end, so spans never overlap.
    """
    if not lexicon.entries:
        return list(tokens)
    by_parts = {tuple(key.split()): value for key, value in lexicon.entries.items()}
    lengths = sorted({len(parts) for parts in by_parts}, reverse=True)
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        for n in lengths:
            window = tuple(tok.text for tok in tokens[i : i + n])
            if len(window) == n and window in by_parts:
                start, end = tokens[i].start, tokens[i + n - 1].end
                words = by_parts[window].split()
                for j, word in enumerate(words):
                    out.append(Token(word, start, end) if j == 0 else Token(word, end, end))
                i += n
                break
        else:
            out.append(tokens[i])
            i += 1
    return out


def load_lexicon(path: str | Path, config: NormalizationConfig = DEFAULT_CONFIG) -> ReplacementLexicon:
    """Read a two-column TSV lexicon; ``#`` lines and blank lines are skipped.

    Both columns are normalized with ``config`` so they line up with
    normalized tokens.
    """
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
            key, value = normalize(cols[0], config), normalize(cols[1], config)
            if not key:
                raise ValueError(f"{path}:{lineno}: key is empty after normalization")
            if key == value:
                logger.warning("%s:%d: entry %r maps to itself; skipped", path, lineno, key)
                continue
            if key in entries:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value
    return ReplacementLexicon(entries)


def preprocess(
    text: str,
    config: NormalizationConfig = DEFAULT_CONFIG,
    lexicon: ReplacementLexicon | None = None,
) -> list[str]:
    """normalize -> tokenize -> apply_lexicon, returning token strings."""
    tokens = tokenize(normalize(text, config))
    if lexicon is not None:
        tokens = apply_lexicon(tokens, lexicon)
    return [tok.text for tok in tokens]


def preprocess_many(
    texts: Iterable[str],
    config: NormalizationConfig = DEFAULT_CONFIG,
    lexicon: ReplacementLexicon | None = None,
) -> list[list[str]]:
    return [preprocess(text, config, lexicon) for text in texts]
