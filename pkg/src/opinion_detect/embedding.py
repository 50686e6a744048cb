"""Pre-trained word vectors in the FastText ``.vec`` text format, and mean pooling."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    def __init__(self, path, lineno: int | None, message: str):
        where = f"{path}:{lineno}" if lineno is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Fingerprint:
    """Identity of a vector file. ``path`` is informational only."""

    path: str
    vocab_size: int
    dim: int
    sha256: str

    def matches(self, other: "Fingerprint") -> bool:
        return (self.vocab_size, self.dim, self.sha256) == (other.vocab_size, other.dim, other.sha256)

    def to_dict(self) -> dict:
        return {"path": self.path, "vocab_size": self.vocab_size, "dim": self.dim, "sha256": self.sha256}

    @classmethod
    def from_dict(cls, data: dict) -> "Fingerprint":
        return cls(str(data["path"]), int(data["vocab_size"]), int(data["dim"]), str(data["sha256"]))


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    words: tuple[str, ...]
    vectors: np.ndarray
    fingerprint: Fingerprint
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.words) or vectors.shape[1] < 1:
            raise ValueError("vectors must be a (vocab, dim) matrix with dim >= 1")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("vectors contain non-finite values")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[self.index[word]]

    @classmethod
    def from_dict(cls, mapping: dict[str, Sequence[float]], path: str = "<memory>") -> "EmbeddingTable":
        words = tuple(mapping)
        vectors = np.array([mapping[w] for w in words], dtype=np.float64)
        digest = hashlib.sha256(_serialize(words, vectors).encode("utf-8")).hexdigest()
        return cls(words, vectors, Fingerprint(path, len(words), vectors.shape[1], digest))


def _parse_float(token: str, path, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise EmbeddingFormatError(path, lineno, f"non-numeric component {token!r}") from None
    if not math.isfinite(value):
        raise EmbeddingFormatError(path, lineno, f"non-finite component {token!r}")
    return value


def _is_header(fields: list[str]) -> bool:
    return len(fields) == 2 and all(f.isdigit() for f in fields)


def load_vec(path: str | Path) -> EmbeddingTable:
    """Load a ``.vec`` file.

    The optional header line ``<vocab_size> <dim>`` fixes the dimension;
    without it the dimension comes from the first vector line. A repeated
    word keeps its first vector.
    """
    raw = Path(path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    lines = raw.decode("utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmbeddingFormatError(path, None, "empty file")

    dim = None
    declared = None
    start = 0
    first = lines[0].rstrip("\r").split()
    if _is_header(first):
        declared, dim = int(first[0]), int(first[1])
        if dim == 0:
            raise EmbeddingFormatError(path, 1, "header declares zero dimensions")
        start = 1

    words: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[start:], start=start + 1):
        fields = line.rstrip("\r").rstrip(" ").split(" ")
        if fields == [""]:
            continue
        word, comps = fields[0], fields[1:]
        if dim is None:
            if not comps:
                raise EmbeddingFormatError(path, lineno, "zero-dimension vector")
            dim = len(comps)
        if len(comps) != dim:
            raise EmbeddingFormatError(path, lineno, f"expected {dim} components, got {len(comps)}")
        vec = [_parse_float(tok, path, lineno) for tok in comps]
        if word in seen:
            logger.warning("%s:%d: duplicate word %r ignored", path, lineno, word)
            continue
        seen.add(word)
        words.append(word)
        rows.append(vec)

    if dim is None:
        raise EmbeddingFormatError(path, None, "no vectors")
    if declared is not None and declared != len(words):
        logger.warning("%s: header declares %d words, found %d", path, declared, len(words))
    vectors = np.array(rows, dtype=np.float64).reshape(len(words), dim)
    return EmbeddingTable(tuple(words), vectors, Fingerprint(str(path), len(words), dim, digest))


def _serialize(words: Sequence[str], vectors: np.ndarray, header: bool = True) -> str:
    lines = [f"{len(words)} {vectors.shape[1]}"] if header else []
    for word, vec in zip(words, vectors):
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    return "\n".join(lines) + "\n"


def write_vec(table: EmbeddingTable, path: str | Path, header: bool = True) -> None:
    """Write ``table`` with shortest round-trip float formatting (exact reload)."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(_serialize(table.words, table.vectors, header))


@dataclass(frozen=True, eq=False)
class DocVector:
    values: np.ndarray
    contributing: int
    oov_count: int


def embed_doc(tokens: Sequence[str], table: EmbeddingTable) -> DocVector:
    """Unweighted mean of in-vocabulary token vectors; OOV tokens are skipped.

    Rows are summed in vocabulary-index order so the result is bit-identical
    under any permutation of ``tokens``.
    """
    idx = sorted(table.index[t] for t in tokens if t in table.index)
    oov = len(tokens) - len(idx)
    if not idx:
        return DocVector(np.zeros(table.dim), 0, oov)
    values = table.vectors[idx].sum(axis=0) / len(idx)
    return DocVector(values, len(idx), oov)


@dataclass(frozen=True)
class OOVStats:
    total_tokens: int
    oov_tokens: int
    all_oov_docs: tuple[int, ...]

    @property
    def oov_rate(self) -> float:
        return self.oov_tokens / self.total_tokens if self.total_tokens else 0.0


def embed_corpus(token_lists: Sequence[Sequence[str]], table: EmbeddingTable) -> tuple[np.ndarray, OOVStats]:
    X = np.zeros((len(token_lists), table.dim))
    total = oov = 0
    empty = []
    for i, tokens in enumerate(token_lists):
        doc = embed_doc(tokens, table)
        X[i] = doc.values
        total += len(tokens)
        oov += doc.oov_count
        if doc.contributing == 0:
            empty.append(i)
    return X, OOVStats(total, oov, tuple(empty))
