"""Label files, joining labels onto a corpus, and split manifests."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from opinion_detect.corpus import TweetRecord
from opinion_detect.evaluation import Split
from opinion_detect.labels import OpinionLabel


class LabelFileError(ValueError):
    def __init__(self, path, lineno: int | None, message: str):
        where = f"{path}:{lineno}" if lineno is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class LabeledExample:
    record: TweetRecord
    label: str


def load_labels(path: str | Path) -> list[tuple[str, str]]:
    """Read ``id<TAB>label`` lines; ``#`` comments and blank lines are skipped."""
    pairs: list[tuple[str, str]] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise LabelFileError(path, lineno, f"expected 2 tab-separated columns, got {len(cols)}")
            rid, label = cols[0].strip(), cols[1].strip()
            try:
                OpinionLabel.parse(label)
            except ValueError as exc:
                raise LabelFileError(path, lineno, str(exc)) from None
            if rid in seen:
                raise LabelFileError(path, lineno, f"id {rid!r} already labeled on line {seen[rid]}")
            seen[rid] = lineno
            pairs.append((rid, label))
    return pairs


def join_labels(pairs: Sequence[tuple[str, str]], corpus: Sequence[TweetRecord]) -> list[LabeledExample]:
    """Attach each labeled id to its unique corpus record, keeping label order."""
    by_id: dict[str, list[TweetRecord]] = {}
    for record in corpus:
        group = by_id.setdefault(record.id, [])
        # Verbatim repeats of one post are the same post, not an ambiguity.
        if record not in group:
            group.append(record)
    missing = [rid for rid, _ in pairs if rid not in by_id]
    if missing:
        shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise LabelFileError("labels", None, f"{len(missing)} labeled id(s) not in the corpus: {shown}")
    ambiguous = [rid for rid, _ in pairs if len(by_id[rid]) > 1]
    if ambiguous:
        raise LabelFileError("labels", None, f"id {ambiguous[0]!r} occurs more than once in the corpus")
    return [LabeledExample(by_id[rid][0], label) for rid, label in pairs]


def write_split_manifest(path: str | Path, examples: Sequence[LabeledExample], split: Split, mode: str) -> None:
    data = {
        "fraction": split.fraction,
        "seed": split.seed,
        "mode": mode,
        "train": [[examples[i].record.id, examples[i].label] for i in split.train],
        "test": [[examples[i].record.id, examples[i].label] for i in split.test],
    }
    Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def read_split_manifest(path: str | Path) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Return ``(train_pairs, test_pairs)`` from a manifest written at train time."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        train = [(str(rid), str(label)) for rid, label in data["train"]]
        test = [(str(rid), str(label)) for rid, label in data["test"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise LabelFileError(path, None, f"malformed split manifest ({exc})") from None
    for rid, label in train + test:
        try:
            OpinionLabel.parse(label)
        except ValueError as exc:
            raise LabelFileError(path, None, f"id {rid!r}: {exc}") from None
    return train, test
