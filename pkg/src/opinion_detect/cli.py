"""Command-line interface.

Exit codes: 0 on success, 1 for usage or validation problems, 2 for bad
input data (malformed corpus, labels, vectors, model files, or a model
trained on different vectors).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from opinion_detect.classifier import Hyperparams, ModelFormatError, load_model, predict_many, save_model, train
from opinion_detect.classifier import predict_proba_many
from opinion_detect.config import ConfigError, Options, resolve
from opinion_detect.corpus import CorpusError, FunnelConfig, load_keywords, parse_corpus, read_corpus, run_funnel, write_corpus
from opinion_detect.datasets import (
    LabeledExample,
    LabelFileError,
    join_labels,
    load_labels,
    read_split_manifest,
    write_split_manifest,
)
from opinion_detect.embedding import EmbeddingFormatError, EmbeddingTable, embed_corpus, load_vec
from opinion_detect.evaluation import accuracy, evaluate, reliability, stratified_split, uniform_split
from opinion_detect.labels import CLASS_ORDER
from opinion_detect.preprocess import load_lexicon, preprocess_many

logger = logging.getLogger("opinion_detect")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _require(opts: Options, *keys: str) -> None:
    for key in keys:
        value = opts.values.get(key)
        if value is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")
        if not Path(value).is_file():
            raise UsageError(f"{key} file not found: {value}")


def _optional_file(opts: Options, key: str) -> None:
    value = opts.values.get(key)
    if value is not None and not Path(value).is_file():
        raise UsageError(f"{key} file not found: {value}")


def _outdir(opts: Options) -> Path:
    out = Path(opts.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _hyperparams(opts: Options) -> Hyperparams:
    try:
        return Hyperparams(C=opts.C, tol=opts.tol, max_iter=opts.max_iter, cg_max_iter=opts.cg_max_iter, seed=opts.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _lexicon(opts: Options):
    if opts.lexicon is None:
        return None
    try:
        return load_lexicon(opts.lexicon)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _load_table(path: str) -> EmbeddingTable:
    table = load_vec(path)
    fp = dataclasses.replace(table.fingerprint, path=Path(path).name)
    return dataclasses.replace(table, fingerprint=fp)


def _embed(examples: Sequence, table: EmbeddingTable, lexicon) -> np.ndarray:
    tokens = preprocess_many([ex.text for ex in examples], lexicon=lexicon)
    X, stats = embed_corpus(tokens, table)
    if stats.all_oov_docs:
        ids = ", ".join(examples[i].id for i in stats.all_oov_docs[:10])
        logger.warning("%d document(s) have no in-vocabulary tokens (zero vectors): %s", len(stats.all_oov_docs), ids)
    logger.info("OOV rate %.4f over %d tokens", stats.oov_rate, stats.total_tokens)
    return X


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_json(path: Path, data) -> None:
    _write_text(path, json.dumps(data, ensure_ascii=False, indent=1, sort_keys=True) + "\n")


# --- commands --------------------------------------------------------------


def cmd_ingest(opts: Options) -> list:
    _require(opts, "corpus", "keywords")
    if opts.threshold < 0:
        raise UsageError("--threshold must be non-negative")
    records = read_corpus(opts.corpus, strict=not opts.lenient)
    keywords = load_keywords(opts.keywords)
    kept, report = run_funnel(records, keywords, FunnelConfig(threshold=opts.threshold))
    out = _outdir(opts)
    write_corpus(kept, out / "filtered.jsonl")
    _write_text(out / "funnel_report.txt", report.to_text())
    _write_json(out / "funnel_report.json", report.to_dict())
    sys.stdout.write(report.to_text())
    return kept


def _train_on(examples: list[LabeledExample], opts: Options) -> None:
    hyper = _hyperparams(opts)
    if not 0 <= opts.test_fraction < 1:
        raise UsageError("--test-fraction must lie in [0, 1)")
    if opts.split_mode not in ("stratified", "uniform"):
        raise UsageError("--split-mode must be 'stratified' or 'uniform'")
    lexicon = _lexicon(opts)
    table = _load_table(opts.embedding)
    labels = [ex.label for ex in examples]
    X = _embed([ex.record for ex in examples], table, lexicon)
    if opts.split_mode == "stratified":
        split = stratified_split(labels, opts.test_fraction, opts.seed)
    else:
        split = uniform_split(len(labels), opts.test_fraction, opts.seed)
    train_idx = list(split.train)
    y_train = [labels[i] for i in train_idx]
    try:
        model, report = train(X[train_idx], y_train, hyper, classes=CLASS_ORDER, fingerprint=table.fingerprint)
    except ValueError as exc:
        raise DataError(f"cannot train: {exc}") from None
    train_acc = accuracy(y_train, predict_many(model, X[train_idx]))

    out = _outdir(opts)
    save_model(model, out / "model.bin")
    write_split_manifest(out / "split.json", examples, split, opts.split_mode)
    summary = report.to_dict() | {"train_accuracy": train_acc, "n_train": len(split.train), "n_test": len(split.test)}
    _write_json(out / "train_report.json", summary)
    print(
        f"trained on {len(split.train)} documents: {report.iterations} Newton iterations, "
        f"objective {report.objective:.6f}, |g|_inf {report.grad_inf_norm:.3g}, "
        f"converged={report.converged}, train accuracy {train_acc:.4f}"
    )


def cmd_train(opts: Options) -> None:
    _require(opts, "corpus", "labels", "embedding")
    _optional_file(opts, "lexicon")
    records = read_corpus(opts.corpus, strict=not opts.lenient)
    examples = join_labels(load_labels(opts.labels), records)
    _train_on(examples, opts)


def _check_fingerprint(model, table: EmbeddingTable) -> None:
    if model.fingerprint is None:
        if model.n_features != table.dim:
            raise DataError(f"model expects {model.n_features}-dimensional vectors, embedding has {table.dim}")
        return
    if not model.fingerprint.matches(table.fingerprint):
        raise DataError(
            "embedding fingerprint mismatch: model was trained on "
            f"{model.fingerprint.path} (vocab {model.fingerprint.vocab_size}, d={model.fingerprint.dim}), "
            f"got {table.fingerprint.path} (vocab {table.fingerprint.vocab_size}, d={table.fingerprint.dim})"
        )


def cmd_evaluate(opts: Options):
    _require(opts, "model", "corpus", "embedding")
    _optional_file(opts, "lexicon")
    if opts.split is None and opts.labels is None:
        raise UsageError("one of --split or --labels is required")
    _optional_file(opts, "split")
    _optional_file(opts, "labels")
    model = load_model(opts.model)
    table = _load_table(opts.embedding)
    _check_fingerprint(model, table)
    lexicon = _lexicon(opts)
    records = read_corpus(opts.corpus, strict=not opts.lenient)
    if opts.split is not None:
        train_pairs, test_pairs = read_split_manifest(opts.split)
    else:
        train_pairs, test_pairs = [], load_labels(opts.labels)
    if not test_pairs:
        raise DataError("no test examples to evaluate")
    test = join_labels(test_pairs, records)
    X_test = _embed([ex.record for ex in test], table, lexicon)
    X_train = y_train = None
    if train_pairs:
        train_ex = join_labels(train_pairs, records)
        X_train = _embed([ex.record for ex in train_ex], table, lexicon)
        y_train = [ex.label for ex in train_ex]
    report = evaluate(model, X_test, [ex.label for ex in test], X_train, y_train)
    out = _outdir(opts)
    _write_text(out / "metrics.txt", report.to_text())
    _write_json(out / "metrics.json", report.to_dict())
    sys.stdout.write(report.to_text())
    return report


def format_prediction(rid: str, label: str, probs: np.ndarray) -> str:
    return "\t".join([rid, label] + [f"{p:.6f}" for p in probs])


def cmd_predict(opts: Options) -> None:
    _require(opts, "model", "embedding", "input")
    _optional_file(opts, "lexicon")
    model = load_model(opts.model)
    table = _load_table(opts.embedding)
    _check_fingerprint(model, table)
    lexicon = _lexicon(opts)
    with open(opts.input, encoding="utf-8") as handle:
        records = parse_corpus(handle, strict=not opts.lenient)
    lines = []
    if records:
        P = predict_proba_many(model, _embed(records, table, lexicon))
        for record, probs in zip(records, P):
            lines.append(format_prediction(record.id, model.classes[int(np.argmax(probs))], probs))
    text = "".join(line + "\n" for line in lines)
    if opts.output is None:
        sys.stdout.write(text)
    else:
        _write_text(Path(opts.output), text)


def cmd_reliability(total: int, duplicates: int) -> None:
    try:
        value = reliability(total, duplicates)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"{value:.4f}")


def cmd_pipeline(opts: Options) -> None:
    _require(opts, "corpus", "keywords", "labels", "embedding")
    _optional_file(opts, "lexicon")
    kept = cmd_ingest(opts)
    examples = join_labels(load_labels(opts.labels), kept)
    _train_on(examples, opts)
    out = Path(opts.output_dir)
    eval_opts = Options(opts.values | {"model": str(out / "model.bin"), "split": str(out / "split.json"),
                                       "corpus": str(out / "filtered.jsonl"), "labels": None})
    cmd_evaluate(eval_opts)


# --- argument parsing ------------------------------------------------------

COMMAND_KEYS = {
    "ingest": ["corpus", "keywords", "threshold", "output_dir", "lenient"],
    "train": ["corpus", "labels", "embedding", "lexicon", "test_fraction", "seed", "split_mode",
              "C", "tol", "max_iter", "cg_max_iter", "output_dir", "lenient"],
    "evaluate": ["model", "corpus", "embedding", "labels", "split", "lexicon", "output_dir", "lenient"],
    "predict": ["model", "embedding", "input", "lexicon", "output", "lenient"],
}
COMMAND_KEYS["pipeline"] = list(dict.fromkeys(COMMAND_KEYS["ingest"] + COMMAND_KEYS["train"]))

_FLAG_TYPES = {"threshold": int, "seed": int, "max_iter": int, "cg_max_iter": int, "test_fraction": float,
               "C": float, "tol": float}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opinion-detect", description="Opinion detection pipeline for Persian micro-blog posts.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "ingest": "filter a raw corpus through the selection funnel",
        "train": "train a classifier on labeled posts",
        "evaluate": "score a trained model",
        "predict": "label new posts",
        "pipeline": "ingest, train and evaluate in one go",
    }
    for name, keys in COMMAND_KEYS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="key = value file; command-line flags take precedence")
        for key in keys:
            flag = "--" + key.replace("_", "-")
            if key == "lenient":
                p.add_argument(flag, action="store_true", default=None, help="skip malformed corpus lines")
            elif key == "split_mode":
                p.add_argument(flag, choices=["stratified", "uniform"])
            else:
                p.add_argument(flag, dest=key, type=_FLAG_TYPES.get(key, str))
    rel = sub.add_parser("reliability", help="test-retest reliability 2 * duplicates / total")
    rel.add_argument("total", type=int)
    rel.add_argument("duplicates", type=int)
    return parser


COMMANDS = {"ingest": cmd_ingest, "train": cmd_train, "evaluate": cmd_evaluate,
            "predict": cmd_predict, "pipeline": cmd_pipeline}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        if args.command == "reliability":
            cmd_reliability(args.total, args.duplicates)
        else:
            opts = resolve(vars(args), args.config, COMMAND_KEYS[args.command])
            COMMANDS[args.command](opts)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CorpusError, LabelFileError, EmbeddingFormatError, ModelFormatError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
