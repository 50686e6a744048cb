"""Train/test splitting, confusion-matrix metrics and test-retest reliability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Hashable, Sequence

import numpy as np

from opinion_detect.classifier import ModelParams, predict_many


@dataclass(frozen=True)
class Split:
    train: tuple[int, ...]
    test: tuple[int, ...]
    fraction: float
    seed: int


def _check_fraction(fraction: float) -> None:
    if not 0 <= fraction < 1:
        raise ValueError(f"test fraction must lie in [0, 1), got {fraction}")


def stratified_split(labels: Sequence[Hashable], fraction: float = 0.2, seed: int = 0) -> Split:
    """Seeded per-class shuffle with a largest-remainder test allocation.

    Each class contributes ``floor(count * fraction)`` or one more test
    sample; the extra samples go to the largest fractional parts (ties to
    the earlier class in sorted order) until the test set holds
    ``round(n * fraction)`` samples, rounding half up.
    """
    _check_fraction(fraction)
    n = len(labels)
    if n < 1:
        raise ValueError("cannot split an empty label list")
    classes = sorted(set(labels), key=lambda c: (str(type(c)), c))
    members = {c: [i for i, lab in enumerate(labels) if lab == c] for c in classes}
    exact = {c: len(members[c]) * fraction for c in classes}
    quota = {c: math.floor(exact[c]) for c in classes}
    target = math.floor(n * fraction + 0.5)
    order = sorted(classes, key=lambda c: -(exact[c] - quota[c]))
    for c in order[: max(0, target - sum(quota.values()))]:
        if quota[c] < len(members[c]):
            quota[c] += 1

    rng = np.random.default_rng(seed)
    test: list[int] = []
    for c in classes:
        idx = np.array(members[c])
        rng.shuffle(idx)
        test.extend(int(i) for i in idx[: quota[c]])
    test_set = set(test)
    train = tuple(i for i in range(n) if i not in test_set)
    return Split(train, tuple(sorted(test)), fraction, seed)


def uniform_split(n: int, fraction: float = 0.2, seed: int = 0) -> Split:
    """Unstratified seeded split with ``round(n * fraction)`` test samples."""
    _check_fraction(fraction)
    perm = np.random.default_rng(seed).permutation(n)
    k = math.floor(n * fraction + 0.5)
    test = sorted(int(i) for i in perm[:k])
    test_set = set(test)
    return Split(tuple(i for i in range(n) if i not in test_set), tuple(test), fraction, seed)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes, both in ``classes`` order."""

    counts: np.ndarray
    classes: tuple

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(true_labels: Sequence[Hashable], predicted_labels: Sequence[Hashable], class_order: Sequence[Hashable]) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise ValueError("true and predicted label lists differ in length")
    lookup = {c: k for k, c in enumerate(class_order)}
    counts = np.zeros((len(class_order), len(class_order)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        for label in (t, p):
            if label not in lookup:
                raise ValueError(f"unknown label {label!r}")
        counts[lookup[t], lookup[p]] += 1
    return ConfusionMatrix(counts, tuple(class_order))


@dataclass(frozen=True)
class ClassMetrics:
    label: Hashable
    precision: float
    recall: float
    f1: float
    support: int


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def class_metrics(cm: ConfusionMatrix) -> list[ClassMetrics]:
    """Per-class precision, recall and F1; every 0/0 is taken as 0."""
    counts = cm.counts
    out = []
    for k, label in enumerate(cm.classes):
        tp = int(counts[k, k])
        fp = int(counts[:, k].sum()) - tp
        fn = int(counts[k, :].sum()) - tp
        p = _ratio(tp, tp + fp)
        r = _ratio(tp, tp + fn)
        out.append(ClassMetrics(label, p, r, _ratio(2 * p * r, p + r), tp + fn))
    return out


def macro_average(values: Sequence[float]) -> float:
    """Unweighted mean, summed exactly so the result does not depend on order."""
    return math.fsum(values) / len(values)


def round_half_up(value: float, places: int) -> float:
    """Round as a reader would: 0.655 -> 0.66 at two places."""
    exp = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(exp, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    per_class: tuple[ClassMetrics, ...]
    macro_f1: float
    micro_f1: float
    confusion: ConfusionMatrix
    train_accuracy: float | None = None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "train_accuracy": self.train_accuracy,
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "classes": list(self.confusion.classes),
            "confusion": self.confusion.counts.tolist(),
            "per_class": [
                {"label": m.label, "precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
                for m in self.per_class
            ],
        }

    def to_text(self) -> str:
        def pct(x):
            return "-" if x is None else f"{x * 100:.2f}%"

        lines = [
            "F1-score (Micro)\tF1-score (Macro)\tAccuracy (Test)\tAccuracy (Train)",
            f"{pct(self.micro_f1)}\t{pct(self.macro_f1)}\t{pct(self.accuracy)}\t{pct(self.train_accuracy)}",
            "",
            "Classes\tPrecision\tRecall\tF1-score\tSupport",
        ]
        for m in self.per_class:
            lines.append(f"{m.label}\t{m.precision:.2f}\t{m.recall:.2f}\t{m.f1:.2f}\t{m.support}")
        lines += ["", "Confusion (rows true, columns predicted)", "\t" + "\t".join(map(str, self.confusion.classes))]
        for label, row in zip(self.confusion.classes, self.confusion.counts):
            lines.append(f"{label}\t" + "\t".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def aggregate_metrics(cm: ConfusionMatrix, train_accuracy: float | None = None) -> MetricsReport:
    total = cm.total
    if total == 0:
        raise ValueError("confusion matrix holds no samples")
    trace = int(np.trace(cm.counts))
    per_class = class_metrics(cm)
    # Global counts: every misclassification is one FP and one FN.
    tp, fp, fn = trace, total - trace, total - trace
    micro = (2 * tp) / (2 * tp + fp + fn)
    return MetricsReport(
        accuracy=trace / total,
        per_class=tuple(per_class),
        macro_f1=macro_average([m.f1 for m in per_class]),
        micro_f1=micro,
        confusion=cm,
        train_accuracy=train_accuracy,
    )


def accuracy(true_labels: Sequence[Hashable], predicted_labels: Sequence[Hashable]) -> float:
    if not true_labels:
        raise ValueError("no samples")
    return sum(t == p for t, p in zip(true_labels, predicted_labels)) / len(true_labels)


def evaluate(
    model: ModelParams,
    X_test: np.ndarray,
    y_test: Sequence[Hashable],
    X_train: np.ndarray | None = None,
    y_train: Sequence[Hashable] | None = None,
) -> MetricsReport:
    """Score ``model`` on the test set, and on the training set when given."""
    if len(y_test) == 0:
        raise ValueError("empty test set")
    predicted = predict_many(model, X_test)
    train_acc = None
    if X_train is not None and y_train is not None and len(y_train):
        train_acc = accuracy(list(y_train), predict_many(model, X_train))
    return aggregate_metrics(confusion(list(y_test), predicted, model.classes), train_acc)


def reliability(total_codes: int, duplicate_codes: int) -> float:
    """Test-retest agreement ``2 * duplicate_codes / total_codes``."""
    if isinstance(total_codes, bool) or not isinstance(total_codes, (int, np.integer)) or total_codes < 1:
        raise ValueError("total_codes must be a positive integer")
    if isinstance(duplicate_codes, bool) or not isinstance(duplicate_codes, (int, np.integer)) or duplicate_codes < 0:
        raise ValueError("duplicate_codes must be a non-negative integer")
    if 2 * duplicate_codes > total_codes:
        raise ValueError(f"2 * {duplicate_codes} duplicate codes exceeds {total_codes} total codes")
    return 2 * duplicate_codes / total_codes
