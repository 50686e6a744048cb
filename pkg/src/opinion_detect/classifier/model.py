"""Trained model container, prediction, and the binary model file.

Model file layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"ODLR"
    4       2     format version (uint16, currently 1)
    6       2     reserved, zero
    8       8     total file length in bytes (uint64)
    16      4     header length H (uint32)
    20      H     UTF-8 JSON header: classes, n_features, n_classes,
                  hyperparams, fingerprint (sorted keys, no whitespace)
    20+H    8*K*d W, float64, row-major
    ...     8*K   b, float64
    end-32  32    SHA-256 of every preceding byte
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from opinion_detect.classifier.newton import Hyperparams, TrainReport, _encode, fit_newton_cg, resolve_classes
from opinion_detect.classifier.objective import softmax
from opinion_detect.embedding import Fingerprint

MAGIC = b"ODLR"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sHHQI")
_DIGEST_SIZE = 32


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class ModelChecksumError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


@dataclass(frozen=True, eq=False)
class ModelParams:
    W: np.ndarray
    b: np.ndarray
    classes: tuple
    hyperparams: Hyperparams = Hyperparams()
    fingerprint: Fingerprint | None = None

    def __post_init__(self) -> None:
        W = np.array(self.W, dtype=np.float64, order="C")
        b = np.array(self.b, dtype=np.float64)
        K = len(self.classes)
        if K < 2:
            raise ValueError("a model needs at least two classes")
        if W.ndim != 2 or W.shape[0] != K or b.shape != (K,):
            raise ValueError(f"W must be ({K}, d) and b ({K},); got {W.shape} and {b.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("model parameters must be finite")
        if self.fingerprint is not None and self.fingerprint.dim != W.shape[1]:
            raise ValueError(f"W has {W.shape[1]} features but the embedding has dimension {self.fingerprint.dim}")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def n_features(self) -> int:
        return self.W.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            self.W.tobytes() == other.W.tobytes()
            and self.W.shape == other.W.shape
            and self.b.tobytes() == other.b.tobytes()
            and self.classes == other.classes
            and self.hyperparams == other.hyperparams
            and self.fingerprint == other.fingerprint
        )

    __hash__ = None


def train(
    X: np.ndarray,
    y: Sequence[Hashable],
    hyper: Hyperparams = Hyperparams(),
    classes: Sequence[Hashable] | None = None,
    fingerprint: Fingerprint | None = None,
) -> tuple[ModelParams, TrainReport]:
    """Fit the regularized multinomial model with Newton-CG.

    ``classes`` fixes the row order of ``W``; by default it is the four
    opinion labels when ``y`` uses them, otherwise the sorted distinct labels.
    Every class must occur in ``y``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if len(y) != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y)} labels")
    classes = resolve_classes(y, classes)
    y_idx = _encode(y, classes)
    missing = [c for k, c in enumerate(classes) if not np.any(y_idx == k)]
    if missing:
        raise ValueError(f"classes absent from training labels: {missing}")
    W, b, report = fit_newton_cg(X, y_idx, len(classes), hyper)
    return ModelParams(W, b, classes, hyper, fingerprint), report


def _check_input(model: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"input has shape {x.shape}, model expects ({model.n_features},)")
    return x


def predict_proba(model: ModelParams, x: np.ndarray) -> np.ndarray:
    x = _check_input(model, x)
    return softmax(model.W @ x + model.b)


def predict_index(model: ModelParams, x: np.ndarray) -> int:
    # np.argmax returns the first maximum: ties go to the lowest class index.
    return int(np.argmax(predict_proba(model, x)))


def predict(model: ModelParams, x: np.ndarray):
    return model.classes[predict_index(model, x)]


def predict_proba_many(model: ModelParams, X: np.ndarray) -> np.ndarray:
    """Row-by-row :func:`predict_proba`; identical to single-row calls bit for bit."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    out = np.empty((X.shape[0], len(model.classes)))
    for i, x in enumerate(X):
        out[i] = predict_proba(model, x)
    return out


def predict_many(model: ModelParams, X: np.ndarray) -> list:
    P = predict_proba_many(model, X)
    return [model.classes[int(k)] for k in np.argmax(P, axis=1)]


def model_to_bytes(model: ModelParams) -> bytes:
    header = {
        "classes": list(model.classes),
        "n_classes": len(model.classes),
        "n_features": model.n_features,
        "hyperparams": asdict(model.hyperparams),
        "fingerprint": None if model.fingerprint is None else model.fingerprint.to_dict(),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    arrays = model.W.astype("<f8").tobytes() + model.b.astype("<f8").tobytes()
    total = _PREFIX.size + len(header_bytes) + len(arrays) + _DIGEST_SIZE
    body = _PREFIX.pack(MAGIC, FORMAT_VERSION, 0, total, len(header_bytes)) + header_bytes + arrays
    return body + hashlib.sha256(body).digest()


def model_from_bytes(data: bytes) -> ModelParams:
    if len(data) < _PREFIX.size:
        raise TruncatedModelError(f"model file is truncated ({len(data)} bytes)")
    magic, version, _, total, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format version {version} (this build reads {FORMAT_VERSION})")
    if len(data) < total:
        raise TruncatedModelError(f"model file is truncated ({len(data)} of {total} bytes)")
    if len(data) > total:
        raise ModelFormatError(f"{len(data) - total} unexpected trailing bytes")
    body, digest = data[:-_DIGEST_SIZE], data[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelChecksumError("model file checksum mismatch")

    start = _PREFIX.size
    header = json.loads(body[start : start + header_len].decode("utf-8"))
    K, d = header["n_classes"], header["n_features"]
    offset = start + header_len
    if len(body) - offset != 8 * (K * d + K):
        raise ModelFormatError("array section size does not match the header")
    W = np.frombuffer(body, dtype="<f8", count=K * d, offset=offset).reshape(K, d)
    b = np.frombuffer(body, dtype="<f8", count=K, offset=offset + 8 * K * d)
    fp = header["fingerprint"]
    return ModelParams(
        W.astype(np.float64),
        b.astype(np.float64),
        tuple(header["classes"]),
        Hyperparams(**header["hyperparams"]),
        None if fp is None else Fingerprint.from_dict(fp),
    )


def save_model(model: ModelParams, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path: str | Path) -> ModelParams:
    return model_from_bytes(Path(path).read_bytes())
