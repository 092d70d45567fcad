"""Dataset container, CSV ingestion, standardization and splitting.

The CSV format is label-first, comma separated, no header::

    +1,0.52,-1.3,0.0
    -1,0.11,2.4,-0.7

Labels must be the integer text ``+1``/``1`` or ``-1``; every row must carry
the same number of feature columns. Blank lines are ignored (so trailing
newlines are harmless).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

VALID_KINDS = ("clean", "noisy", "distilled")


class CsvError(ValueError):
    """Base for CSV ingestion failures; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CsvParseError(CsvError):
    pass


class CsvDimensionError(CsvError):
    pass


class CsvLabelError(CsvError):
    pass


@dataclass(frozen=True)
class LabeledSample:
    """Feature matrix plus signed labels.

    ``features`` is (n, d) float64, ``labels`` is (n,) int64 with values in
    {-1, +1}, and ``kind`` tags where the labels came from. Arrays are copied
    and marked read-only so samples can be shared across trials.
    """

    features: np.ndarray
    labels: np.ndarray
    kind: str = "clean"

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64).copy()
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if labs.ndim != 1 or len(labs) != feats.shape[0]:
            raise ValueError("labels must be 1-D and match the number of rows")
        if feats.size and not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        if labs.size and not np.all(np.isin(labs, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        if self.kind not in VALID_KINDS:
            raise ValueError(f"unknown sample kind {self.kind!r}")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def take(self, indices, kind: str | None = None) -> "LabeledSample":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledSample(self.features[idx], self.labels[idx], kind or self.kind)


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


@dataclass(frozen=True)
class Scaler:
    """Per-column affine map (x - mean) / std fitted on a training sample."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def to_json(self) -> str:
        return json.dumps({"mean": self.mean.tolist(), "std": self.std.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Scaler":
        obj = json.loads(text)
        return cls(np.asarray(obj["mean"], dtype=np.float64),
                   np.asarray(obj["std"], dtype=np.float64))


def _parse_label(token: str, line_no: int) -> int:
    token = token.strip()
    if token in ("+1", "1"):
        return 1
    if token == "-1":
        return -1
    raise CsvLabelError(line_no, f"label must be +1 or -1, got {token!r}")


def load_csv(path) -> LabeledSample:
    """Read a label-first CSV into a clean LabeledSample, preserving row order."""
    rows = []
    labels = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise CsvParseError(line_no, "expected a label and at least one feature")
            labels.append(_parse_label(parts[0], line_no))
            try:
                values = [float(tok) for tok in parts[1:]]
            except ValueError as exc:
                raise CsvParseError(line_no, f"bad feature value ({exc})") from None
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise CsvDimensionError(
                    line_no, f"row has {len(values)} features, expected {dim}"
                )
            rows.append(values)
    if not rows:
        return LabeledSample(np.empty((0, 1)), np.empty(0, dtype=np.int64), "clean")
    return LabeledSample(np.asarray(rows), np.asarray(labels), "clean")


def write_csv(sample: LabeledSample, path) -> None:
    """Write a sample in the format load_csv reads; floats use repr precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, label in zip(sample.features, sample.labels):
            tag = "+1" if label > 0 else "-1"
            fh.write(tag + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return Path(path)


def standardize(train: LabeledSample, others=()) -> tuple[LabeledSample, list[LabeledSample], Scaler]:
    """Zero-mean unit-variance map fitted on train only, applied to everything.

    Uses the population (1/n) standard deviation. Columns that are constant
    in the training sample keep std 1.0 so they map to exact zeros.
    """
    if len(train) == 0:
        raise ValueError("cannot standardize an empty training sample")
    for other in others:
        if other.dim != train.dim:
            raise ValueError("feature dimensions must match across samples")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    scaler = Scaler(mean, std)
    train_s = LabeledSample(scaler.transform(train.features), train.labels, train.kind)
    others_s = [
        LabeledSample(scaler.transform(o.features), o.labels, o.kind) for o in others
    ]
    return train_s, others_s, scaler


def split(sample: LabeledSample, cfg: SplitConfig) -> tuple[LabeledSample, LabeledSample]:
    """Seeded uniform shuffle; the first floor(fraction * n) rows go to train."""
    n = len(sample)
    if n == 0:
        raise ValueError("cannot split an empty sample")
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n)
    n_train = int(np.floor(cfg.train_fraction * n))
    return sample.take(order[:n_train]), sample.take(order[n_train:])


def add_intercept(features: np.ndarray) -> np.ndarray:
    """Prefix a constant 1.0 column (element 0 of every prepared row)."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats[None, :]
    out = np.empty((feats.shape[0], feats.shape[1] + 1))
    out[:, 0] = 1.0
    out[:, 1:] = feats
    return out
