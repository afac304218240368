"""Labeled embedding datasets with EMB1 binary and CSV persistence.

EMB1 layout (little-endian):
    magic "EMB1" | u32 version=1 | u32 n | u32 d | u32 L
    L x { u16 name_len, name (UTF-8), u32 K, n x u32 labels }
    n x d f32 row-major embeddings

Embeddings are stored as 32-bit floats on disk and widened to 64-bit in
memory; all downstream statistics run in float64.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"EMB1"
VERSION = 1

# CSV convention: feature columns first, then one column per labeling.
# A column is a labeling column if its header is "label" or starts with
# "label:" / "label_" (the remainder is the labeling name).
_LABEL_PREFIXES = ("label:", "label_")


class DatasetError(ValueError):
    """Invalid dataset content (labels, shapes, non-finite entries)."""


class FormatError(DatasetError):
    """Malformed EMB1/CSV file."""


@dataclass(frozen=True)
class Labeling:
    name: str
    labels: np.ndarray  # (n,) int64, values in [0, num_classes)
    num_classes: int


@dataclass
class EmbeddingDataset:
    embeddings: np.ndarray  # (n, d) float64
    labelings: list[Labeling]
    source: str = ""

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2:
            raise DatasetError(f"embeddings must be 2-d, got shape {emb.shape}")
        self.embeddings = emb

    @property
    def n(self) -> int:
        return self.embeddings.shape[0]

    @property
    def d(self) -> int:
        return self.embeddings.shape[1]

    def labeling(self, name: str) -> Labeling:
        for lab in self.labelings:
            if lab.name == name:
                return lab
        available = ", ".join(lab.name for lab in self.labelings)
        raise KeyError(f"unknown labeling {name!r}; available: {available}")

    def class_rows(self, labeling: str, class_id: int) -> np.ndarray:
        """Embedding rows of one class under the named labeling."""
        lab = self.labeling(labeling)
        if not 0 <= class_id < lab.num_classes:
            raise DatasetError(
                f"class {class_id} out of range for labeling {labeling!r} "
                f"(K={lab.num_classes})"
            )
        return self.embeddings[lab.labels == class_id]


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    class_counts: dict[str, list[int]] = field(default_factory=dict)
    min_class_size: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_dataset(ds: EmbeddingDataset) -> ValidationReport:
    """Check dataset invariants; violations are reported, never raised.

    A passing report (no violations) is required before geometry operations.
    Singleton classes are warnings: they block second-moment operations only.
    """
    report = ValidationReport()
    if ds.n == 0:
        report.violations.append("empty dataset")
    bad = ~np.isfinite(ds.embeddings)
    if bad.any():
        rows, cols = np.nonzero(bad)
        for r, c in list(zip(rows, cols))[:10]:
            report.violations.append(f"non-finite entry at row {r}, column {c}")
        if len(rows) > 10:
            report.violations.append(f"... {len(rows) - 10} more non-finite entries")
    seen = set()
    for lab in ds.labelings:
        if lab.name in seen:
            report.violations.append(f"duplicate labeling name {lab.name!r}")
        seen.add(lab.name)
        if lab.labels.shape != (ds.n,):
            report.violations.append(
                f"labeling {lab.name!r} has length {lab.labels.shape}, expected {ds.n}"
            )
            continue
        if lab.num_classes < 1:
            report.violations.append(f"labeling {lab.name!r} declares K={lab.num_classes}")
            continue
        if lab.labels.size and (lab.labels.min() < 0 or lab.labels.max() >= lab.num_classes):
            report.violations.append(
                f"labeling {lab.name!r}: label out of range [0, {lab.num_classes})"
            )
            continue
        counts = np.bincount(lab.labels, minlength=lab.num_classes)
        report.class_counts[lab.name] = counts.tolist()
        report.min_class_size[lab.name] = int(counts.min()) if counts.size else 0
        for c, cnt in enumerate(counts):
            if cnt == 0:
                report.violations.append(
                    f"labeling {lab.name!r}: class {c} has no samples (ids not contiguous)"
                )
            elif cnt == 1:
                report.warnings.append(
                    f"labeling {lab.name!r}: class {c} has 1 sample: "
                    "second-moment ops unavailable"
                )
    return report


def _validate_or_raise(ds: EmbeddingDataset) -> EmbeddingDataset:
    report = validate_dataset(ds)
    if not report.ok:
        raise DatasetError("; ".join(report.violations))
    return ds


def load_embeddings(path, format: str = "emb1") -> EmbeddingDataset:
    """Load and validate a dataset from an EMB1 or CSV file."""
    if format == "emb1":
        return _load_emb1(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown format {format!r}")


def write_embeddings(ds: EmbeddingDataset, path, format: str = "emb1") -> None:
    """Persist a valid dataset; write followed by load is the identity on
    (n, d, labelings) and on embeddings up to 32-bit rounding."""
    if ds.n == 0:
        raise DatasetError("empty dataset")
    _validate_or_raise(ds)
    if format == "emb1":
        _write_emb1(ds, path)
    elif format == "csv":
        _write_csv(ds, path)
    else:
        raise ValueError(f"unknown format {format!r}")


def _load_emb1(path) -> EmbeddingDataset:
    with open(path, "rb") as fh:
        data = fh.read()

    def take(n, what):
        nonlocal off
        if off + n > len(data):
            raise FormatError(f"truncated file while reading {what}")
        chunk = data[off : off + n]
        off += n
        return chunk

    off = 0
    if take(4, "magic") != MAGIC:
        raise FormatError("bad magic: not an EMB1 file")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != VERSION:
        raise FormatError(f"unsupported EMB1 version {version}")
    n, d, num_labelings = struct.unpack("<III", take(12, "header"))
    labelings = []
    for _ in range(num_labelings):
        (name_len,) = struct.unpack("<H", take(2, "labeling name length"))
        name = take(name_len, "labeling name").decode("utf-8")
        (k,) = struct.unpack("<I", take(4, "class count"))
        labels = np.frombuffer(take(4 * n, "labels"), dtype="<u4").astype(np.int64)
        if labels.size and labels.max() >= k:
            raise DatasetError(
                f"labeling {name!r}: label out of range (max {labels.max()}, K={k})"
            )
        labelings.append(Labeling(name, labels, k))
    emb = np.frombuffer(take(4 * n * d, "embeddings"), dtype="<f4")
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes after payload")
    emb = emb.astype(np.float64).reshape(n, d)
    return _validate_or_raise(EmbeddingDataset(emb, labelings, source=str(path)))


def _write_emb1(ds: EmbeddingDataset, path) -> None:
    parts = [MAGIC, struct.pack("<IIII", VERSION, ds.n, ds.d, len(ds.labelings))]
    for lab in ds.labelings:
        name = lab.name.encode("utf-8")
        parts.append(struct.pack("<H", len(name)))
        parts.append(name)
        parts.append(struct.pack("<I", lab.num_classes))
        parts.append(lab.labels.astype("<u4").tobytes())
    parts.append(ds.embeddings.astype("<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def _labeling_name(header: str) -> str | None:
    if header == "label":
        return "label"
    for prefix in _LABEL_PREFIXES:
        if header.startswith(prefix):
            return header[len(prefix) :]
    return None


def _load_csv(path) -> EmbeddingDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV file") from None
        rows = list(reader)
    label_cols = [i for i, h in enumerate(header) if _labeling_name(h) is not None]
    feature_cols = [i for i in range(len(header)) if i not in label_cols]
    if not feature_cols:
        raise FormatError("CSV has no feature columns")
    n, d = len(rows), len(feature_cols)
    emb = np.empty((n, d))
    label_data = {i: np.empty(n, dtype=np.int64) for i in label_cols}
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise FormatError(f"row {r + 1} has {len(row)} fields, expected {len(header)}")
        try:
            for k, i in enumerate(feature_cols):
                emb[r, k] = float(row[i])
            for i in label_cols:
                label_data[i][r] = int(row[i])
        except ValueError as exc:
            raise FormatError(f"row {r + 1}: {exc}") from None
    labelings = []
    for i in label_cols:
        labels = label_data[i]
        k = int(labels.max()) + 1 if n else 0
        labelings.append(Labeling(_labeling_name(header[i]), labels, k))
    return _validate_or_raise(EmbeddingDataset(emb, labelings, source=str(path)))


def _write_csv(ds: EmbeddingDataset, path) -> None:
    header = [f"x{k}" for k in range(ds.d)]
    header += [f"label:{lab.name}" for lab in ds.labelings]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in range(ds.n):
            row = [repr(float(x)) for x in ds.embeddings[r]]
            row += [int(lab.labels[r]) for lab in ds.labelings]
            writer.writerow(row)
