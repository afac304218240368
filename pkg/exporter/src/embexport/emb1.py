"""Minimal EMB1 writer.

Layout (little-endian):
    "EMB1" | u32 version=1 | u32 n | u32 d | u32 L
    L x { u16 name_len | name UTF-8 | u32 K | n x u32 labels }
    n x d float32 embeddings, row-major
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"EMB1"
VERSION = 1


def write_emb1(path, embeddings: np.ndarray, labelings: list[tuple[str, np.ndarray, int]]):
    """Write features and one or more (name, labels, num_classes) labelings."""
    emb = np.ascontiguousarray(embeddings, dtype=np.float32)
    if emb.ndim != 2 or emb.shape[0] == 0:
        raise ValueError("embeddings must be a nonempty (n, d) array")
    n, d = emb.shape
    if not labelings:
        raise ValueError("at least one labeling is required")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIII", VERSION, n, d, len(labelings)))
        for name, labels, num_classes in labelings:
            labels = np.asarray(labels)
            if labels.shape != (n,):
                raise ValueError(f"labeling {name!r} must have {n} labels")
            if labels.min() < 0 or labels.max() >= num_classes:
                raise ValueError(f"labeling {name!r} has labels outside [0, {num_classes})")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", num_classes))
            fh.write(labels.astype("<u4").tobytes())
        fh.write(emb.astype("<f4").tobytes())
