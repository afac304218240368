"""Batch feature extraction for labeled image folders.

Images come from class subfolders of --data-dir (labeling "class", ids by
sorted folder name) and/or from CSV manifests (path,label), one extra
labeling per manifest. Row order is the sorted list of relative paths.
Features are the encoder's standard pooled backbone output (global average
pool for CNNs, class token for ViTs); --layer logits keeps the classifier
head instead. Unreadable images are skipped with a warning and recorded in
the sidecar.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import models, transforms

from .emb1 import write_emb1

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}

# model name -> (constructor, head attribute replaced for backbone features)
MODEL_REGISTRY = {
    "resnet18": (models.resnet18, "fc"),
    "resnet34": (models.resnet34, "fc"),
    "resnet50": (models.resnet50, "fc"),
    "vit_b_16": (models.vit_b_16, "heads"),
    "convnext_tiny": (models.convnext_tiny, "classifier"),
}


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class ExportSpec:
    model: str
    data_dir: str
    out: str
    batch_size: int = 32
    checkpoint: str | None = None  # local state-dict; seeded random init if absent
    layer: str = "backbone"  # "backbone" pooled features | "logits"
    image_size: int = 224
    device: str = "cpu"
    seed: int = 0
    manifests: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.model not in MODEL_REGISTRY:
            raise ExportError(
                f"unknown model {self.model!r}; available: {', '.join(sorted(MODEL_REGISTRY))}"
            )
        if self.layer not in ("backbone", "logits"):
            raise ExportError("layer must be 'backbone' or 'logits'")
        if self.batch_size < 1:
            raise ExportError("batch_size must be >= 1")


@dataclass(frozen=True)
class ExportResult:
    out: str
    sidecar: str
    n: int
    dim: int
    labelings: tuple[str, ...]
    skipped: tuple[str, ...]


def build_model(spec: ExportSpec) -> torch.nn.Module:
    torch.manual_seed(spec.seed)
    ctor, head_attr = MODEL_REGISTRY[spec.model]
    model = ctor(weights=None)
    if spec.checkpoint is not None:
        state = torch.load(spec.checkpoint, map_location="cpu")
        model.load_state_dict(state)
    if spec.layer == "backbone":
        setattr(model, head_attr, torch.nn.Identity())
    model.eval()
    return model.to(spec.device)


def _scan_images(root: Path) -> list[Path]:
    if not root.is_dir():
        raise ExportError(f"data dir {root} does not exist")
    paths = [
        p.relative_to(root)
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    ]
    if not paths:
        raise ExportError(f"no images found under {root}")
    return sorted(paths)


def _folder_labeling(paths: list[Path]) -> tuple[np.ndarray, int] | None:
    folders = [p.parent.as_posix() for p in paths]
    names = sorted(set(folders))
    if names == ["."]:
        return None  # flat directory: labels must come from manifests
    ids = {name: k for k, name in enumerate(names)}
    return np.array([ids[f] for f in folders], dtype=np.int64), len(names)


def _manifest_labeling(manifest: Path, paths: list[Path]) -> tuple[np.ndarray, int]:
    mapping = {}
    with open(manifest, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"path", "label"} - set(reader.fieldnames):
            raise ExportError(f"manifest {manifest} needs 'path' and 'label' columns")
        for row in reader:
            mapping[Path(row["path"]).as_posix()] = row["label"]
    missing = [p.as_posix() for p in paths if p.as_posix() not in mapping]
    if missing:
        raise ExportError(
            f"manifest {manifest} is missing {len(missing)} images, first: {missing[0]}"
        )
    values = sorted(set(mapping[p.as_posix()] for p in paths))
    ids = {v: k for k, v in enumerate(values)}
    labels = np.array([ids[mapping[p.as_posix()]] for p in paths], dtype=np.int64)
    return labels, len(values)


def _load_batch(root: Path, paths: list[Path], transform) -> tuple[list[torch.Tensor], list[Path], list[Path]]:
    tensors, kept, skipped = [], [], []
    for rel in paths:
        try:
            with Image.open(root / rel) as img:
                tensors.append(transform(img.convert("RGB")))
            kept.append(rel)
        except (OSError, SyntaxError) as exc:
            warnings.warn(f"skipping unreadable image {rel}: {exc}", stacklevel=2)
            skipped.append(rel)
    return tensors, kept, skipped


def export_embeddings(spec: ExportSpec) -> ExportResult:
    torch.set_num_threads(1)  # deterministic reruns regardless of host load
    root = Path(spec.data_dir)
    all_paths = _scan_images(root)
    transform = transforms.Compose(
        [
            transforms.Resize((spec.image_size, spec.image_size)),
            transforms.ToTensor(),
            transforms.Normalize(
                mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]
            ),
        ]
    )
    model = build_model(spec)

    features, kept_paths, skipped = [], [], []
    with torch.no_grad():
        for start in range(0, len(all_paths), spec.batch_size):
            batch_paths = all_paths[start : start + spec.batch_size]
            tensors, kept, bad = _load_batch(root, batch_paths, transform)
            skipped.extend(bad)
            if not tensors:
                continue
            out = model(torch.stack(tensors).to(spec.device))
            features.append(out.cpu().numpy().astype(np.float32))
            kept_paths.extend(kept)
    if not kept_paths:
        raise ExportError("no readable images to export")
    emb = np.concatenate(features, axis=0)

    labelings = []
    folder = _folder_labeling(kept_paths)
    if folder is not None:
        labelings.append(("class", folder[0], folder[1]))
    for manifest in spec.manifests:
        path = Path(manifest)
        labels, k = _manifest_labeling(path, kept_paths)
        labelings.append((path.stem, labels, k))
    if not labelings:
        raise ExportError("flat data dir and no manifests: no labels available")

    write_emb1(spec.out, emb, labelings)
    sidecar = str(spec.out) + ".export.json"
    with open(sidecar, "w") as fh:
        json.dump(
            {
                "model": spec.model,
                "layer": spec.layer,
                "checkpoint": spec.checkpoint,
                "weights": "checkpoint" if spec.checkpoint else "seeded random init",
                "seed": spec.seed,
                "image_size": spec.image_size,
                "batch_size": spec.batch_size,
                "n": int(emb.shape[0]),
                "dim": int(emb.shape[1]),
                "labelings": [
                    {"name": name, "num_classes": k} for name, _, k in labelings
                ],
                "row_order": [p.as_posix() for p in kept_paths],
                "skipped": [p.as_posix() for p in skipped],
            },
            fh,
            sort_keys=True,
            indent=2,
        )
        fh.write("\n")
    return ExportResult(
        out=str(spec.out),
        sidecar=sidecar,
        n=int(emb.shape[0]),
        dim=int(emb.shape[1]),
        labelings=tuple(name for name, _, _ in labelings),
        skipped=tuple(p.as_posix() for p in skipped),
    )
