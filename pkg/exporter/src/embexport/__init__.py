"""Frozen vision-encoder feature export to EMB1 files."""

__version__ = "0.1.0"

from .emb1 import write_emb1
from .export import ExportError, ExportResult, ExportSpec, export_embeddings
