"""embexport export: image folder -> EMB1 feature file."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .export import ExportError, ExportSpec, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embexport",
        description="Export frozen vision-encoder features to EMB1",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("export", help="run images through an encoder")
    p.add_argument("--model", required=True, help="torchvision architecture name")
    p.add_argument("--data-dir", required=True,
                   help="image directory; class subfolders become the 'class' labeling")
    p.add_argument("--out", required=True, help="output EMB1 path")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--checkpoint", help="local state-dict; omit for seeded random init")
    p.add_argument("--layer", choices=["backbone", "logits"], default="backbone")
    p.add_argument("--image-size", type=int, default=224)
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int, default=0,
                   help="weight-init seed when no checkpoint is given")
    p.add_argument("--manifest", action="append", default=[],
                   help="CSV (path,label) adding a labeling named by file stem; repeatable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = ExportSpec(
            model=args.model,
            data_dir=args.data_dir,
            out=args.out,
            batch_size=args.batch_size,
            checkpoint=args.checkpoint,
            layer=args.layer,
            image_size=args.image_size,
            device=args.device,
            seed=args.seed,
            manifests=tuple(args.manifest),
        )
        result = export_embeddings(spec)
    except (ExportError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {result.out}: n={result.n} d={result.dim} "
        f"labelings={','.join(result.labelings)}"
        + (f" skipped={len(result.skipped)}" if result.skipped else "")
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
