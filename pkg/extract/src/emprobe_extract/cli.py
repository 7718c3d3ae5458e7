"""CLI: build manifests and extract feature tables.

    emprobe-extract manifest   --dataset-root DIR --dataset-id ravdess --out m.csv
    emprobe-extract embeddings --manifest m.csv --out embeddings.csv [--layer -1]
    emprobe-extract acoustic   --manifest m.csv --out acoustic.csv

The emitted CSVs are the canonical feature tables the emprobe pipeline
validates and analyzes. Exit codes: 0 success, 1 user/validation error,
2 extraction failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from emprobe_extract import ExtractError
from emprobe_extract.acoustic import extract_acoustic, write_category_map
from emprobe_extract.embeddings import DEFAULT_MODEL_ID, extract_embeddings
from emprobe_extract.manifest import build_manifest, load_manifest, save_manifest


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser():
    parser = _Parser(prog="emprobe-extract",
                     description="Produce canonical feature tables from "
                                 "emotional speech datasets")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    man = sub.add_parser("manifest", help="scan a dataset tree")
    man.add_argument("--dataset-root", required=True)
    man.add_argument("--dataset-id", required=True,
                     choices=["ravdess", "savee"])
    man.add_argument("--out", required=True)
    man.set_defaults(func=cmd_manifest)

    emb = sub.add_parser("embeddings", help="mean-pooled model embeddings")
    emb.add_argument("--manifest", required=True)
    emb.add_argument("--out", required=True)
    emb.add_argument("--model-id", default=DEFAULT_MODEL_ID)
    emb.add_argument("--layer", type=int, default=-1,
                     help="hidden-state index to pool (default: final layer)")
    emb.set_defaults(func=cmd_embeddings)

    aco = sub.add_parser("acoustic", help="eGeMAPSv02 functionals")
    aco.add_argument("--manifest", required=True)
    aco.add_argument("--out", required=True)
    aco.add_argument("--category-map-out", default=None,
                     help="where to copy the category map "
                          "(default: category_map.csv next to --out)")
    aco.set_defaults(func=cmd_acoustic)
    return parser


def cmd_manifest(args) -> int:
    rows = build_manifest(args.dataset_root, args.dataset_id)
    save_manifest(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_embeddings(args) -> int:
    rows = load_manifest(args.manifest)
    n = extract_embeddings(rows, args.out, model_id=args.model_id,
                           layer=args.layer)
    print(f"wrote {n} rows to {args.out}")
    return 0


def cmd_acoustic(args) -> int:
    rows = load_manifest(args.manifest)
    n = extract_acoustic(rows, args.out)
    map_out = args.category_map_out or str(Path(args.out).parent / "category_map.csv")
    with open(args.out, encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")[4:]
    write_category_map(map_out, names)
    print(f"wrote {n} rows to {args.out} and the category map to {map_out}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if args.command in ("embeddings", "acoustic") else 1


if __name__ == "__main__":
    sys.exit(main())
