"""Command-line driver: vidextract MANIFEST [--out PATH] [--workers N]."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .extract import extract
from .manifest import ManifestError, parse_manifest

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_BAD_MANIFEST = 3
EXIT_NOTHING_EXTRACTED = 4


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="vidextract",
        description="Extract frame, audio, and caption features from raw "
                    "videos into a summarization dataset container")
    parser.add_argument("manifest", help="flat text manifest file")
    parser.add_argument("--out", help="override the manifest's output path")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel per-video extraction workers")
    args = parser.parse_args(argv)

    try:
        manifest = parse_manifest(args.manifest)
    except FileNotFoundError:
        print(f"manifest not found: {args.manifest}", file=sys.stderr)
        return EXIT_BAD_MANIFEST
    except ManifestError as exc:
        print(f"bad manifest: {exc}", file=sys.stderr)
        return EXIT_BAD_MANIFEST
    if args.out:
        manifest = replace(manifest, output=Path(args.out))

    report = extract(manifest, workers=max(1, args.workers))
    for vid in report.extracted:
        print(f"ok      {vid}")
    for vid, error in sorted(report.errors.items()):
        print(f"failed  {vid}: {error}")
    print(f"{len(report.extracted)} extracted, {len(report.errors)} failed "
          f"-> {report.output}")
    if not report.extracted:
        return EXIT_NOTHING_EXTRACTED
    return EXIT_OK if report.ok else EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
