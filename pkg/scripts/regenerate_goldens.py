"""Regenerate (or verify) the committed golden files under fixtures/.

Usage:
    python scripts/regenerate_goldens.py [--check] [--root DIR] [NAME ...]

Without --check every fixture's files are rewritten in place and the
per-file status is printed. With --check nothing is written; a nonzero
exit flags any stale, missing, or extra content so CI can catch a code
change that silently altered fixture behavior.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from batchopt.fixtures import all_fixtures, get_fixture, regenerate_goldens


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", help="fixture names (default: all)")
    parser.add_argument("--check", action="store_true", help="diff only, write nothing")
    parser.add_argument(
        "--root",
        default=str(Path(__file__).resolve().parent.parent / "fixtures"),
        help="golden tree root (default: fixtures/ next to src/)",
    )
    args = parser.parse_args(argv)

    fixtures = tuple(get_fixture(n) for n in args.names) if args.names else None
    report = regenerate_goldens(args.root, fixtures=fixtures, check=args.check)

    stale = 0
    for fixture, name, status in report:
        if status != "unchanged":
            print(f"{status:>9}  {fixture + '/' if fixture else ''}{name}")
        if status in ("differs", "missing"):
            stale += 1
    unchanged = sum(1 for _, _, s in report if s == "unchanged")
    print(f"{len(report)} files: {unchanged} unchanged, {len(report) - unchanged} other")

    if args.check and stale:
        print(f"stale golden tree: {stale} files differ; rerun without --check", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
