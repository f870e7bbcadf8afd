#!/usr/bin/env python3
"""Generate a demo workspace: example scripts, schedules and assets.

Usage:
    python scripts/make_fixtures.py [DEST]

DEST defaults to ./demo.  Afterwards, try:

    trialkit validate --script DEST/scripts/minimal_pairs.txt
    trialkit run --script DEST/scripts/minimal_pairs_session.txt \
        --schedule DEST/schedules/minimal_pairs_ca.schedule \
        --subject ca --seed 1 --assets DEST/assets --out ca.tsv
"""

from __future__ import annotations

import sys
from pathlib import Path

from trialkit.demo import build_demo_workspace


def main() -> int:
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo")
    paths = build_demo_workspace(dest)
    for name, path in sorted(paths.items()):
        print(f"{name:24} {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
