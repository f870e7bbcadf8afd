#!/usr/bin/env python3
"""End-to-end headless demo: build a workspace, run a session, print the log.

Runs the fixed-order minimal-pairs session against the bundled subject
schedule and shows the resulting response table, then repeats the randomized
catalog with a generated seed to show order randomization.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from trialkit.cli import main as cli


def main() -> int:
    with tempfile.TemporaryDirectory(prefix="trialkit-demo-") as tmp:
        root = Path(tmp)
        from trialkit.demo import build_demo_workspace

        paths = build_demo_workspace(root)
        out = root / "ca.tsv"
        code = cli(
            [
                "run",
                "--script", str(paths["minimal_pairs_session"]),
                "--schedule", str(paths["session_schedule"]),
                "--subject", "ca",
                "--seed", "1",
                "--assets", str(paths["assets"]),
                "--out", str(out),
            ]
        )
        if code != 0:
            return code
        print("\nresponse file:")
        print(out.read_text(encoding="utf-8"))

        out_random = root / "ca_random.tsv"
        code = cli(
            [
                "run",
                "--script", str(paths["minimal_pairs"]),
                "--schedule", str(paths["session_schedule"]),
                "--subject", "ca",
                "--assets", str(paths["assets"]),
                "--out", str(out_random),
            ]
        )
        if code != 0:
            return code
        print("\nrandomized catalog order (first column pairs, unanswered trials time out):")
        print(out_random.read_text(encoding="utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
