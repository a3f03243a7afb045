"""Regenerate the golden report files after an intentional schema change.

Run from the repository root:

    python3 tests/data/make_golden.py
"""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

from ekfphys.harness.cli import main

DATA = Path(__file__).parent


def regenerate() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "run"
        for stage in ("simulate", "corrupt", "filter", "eval", "report"):
            code = main([stage, "--config", str(DATA / "golden.cfg"), "--out", str(out)])
            if code != 0:
                raise SystemExit(f"{stage} exited {code}")
        shutil.copy(out / "report.csv", DATA / "golden_report.csv")
        shutil.copy(out / "recall.csv", DATA / "golden_recall.csv")
    print(f"wrote {DATA / 'golden_report.csv'} and {DATA / 'golden_recall.csv'}")


if __name__ == "__main__":
    regenerate()
