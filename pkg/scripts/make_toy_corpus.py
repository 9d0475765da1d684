#!/usr/bin/env python3
"""Regenerate the bundled toy corpora under data/.

The files are checked in; this script exists so they can be rebuilt (and
diffed) if the generator changes. Output is deterministic.
"""

import sys
from pathlib import Path

from smoothlab.toydata import make_default_corpora


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data"
    paths = make_default_corpora(out_dir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
