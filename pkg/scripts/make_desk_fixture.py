#!/usr/bin/env python3
"""Write the desk-scale fixture (expressions, labels, annotation matrix)
as CLI-ready TSV files.

Usage: python scripts/make_desk_fixture.py [OUT_DIR]
"""

import sys

from annomtp.datasets import write_desk_fixture


def main() -> None:
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "desk_fixture"
    paths = write_desk_fixture(out_dir)
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
