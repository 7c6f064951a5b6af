"""Batched VQE comparison for one or more presets.

    python scripts/reproduce_table2.py 3x4 --runs 10
    python scripts/reproduce_table2.py all --runs 50 --threads 4

Each preset writes its own directory under --out; a combined summary.csv is
written at the top level.
"""
import argparse
import sys
from pathlib import Path

from multiqida import cli
from multiqida.config import preset_names


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("systems", nargs="+", help="preset names or 'all'")
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    systems = preset_names() if args.systems == ["all"] else args.systems
    dirs = []
    for name in systems:
        out = Path(args.out) / name
        code = cli.main(["run", "--config", name, "--runs", str(args.runs), "--seed", str(args.seed),
                         "--threads", str(args.threads), "--out", str(out), "--self-check"])
        if code not in (cli.EXIT_OK, cli.EXIT_SELF_CHECK):
            return code
        dirs.append(str(out))
    return cli.main(["report", *dirs, "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
