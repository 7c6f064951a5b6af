"""Write raw and normalised QMI matrices for every preset (exact or DMRG reference)."""
import argparse

from multiqida import cli
from multiqida.config import preset_names


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--backend", choices=["exact", "dmrg"], default="exact")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    for name in preset_names():
        cli.main(["qmi", "--config", name, "--backend", args.backend, "--out", f"{args.out}/{name}"])


if __name__ == "__main__":
    main()
