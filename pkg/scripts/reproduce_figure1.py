"""Required L for each (N, target) at p = 1/2, eta_tilde = 1/8, written as CSV.

    python scripts/reproduce_figure1.py --out figure1.csv
"""

import argparse
import sys

from seqmem.bounds import figure1_sweep, write_sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()
    rows = figure1_sweep()
    if args.out:
        with open(args.out, "w") as fh:
            write_sweep_csv(fh, rows)
    else:
        write_sweep_csv(sys.stdout, rows)


if __name__ == "__main__":
    main()
