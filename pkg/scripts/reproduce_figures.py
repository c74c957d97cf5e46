#!/usr/bin/env python3
"""Reproduce the two headline curves and print their summary statistics.

Writes ``figure2.csv`` (flat-pulse spectral efficiency vs normalized
bandwidth, against the synchronous baseline) and ``figure3.csv``
(asynchronous vs synchronous spectral efficiency over load for the 0.22
roll-off pulse) into the chosen output directory, then prints where the
async/sync gap peaks.

Usage:
    python3 scripts/reproduce_figures.py [--outdir out] [--density-points N]
"""

import argparse
import csv
import pathlib
import sys

from cdmalimits.cli import main as cli_main


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="out",
                        help="directory for the CSV outputs")
    parser.add_argument("--density-points", default="2048",
                        help="frequency resolution of the efficiency solver")
    parser.add_argument("--ebn0-db", default="10",
                        help="operating energy per bit over noise, in dB")
    args = parser.parse_args(argv)

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fig2 = outdir / "figure2.csv"
    fig3 = outdir / "figure3.csv"

    code = cli_main(["figure2", "--density-points", args.density_points,
                     "--ebn0-db", args.ebn0_db, "--out", str(fig2)])
    if code != 0:
        return code
    code = cli_main(["figure3", "--density-points", args.density_points,
                     "--ebn0-db", args.ebn0_db, "--out", str(fig3)])
    if code != 0:
        return code

    with open(fig3, newline="") as handle:
        rows = [row for row in csv.DictReader(
            line for line in handle if not line.startswith("#"))]
    gaps = [(float(row["relative_gap"]), float(row["beta"])) for row in rows]
    peak, at_beta = max(gaps)
    print(f"wrote {fig2} and {fig3}")
    print(f"async/sync spectral-efficiency gap peaks at {100 * peak:.2f}% "
          f"(load {at_beta:g}, Eb/N0 {args.ebn0_db} dB)")
    return 0


if __name__ == "__main__":
    sys.exit(run())
