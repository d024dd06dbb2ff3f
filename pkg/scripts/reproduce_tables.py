#!/usr/bin/env python3
"""Regenerate the rate/threshold/iteration tables as CSV files.

    python3 scripts/reproduce_tables.py --out results/tables
    python3 scripts/reproduce_tables.py --tables I III --eps-tol 1e-4
"""
import argparse
import logging
import pathlib
import time

from coupled_ldpc import tables
from coupled_ldpc.density_evolution import EPS_TOL

log = logging.getLogger("reproduce_tables")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--tables", nargs="+", choices=sorted(tables.TABLES),
                   default=sorted(tables.TABLES), help="which tables (default: all)")
    p.add_argument("--eps-tol", type=float, default=EPS_TOL,
                   help=f"bisection bracket width (default {EPS_TOL})")
    p.add_argument("--out", default="results/tables", help="output directory")
    a = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    out = pathlib.Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in a.tables:
        t0 = time.perf_counter()
        rows = tables.TABLES[name](eps_tol=a.eps_tol, progress=log.info)
        path = out / f"table_{name}.csv"
        path.write_text(tables.rows_to_csv(rows))
        log.info("table %s -> %s (%.1fs)", name, path, time.perf_counter() - t0)


if __name__ == "__main__":
    main()
