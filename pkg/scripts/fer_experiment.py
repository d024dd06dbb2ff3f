#!/usr/bin/env python3
"""Block error rate curves for lifted SC, OC, precoded OC and two-chain SC codes.

Writes one CSV per code plus a short comparison of the orderings at each
erasure probability (one-sided pooled two-proportion z-tests).

    python3 scripts/fer_experiment.py --L 18 --eps 0.44 0.45 0.46 0.47 --trials 2000
    python3 scripts/fer_experiment.py --L 50 --imax 100 --codes sc oc
"""
import argparse
import logging
import pathlib

from coupled_ldpc.finite_length import fer_experiment, fer_less_significant, fer_to_csv
from coupled_ldpc.protograph import (
    DEFAULT_SPREADING,
    EXAMPLE_PRECODE,
    base_oc,
    base_ocp,
    base_sc,
    lift,
)

log = logging.getLogger("fer_experiment")


def build_codes(L, z, seed, names):
    s = DEFAULT_SPREADING
    Ls = (L - s.w + 1) // 2
    make = {
        "sc": lambda: lift(base_sc(s, L), z, seed),
        "oc": lambda: lift(base_oc(s, L), z, seed),
        "ocp": lambda: lift(base_ocp(s, L, EXAMPLE_PRECODE), z, seed),
        "2sc": lambda: [lift(base_sc(s, Ls), z, seed), lift(base_sc(s, Ls), z, seed + 1)],
    }
    return {n: make[n]() for n in names}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--L", type=int, default=18, help="chain length (default 18)")
    p.add_argument("--z", type=int, default=100, help="lifting factor (default 100)")
    p.add_argument("--eps", type=float, nargs="+", default=[0.44, 0.45, 0.46, 0.47])
    p.add_argument("--trials", type=int, default=2000, help="transmissions per point (default 2000)")
    p.add_argument("--imax", type=int, default=None, help="BP iteration cap (default unbounded)")
    p.add_argument("--codes", nargs="+", choices=("sc", "oc", "ocp", "2sc"),
                   default=["sc", "oc", "ocp", "2sc"])
    p.add_argument("--lift-seed", type=int, default=1, help="lifting seed (default 1)")
    p.add_argument("--seed", type=int, default=2024, help="channel master seed (default 2024)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="results/fer")
    a = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    out = pathlib.Path(a.out)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    for name, code in build_codes(a.L, a.z, a.lift_seed, a.codes).items():
        pts = fer_experiment(code, a.eps, a.trials, a.imax, a.seed, jobs=a.jobs)
        tag = f"{name}_L{a.L}_z{a.z}" + (f"_imax{a.imax}" if a.imax else "")
        (out / f"{tag}.csv").write_text(fer_to_csv(pts))
        results[name] = pts
        for pt in pts:
            log.info("%-4s eps=%.3f FER=%.4f +- %.4f", name, pt.epsilon, pt.fer, pt.ci95)

    for better, worse in [("oc", "sc"), ("ocp", "oc"), ("2sc", "oc")]:
        if better in results and worse in results:
            for a_pt, b_pt in zip(results[better], results[worse]):
                sig, pval = fer_less_significant(a_pt, b_pt)
                log.info("eps=%.3f FER(%s) < FER(%s): p=%.3g%s", a_pt.epsilon, better, worse,
                         pval, " (significant)" if sig else "")


if __name__ == "__main__":
    main()
