"""Command-line interface: ``coupled-ldpc <noun> <verb> [options]``.

Results go to stdout unless ``--out`` is given. Output is deterministic for a
given set of flags and seeds. The default seed can be overridden with the
COUPLED_LDPC_SEED environment variable.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import density_evolution as de
from . import finite_length as fl
from . import protograph as pg
from . import tables
from .ensembles import (
    EnsembleSpec,
    connectivity,
    degree_profile,
    design_rate,
    protected_positions,
)
from .errors import CoupledLDPCError

SEED_ENV = "COUPLED_LDPC_SEED"
DEFAULT_SEED = 0
log = logging.getLogger("coupled_ldpc")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV}={raw!r} is not an integer")


@dataclass
class RunConfig:
    """Validated view of the parsed command line."""

    command: str
    params: dict = field(default_factory=dict)
    out: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        for key in ("eps_tol", "decode_tol", "stall_tol"):
            v = self.params.get(key)
            if v is not None and v <= 0:
                raise CoupledLDPCError(f"--{key.replace('_', '-')} must be positive")
        if self.fmt not in ("json", "csv"):
            raise CoupledLDPCError(f"unknown output format {self.fmt!r}")


# --------------------------------------------------------------------------
# helpers


def _parse_law(text: Optional[str]):
    """'3:0.95,23:0.05' -> ((3, 0.95), (23, 0.05))."""
    if not text:
        return None
    out = []
    for part in text.split(","):
        d, p = part.split(":")
        if "/" in p:
            num, den = p.split("/")
            pv = float(num) / float(den)
        else:
            pv = float(p)
        out.append((int(d), pv))
    return tuple(out)


def _parse_matrix(text: str) -> np.ndarray:
    """'1 1; 0 1' -> 2-D int array."""
    rows = [r.split() for r in text.split(";") if r.strip()]
    return np.array([[int(x) for x in r] for r in rows], dtype=np.int64)


def _spec(a) -> EnsembleSpec:
    return EnsembleSpec(a.family, a.dl, a.dr, a.L, a.w, _parse_law(getattr(a, "law", None)))


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _records_csv(records: Sequence[dict]) -> str:
    buf = io.StringIO()
    if not records:
        return ""
    cols = sorted(records[0])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([json.dumps(r[c]) if isinstance(r[c], (dict, list)) else r[c] for c in cols])
    return buf.getvalue()


def _emit_records(records, cfg: RunConfig):
    if cfg.fmt == "csv":
        _emit(_records_csv(records if isinstance(records, list) else [records]), cfg.out)
    else:
        _emit(_json(records), cfg.out)


def _add_ensemble_args(p, need_family=True):
    if need_family:
        p.add_argument("--family", required=True, help="sc | circular | loop | oc")
    p.add_argument("--dl", type=int, default=3, help="variable degree (default 3)")
    p.add_argument("--dr", type=int, default=6, help="check degree (default 6)")
    p.add_argument("--L", type=int, required=True, help="chain length")
    p.add_argument("--w", type=int, default=3, help="coupling length (default 3)")
    p.add_argument("--law", default=None,
                   help="irregular node-degree law, e.g. '3:19/20,23:1/20' (replaces --dl)")


def _add_de_args(p, iterations=False):
    p.add_argument("--eps-tol", type=float, default=de.EPS_TOL,
                   help=f"bisection bracket width (default {de.EPS_TOL})")
    dt = de.ITERATIONS_DECODE_TOL if iterations else de.THRESHOLD_DECODE_TOL
    p.add_argument("--decode-tol", type=float, default=dt,
                   help=f"success when max erasure <= this (default {dt})")
    p.add_argument("--stall-tol", type=float, default=de.STALL_TOL,
                   help=f"failure when the update changes less than this (default {de.STALL_TOL})")
    p.add_argument("--max-iter", type=int, default=de.MAX_ITER,
                   help=f"iteration cap (default {de.MAX_ITER})")


def _add_out(p, fmt_default="json"):
    p.add_argument("--out", default=None, help="write results to this file instead of stdout")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default=fmt_default,
                   help=f"output format (default {fmt_default})")


def _cfg(a) -> RunConfig:
    params = {k: v for k, v in vars(a).items() if k not in ("func", "out", "fmt")}
    return RunConfig(a.command, params, getattr(a, "out", None), getattr(a, "fmt", "json"))


# --------------------------------------------------------------------------
# ensemble


def cmd_ensemble_info(a):
    cfg = _cfg(a)
    spec = _spec(a)
    T = connectivity(spec)
    D = degree_profile(spec)
    rec = {
        "spec": spec.to_dict(),
        "rows": T.rows,
        "cols": T.cols,
        "design_rate": design_rate(spec),
        "mean_degrees": [float(x) for x in D.mean_degrees()],
        "protected_positions": protected_positions(spec),
    }
    if a.connectivity:
        with open(a.connectivity, "w") as f:
            f.write(_json(T.to_dict()))
    if a.profile:
        with open(a.profile, "w") as f:
            f.write(_json(D.to_dict()))
    _emit_records(rec, cfg)


# --------------------------------------------------------------------------
# de


def cmd_de_threshold(a):
    cfg = _cfg(a)
    spec = _spec(a)
    res = de.bp_threshold(spec, a.eps_tol, a.decode_tol, a.stall_tol, a.max_iter)
    _emit_records({"spec": spec.to_dict(), "threshold": res.threshold,
                   "bracket_width": res.bracket_width, "settings": res.settings}, cfg)


def cmd_de_iterations(a):
    cfg = _cfg(a)
    spec = _spec(a)
    it = de.required_iterations(spec, a.eps, a.decode_tol, a.max_iter, a.stall_tol)
    _emit_records({"spec": spec.to_dict(), "epsilon": a.eps, "iterations": it,
                   "decode_tol": a.decode_tol}, cfg)


def cmd_de_evolve(a):
    cfg = _cfg(a)
    spec = _spec(a)
    out = de.evolve(spec, a.eps, a.max_iter, a.decode_tol, a.stall_tol,
                    keep_trajectory=bool(a.dump))
    if a.dump:
        traj = np.asarray(out.trajectory)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l"] + [f"x_{i + 1}" for i in range(traj.shape[1])])
        for l, row in enumerate(traj):
            w.writerow([l] + [repr(float(v)) for v in row])
        with open(a.dump, "w", newline="") as f:
            f.write(buf.getvalue())
    _emit_records({"spec": spec.to_dict(), "epsilon": a.eps, "converged": out.converged,
                   "iterations": out.iterations, "final_max_erasure": out.final_max_erasure}, cfg)


def cmd_de_split(a):
    cfg = _cfg(a)
    oc = EnsembleSpec("oc", a.dl, a.dr, a.L, a.w, _parse_law(a.law))
    sc_th, oc_th = de.split_thresholds(a.dl, a.dr, a.L, a.w, a.delta_s, _parse_law(a.law))
    rec = {"oc": oc.to_dict(), "Ls": oc.Ls, "threshold_sc": sc_th, "threshold_oc": oc_th,
           "delta_s": a.delta_s, "splitting": sc_th - oc_th < a.delta_s}
    if a.law is None:
        rec["necessary_condition"] = de.splitting_necessary_condition(
            a.dl, a.dr, oc.Ls, a.w, a.delta_s)
    _emit_records(rec, cfg)


# --------------------------------------------------------------------------
# proto


def _spreading(a) -> pg.EdgeSpreading:
    return pg.EdgeSpreading.repeated(_parse_matrix(a.component), a.w)


def cmd_proto_build(a):
    s = _spreading(a)
    if a.family == "sc":
        base = pg.base_sc(s, a.L)
    elif a.family == "circular":
        base = pg.base_circular(s, a.L)
    elif a.family == "oc":
        base = pg.base_oc(s, a.L)
    else:
        P = pg.PrecodeBlock(_parse_matrix(a.precode)) if a.precode else pg.EXAMPLE_PRECODE
        base = pg.base_ocp(s, a.L, P)
    _emit(pg.format_base(base), a.out)


def cmd_proto_check(a):
    base = pg.read_base(a.base)
    exists = pg.punctured_stopping_set_exists(base)
    msg = "punctured stopping set exists" if exists else "no punctured stopping set"
    _emit(msg + "\n", a.out)
    return 3 if exists and a.strict else 0


def cmd_proto_threshold(a):
    cfg = _cfg(a)
    base = pg.read_base(a.base)
    res = pg.protograph_bp_threshold(base, a.eps_tol, a.decode_tol, a.stall_tol, a.max_iter)
    _emit_records({"base": a.base, "design_rate": base.design_rate(),
                   "threshold": res.threshold, "bracket_width": res.bracket_width,
                   "settings": res.settings}, cfg)


def cmd_proto_lift(a):
    base = pg.read_base(a.base)
    code = pg.lift(base, a.z, a.seed)
    _emit(pg.format_alist(code.H), a.out)
    if a.punctured_out:
        with open(a.punctured_out, "w") as f:
            f.write(" ".join(str(int(j) + 1) for j in code.punctured) + "\n")


# --------------------------------------------------------------------------
# sim


def _sim_codes(a):
    if a.base:
        return pg.lift(pg.read_base(a.base), a.z, a.seed)
    s = pg.EdgeSpreading.repeated(_parse_matrix(a.component), a.w)
    if a.code == "sc":
        return pg.lift(pg.base_sc(s, a.L), a.z, a.seed)
    if a.code == "oc":
        return pg.lift(pg.base_oc(s, a.L), a.z, a.seed)
    if a.code == "ocp":
        return pg.lift(pg.base_ocp(s, a.L, pg.EXAMPLE_PRECODE), a.z, a.seed)
    Ls = (a.L - a.w + 1) // 2
    return [pg.lift(pg.base_sc(s, Ls), a.z, a.seed), pg.lift(pg.base_sc(s, Ls), a.z, a.seed + 1)]


def cmd_sim_fer(a):
    code = _sim_codes(a)
    eps = [float(x) for x in a.eps.split(",")]
    pts = fl.fer_experiment(code, eps, a.trials, a.imax, a.seed, jobs=a.jobs)
    if a.fmt == "json":
        _emit(_json([p.__dict__ for p in pts]), a.out)
    else:
        _emit(fl.fer_to_csv(pts), a.out)


def cmd_sim_peel(a):
    spec = _spec(a)
    target = spec
    if a.split:
        if spec.family != "oc":
            raise CoupledLDPCError("--split needs an oc ensemble")
        half = EnsembleSpec("sc", spec.dl, spec.dr, spec.Ls, spec.w, spec.law)
        target = [half, half]
    evo = fl.graph_evolution(target, a.M, a.eps, a.trials, a.seed, jobs=a.jobs, model=a.model)
    _emit(evo.to_csv(alive=a.alive), a.out)


# --------------------------------------------------------------------------
# tables


def cmd_tables(a):
    fn = tables.TABLES[a.table]
    progress = (lambda m: print(m, file=sys.stderr)) if a.verbose else None
    rows = fn(eps_tol=a.eps_tol, progress=progress)
    if a.fmt == "json":
        _emit(_json(rows), a.out)
    else:
        _emit(tables.rows_to_csv(rows), a.out)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    seed = default_seed()
    p = argparse.ArgumentParser(prog="coupled-ldpc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="noun", required=True)

    # ensemble
    ens = sub.add_parser("ensemble", help="random-based coupled ensembles")
    es = ens.add_subparsers(dest="verb", required=True)
    q = es.add_parser("info", help="connectivity size, design rate and degree profile")
    _add_ensemble_args(q)
    q.add_argument("--connectivity", default=None, help="also write the connectivity matrix as JSON")
    q.add_argument("--profile", default=None, help="also write the degree profile as JSON")
    _add_out(q)
    q.set_defaults(func=cmd_ensemble_info, command="ensemble info")

    # de
    d = sub.add_parser("de", help="density evolution")
    ds = d.add_subparsers(dest="verb", required=True)
    q = ds.add_parser("threshold", help="BP threshold by bisection")
    _add_ensemble_args(q)
    _add_de_args(q)
    _add_out(q)
    q.set_defaults(func=cmd_de_threshold, command="de threshold")
    q = ds.add_parser("iterations", help="required number of iterations at a channel parameter")
    _add_ensemble_args(q)
    q.add_argument("--eps", type=float, default=0.48, help="channel erasure probability (default 0.48)")
    _add_de_args(q, iterations=True)
    _add_out(q)
    q.set_defaults(func=cmd_de_iterations, command="de iterations")
    q = ds.add_parser("evolve", help="run DE once, optionally dumping the trajectory")
    _add_ensemble_args(q)
    q.add_argument("--eps", type=float, required=True, help="channel erasure probability")
    q.add_argument("--dump", default=None, help="CSV path for the trajectory (columns l, x_1..x_Q)")
    _add_de_args(q)
    _add_out(q)
    q.set_defaults(func=cmd_de_evolve, command="de evolve")
    q = ds.add_parser("split-check", help="compare an oc ensemble with its half-length sc chain")
    _add_ensemble_args(q, need_family=False)
    q.add_argument("--delta-s", type=float, default=1e-4, help="splitting tolerance (default 1e-4)")
    _add_out(q)
    q.set_defaults(func=cmd_de_split, command="de split-check")

    # proto
    pr = sub.add_parser("proto", help="protograph base matrices")
    ps = pr.add_subparsers(dest="verb", required=True)
    q = ps.add_parser("build", help="write a base matrix in text form")
    q.add_argument("--family", required=True, choices=("sc", "circular", "oc", "ocp"))
    q.add_argument("--L", type=int, required=True)
    q.add_argument("--w", type=int, default=3, help="number of spreading components (default 3)")
    q.add_argument("--component", default="1 1", help="spreading component rows, ';' separated (default '1 1')")
    q.add_argument("--precode", default=None,
                   help="precode rows for ocp, ';' separated (default '0 1 1 0; 0 1 1 0')")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_proto_build, command="proto build")
    q = ps.add_parser("check", help="test the punctured columns for a stopping set")
    q.add_argument("--base", required=True)
    q.add_argument("--strict", action="store_true", help="exit with status 3 when a stopping set exists")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_proto_check, command="proto check")
    q = ps.add_parser("threshold", help="protograph DE threshold")
    q.add_argument("--base", required=True)
    _add_de_args(q)
    _add_out(q)
    q.set_defaults(func=cmd_proto_threshold, command="proto threshold")
    q = ps.add_parser("lift", help="lift to a parity-check matrix in alist form")
    q.add_argument("--base", required=True)
    q.add_argument("--z", type=int, required=True, help="lifting factor")
    q.add_argument("--seed", type=int, default=seed, help=f"lifting seed (default {seed})")
    q.add_argument("--punctured-out", default=None, help="write 1-based punctured bit indices here")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_proto_lift, command="proto lift")

    # sim
    sm = sub.add_parser("sim", help="finite-length simulation")
    ss = sm.add_subparsers(dest="verb", required=True)
    q = ss.add_parser("fer", help="block error rate of a lifted code under BP")
    q.add_argument("--code", choices=("sc", "oc", "ocp", "2sc"), default="oc",
                   help="protograph family to lift when --base is absent (default oc)")
    q.add_argument("--base", default=None, help="base matrix file (overrides --code)")
    q.add_argument("--L", type=int, default=18)
    q.add_argument("--w", type=int, default=3)
    q.add_argument("--component", default="1 1")
    q.add_argument("--z", type=int, default=100, help="lifting factor (default 100)")
    q.add_argument("--eps", default="0.46", help="comma-separated erasure probabilities (default 0.46)")
    q.add_argument("--trials", type=int, default=2000, help="transmissions per point (default 2000)")
    q.add_argument("--imax", type=int, default=None, help="BP iteration cap (default unbounded)")
    q.add_argument("--seed", type=int, default=seed, help=f"master seed (default {seed})")
    q.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    _add_out(q, "csv")
    q.set_defaults(func=cmd_sim_fer, command="sim fer")
    q = ss.add_parser("peel-evolution", help="Monte Carlo r1 and v* curves of the peeling decoder")
    _add_ensemble_args(q)
    q.add_argument("--M", type=int, default=1000, help="variable nodes per position (default 1000)")
    q.add_argument("--eps", type=float, default=0.48, help="erasure probability (default 0.48)")
    q.add_argument("--trials", type=int, default=200, help="number of graphs (default 200)")
    q.add_argument("--seed", type=int, default=seed, help=f"master seed (default {seed})")
    q.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    q.add_argument("--model", choices=fl.SAMPLING_MODELS, default="auto",
                   help="graph sampling model (default auto)")
    q.add_argument("--split", action="store_true",
                   help="peel two independent half-length sc chains instead of the oc ensemble")
    q.add_argument("--alive", action="store_true",
                   help="average only over trials still peeling at each step")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_sim_peel, command="sim peel-evolution", fmt="csv")

    # tables
    tb = sub.add_parser("tables", help="regenerate reference tables")
    ts = tb.add_subparsers(dest="verb", required=True)
    q = ts.add_parser("reproduce", help="compute one table")
    q.add_argument("table", choices=sorted(tables.TABLES))
    q.add_argument("--eps-tol", type=float, default=de.EPS_TOL,
                   help=f"bisection bracket width (default {de.EPS_TOL})")
    _add_out(q, "csv")
    q.set_defaults(func=cmd_tables, command="tables reproduce")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        rc = a.func(a)
    except CoupledLDPCError as exc:
        module = type(exc).__module__
        origin = getattr(exc, "__traceback__", None)
        while origin is not None and origin.tb_next is not None:
            origin = origin.tb_next
        where = origin.tb_frame.f_globals.get("__name__", module) if origin else module
        print(f"{where}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"coupled-ldpc: {exc}", file=sys.stderr)
        return 1
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
