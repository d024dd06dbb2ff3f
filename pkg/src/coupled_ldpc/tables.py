"""Regenerate the reference comparison tables (rates, thresholds, iterations)."""
from __future__ import annotations

import csv
import io
from typing import Callable, Iterable, Optional

from .density_evolution import (
    EPS_TOL,
    ITERATIONS_DECODE_TOL,
    bp_threshold,
    required_iterations,
)
from .ensembles import EnsembleSpec, design_rate
from .errors import InvalidParametersError
from .protograph import (
    DEFAULT_SPREADING,
    EXAMPLE_PRECODE,
    base_oc,
    base_ocp,
    base_sc,
    protograph_bp_threshold,
)

SMALL_L = (8, 9, 10, 12, 14, 15, 16, 18, 20)
LARGE_L = (30, 40, 50, 100)
TABLE3_L = (10, 14, 18, 22, 50)
TABLE4_L = (12, 14, 18, 20, 50)
EPS_R = 0.48

Row = dict


def _family_rows(Ls: Iterable[int], eps_tol: float, decode_tol: float,
                 progress: Optional[Callable[[str], None]] = None) -> list[Row]:
    rows = []
    for family in ("sc", "loop", "oc"):
        for L in Ls:
            try:
                spec = EnsembleSpec(family, 3, 6, L, 3)
            except InvalidParametersError:
                continue  # oc needs L - w + 1 even
            th = bp_threshold(spec, eps_tol).threshold
            it = required_iterations(spec, EPS_R, decode_tol)
            rows.append({"family": family, "L": L, "rate": design_rate(spec),
                         "eps_bp": th, "iterations": it})
            if progress:
                progress(f"{spec.label()}: threshold {th:.4f}, iterations {it}")
    return rows


def table_i(eps_tol: float = EPS_TOL, decode_tol: float = ITERATIONS_DECODE_TOL,
            progress=None) -> list[Row]:
    return _family_rows(SMALL_L, eps_tol, decode_tol, progress)


def table_ii(eps_tol: float = EPS_TOL, decode_tol: float = ITERATIONS_DECODE_TOL,
             progress=None) -> list[Row]:
    return _family_rows(LARGE_L, eps_tol, decode_tol, progress)


def table_iii(eps_tol: float = EPS_TOL, progress=None) -> list[Row]:
    rows = []
    for L in TABLE3_L:
        spec = EnsembleSpec("oc", 4, 8, L, 3)
        th = bp_threshold(spec, eps_tol).threshold
        rows.append({"family": "oc", "L": L, "rate": design_rate(spec), "eps_bp": th})
        if progress:
            progress(f"{spec.label()}: threshold {th:.4f}")
    return rows


def table_iv(eps_tol: float = EPS_TOL, progress=None) -> list[Row]:
    rows = []
    builders = {
        "sc": lambda L: base_sc(DEFAULT_SPREADING, L),
        "oc": lambda L: base_oc(DEFAULT_SPREADING, L),
        "ocp": lambda L: base_ocp(DEFAULT_SPREADING, L, EXAMPLE_PRECODE),
    }
    for family, build in builders.items():
        for L in TABLE4_L:
            base = build(L)
            th = protograph_bp_threshold(base, eps_tol).threshold
            rows.append({"family": family, "L": L, "rate": base.design_rate(), "eps_bp": th})
            if progress:
                progress(f"proto {family} L={L}: threshold {th:.4f}")
    return rows


TABLES = {"I": table_i, "II": table_ii, "III": table_iii, "IV": table_iv}


def rows_to_csv(rows: list[Row]) -> str:
    cols = ["family", "L", "rate", "eps_bp"]
    if rows and "iterations" in rows[0]:
        cols.append("iterations")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        out = []
        for c in cols:
            v = r[c]
            if isinstance(v, float):
                v = f"{v:.6f}"
            elif v is None:
                v = ""
            out.append(v)
        w.writerow(out)
    return buf.getvalue()
