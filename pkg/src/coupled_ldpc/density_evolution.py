"""Vector density evolution for coupled ensembles over the BEC.

The recursion tracks ``x[i]``, the erasure probability of messages leaving
variable position ``i``. One step:

    a[u] = (sum_v T[u, v] x[v]) / W          W = max row sum of T (= w)
    y[u] = 1 - (1 - a[u]) ** (dr - 1)
    b[i] = (sum_u T[u, i] y[u]) / colsum(i)
    x[i] = eps * sum_d lambda_i(d) b[i] ** (d - 1)

Dividing the check-side sum by the full coupling width rather than the row
sum treats the missing neighbours of boundary checks as known, which is what
makes a terminated chain decode from its ends.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .ensembles import (
    ConnectivityMatrix,
    DegreeProfile,
    EnsembleSpec,
    connectivity,
    connectivity_circular,
    degree_profile,
)
from .errors import DimensionMismatchError, InvalidParametersError

log = logging.getLogger(__name__)

# stopping rules
THRESHOLD_DECODE_TOL = 1e-8
ITERATIONS_DECODE_TOL = 1e-6
STALL_TOL = 1e-12
MAX_ITER = 200_000
EPS_TOL = 1e-5

# cited reference values, never computed here
MAP_THRESHOLDS = {(3, 6): 0.4881, (4, 8): 0.497}


@dataclass(frozen=True)
class DEOutcome:
    converged: bool
    iterations: int
    final_max_erasure: float
    trajectory: Optional[list] = None
    x: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    bracket_width: float
    settings: dict

    @property
    def lower(self) -> float:
        return self.threshold - self.bracket_width / 2

    @property
    def upper(self) -> float:
        return self.threshold + self.bracket_width / 2


class DEKernel:
    """Precomputed arrays for repeated DE steps on one (T, D, dr) triple.

    ``known`` marks positions clamped to zero erasure probability
    (variable nodes of infinite degree).
    """

    def __init__(self, T: ConnectivityMatrix, D: DegreeProfile, dr: int,
                 known: Optional[Sequence[int]] = None):
        if len(D) != T.cols:
            raise DimensionMismatchError(
                f"degree profile has {len(D)} positions but T has {T.cols} columns")
        if dr < 2:
            raise InvalidParametersError("check degree dr must be >= 2")
        self.T = T.entries.astype(float)
        self.dr = int(dr)
        self.width = float(T.row_sums().max())
        self.colsum = T.col_sums().astype(float)
        self.Q = T.cols
        self.known = np.zeros(self.Q, dtype=bool)
        if known is not None:
            self.known[np.asarray(list(known), dtype=int)] = True
        if D.is_regular:
            self._exp = (D.degrees() - 1).astype(float)
            self._lam = None
        else:
            laws = D.edge_laws()
            k = max(len(d) for d, _ in laws)
            exps = np.zeros((self.Q, k))
            lam = np.zeros((self.Q, k))
            for i, (d, l) in enumerate(laws):
                exps[i, :len(d)] = d - 1
                lam[i, :len(d)] = l
            self._exp = exps
            self._lam = lam

    def initial(self) -> np.ndarray:
        x = np.ones(self.Q)
        x[self.known] = 0.0
        return x

    def step(self, x: np.ndarray, eps: float) -> np.ndarray:
        a = (self.T @ x) / self.width
        y = 1.0 - (1.0 - a) ** (self.dr - 1)
        b = (self.T.T @ y) / self.colsum
        if self._lam is None:
            xn = eps * b ** self._exp
        else:
            xn = eps * np.sum(self._lam * b[:, None] ** self._exp, axis=1)
        xn[self.known] = 0.0
        return xn


def _check_eps(eps: float):
    if not (0.0 <= eps <= 1.0):
        raise InvalidParametersError(f"erasure probability {eps} outside [0, 1]")


def de_step(T: ConnectivityMatrix, D: DegreeProfile, dr: int, eps: float,
            x: np.ndarray, known: Optional[Sequence[int]] = None) -> np.ndarray:
    """One synchronous DE update of the erasure vector ``x``."""
    _check_eps(eps)
    x = np.asarray(x, dtype=float)
    if x.shape != (T.cols,):
        raise DimensionMismatchError(f"x has shape {x.shape}, expected ({T.cols},)")
    if ((x < 0) | (x > 1)).any():
        raise InvalidParametersError("erasure probabilities must lie in [0, 1]")
    return DEKernel(T, D, dr, known).step(x, eps)


def iterate(kernel: DEKernel, eps: float, x0: Optional[np.ndarray] = None) -> Iterator[np.ndarray]:
    """Yield x^(1), x^(2), ... forever."""
    x = kernel.initial() if x0 is None else np.array(x0, dtype=float)
    while True:
        x = kernel.step(x, eps)
        yield x


def run_de(kernel: DEKernel, eps: float, max_iter: int = MAX_ITER,
           decode_tol: float = THRESHOLD_DECODE_TOL, stall_tol: float = STALL_TOL,
           keep_trajectory: bool = False,
           callback: Optional[Callable[[int, np.ndarray], None]] = None) -> DEOutcome:
    """Iterate from the all-ones state until decoded, stalled or out of budget.

    Stalling means the whole vector moved by less than ``stall_tol`` in sup
    norm; a slowly travelling decoding wave keeps the vector moving even when
    its maximum sits still.
    """
    _check_eps(eps)
    x = kernel.initial()
    traj = [x.copy()] if keep_trajectory else None
    if callback is not None:
        callback(0, x)
    for it in range(1, max_iter + 1):
        xn = kernel.step(x, eps)
        if keep_trajectory:
            traj.append(xn.copy())
        if callback is not None:
            callback(it, xn)
        m = float(xn.max())
        if m <= decode_tol:
            return DEOutcome(True, it, m, traj, xn)
        if float(np.abs(xn - x).max()) < stall_tol:
            return DEOutcome(False, it, m, traj, xn)
        x = xn
    return DEOutcome(False, max_iter, float(x.max()), traj, x)


def kernel_for(spec: EnsembleSpec) -> DEKernel:
    return DEKernel(connectivity(spec), degree_profile(spec), spec.dr)


def evolve(spec: EnsembleSpec, eps: float, max_iter: int = MAX_ITER,
           decode_tol: float = THRESHOLD_DECODE_TOL, stall_tol: float = STALL_TOL,
           keep_trajectory: bool = False) -> DEOutcome:
    return run_de(kernel_for(spec), eps, max_iter, decode_tol, stall_tol, keep_trajectory)


def bisect_threshold(converges: Callable[[float], bool], eps_tol: float = EPS_TOL,
                     lo: float = 0.0, hi: float = 1.0) -> tuple[float, float]:
    """Bisection on a monotone success predicate; returns (midpoint, width)."""
    if eps_tol <= 0:
        raise InvalidParametersError("eps_tol must be positive")
    while hi - lo > eps_tol:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), hi - lo


def kernel_threshold(kernel: DEKernel, eps_tol: float = EPS_TOL,
                     decode_tol: float = THRESHOLD_DECODE_TOL, stall_tol: float = STALL_TOL,
                     max_iter: int = MAX_ITER) -> ThresholdResult:
    th, width = bisect_threshold(
        lambda e: run_de(kernel, e, max_iter, decode_tol, stall_tol).converged, eps_tol)
    settings = {"eps_tol": eps_tol, "decode_tol": decode_tol,
                "stall_tol": stall_tol, "max_iter": max_iter}
    return ThresholdResult(th, width, settings)


def bp_threshold(spec: EnsembleSpec, eps_tol: float = EPS_TOL,
                 decode_tol: float = THRESHOLD_DECODE_TOL, stall_tol: float = STALL_TOL,
                 max_iter: int = MAX_ITER) -> ThresholdResult:
    res = kernel_threshold(kernel_for(spec), eps_tol, decode_tol, stall_tol, max_iter)
    log.debug("bp threshold %s = %.6f", spec.label(), res.threshold)
    return res


def required_iterations(spec: EnsembleSpec, eps_r: float,
                        decode_tol: float = ITERATIONS_DECODE_TOL,
                        max_iter: int = MAX_ITER, stall_tol: float = STALL_TOL) -> Optional[int]:
    """First iteration with every position below ``decode_tol``; None if DE fails."""
    if not (0.0 <= eps_r < 1.0):
        raise InvalidParametersError("eps_r must lie in [0, 1)")
    out = evolve(spec, eps_r, max_iter, decode_tol, stall_tol)
    return out.iterations if out.converged else None


# --------------------------------------------------------------------------
# scalar recursion of the uncoupled ensemble


def regular_de(dl: int, dr: int, eps: float, max_iter: int = MAX_ITER,
               decode_tol: float = THRESHOLD_DECODE_TOL, stall_tol: float = STALL_TOL) -> bool:
    x = 1.0
    for _ in range(max_iter):
        xn = eps * (1.0 - (1.0 - x) ** (dr - 1)) ** (dl - 1)
        if xn <= decode_tol:
            return True
        if abs(xn - x) < stall_tol:
            return False
        x = xn
    return False


def regular_bp_threshold(dl: int, dr: int, eps_tol: float = EPS_TOL) -> float:
    if not (dr >= dl >= 2):
        raise InvalidParametersError("need dr >= dl >= 2")
    th, _ = bisect_threshold(lambda e: regular_de(dl, dr, e), eps_tol)
    return th


# --------------------------------------------------------------------------
# splitting


def _split_specs(dl, dr, L, w, law=None) -> tuple[EnsembleSpec, EnsembleSpec]:
    oc = EnsembleSpec("oc", dl, dr, L, w, law)
    sc = EnsembleSpec("sc", dl, dr, oc.Ls, w, law)
    return sc, oc


def split_thresholds(dl: int, dr: int, L: int, w: int, delta_s: float = 1e-4,
                     law=None) -> tuple[float, float]:
    """(threshold of the short SC chain, threshold of the OC ensemble)."""
    sc, oc = _split_specs(dl, dr, L, w, law)
    tol = delta_s / 10
    return bp_threshold(sc, tol).threshold, bp_threshold(oc, tol).threshold


def splitting_occurs(dl: int, dr: int, L: int, w: int, delta_s: float = 1e-4,
                     law=None) -> bool:
    sc_th, oc_th = split_thresholds(dl, dr, L, w, delta_s, law)
    return sc_th - oc_th < delta_s


def splitting_necessary_condition(dl: int, dr: int, Ls: int, w: int,
                                  delta_s: float = 1e-4) -> bool:
    """Whether the short chain threshold is below the doubled-degree regular threshold."""
    tol = delta_s / 10
    sc_th = bp_threshold(EnsembleSpec("sc", dl, dr, Ls, w), tol).threshold
    return sc_th < regular_bp_threshold(2 * dl, dr, tol) + delta_s


# --------------------------------------------------------------------------
# bounds relating an oc ensemble to its split chain


@dataclass(frozen=True)
class BoundPoint:
    eps: float
    iterations_oc: Optional[int]
    iterations_sc: Optional[int]
    ok: bool


@dataclass(frozen=True)
class BoundsReport:
    threshold_oc: float
    threshold_sc: float
    threshold_ok: bool
    points: tuple

    @property
    def ok(self) -> bool:
        return self.threshold_ok and all(p.ok for p in self.points)


def oc_bounds_check(dl: int, dr: int, Ls: int, w: int, eps_grid: Sequence[float],
                    eps_tol: float = EPS_TOL,
                    decode_tol: float = ITERATIONS_DECODE_TOL) -> BoundsReport:
    """Check threshold(OC) <= threshold(SC, Ls) and I_OC >= I_SC over a grid."""
    L = 2 * Ls + w - 1
    sc = EnsembleSpec("sc", dl, dr, Ls, w)
    oc = EnsembleSpec("oc", dl, dr, L, w)
    th_sc = bp_threshold(sc, eps_tol).threshold
    th_oc = bp_threshold(oc, eps_tol).threshold
    # both bisections carry eps_tol/2 error
    th_ok = th_oc <= th_sc + eps_tol
    pts = []
    for e in eps_grid:
        i_oc = required_iterations(oc, e, decode_tol) if e < 1 else None
        i_sc = required_iterations(sc, e, decode_tol) if e < 1 else None
        if i_oc is not None and i_sc is not None:
            ok = i_oc >= i_sc
        else:
            # an oc success with sc failure would violate the bound
            ok = not (i_oc is not None and i_sc is None)
        pts.append(BoundPoint(float(e), i_oc, i_sc, ok))
    return BoundsReport(th_oc, th_sc, th_ok, tuple(pts))


# --------------------------------------------------------------------------
# reduced recursions on the half chain T_C(Ls, w)


def reduced_oc_kernel(dl: int, dr: int, Ls: int, w: int) -> DEKernel:
    """Half-chain recursion equivalent to the full oc ensemble."""
    T = connectivity_circular(Ls, w)
    degs = [dl] * Ls + [2 * dl] * (w - 1)
    return DEKernel(T, DegreeProfile.regular(degs), dr)


def reduced_sc_kernel(dl: int, dr: int, Ls: int, w: int) -> DEKernel:
    """Half-chain recursion with the last w-1 positions known (infinite degree)."""
    T = connectivity_circular(Ls, w)
    degs = [dl] * (Ls + w - 1)
    return DEKernel(T, DegreeProfile.regular(degs), dr, known=range(Ls, Ls + w - 1))


def sc_profile_violations(x: np.ndarray, Ls: int, tol: float = 1e-12) -> list[str]:
    """Symmetry about the chain centre and monotone increase towards it."""
    out = []
    for i in range(1, (Ls + 1) // 2 + 1):
        j = Ls + 1 - i
        if abs(x[i - 1] - x[j - 1]) > tol:
            out.append(f"symmetry x{i} != x{j}")
    for i in range(1, Ls // 2 + 1):
        if x[i - 1] > x[i] + tol:
            out.append(f"monotone x{i} > x{i + 1}")
    return out


def oc_profile_violations(x: np.ndarray, Ls: int, w: int, tol: float = 1e-12) -> list[str]:
    """Structural properties of the half-chain oc profile (length Ls + w - 1)."""
    out = sc_profile_violations(x[:Ls], Ls, tol)
    for i in range(1, w // 2 + 1):
        a, b = Ls + i, Ls + w - i
        if abs(x[a - 1] - x[b - 1]) > tol:
            out.append(f"overlap symmetry x{a} != x{b}")
    for i in range(1, (w - 1) // 2 + 1):
        a = Ls + i
        if x[a - 1] + tol < x[a]:
            out.append(f"overlap monotone x{a} < x{a + 1}")
    if Ls >= 2 and x[Ls - 2] + tol < x[Ls - 1]:
        out.append(f"x{Ls - 1} < x{Ls}")
    return out


@dataclass(frozen=True)
class LemmaReport:
    dl: int
    dr: int
    Ls: int
    w: int
    eps: float
    iterations_sc: int
    iterations_oc: int
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def lemma_suite(dl: int, dr: int, Ls: int, w: int, eps: float, tol: float = 1e-12,
                max_iter: int = MAX_ITER) -> LemmaReport:
    """Run the profile and equivalence checks at every iteration.

    Checked per iteration: the sc profile of SC(Ls); the oc profile of the
    reduced recursion; agreement of the reduced recursion with DE on the full
    oc matrix (and the copy symmetry inside it); agreement of the clamped
    recursion with SC(Ls).
    """
    viol: list[str] = []
    L = 2 * Ls + w - 1
    n = Ls + w - 1
    sc_k = kernel_for(EnsembleSpec("sc", dl, dr, Ls, w))
    oc_full = kernel_for(EnsembleSpec("oc", dl, dr, L, w))
    red_oc = reduced_oc_kernel(dl, dr, Ls, w)
    red_sc = reduced_sc_kernel(dl, dr, Ls, w)

    def note(it, msgs, tag):
        viol.extend(f"{tag} l={it}: {m}" for m in msgs)

    # sc chain and its clamped half-chain twin
    x_sc, x_rsc = sc_k.initial(), red_sc.initial()
    it_sc = 0
    for it in range(1, max_iter + 1):
        x_sc_n, x_rsc_n = sc_k.step(x_sc, eps), red_sc.step(x_rsc, eps)
        note(it, sc_profile_violations(x_sc_n, Ls, tol), "sc")
        if np.abs(x_sc_n - x_rsc_n[:Ls]).max() > tol:
            note(it, ["clamped half chain differs from sc"], "sc")
        it_sc = it
        done = x_sc_n.max() <= THRESHOLD_DECODE_TOL or np.abs(x_sc_n - x_sc).max() < STALL_TOL
        x_sc, x_rsc = x_sc_n, x_rsc_n
        if done:
            break

    x_f, x_r = oc_full.initial(), red_oc.initial()
    it_oc = 0
    for it in range(1, max_iter + 1):
        x_fn, x_rn = oc_full.step(x_f, eps), red_oc.step(x_r, eps)
        note(it, oc_profile_violations(x_rn, Ls, w, tol), "oc")
        if np.abs(x_fn[:n] - x_rn).max() > tol:
            note(it, ["reduced recursion differs from full oc"], "oc")
        if np.abs(x_fn[:Ls] - x_fn[n:]).max() > tol:
            note(it, ["copy symmetry broken"], "oc")
        it_oc = it
        done = x_fn.max() <= THRESHOLD_DECODE_TOL or np.abs(x_fn - x_f).max() < STALL_TOL
        x_f, x_r = x_fn, x_rn
        if done:
            break
    return LemmaReport(dl, dr, Ls, w, float(eps), it_sc, it_oc, tuple(viol))
