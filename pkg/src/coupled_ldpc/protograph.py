"""Protograph base matrices for coupled ensembles, protograph DE and lifting.

Column indices are 0-based in memory; the text format written by
:func:`write_base` uses 1-based punctured indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .density_evolution import (
    EPS_TOL,
    MAX_ITER,
    STALL_TOL,
    THRESHOLD_DECODE_TOL,
    DEOutcome,
    ThresholdResult,
    bisect_threshold,
)
from .errors import InvalidParametersError, InvalidPrecodeError, LiftingInfeasibleError


def _frozen_int(a) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BaseMatrix:
    entries: np.ndarray
    punctured: frozenset = frozenset()
    block: Optional[tuple] = None  # component shape (b, c) when built from a spreading

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.size == 0:
            raise InvalidParametersError("base matrix must be a non-empty 2-D array")
        if (e < 0).any() or not np.issubdtype(e.dtype, np.integer) and not np.all(e == np.round(e)):
            raise InvalidParametersError("base matrix entries must be non-negative integers")
        e = _frozen_int(e)
        if (e.sum(axis=1) == 0).any():
            raise InvalidParametersError("base matrix has an all-zero row")
        if (e.sum(axis=0) == 0).any():
            raise InvalidParametersError("base matrix has an all-zero column")
        punct = frozenset(int(j) for j in self.punctured)
        if any(not 0 <= j < e.shape[1] for j in punct):
            raise InvalidParametersError("punctured column index out of range")
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "punctured", punct)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def design_rate(self) -> float:
        m, n = self.shape
        return (n - m) / (n - len(self.punctured))

    def __eq__(self, other):
        if not isinstance(other, BaseMatrix):
            return NotImplemented
        return (self.shape == other.shape and bool((self.entries == other.entries).all())
                and self.punctured == other.punctured)

    def __hash__(self):
        return hash((self.shape, self.entries.tobytes(), self.punctured))


@dataclass(frozen=True)
class EdgeSpreading:
    """Components B_1..B_w whose sum is the uncoupled b x c base matrix."""

    components: tuple

    def __post_init__(self):
        comps = tuple(_frozen_int(np.atleast_2d(c)) for c in self.components)
        if len(comps) < 2:
            raise InvalidParametersError("edge spreading needs at least two components")
        shapes = {c.shape for c in comps}
        if len(shapes) != 1:
            raise InvalidParametersError("all spreading components must share one shape")
        if any((c < 0).any() for c in comps):
            raise InvalidParametersError("spreading entries must be non-negative")
        object.__setattr__(self, "components", comps)

    @classmethod
    def repeated(cls, component, w: int) -> "EdgeSpreading":
        return cls((np.atleast_2d(component),) * w)

    @property
    def w(self) -> int:
        return len(self.components)

    @property
    def b(self) -> int:
        return self.components[0].shape[0]

    @property
    def c(self) -> int:
        return self.components[0].shape[1]

    def total(self) -> np.ndarray:
        return sum(self.components)


@dataclass(frozen=True)
class PrecodeBlock:
    P: np.ndarray

    def __post_init__(self):
        P = _frozen_int(np.atleast_2d(self.P))
        if (P < 0).any():
            raise InvalidPrecodeError("precode entries must be non-negative")
        object.__setattr__(self, "P", P)

    @property
    def p(self) -> int:
        return self.P.shape[0]

    def nonzero_columns(self) -> list[int]:
        return [j for j in range(self.P.shape[1]) if self.P[:, j].any()]


#: the [1 1] spreading repeated over w = 3 components
DEFAULT_SPREADING = EdgeSpreading.repeated([[1, 1]], 3)
EXAMPLE_PRECODE = PrecodeBlock(np.array([[0, 1, 1, 0], [0, 1, 1, 0]]))


def _sc_entries(s: EdgeSpreading, L: int) -> np.ndarray:
    b, c, w = s.b, s.c, s.w
    B = np.zeros((b * (L + w - 1), c * L), dtype=np.int64)
    for v in range(L):
        for k, comp in enumerate(s.components):
            B[b * (v + k):b * (v + k + 1), c * v:c * (v + 1)] += comp
    return B


def _circular_entries(s: EdgeSpreading, L: int) -> np.ndarray:
    b, w = s.b, s.w
    full = _sc_entries(s, L + w - 1)
    B = full[:b * (L + w - 1)].copy()
    B[:b * (w - 1)] += full[b * (L + w - 1):]
    return B


def base_sc(spreading: EdgeSpreading, L: int) -> BaseMatrix:
    if L < spreading.w:
        raise InvalidParametersError(f"need L >= w (got L={L}, w={spreading.w})")
    return BaseMatrix(_sc_entries(spreading, L), block=(spreading.b, spreading.c))


def base_circular(spreading: EdgeSpreading, L: int) -> BaseMatrix:
    if L < spreading.w:
        raise InvalidParametersError(f"need L >= w (got L={L}, w={spreading.w})")
    return BaseMatrix(_circular_entries(spreading, L), block=(spreading.b, spreading.c))


def _oc_Ls(spreading: EdgeSpreading, L: int) -> int:
    w = spreading.w
    k = L - w + 1
    if k < 2 or k % 2:
        raise InvalidParametersError(f"oc needs L - w + 1 even and >= 2 (got L={L}, w={w})")
    Ls = k // 2
    if Ls < w:
        # the circular halves are only defined for Ls >= w
        raise InvalidParametersError(f"oc base matrices need Ls >= w (got Ls={Ls})")
    return Ls


def _oc_entries(s: EdgeSpreading, L: int) -> np.ndarray:
    b, c, w = s.b, s.c, s.w
    Ls = _oc_Ls(s, L)
    C = _circular_entries(s, Ls)
    n = b * (Ls + w - 1)
    B = np.zeros((2 * n, c * L), dtype=np.int64)
    B[:n, :C.shape[1]] = C
    B[n:, c * Ls:c * (Ls + w - 1)] = C[:, c * Ls:]
    B[n:, c * (Ls + w - 1):] = C[:, :c * Ls]
    return B


def base_oc(spreading: EdgeSpreading, L: int) -> BaseMatrix:
    return BaseMatrix(_oc_entries(spreading, L), block=(spreading.b, spreading.c))


def overlapped_columns(spreading: EdgeSpreading, L: int) -> list[int]:
    """0-based columns of the overlapped variable positions of an oc base."""
    Ls = _oc_Ls(spreading, L)
    c = spreading.c
    return list(range(c * Ls, c * (Ls + spreading.w - 1)))


def base_ocp(spreading: EdgeSpreading, L: int, precode: PrecodeBlock,
             check: bool = True) -> BaseMatrix:
    """OC base with p precoding rows ``[0 P 0 | I]`` appended.

    The nonzero columns of P are punctured. Raises InvalidPrecodeError when the
    punctured set contains a stopping set (unless ``check`` is False).
    """
    B = _oc_entries(spreading, L)
    cols = overlapped_columns(spreading, L)
    p = precode.p
    if p == 0 or precode.P.size == 0:
        return BaseMatrix(B, block=(spreading.b, spreading.c))
    if precode.P.shape[1] != len(cols):
        raise InvalidPrecodeError(
            f"precode needs {len(cols)} columns (c*(w-1)), got {precode.P.shape[1]}")
    nz = precode.nonzero_columns()
    if len(nz) != p:
        raise InvalidPrecodeError(
            f"precode with p={p} rows must have exactly p nonzero columns (has {len(nz)})")
    m, n = B.shape
    out = np.zeros((m + p, n + p), dtype=np.int64)
    out[:m, :n] = B
    out[m:, cols[0]:cols[-1] + 1] = precode.P
    out[m:, n:] = np.eye(p, dtype=np.int64)
    base = BaseMatrix(out, frozenset(cols[j] for j in nz), block=(spreading.b, spreading.c))
    if check and punctured_stopping_set_exists(base):
        raise InvalidPrecodeError("punctured columns contain a stopping set; decoding would always fail")
    return base


def punctured_stopping_set_exists(base: BaseMatrix) -> bool:
    """Whether some nonempty set of punctured columns has every touching row
    connected to it at least twice (counting multi-edges).

    Prunes columns that hang off a row meeting the surviving set exactly once;
    what survives is the largest such set.
    """
    alive = sorted(base.punctured)
    B = base.entries
    while alive:
        sub = B[:, alive]
        load = sub.sum(axis=1)
        single = load == 1
        keep = [j for k, j in enumerate(alive) if not (single & (sub[:, k] > 0)).any()]
        if len(keep) == len(alive):
            return True
        alive = keep
    return False


# --------------------------------------------------------------------------
# protograph density evolution


class ProtoDEKernel:
    """Edge-type DE on a base matrix. Multi-edges count with multiplicity."""

    def __init__(self, base: BaseMatrix):
        B = base.entries
        self.M, self.N = B.shape
        self.rows, self.cols = np.nonzero(B)
        self.mult = B[self.rows, self.cols].astype(float)
        self.punct = np.zeros(self.N, dtype=bool)
        self.punct[list(base.punctured)] = True

    def _excl_product(self, q: np.ndarray, group: np.ndarray, size: int) -> np.ndarray:
        """For each edge type, product of q over all edges in its group except one copy of itself."""
        zero = q <= 0.0
        nzero = np.bincount(group, weights=self.mult * zero, minlength=size)
        logq = np.log(np.where(zero, 1.0, q))
        total = np.bincount(group, weights=self.mult * logq, minlength=size)
        others_zero = nzero[group] - zero
        prod = np.exp(total[group] - logq)
        return np.where(others_zero > 0, 0.0, prod)

    def channel(self, eps: float) -> np.ndarray:
        return np.where(self.punct, 1.0, eps)

    def step(self, v: np.ndarray, ch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = 1.0 - self._excl_product(1.0 - v, self.rows, self.M)
        v_new = ch[self.cols] * self._excl_product(u, self.cols, self.N)
        zero = u <= 0.0
        nzero = np.bincount(self.cols, weights=self.mult * zero, minlength=self.N)
        logu = np.bincount(self.cols, weights=self.mult * np.log(np.where(zero, 1.0, u)),
                           minlength=self.N)
        post = np.where(nzero > 0, 0.0, ch * np.exp(logu))
        return v_new, post


def protograph_de(base: BaseMatrix, eps: float, max_iter: int = MAX_ITER,
                  decode_tol: float = THRESHOLD_DECODE_TOL,
                  stall_tol: float = STALL_TOL, kernel: Optional[ProtoDEKernel] = None) -> DEOutcome:
    if not (0.0 <= eps <= 1.0):
        raise InvalidParametersError(f"erasure probability {eps} outside [0, 1]")
    k = kernel or ProtoDEKernel(base)
    ch = k.channel(eps)
    v = ch[k.cols].copy()
    prev = None
    for it in range(1, max_iter + 1):
        v, post = k.step(v, ch)
        m = float(post.max())
        if m <= decode_tol:
            return DEOutcome(True, it, m, None, post)
        if prev is not None and float(np.abs(post - prev).max()) < stall_tol:
            return DEOutcome(False, it, m, None, post)
        prev = post
    return DEOutcome(False, max_iter, float(prev.max()), None, prev)


def protograph_bp_threshold(base: BaseMatrix, eps_tol: float = EPS_TOL,
                            decode_tol: float = THRESHOLD_DECODE_TOL,
                            stall_tol: float = STALL_TOL, max_iter: int = MAX_ITER) -> ThresholdResult:
    k = ProtoDEKernel(base)
    th, width = bisect_threshold(
        lambda e: protograph_de(base, e, max_iter, decode_tol, stall_tol, k).converged, eps_tol)
    return ThresholdResult(th, width, {"eps_tol": eps_tol, "decode_tol": decode_tol,
                                       "stall_tol": stall_tol, "max_iter": max_iter})


# --------------------------------------------------------------------------
# lifting


@dataclass(frozen=True)
class ParityCheck:
    H: sp.csr_matrix = field(repr=False)
    punctured: np.ndarray = field(repr=False)
    z: int = 1
    seed: Optional[int] = None

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def n_transmitted(self) -> int:
        return self.n - len(self.punctured)


LIFT_RETRIES = 1000


def lift(base: BaseMatrix, z: int, seed: int = 0, retries: int = LIFT_RETRIES) -> ParityCheck:
    """Replace each entry B[i, j] by a sum of B[i, j] edge-disjoint random z x z permutations."""
    if z < 1:
        raise LiftingInfeasibleError("lifting factor must be >= 1")
    top = int(base.entries.max())
    if z < top:
        raise LiftingInfeasibleError(f"z={z} is smaller than the largest base entry {top}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    rows, cols = [], []
    ar = np.arange(z)
    for i, j in zip(*np.nonzero(base.entries)):
        used = []
        for _ in range(int(base.entries[i, j])):
            for _attempt in range(retries):
                perm = rng.permutation(z)
                if all((perm != q).all() for q in used):
                    break
            else:
                raise LiftingInfeasibleError(
                    f"no edge-disjoint permutation found for entry ({i},{j}) within {retries} draws")
            used.append(perm)
            rows.append(i * z + ar)
            cols.append(j * z + perm)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    H = sp.csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)),
                      shape=(base.shape[0] * z, base.shape[1] * z))
    punct = np.array(sorted(j * z + t for j in base.punctured for t in range(z)), dtype=np.int64)
    return ParityCheck(H, punct, z, int(seed))


def parity_check_from_dense(H, punctured: Iterable[int] = ()) -> ParityCheck:
    return ParityCheck(sp.csr_matrix(np.asarray(H, dtype=np.int8)),
                       np.array(sorted(punctured), dtype=np.int64))


# --------------------------------------------------------------------------
# text formats


def format_base(base: BaseMatrix) -> str:
    m, n = base.shape
    lines = [f"{m} {n}"]
    lines += [" ".join(str(int(x)) for x in row) for row in base.entries]
    lines.append("punctured: " + " ".join(str(j + 1) for j in sorted(base.punctured)))
    return "\n".join(lines) + "\n"


def parse_base(text: str) -> BaseMatrix:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise InvalidParametersError("empty base matrix file")
    try:
        m, n = map(int, lines[0].split())
        rows = [list(map(int, ln.split())) for ln in lines[1:1 + m]]
    except ValueError as exc:
        raise InvalidParametersError(f"malformed base matrix file: {exc}") from None
    if len(rows) != m or any(len(r) != n for r in rows):
        raise InvalidParametersError(f"expected {m} rows of {n} integers")
    punct: list[int] = []
    for ln in lines[1 + m:]:
        if ln.lower().startswith("punctured:"):
            punct = [int(t) - 1 for t in ln.split(":", 1)[1].split()]
    return BaseMatrix(np.array(rows, dtype=np.int64), frozenset(punct))


def write_base(base: BaseMatrix, path) -> None:
    with open(path, "w") as f:
        f.write(format_base(base))


def read_base(path) -> BaseMatrix:
    with open(path) as f:
        return parse_base(f.read())


def format_alist(H) -> str:
    """Alist text for a binary sparse matrix (rows are checks)."""
    H = sp.csc_matrix(H)
    m, n = H.shape
    Hr = sp.csr_matrix(H)
    col_deg = np.diff(H.indptr)
    row_deg = np.diff(Hr.indptr)
    mc, mr = int(col_deg.max(initial=0)), int(row_deg.max(initial=0))
    out = [f"{n} {m}", f"{mc} {mr}",
           " ".join(map(str, col_deg)), " ".join(map(str, row_deg))]
    for j in range(n):
        nb = sorted(H.indices[H.indptr[j]:H.indptr[j + 1]] + 1)
        out.append(" ".join(map(str, list(nb) + [0] * (mc - len(nb)))))
    for i in range(m):
        nb = sorted(Hr.indices[Hr.indptr[i]:Hr.indptr[i + 1]] + 1)
        out.append(" ".join(map(str, list(nb) + [0] * (mr - len(nb)))))
    return "\n".join(out) + "\n"


def parse_alist(text: str) -> sp.csr_matrix:
    tok = iter(int(t) for t in text.split())
    n, m = next(tok), next(tok)
    mc, mr = next(tok), next(tok)
    col_deg = [next(tok) for _ in range(n)]
    row_deg = [next(tok) for _ in range(m)]
    r, c = [], []
    for j in range(n):
        nb = [next(tok) for _ in range(mc)]
        nb = [x for x in nb if x > 0]
        if len(nb) != col_deg[j]:
            raise InvalidParametersError(f"alist column {j + 1}: degree mismatch")
        r += [x - 1 for x in nb]
        c += [j] * len(nb)
    for i in range(m):
        nb = [x for x in (next(tok) for _ in range(mr)) if x > 0]
        if len(nb) != row_deg[i]:
            raise InvalidParametersError(f"alist row {i + 1}: degree mismatch")
    return sp.csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(m, n))


def write_alist(H, path) -> None:
    with open(path, "w") as f:
        f.write(format_alist(H))


def read_alist(path) -> sp.csr_matrix:
    with open(path) as f:
        return parse_alist(f.read())
