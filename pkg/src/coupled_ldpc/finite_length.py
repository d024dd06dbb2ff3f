"""Finite-length experiments: Tanner-graph sampling, peeling and BP erasure
decoding, block error rates and Monte Carlo graph evolution.

Decoding over the BEC depends only on the erasure pattern, so no codewords are
ever encoded; the all-zero word is implied.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .ensembles import EnsembleSpec, connectivity, degree_profile, overlapped_positions
from .errors import InvalidParametersError, SamplingError
from .protograph import ParityCheck

PARALLEL_EDGE_RETRIES = 100
PLATEAU_LO, PLATEAU_HI, PLATEAU_MIN_ALIVE, PLATEAU_REL_TOL = 0.4, 0.8, 0.25, 0.25
SAMPLING_MODELS = ("auto", "footnote", "kudekar")


@dataclass(frozen=True)
class TannerGraph:
    """Checks x variables incidence matrix plus position labels."""

    H: sp.csr_matrix = field(repr=False)
    var_pos: np.ndarray = field(repr=False)
    chk_pos: np.ndarray = field(repr=False)
    punctured: np.ndarray = field(repr=False)  # bool per variable
    overlapped: np.ndarray = field(repr=False)  # bool per variable, R_OC membership
    M: int = 1
    label: str = ""

    @property
    def n_vars(self) -> int:
        return self.H.shape[1]

    @property
    def n_checks(self) -> int:
        return self.H.shape[0]

    def var_degrees(self) -> np.ndarray:
        return np.diff(self.H.tocsc().indptr)

    def check_degrees(self) -> np.ndarray:
        return np.diff(self.H.indptr)

    def edges(self) -> np.ndarray:
        """Sorted (check, variable) pairs."""
        coo = self.H.tocoo()
        e = np.stack([coo.row, coo.col], axis=1).astype(np.int64)
        return e[np.lexsort((e[:, 1], e[:, 0]))]


def _node_counts(law: Sequence[tuple[int, float]], M: int) -> list[tuple[int, int]]:
    """Split M nodes over degrees by largest remainder."""
    raw = [(d, p * M) for d, p in law]
    counts = [(d, int(math.floor(x))) for d, x in raw]
    short = M - sum(c for _, c in counts)
    order = sorted(range(len(raw)), key=lambda k: -(raw[k][1] - counts[k][1]))
    for k in order[:short]:
        counts[k] = (counts[k][0], counts[k][1] + 1)
    return counts


def _checks_per_position(spec: EnsembleSpec, M: int) -> int:
    n = M * spec.mean_degree / spec.dr
    if abs(n - round(n)) > 1e-9 or round(n) < 1:
        raise InvalidParametersError(
            f"M * mean degree / d_r must be a positive integer (M={M}, got {n})")
    return int(round(n))


def resolve_model(spec: EnsembleSpec, model: str = "auto") -> str:
    if model not in SAMPLING_MODELS:
        raise InvalidParametersError(f"unknown sampling model {model!r}")
    T = connectivity(spec)
    D = degree_profile(spec)
    exact = D.is_regular and all(
        d == c for d, c in zip(D.mean_degrees(), T.col_sums()))
    if model == "auto":
        return "footnote" if exact else "kudekar"
    if model == "footnote" and not exact:
        raise InvalidParametersError(
            "footnote-style sampling needs node degree equal to the column sum at every position")
    return model


def sample_tanner_graph(spec: EnsembleSpec, M: int, seed: int = 0,
                        model: str = "auto") -> TannerGraph:
    """Draw one Tanner graph with M variable nodes per position."""
    if M < 1:
        raise InvalidParametersError("M must be >= 1")
    model = resolve_model(spec, model)
    T = connectivity(spec).entries
    P, Q = T.shape
    nc = _checks_per_position(spec, M)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    rows, cols = [], []
    if model == "footnote":
        for u in range(P):
            vpos = np.flatnonzero(T[u])
            if vpos.size == 0:
                continue
            sockets = (vpos[:, None] * M + np.arange(M)[None, :]).ravel()
            sockets = sockets[rng.permutation(sockets.size)]
            rows.append(u * nc + np.arange(sockets.size) % nc)
            cols.append(sockets)
    else:
        D = degree_profile(spec)
        for v in range(Q):
            support = np.flatnonzero(T[:, v])
            degs = np.concatenate([np.full(c, d, dtype=np.int64)
                                   for d, c in _node_counts(D.positions[v], M)])
            degs = degs[rng.permutation(M)]
            for t in range(M):
                var = v * M + t
                used = set()
                for _ in range(int(degs[t])):
                    for _attempt in range(PARALLEL_EDGE_RETRIES):
                        u = int(support[rng.integers(support.size)])
                        chk = u * nc + int(rng.integers(nc))
                        if chk not in used:
                            break
                    else:
                        raise SamplingError(
                            f"parallel edge at variable {var} persisted after "
                            f"{PARALLEL_EDGE_RETRIES} resamples")
                    used.add(chk)
                rows.append(np.fromiter(used, dtype=np.int64))
                cols.append(np.full(len(used), var, dtype=np.int64))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    H = sp.csr_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(P * nc, Q * M))
    H.sort_indices()
    if H.data.max(initial=1) > 1:
        raise SamplingError("sampled graph contains parallel edges")
    var_pos = np.repeat(np.arange(Q), M)
    over = np.zeros(Q, dtype=bool)
    over[[q - 1 for q in overlapped_positions(spec)]] = True
    return TannerGraph(H, var_pos, np.repeat(np.arange(P), nc),
                       np.zeros(Q * M, dtype=bool), over[var_pos], M, spec.label())


def disjoint_union(graphs: Sequence[TannerGraph]) -> TannerGraph:
    """Block-diagonal union, used for the two-independent-chains comparison."""
    H = sp.block_diag([g.H for g in graphs], format="csr", dtype=np.int8)
    off = np.cumsum([0] + [int(g.var_pos.max()) + 1 for g in graphs])
    coff = np.cumsum([0] + [int(g.chk_pos.max()) + 1 for g in graphs])
    return TannerGraph(
        H,
        np.concatenate([g.var_pos + o for g, o in zip(graphs, off)]),
        np.concatenate([g.chk_pos + o for g, o in zip(graphs, coff)]),
        np.concatenate([g.punctured for g in graphs]),
        np.concatenate([g.overlapped for g in graphs]),
        graphs[0].M,
        " + ".join(g.label for g in graphs),
    )


def tanner_from_parity_check(code: ParityCheck) -> TannerGraph:
    n = code.n
    punct = np.zeros(n, dtype=bool)
    punct[code.punctured] = True
    return TannerGraph(code.H, np.arange(n) // code.z, np.arange(code.m) // code.z,
                       punct, np.zeros(n, dtype=bool), code.z, "lifted")


Code = Union[ParityCheck, TannerGraph]


def _arrays(code: Code) -> tuple[sp.csr_matrix, np.ndarray]:
    if isinstance(code, TannerGraph):
        return code.H, code.punctured.copy()
    punct = np.zeros(code.n, dtype=bool)
    punct[code.punctured] = True
    return code.H, punct


def sample_erasures(n: int, eps: float, rng: np.random.Generator,
                    punctured: Optional[np.ndarray] = None) -> np.ndarray:
    """Boolean erasure mask; punctured positions are always erased."""
    if not 0.0 <= eps <= 1.0:
        raise InvalidParametersError(f"erasure probability {eps} outside [0, 1]")
    e = rng.random(n) < eps
    if punctured is not None:
        e |= punctured
    return e


# --------------------------------------------------------------------------
# peeling


@dataclass(frozen=True)
class PeelingTrace:
    """One peeling run. Arrays are indexed by step; index 0 is the initial residual graph."""

    r1: np.ndarray
    residual: np.ndarray
    vstar: np.ndarray
    decoded: bool
    M: int

    @property
    def steps(self) -> int:
        return len(self.r1) - 1

    @property
    def tau(self) -> np.ndarray:
        return np.arange(len(self.r1)) / self.M


def peel(graph: Code, erasures: np.ndarray, rng: Optional[np.random.Generator] = None,
         M: Optional[int] = None, n_overlapped: Optional[int] = None) -> PeelingTrace:
    """Peeling decoder that resolves a uniformly chosen degree-one check each step.

    r1 counts degree-one checks of the residual graph divided by M; v* is the
    number of still-erased overlapped variables divided by ``n_overlapped``.
    """
    H, _ = _arrays(graph)
    if H.nnz and H.data.max() > 1:
        raise InvalidParametersError("peeling needs a graph without parallel edges")
    if isinstance(graph, TannerGraph):
        M = M or graph.M
        over = graph.overlapped
    else:
        M = M or graph.z
        over = np.zeros(H.shape[1], dtype=bool)
    rng = rng or np.random.default_rng(0)
    erasures = np.asarray(erasures, dtype=bool)
    Hc = H.tocsc()
    indptr, indices = Hc.indptr, Hc.indices
    er_idx = np.flatnonzero(erasures)
    Hs = H[:, er_idx]
    deg = np.asarray(Hs.sum(axis=1)).ravel().astype(np.int64)
    Hx = sp.csr_matrix(Hs)
    # XOR of the erased neighbours of each check; for a degree-one check this is the neighbour
    xr = np.zeros(H.shape[0], dtype=np.int64)
    rows_of = np.repeat(np.arange(Hx.shape[0]), np.diff(Hx.indptr))
    np.bitwise_xor.at(xr, rows_of, er_idx[Hx.indices])
    deg = deg.tolist()
    xr = xr.tolist()
    ones = [c for c, d in enumerate(deg) if d == 1]
    where = [-1] * len(deg)
    for k, c in enumerate(ones):
        where[c] = k
    n_over = n_overlapped if n_overlapped is not None else max(int(over.sum()), 1)
    over_left = int((erasures & over).sum())
    over_l = over.tolist()
    left = len(er_idx)
    unif = rng.random(left).tolist()
    r1 = [len(ones) / M]
    resid = [left]
    vstar = [over_left / n_over]
    ip, ix = indptr.tolist(), indices.tolist()
    step = 0
    while ones and left:
        c = ones[int(unif[step] * len(ones))]
        v = xr[c]
        for c2 in ix[ip[v]:ip[v + 1]]:
            d = deg[c2] - 1
            deg[c2] = d
            xr[c2] ^= v
            if d == 1:
                where[c2] = len(ones)
                ones.append(c2)
            elif d == 0:
                k = where[c2]
                last = ones.pop()
                if last != c2:
                    ones[k] = last
                    where[last] = k
                where[c2] = -1
        left -= 1
        if over_l[v]:
            over_left -= 1
        step += 1
        r1.append(len(ones) / M)
        resid.append(left)
        vstar.append(over_left / n_over)
    return PeelingTrace(np.array(r1), np.array(resid), np.array(vstar), left == 0, M)


# --------------------------------------------------------------------------
# iterative BP erasure decoding


def bp_erasure_decode_batch(code: Code, erasures: np.ndarray,
                            I_max: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Flooding BP on the columns of an (n, K) erasure matrix.

    One iteration sends check messages then variable messages: an erased
    variable is recovered when some neighbouring check sees it as its only
    unknown neighbour. Runs until nothing changes or I_max iterations.
    Returns per-column success flags and iteration counts.
    """
    H, _ = _arrays(code)
    U = np.array(erasures, dtype=bool)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[0] != H.shape[1]:
        raise InvalidParametersError(f"erasure length {U.shape[0]} != code length {H.shape[1]}")
    if I_max is not None and I_max < 1:
        raise InvalidParametersError("I_max must be >= 1")
    Hi = H.astype(np.int32)
    HT = Hi.T.tocsr()
    K = U.shape[1]
    iters = np.zeros(K, dtype=np.int64)
    active = np.flatnonzero(U.any(axis=0))
    it = 0
    while active.size and (I_max is None or it < I_max):
        it += 1
        Ua = U[:, active]
        cnt = Hi @ Ua.astype(np.int32)
        fire = HT @ (cnt == 1).astype(np.int32)
        solved = Ua & (fire > 0)
        progress = solved.any(axis=0)
        Ua &= ~solved
        U[:, active] = Ua
        iters[active[progress]] = it
        done = ~Ua.any(axis=0)
        active = active[progress & ~done]
    return ~U.any(axis=0), iters


def bp_erasure_decode(code: Code, erasures: np.ndarray,
                      I_max: Optional[int] = None) -> tuple[bool, int]:
    ok, it = bp_erasure_decode_batch(code, np.asarray(erasures, dtype=bool)[:, None], I_max)
    return bool(ok[0]), int(it[0])


# --------------------------------------------------------------------------
# block error rate


@dataclass(frozen=True)
class FERPoint:
    epsilon: float
    trials: int
    failures: int
    fer: float
    ci95: float
    mean_iters: float


def wilson_halfwidth(failures: int, trials: int, z: float = 1.959963984540054) -> float:
    if trials == 0:
        return float("nan")
    p = failures / trials
    den = 1.0 + z * z / trials
    return z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den


def trial_rng(master_seed: int, eps_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), eps_index, trial]))


def _as_components(code) -> list:
    if isinstance(code, (list, tuple)):
        return list(code)
    return [code]


def _fer_chunk(args):
    components, eps, eps_index, start, stop, I_max, master_seed = args
    fails = np.zeros(stop - start, dtype=bool)
    iters = np.zeros(stop - start, dtype=np.int64)
    pats = [[] for _ in components]
    for t in range(start, stop):
        rng = trial_rng(master_seed, eps_index, t)
        for k, comp in enumerate(components):
            H, punct = _arrays(comp)
            pats[k].append(sample_erasures(H.shape[1], eps, rng, punct))
    for k, comp in enumerate(components):
        ok, it = bp_erasure_decode_batch(comp, np.stack(pats[k], axis=1), I_max)
        fails |= ~ok
        iters = np.maximum(iters, it)
    return start, fails, iters


def fer_experiment(code, eps_list: Sequence[float], trials: int, I_max: Optional[int] = None,
                   master_seed: int = 0, jobs: int = 1, batch: int = 250) -> list[FERPoint]:
    """Block error rate of a fixed code instance.

    ``code`` may be a list of codes; a block then fails when any component
    fails (two independent chains, for example).
    """
    if trials < 1:
        raise InvalidParametersError("trials must be >= 1")
    components = _as_components(code)
    out = []
    for ei, eps in enumerate(eps_list):
        tasks = [(components, float(eps), ei, s, min(s + batch, trials), I_max, master_seed)
                 for s in range(0, trials, batch)]
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_fer_chunk, tasks))
        else:
            results = [_fer_chunk(t) for t in tasks]
        fails = np.zeros(trials, dtype=bool)
        iters = np.zeros(trials, dtype=np.int64)
        for start, f, it in results:
            fails[start:start + len(f)] = f
            iters[start:start + len(it)] = it
        nf = int(fails.sum())
        out.append(FERPoint(float(eps), trials, nf, nf / trials,
                            wilson_halfwidth(nf, trials), float(iters.mean())))
    return out


def fer_to_csv(points: Sequence[FERPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "trials", "failures", "fer", "ci95", "mean_iters"])
    for p in points:
        w.writerow([repr(p.epsilon), p.trials, p.failures, repr(p.fer), repr(p.ci95),
                    repr(p.mean_iters)])
    return buf.getvalue()


def fer_less_significant(a: FERPoint, b: FERPoint, alpha: float = 0.05) -> tuple[bool, float]:
    """One-sided pooled two-proportion z-test of FER(a) < FER(b); returns (significant, p-value)."""
    from scipy.stats import norm

    n1, n2 = a.trials, b.trials
    p = (a.failures + b.failures) / (n1 + n2)
    se = math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    if se == 0:
        return False, 1.0
    zval = (b.fer - a.fer) / se
    pval = float(norm.sf(zval))
    return pval < alpha, pval


# --------------------------------------------------------------------------
# graph evolution


@dataclass(frozen=True)
class GraphEvolution:
    """Mean peeling curves on the step grid tau = step / M.

    ``r1_mean``/``r1_std``/``vstar_mean`` average every trial, with finished
    trials frozen at their terminal values. The ``*_alive`` curves average only
    the trials still peeling at that step; they approximate the typical path of
    a run before it stalls, which is what the plateau analysis uses.
    """

    tau: np.ndarray
    r1_mean: np.ndarray
    r1_std: np.ndarray
    vstar_mean: np.ndarray
    r1_alive_mean: np.ndarray
    r1_alive_std: np.ndarray
    vstar_alive_mean: np.ndarray
    alive: np.ndarray
    trials: int
    steps: np.ndarray  # per-trial number of peeling steps
    erased: np.ndarray  # per-trial initial erasure count
    decoded: np.ndarray  # per-trial success
    M: int

    def search_window(self, lo: float = PLATEAU_LO, hi: float = PLATEAU_HI,
                      min_alive: float = PLATEAU_MIN_ALIVE) -> Optional[tuple[int, int]]:
        """Step range [lo, hi] x (median initial erasures), cut where fewer
        than ``min_alive`` of the trials are still peeling."""
        e0 = float(np.median(self.erased))
        a, b = int(lo * e0), int(hi * e0)
        ok = np.flatnonzero(self.alive >= min_alive * self.trials)
        if ok.size == 0:
            return None
        b = min(b, int(ok.max()))
        return (a, b) if b >= a else None

    def plateau_window(self, rel_tol: float = PLATEAU_REL_TOL, **kw) -> Optional[tuple[int, int]]:
        """Critical phase: the contiguous steps around the minimum of the live
        mean r1 (inside the search window) where r1 stays within ``rel_tol``
        of that minimum."""
        win = self.search_window(**kw)
        if win is None:
            return None
        a, b = win
        seg = self.r1_alive_mean[a:b + 1]
        k = int(np.nanargmin(seg))
        flat = seg <= (1.0 + rel_tol) * seg[k]
        lo = k
        while lo > 0 and flat[lo - 1]:
            lo -= 1
        hi = k
        while hi < len(seg) - 1 and flat[hi + 1]:
            hi += 1
        return a + lo, a + hi

    def plateau_minimum(self, **kw) -> float:
        win = self.plateau_window(**kw)
        if win is None:
            return float("nan")
        a, b = win
        return float(self.r1_alive_mean[a:b + 1].min())

    def to_csv(self, alive: bool = False) -> str:
        cols = ((self.r1_alive_mean, self.r1_alive_std, self.vstar_alive_mean) if alive
                else (self.r1_mean, self.r1_std, self.vstar_mean))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "r1_mean", "r1_std", "vstar_mean"])
        for row in zip(self.tau, *cols):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _evolution_trial(args):
    specs, M, eps, seed_words, model = args
    ss = np.random.SeedSequence(seed_words)
    g_seed, e_seed, p_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(3))
    graphs = [sample_tanner_graph(s, M, g_seed + k, model) for k, s in enumerate(specs)]
    g = graphs[0] if len(graphs) == 1 else disjoint_union(graphs)
    n_over = sum(max(len(overlapped_positions(s)), 0) for s in specs) * M
    er = sample_erasures(g.n_vars, eps, np.random.default_rng(e_seed), g.punctured)
    tr = peel(g, er, np.random.default_rng(p_seed), M=M, n_overlapped=max(n_over, 1))
    return tr


def graph_evolution(spec, M: int, eps: float, trials: int, master_seed: int = 0,
                    jobs: int = 1, model: str = "auto") -> GraphEvolution:
    """Average peeling curves over fresh graphs and erasure patterns.

    ``spec`` may be a list of specs; their graphs are then peeled jointly as a
    disjoint union and r1 is still normalised by M.
    """
    if trials < 1:
        raise InvalidParametersError("trials must be >= 1")
    specs = _as_components(spec)
    tasks = [(specs, M, float(eps), [int(master_seed), t], model) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            traces = list(ex.map(_evolution_trial, tasks, chunksize=max(1, trials // (4 * jobs))))
    else:
        traces = [_evolution_trial(t) for t in tasks]
    return summarize_traces(traces, M)


def summarize_traces(traces: Sequence[PeelingTrace], M: int) -> GraphEvolution:
    n = max(len(t.r1) for t in traces)
    K = len(traces)
    R = np.zeros((K, n))
    V = np.zeros((K, n))
    live = np.zeros((K, n), dtype=bool)
    for k, t in enumerate(traces):
        m = len(t.r1)
        R[k, :m], R[k, m:] = t.r1, t.r1[-1]
        V[k, :m], V[k, m:] = t.vstar, t.vstar[-1]
        live[k, :m - 1] = True  # the terminal record is not a live state
    alive = live.sum(axis=0)
    cnt = np.maximum(alive, 1)
    am = (R * live).sum(axis=0) / cnt
    avar = ((R - am) ** 2 * live).sum(axis=0) / np.maximum(alive - 1, 1)
    std = R.std(axis=0, ddof=1) if K > 1 else np.zeros(n)
    return GraphEvolution(
        np.arange(n) / M, R.mean(axis=0), std, V.mean(axis=0),
        np.where(alive > 0, am, np.nan), np.where(alive > 1, np.sqrt(avar), np.nan),
        np.where(alive > 0, (V * live).sum(axis=0) / cnt, np.nan), alive, K,
        np.array([t.steps for t in traces]), np.array([int(t.residual[0]) for t in traces]),
        np.array([t.decoded for t in traces]), M)


def fit_shift(ref: GraphEvolution, other: GraphEvolution, window: tuple[int, int],
              max_shift: Optional[int] = None) -> int:
    """Integer step shift s minimising the squared distance between the live
    mean curves ref[t] and other[t - s] over t in the window."""
    a, b = window
    t = np.arange(a, b + 1)
    lim = max_shift if max_shift is not None else b
    best, best_s = np.inf, 0
    for s in range(-lim, lim + 1):
        idx = t - s
        if idx.min() < 0 or idx.max() >= len(other.r1_alive_mean):
            continue
        d = np.nansum((ref.r1_alive_mean[t] - other.r1_alive_mean[idx]) ** 2)
        if np.isnan(other.r1_alive_mean[idx]).any():
            continue
        if d < best:
            best, best_s = float(d), s
    return best_s


def shifted_zscores(ref: GraphEvolution, other: GraphEvolution, shift: int,
                    window: tuple[int, int]) -> np.ndarray:
    """Pointwise z-scores of ref[t] - other[t - shift] on the live mean curves,
    using the standard error of the difference of the two means."""
    a, b = window
    t = np.arange(a, b + 1)
    idx = t - shift
    diff = ref.r1_alive_mean[t] - other.r1_alive_mean[idx]
    se = np.sqrt(ref.r1_alive_std[t] ** 2 / np.maximum(ref.alive[t], 1)
                 + other.r1_alive_std[idx] ** 2 / np.maximum(other.alive[idx], 1))
    return diff / np.where(se > 0, se, np.inf)


def post_overlap_window(oc: GraphEvolution, threshold: float = 0.05) -> Optional[tuple[int, int]]:
    """Plateau window of an oc run restricted to steps where v* < threshold."""
    win = oc.plateau_window()
    if win is None:
        return None
    a, b = win
    below = np.flatnonzero(oc.vstar_alive_mean[: b + 1] < threshold)
    if below.size == 0:
        return None
    a = max(a, int(below.min()))
    return (a, b) if b >= a else None


def expected_degree_one_fraction(graph: TannerGraph, eps: float) -> float:
    """Exact E[r1(0)] for a fixed graph: sum over checks of P(exactly one erased neighbour), / M."""
    H, punct = _arrays(graph)
    p = np.where(punct, 1.0, eps)
    Hc = sp.csr_matrix(H, dtype=float)
    # log-product of (1 - p) per check, with certain erasures handled exactly
    certain = np.asarray(Hc @ (p >= 1.0).astype(float)).ravel()
    logq = np.asarray(Hc @ np.log(np.where(p >= 1.0, 1.0, 1.0 - p))).ravel()
    ratio = np.asarray(Hc @ np.where(p >= 1.0, 0.0, p / np.where(p >= 1.0, 1.0, 1.0 - p))).ravel()
    none_certain = np.exp(logq) * ratio
    one_certain = np.exp(logq)
    val = np.where(certain == 0, none_certain, np.where(certain == 1, one_certain, 0.0))
    return float(val.sum() / graph.M)
