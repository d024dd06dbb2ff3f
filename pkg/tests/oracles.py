"""Independent reference computations used to cross-check the library.

Nothing here imports the code under test; each oracle recomputes its value
from first principles with a deliberately different algorithm.
"""
from __future__ import annotations

import itertools

import numpy as np


def regular_threshold_grid(dl: int, dr: int, step: float = 1e-6) -> float:
    """BP threshold of a regular ensemble as the minimum over x in (0, 1] of
    x / (1 - (1 - x)^(dr-1))^(dl-1), evaluated on a fine x grid."""
    x = np.arange(step, 1.0 + step / 2, step)
    return float(np.min(x / (1.0 - (1.0 - x) ** (dr - 1)) ** (dl - 1)))


def sc_connectivity_by_formula(L: int, w: int) -> np.ndarray:
    T = np.zeros((L + w - 1, L), dtype=int)
    for u in range(1, L + w):
        for v in range(1, L + 1):
            if v <= u <= v + w - 1:
                T[u - 1, v - 1] = 1
    return T


def circular_connectivity_by_wrap(L: int, w: int) -> np.ndarray:
    n = L + w - 1
    T = np.zeros((n, n), dtype=int)
    for v in range(1, n + 1):
        for j in range(w):
            u = ((v + j - 1) % n) + 1
            T[u - 1, v - 1] = 1
    return T


def stopping_set_by_enumeration(B: np.ndarray, punctured) -> bool:
    """Try every nonempty subset of the punctured columns."""
    cols = sorted(punctured)
    for r in range(1, len(cols) + 1):
        for S in itertools.combinations(cols, r):
            load = B[:, list(S)].sum(axis=1)
            if np.all((load == 0) | (load >= 2)):
                return True
    return False


def peel_residual(H: np.ndarray, erased: np.ndarray) -> np.ndarray:
    """Dense textbook peeling: resolve any check with one erased neighbour."""
    e = erased.copy()
    changed = True
    while changed:
        changed = False
        for row in H:
            idx = np.flatnonzero(row & e)
            if idx.size == 1:
                e[idx[0]] = False
                changed = True
    return e


def exact_fer(H: np.ndarray, eps: float) -> float:
    """Block error probability by enumerating every erasure pattern."""
    n = H.shape[1]
    total = 0.0
    for bits in itertools.product([0, 1], repeat=n):
        e = np.array(bits, dtype=bool)
        if peel_residual(H, e).any():
            k = int(e.sum())
            total += eps ** k * (1 - eps) ** (n - k)
    return total


def expected_degree_one_checks(H: np.ndarray, eps: float) -> float:
    """Sum over checks of d * eps * (1 - eps)^(d - 1)."""
    d = H.sum(axis=1)
    return float(np.sum(d * eps * (1 - eps) ** (d - 1)))


TOY_H = np.array([
    [1, 1, 0, 1, 0, 0],
    [0, 1, 1, 0, 1, 0],
    [1, 0, 1, 0, 0, 1],
], dtype=np.int8)
