"""Position-level descriptions of random coupled LDPC ensembles.

Every ensemble is described by a binary connectivity matrix ``T`` between
check positions (rows) and variable positions (columns) together with a
per-position variable degree law. Four families are supported:

* ``sc``        -- terminated spatially-coupled chain of length ``L``
* ``circular``  -- tail-biting chain on ``L + w - 1`` positions
* ``loop``      -- two (3,6,L,3) chains joined by six cross connections
* ``oc``        -- two circular chains overlapped on ``w - 1`` positions

Indices in the public JSON forms are 1-based; numpy arrays are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParametersError

FAMILIES = ("sc", "circular", "loop", "oc")

_FAMILY_ALIASES = {
    "sc": "sc",
    "circular": "circular",
    "c": "circular",
    "tb": "circular",
    "loop": "loop",
    "l": "loop",
    "oc": "oc",
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConnectivityMatrix:
    """Binary P x Q matrix; ``entries[u, v] = 1`` iff check position u
    is connected to variable position v."""

    entries: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.entries)
        if t.ndim != 2:
            raise InvalidParametersError("connectivity matrix must be 2-D")
        if not np.isin(t, (0, 1)).all():
            raise InvalidParametersError("connectivity entries must be 0 or 1")
        if (t.sum(axis=0) == 0).any():
            raise InvalidParametersError("connectivity matrix has an all-zero column")
        object.__setattr__(self, "entries", _frozen(t.astype(np.int8)))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def to_dict(self) -> dict:
        us, vs = np.nonzero(self.entries)
        ones = [[int(u) + 1, int(v) + 1] for u, v in zip(us, vs)]
        return {"rows": self.rows, "cols": self.cols, "ones": ones}

    @classmethod
    def from_dict(cls, d: dict) -> "ConnectivityMatrix":
        t = np.zeros((int(d["rows"]), int(d["cols"])), dtype=np.int8)
        for u, v in d["ones"]:
            if not (1 <= u <= t.shape[0] and 1 <= v <= t.shape[1]):
                raise InvalidParametersError(f"entry ({u},{v}) out of range")
            t[u - 1, v - 1] = 1
        return cls(t)

    def __eq__(self, other):
        if not isinstance(other, ConnectivityMatrix):
            return NotImplemented
        return self.shape == other.shape and bool((self.entries == other.entries).all())

    def __hash__(self):
        return hash((self.shape, self.entries.tobytes()))


@dataclass(frozen=True)
class DegreeProfile:
    """Per-position node-perspective variable degree laws.

    ``positions[i]`` is a tuple of ``(degree, fraction)`` pairs for
    variable position ``i + 1``.
    """

    positions: tuple

    def __post_init__(self):
        norm = []
        for i, law in enumerate(self.positions):
            law = tuple((int(d), float(p)) for d, p in law)
            if not law:
                raise InvalidParametersError(f"position {i + 1} has an empty degree law")
            if any(d < 1 for d, _ in law):
                raise InvalidParametersError(f"position {i + 1}: degrees must be positive")
            if any(p < 0 for _, p in law):
                raise InvalidParametersError(f"position {i + 1}: negative fraction")
            if abs(sum(p for _, p in law) - 1.0) > 1e-12:
                raise InvalidParametersError(f"position {i + 1}: fractions do not sum to 1")
            norm.append(law)
        object.__setattr__(self, "positions", tuple(norm))

    @classmethod
    def regular(cls, degrees: Sequence[int]) -> "DegreeProfile":
        return cls(tuple(((int(d), 1.0),) for d in degrees))

    def __len__(self):
        return len(self.positions)

    @property
    def is_regular(self) -> bool:
        return all(len(law) == 1 for law in self.positions)

    def degrees(self) -> np.ndarray:
        """Single degree per position; only defined for regular profiles."""
        if not self.is_regular:
            raise InvalidParametersError("profile is irregular")
        return np.array([law[0][0] for law in self.positions])

    def mean_degrees(self) -> np.ndarray:
        return np.array([sum(d * p for d, p in law) for law in self.positions])

    def edge_laws(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Edge-perspective laws: fraction ``d*p_d / sum(d'*p_d')`` per degree."""
        out = []
        for law in self.positions:
            d = np.array([x for x, _ in law], dtype=float)
            p = np.array([x for _, x in law], dtype=float)
            out.append((d, d * p / np.dot(d, p)))
        return out

    def to_dict(self) -> dict:
        return {"positions": [[[d, p] for d, p in law] for law in self.positions]}

    @classmethod
    def from_dict(cls, d: dict) -> "DegreeProfile":
        return cls(tuple(tuple((dd, pp) for dd, pp in law) for law in d["positions"]))


def _parse_law(law) -> Optional[tuple]:
    if law is None:
        return None
    items = tuple(sorted((int(d), float(p)) for d, p in law))
    if not items:
        raise InvalidParametersError("empty degree law")
    if abs(sum(p for _, p in items) - 1.0) > 1e-12:
        raise InvalidParametersError("degree law fractions must sum to 1")
    if any(d < 2 for d, _ in items):
        raise InvalidParametersError("degree law needs degrees >= 2")
    return items


@dataclass(frozen=True)
class EnsembleSpec:
    """A fully determined random coupled ensemble.

    ``law`` optionally replaces the regular variable degree ``dl`` by a
    node-perspective distribution ``((degree, fraction), ...)``; ``dl``
    is then ignored in favour of the law's mean degree.
    """

    family: str
    dl: int
    dr: int
    L: int
    w: int = 3
    law: Optional[tuple] = field(default=None)

    def __post_init__(self):
        fam = _FAMILY_ALIASES.get(str(self.family).lower())
        if fam is None:
            raise InvalidParametersError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "law", _parse_law(self.law))
        for name in ("dl", "dr", "L", "w"):
            if int(getattr(self, name)) != getattr(self, name):
                raise InvalidParametersError(f"{name} must be an integer")
        if self.w < 2:
            raise InvalidParametersError("coupling length w must be >= 2")
        if self.L < self.w:
            raise InvalidParametersError("chain length L must be >= w")
        if not (self.dr >= self.mean_degree >= 2):
            raise InvalidParametersError("need dr >= dl >= 2")
        if fam == "loop":
            if (self.dl, self.dr, self.w) != (3, 6, 3) or self.law is not None:
                raise InvalidParametersError("loop ensemble is only defined for (3,6,L,3)")
            _loop_indices(self.L)
        if fam == "oc":
            k = self.L - self.w + 1
            if k < 2 or k % 2:
                raise InvalidParametersError("oc needs L - w + 1 even and >= 2 (L = 2*Ls + w - 1)")

    @property
    def Ls(self) -> int:
        """Length of each split chain of an oc ensemble."""
        if self.family != "oc":
            raise InvalidParametersError("Ls is only defined for the oc family")
        return (self.L - self.w + 1) // 2

    @property
    def mean_degree(self) -> float:
        if self.law is None:
            return float(self.dl)
        return sum(d * p for d, p in self.law)

    @property
    def base_law(self) -> tuple:
        return self.law if self.law is not None else ((self.dl, 1.0),)

    def to_dict(self) -> dict:
        d = {"family": self.family, "dl": self.dl, "dr": self.dr, "L": self.L, "w": self.w}
        if self.law is not None:
            d["law"] = [[deg, p] for deg, p in self.law]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        law = d.get("law")
        return cls(d["family"], int(d["dl"]), int(d["dr"]), int(d["L"]), int(d.get("w", 3)),
                   None if law is None else tuple(map(tuple, law)))

    def label(self) -> str:
        name = {"sc": "SC", "circular": "C", "loop": "L", "oc": "OC"}[self.family]
        if self.family == "loop":
            return f"{name}(3,6,{self.L},3)"
        dl = "irr" if self.law is not None else str(self.dl)
        return f"{name}({dl},{self.dr},{self.L},{self.w})"


# --------------------------------------------------------------------------
# connectivity matrices


def _ring(i: int, n: int) -> int:
    """1-based ring index <i, n> = ((i - 1) mod n) + 1."""
    return ((i - 1) % n) + 1


def connectivity_sc(L: int, w: int) -> ConnectivityMatrix:
    if w < 2 or L < w:
        raise InvalidParametersError(f"sc connectivity needs L >= w >= 2 (got L={L}, w={w})")
    t = np.zeros((L + w - 1, L), dtype=np.int8)
    for v in range(L):
        t[v:v + w, v] = 1
    return ConnectivityMatrix(t)


def connectivity_circular(L: int, w: int) -> ConnectivityMatrix:
    if w < 2 or L < w:
        raise InvalidParametersError(f"circular connectivity needs L >= w >= 2 (got L={L}, w={w})")
    n = L + w - 1
    t = np.zeros((n, n), dtype=np.int8)
    for v in range(1, n + 1):
        for j in range(w):
            t[_ring(v + j, n) - 1, v - 1] = 1
    return ConnectivityMatrix(t)


def _loop_indices(L: int) -> tuple[list, list]:
    a = math.ceil(L / 3)
    b = (2 * L) // 3
    l1 = [(1, a - 1), (1, a), (2, a + 1)]
    l2 = [(L + 1, b), (L + 2, b + 1), (L + 2, b + 2)]
    # protected regions must sit strictly inside the chain
    if a - 1 < 2 or b + 2 > L - 1:
        raise InvalidParametersError(
            f"loop cross connections fall outside the chain interior for L={L} (need L >= 7)")
    return l1, l2


def loop_high_degree_positions(L: int) -> list[int]:
    """1-based variable positions with degree 4 in the loop ensemble."""
    a = math.ceil(L / 3)
    b = (2 * L) // 3
    return [a - 1, a, a + 1, L + b, L + b + 1, L + b + 2]


def connectivity_loop(L: int) -> ConnectivityMatrix:
    l1, l2 = _loop_indices(L)
    sc = connectivity_sc(L, 3).entries
    P = L + 2
    t = np.zeros((2 * P, 2 * L), dtype=np.int8)
    t[:P, :L] = sc
    t[P:, L:] = sc
    for u, v in l1:  # lower-left block
        t[P + u - 1, v - 1] = 1
    for u, v in l2:  # upper-right block
        t[u - 1, L + v - 1] = 1
    return ConnectivityMatrix(t)


def connectivity_oc(L: int, w: int) -> ConnectivityMatrix:
    if w < 2 or L - w + 1 < 2 or (L - w + 1) % 2:
        raise InvalidParametersError(f"oc connectivity needs L - w + 1 even and >= 2 (got L={L}, w={w})")
    Ls = (L - w + 1) // 2
    if Ls < 1:
        raise InvalidParametersError("oc needs Ls >= 1")
    n = Ls + w - 1
    tc = np.zeros((n, n), dtype=np.int8)
    for v in range(1, n + 1):
        for j in range(w):
            tc[_ring(v + j, n) - 1, v - 1] = 1
    t = np.zeros((2 * n, L), dtype=np.int8)
    t[:n, :n] = tc
    t[n:, Ls:n] = tc[:, Ls:]
    t[n:, n:] = tc[:, :Ls]
    return ConnectivityMatrix(t)


def overlapped_positions(spec: EnsembleSpec) -> list[int]:
    """1-based positions of the overlapped (degree-doubled) region; empty unless oc."""
    if spec.family != "oc":
        return []
    Ls = spec.Ls
    return list(range(Ls + 1, Ls + spec.w))


def protected_positions(spec: EnsembleSpec) -> list[int]:
    if spec.family == "oc":
        return overlapped_positions(spec)
    if spec.family == "loop":
        return loop_high_degree_positions(spec.L)
    return []


def connectivity(spec: EnsembleSpec) -> ConnectivityMatrix:
    if spec.family == "sc":
        return connectivity_sc(spec.L, spec.w)
    if spec.family == "circular":
        return connectivity_circular(spec.L, spec.w)
    if spec.family == "loop":
        return connectivity_loop(spec.L)
    return connectivity_oc(spec.L, spec.w)


# --------------------------------------------------------------------------
# degree profiles and rates


def _doubled(law: tuple) -> tuple:
    # equal-degree pairing: a degree-d node overlapped with a degree-d node
    return tuple((2 * d, p) for d, p in law)


def degree_profile(spec: EnsembleSpec) -> DegreeProfile:
    law = spec.base_law
    if spec.family == "sc":
        return DegreeProfile((law,) * spec.L)
    if spec.family == "circular":
        return DegreeProfile((law,) * (spec.L + spec.w - 1))
    if spec.family == "loop":
        high = set(loop_high_degree_positions(spec.L))
        return DegreeProfile.regular([4 if i in high else 3 for i in range(1, 2 * spec.L + 1)])
    over = set(overlapped_positions(spec))
    dbl = _doubled(law)
    return DegreeProfile(tuple(dbl if i in over else law for i in range(1, spec.L + 1)))


def unconnected_check_gain(dl: float, dr: int, L: int, w: int) -> float:
    """Rate gain from boundary checks left without edges in a terminated chain."""
    s = sum((i / w) ** dr for i in range(w))
    return (dl / dr) * 2 * s / L


def design_rate(spec: EnsembleSpec) -> float:
    dl, dr, L, w = spec.mean_degree, spec.dr, spec.L, spec.w
    if spec.family == "sc":
        return (1 - dl / dr) - (dl / dr) * (w - 1) / L + unconnected_check_gain(dl, dr, L, w)
    if spec.family == "loop":
        return 0.5 - 1.0 / L
    if spec.family == "circular":
        return 1 - dl / dr
    return (1 - dl / dr) - (dl / dr) * (w - 1) / L
