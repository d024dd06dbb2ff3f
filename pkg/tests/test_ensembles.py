import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coupled_ldpc.ensembles import (
    ConnectivityMatrix,
    DegreeProfile,
    EnsembleSpec,
    connectivity,
    connectivity_circular,
    connectivity_loop,
    connectivity_oc,
    connectivity_sc,
    degree_profile,
    design_rate,
    loop_high_degree_positions,
    unconnected_check_gain,
)
from coupled_ldpc.errors import InvalidParametersError
from oracles import circular_connectivity_by_wrap, sc_connectivity_by_formula

PRINTED_T_OC_8_3 = np.array([
    [1, 0, 0, 1, 1, 0, 0, 0],
    [1, 1, 0, 0, 1, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 0, 0],
    [0, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 1, 1, 1, 0, 0, 0],
    [0, 0, 0, 1, 1, 1, 0, 0],
    [0, 0, 0, 0, 1, 1, 1, 0],
    [0, 0, 0, 0, 0, 1, 1, 1],
    [0, 0, 0, 1, 0, 0, 1, 1],
    [0, 0, 0, 1, 1, 0, 0, 1],
])


# --- sc ---------------------------------------------------------------------

def test_sc_small_example():
    T = connectivity_sc(8, 3)
    assert T.shape == (10, 8)
    assert (T.col_sums() == 3).all()
    assert T.entries[0, 0] == 1 and T.entries[3, 0] == 0


def test_sc_row_sums_taper_at_both_ends():
    assert connectivity_sc(8, 3).row_sums().tolist() == [1, 2, 3, 3, 3, 3, 3, 3, 2, 1]


def test_sc_smallest_legal_case():
    T = connectivity_sc(2, 2)
    assert T.entries.tolist() == [[1, 0], [1, 1], [0, 1]]


@pytest.mark.parametrize("L,w", [(1, 2), (2, 3), (5, 1)])
def test_sc_rejects_bad_parameters(L, w):
    with pytest.raises(InvalidParametersError):
        connectivity_sc(L, w)


@given(st.integers(2, 6).flatmap(lambda w: st.tuples(st.integers(w, 30), st.just(w))))
def test_sc_matches_membership_rule(Lw):
    L, w = Lw
    assert (connectivity_sc(L, w).entries == sc_connectivity_by_formula(L, w)).all()


# --- circular ---------------------------------------------------------------

def test_circular_contains_sc_block():
    T = connectivity_circular(3, 3)
    assert T.shape == (5, 5)
    assert (T.entries[:, :3] == connectivity_sc(3, 3).entries).all()
    assert (T.entries[:, 3:].sum(axis=0) == 3).all()


@given(st.integers(2, 6).flatmap(lambda w: st.tuples(st.integers(w, 25), st.just(w))))
def test_circular_is_circulant_and_matches_wrap_rule(Lw):
    L, w = Lw
    T = connectivity_circular(L, w).entries
    assert (T == circular_connectivity_by_wrap(L, w)).all()
    assert (T.sum(axis=0) == w).all() and (T.sum(axis=1) == w).all()
    for i in range(T.shape[0]):
        assert (np.roll(T[i], 1) == T[(i + 1) % T.shape[0]]).all()


# --- loop ---------------------------------------------------------------------

def test_loop_l9():
    T = connectivity_loop(9)
    assert T.shape == (22, 18)
    cs = T.col_sums()
    assert cs[1] == 4 and cs[0] == 3


def test_loop_has_six_cross_edges():
    T = connectivity_loop(12).entries
    L = 12
    off = T[: L + 2, L:].sum() + T[L + 2:, :L].sum()
    assert off == 6


def test_loop_high_degree_positions():
    assert loop_high_degree_positions(9) == [2, 3, 4, 15, 16, 17]
    cs = connectivity_loop(18).col_sums()
    assert (np.flatnonzero(cs == 4) + 1).tolist() == [5, 6, 7, 30, 31, 32]


def test_loop_diagonal_blocks_are_sc():
    L = 10
    T = connectivity_loop(L).entries
    sc = connectivity_sc(L, 3).entries
    assert (T[: L + 2, :L] == sc).all() and (T[L + 2:, L:] == sc).all()


@pytest.mark.parametrize("L", [3, 4, 5, 6])
def test_loop_rejects_short_chains(L):
    with pytest.raises(InvalidParametersError):
        connectivity_loop(L)


def test_loop_only_for_3_6_3():
    with pytest.raises(InvalidParametersError):
        EnsembleSpec("loop", 4, 8, 12, 3)
    with pytest.raises(InvalidParametersError):
        EnsembleSpec("loop", 3, 6, 12, 4)


# --- oc -------------------------------------------------------------------------

def test_oc_matches_printed_matrix():
    assert (connectivity_oc(8, 3).entries == PRINTED_T_OC_8_3).all()


def test_oc_overlapped_columns_are_doubled():
    cs = connectivity_oc(8, 3).col_sums()
    assert cs.tolist() == [3, 3, 3, 6, 6, 3, 3, 3]


def test_oc_removing_overlap_leaves_sc():
    L, w = 12, 3
    Ls = 5
    T = connectivity_oc(L, w).entries
    assert T.shape == (14, 12)
    assert (T[: Ls + w - 1, :Ls] == connectivity_sc(Ls, w).entries).all()


@pytest.mark.parametrize("L,w", [(7, 3), (8, 4), (3, 3), (2, 2)])
def test_oc_rejects_odd_split(L, w):
    with pytest.raises(InvalidParametersError):
        connectivity_oc(L, w)


@given(st.integers(2, 5), st.integers(1, 12))
def test_oc_size_and_reversal_symmetry(w, Ls):
    L = 2 * Ls + w - 1
    T = connectivity_oc(L, w).entries
    assert T.shape == connectivity_sc(L, w).shape
    n = Ls + w - 1
    upper = T[:n, :n]
    tsc, tcr = upper[:, :Ls], upper[:, Ls:]
    # [T_SC]_{i,j} = [T_SC]_{Ls+w-i, Ls+1-j} and [T_CR]_{i,j} = [T_CR]_{Ls+w-i, w-j}
    assert (tsc == tsc[::-1, ::-1]).all()
    assert (tcr == tcr[::-1, ::-1]).all()
    cs = T.sum(axis=0)
    over = np.zeros(L, dtype=bool)
    over[Ls:Ls + w - 1] = True
    assert (cs[over] == 2 * w).all() and (cs[~over] == w).all()


# --- degree profiles ---------------------------------------------------------

def test_oc_degree_profile():
    D = degree_profile(EnsembleSpec("oc", 3, 6, 8, 3))
    assert D.degrees().tolist() == [3, 3, 3, 6, 6, 3, 3, 3]


def test_loop_degree_profile():
    D = degree_profile(EnsembleSpec("loop", 3, 6, 9, 3))
    high = [i + 1 for i, d in enumerate(D.degrees()) if d == 4]
    assert high == [2, 3, 4, 15, 16, 17]


def test_irregular_oc_doubles_every_degree():
    law = ((3, 19 / 20), (23, 1 / 20))
    D = degree_profile(EnsembleSpec("oc", 3, 8, 22, 3, law))
    Ls = 10
    over = D.positions[Ls]
    assert dict(over) == pytest.approx({6: 0.95, 46: 0.05})
    assert dict(D.positions[0]) == pytest.approx({3: 0.95, 23: 0.05})


def test_degree_profile_fractions_validated():
    with pytest.raises(InvalidParametersError):
        DegreeProfile((((3, 0.5), (4, 0.4)),))


def test_edge_conversion():
    D = DegreeProfile((((2, 0.5), (4, 0.5)),))
    d, lam = D.edge_laws()[0]
    assert lam.tolist() == pytest.approx([1 / 3, 2 / 3])


@given(st.integers(1, 10), st.sampled_from([2, 3, 4]), st.sampled_from([3, 4]))
def test_overlap_preserves_edge_count(Ls, w, dl):
    """Edges of two pre-overlap circular chains equal the edges of the oc ensemble."""
    L = 2 * Ls + w - 1
    oc_edges = (degree_profile(EnsembleSpec("oc", dl, 8, L, w)).degrees()).sum()
    circ_edges = 2 * dl * (Ls + w - 1)
    assert oc_edges == circ_edges


# --- rates -------------------------------------------------------------------

TABLE_RATES = {
    "sc": {8: 0.3861, 9: 0.3988, 10: 0.4089, 12: 0.4241, 14: 0.4349, 15: 0.4393,
           16: 0.4431, 18: 0.4494, 20: 0.4545, 30: 0.4696, 40: 0.4772, 50: 0.4818,
           100: 0.4909},
    "loop": {8: 0.3750, 9: 0.3889, 10: 0.4000, 12: 0.4167, 14: 0.4286, 15: 0.4333,
             16: 0.4375, 18: 0.4444, 20: 0.4500, 30: 0.4667, 40: 0.4750, 50: 0.4800,
             100: 0.4900},
    "oc": {8: 0.3750, 10: 0.4000, 12: 0.4167, 14: 0.4286, 16: 0.4375, 18: 0.4444,
           20: 0.4500, 30: 0.4667, 40: 0.4750, 50: 0.4800, 100: 0.4900},
}


@pytest.mark.parametrize("family,L,rate",
                         [(f, L, r) for f, d in TABLE_RATES.items() for L, r in d.items()])
def test_design_rates_match_reference(family, L, rate):
    assert round(design_rate(EnsembleSpec(family, 3, 6, L, 3)), 4) == rate


def test_4_8_oc_rate():
    assert round(design_rate(EnsembleSpec("oc", 4, 8, 50, 3)), 4) == 0.48


@given(st.sampled_from([(3, 6), (4, 8), (3, 9), (5, 10)]), st.integers(2, 4), st.integers(1, 30))
def test_oc_rate_gap_is_the_boundary_gain(dd, w, Ls):
    dl, dr = dd
    L = 2 * Ls + w - 1
    sc = design_rate(EnsembleSpec("sc", dl, dr, L, w))
    oc = design_rate(EnsembleSpec("oc", dl, dr, L, w))
    assert oc <= sc
    assert sc - oc == pytest.approx(unconnected_check_gain(dl, dr, L, w), abs=1e-12)


# --- spec and serialization -------------------------------------------------

def test_spec_validation():
    with pytest.raises(InvalidParametersError):
        EnsembleSpec("sc", 6, 3, 10, 3)
    with pytest.raises(InvalidParametersError):
        EnsembleSpec("sc", 3, 6, 2, 3)
    with pytest.raises(InvalidParametersError):
        EnsembleSpec("mystery", 3, 6, 10, 3)
    assert EnsembleSpec("oc", 3, 6, 20, 3).Ls == 9


def test_connectivity_json_roundtrip():
    T = connectivity(EnsembleSpec("loop", 3, 6, 10, 3))
    d = json.loads(json.dumps(T.to_dict()))
    assert d["rows"] == T.rows and [1, 1] in d["ones"]
    assert ConnectivityMatrix.from_dict(d) == T


def test_profile_and_spec_json_roundtrip():
    spec = EnsembleSpec("oc", 3, 8, 22, 3, ((3, 0.95), (23, 0.05)))
    assert EnsembleSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec
    D = degree_profile(spec)
    assert DegreeProfile.from_dict(json.loads(json.dumps(D.to_dict()))) == D


def test_connectivity_rejects_bad_entries():
    with pytest.raises(InvalidParametersError):
        ConnectivityMatrix(np.array([[1, 2]]))
    with pytest.raises(InvalidParametersError):
        ConnectivityMatrix(np.array([[1, 0], [1, 0]]))


def test_connectivity_is_immutable():
    T = connectivity_sc(4, 2)
    with pytest.raises(ValueError):
        T.entries[0, 0] = 0
