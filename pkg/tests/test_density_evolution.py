import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coupled_ldpc.density_evolution import (
    DEKernel,
    MAP_THRESHOLDS,
    bp_threshold,
    de_step,
    evolve,
    kernel_for,
    lemma_suite,
    regular_bp_threshold,
    required_iterations,
    run_de,
    splitting_necessary_condition,
    splitting_occurs,
    oc_bounds_check,
)
from coupled_ldpc.ensembles import (
    ConnectivityMatrix,
    DegreeProfile,
    EnsembleSpec,
    connectivity,
    degree_profile,
)
from coupled_ldpc.errors import DimensionMismatchError, InvalidParametersError
from oracles import regular_threshold_grid

specs = st.sampled_from([
    EnsembleSpec("sc", 3, 6, 8, 3),
    EnsembleSpec("sc", 4, 8, 11, 3),
    EnsembleSpec("oc", 3, 6, 12, 3),
    EnsembleSpec("oc", 4, 8, 10, 3),
    EnsembleSpec("loop", 3, 6, 9, 3),
    EnsembleSpec("circular", 3, 6, 6, 3),
    EnsembleSpec("oc", 3, 8, 14, 3, ((3, 0.95), (23, 0.05))),
])


# --- single steps --------------------------------------------------------------

@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([(3, 6), (4, 8), (2, 4), (5, 6)]))
def test_single_position_step_is_scalar_recursion(eps, x, dd):
    dl, dr = dd
    T = ConnectivityMatrix(np.array([[1]]))
    out = de_step(T, DegreeProfile.regular([dl]), dr, eps, np.array([x]))
    assert out[0] == pytest.approx(eps * (1 - (1 - x) ** (dr - 1)) ** (dl - 1), abs=1e-15)


@given(specs, st.data())
def test_zero_channel_clears_everything(spec, data):
    T, D = connectivity(spec), degree_profile(spec)
    x = np.array(data.draw(st.lists(st.floats(0, 1), min_size=T.cols, max_size=T.cols)))
    assert (de_step(T, D, spec.dr, 0.0, x) == 0).all()


def test_oc_first_step_overlap_is_lowest():
    spec = EnsembleSpec("oc", 3, 6, 8, 3)
    x = de_step(connectivity(spec), degree_profile(spec), 6, 0.48, np.ones(8))
    assert x[3] == x[4]
    assert x[3] <= np.delete(x, [3, 4]).min()


def test_irregular_step_uses_edge_perspective():
    law = ((2, 0.5), (4, 0.5))
    T = ConnectivityMatrix(np.array([[1]]))
    D = DegreeProfile((law,))
    x, eps, dr = 0.7, 0.6, 5
    b = 1 - (1 - x) ** (dr - 1)
    want = eps * (1 / 3 * b + 2 / 3 * b ** 3)
    assert de_step(T, D, dr, eps, np.array([x]))[0] == pytest.approx(want)


def test_step_validation():
    spec = EnsembleSpec("sc", 3, 6, 8, 3)
    T, D = connectivity(spec), degree_profile(spec)
    with pytest.raises(DimensionMismatchError):
        de_step(T, D, 6, 0.4, np.ones(7))
    with pytest.raises(InvalidParametersError):
        de_step(T, D, 6, 1.5, np.ones(8))
    with pytest.raises(DimensionMismatchError):
        DEKernel(T, DegreeProfile.regular([3] * 5), 6)


# --- evolve --------------------------------------------------------------------

def test_sc_decodes_below_uncoupled_threshold():
    assert evolve(EnsembleSpec("sc", 3, 6, 8, 3), 0.40).converged


@given(specs)
def test_full_erasure_never_decodes(spec):
    out = evolve(spec, 1.0)
    assert not out.converged
    assert out.final_max_erasure == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("spec", [EnsembleSpec("oc", 3, 6, 8, 3), EnsembleSpec("circular", 3, 6, 5, 3)])
def test_all_ones_is_fixed_without_boundaries(spec):
    out = evolve(spec, 1.0)
    assert (out.x == 1.0).all() and out.iterations == 1


def test_terminated_boundary_leaks_at_full_erasure():
    # checks beyond the chain ends count as known, so the ends move even at eps = 1
    out = evolve(EnsembleSpec("sc", 3, 6, 8, 3), 1.0)
    assert out.x[0] < 1.0 and out.x[3] == pytest.approx(1.0)


def test_oc_protected_region_clears_first():
    spec = EnsembleSpec("oc", 3, 6, 50, 3)
    first = {}

    def watch(it, x):
        for i in np.flatnonzero(x <= 1e-8):
            first.setdefault(int(i) + 1, it)

    out = run_de(kernel_for(spec), 0.48, callback=watch)
    assert out.converged
    assert first[25] == first[26] == min(first.values())
    assert all(first[i] > first[25] for i in first if i not in (25, 26))


@given(specs, st.floats(0.2, 0.6))
def test_trajectory_is_monotone_and_bounded(spec, eps):
    k = kernel_for(spec)
    x = k.initial()
    for _ in range(60):
        xn = k.step(x, eps)
        assert ((xn >= 0) & (xn <= 1)).all()
        assert (xn <= x + 1e-15).all()
        x = xn


@given(specs, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_step_is_monotone_in_channel(spec, e1, e2):
    lo, hi = sorted((e1, e2))
    k = kernel_for(spec)
    x = k.initial()
    assert (k.step(x, lo) <= k.step(x, hi) + 1e-15).all()


@given(st.integers(4, 15))
def test_sc_profile_symmetric(L):
    spec = EnsembleSpec("sc", 3, 6, L, 3)
    out = evolve(spec, 0.45, keep_trajectory=True)
    for x in out.trajectory:
        assert np.allclose(x, x[::-1], atol=1e-12)


# --- thresholds -------------------------------------------------------------------

@pytest.mark.parametrize("family,L,want", [("sc", 8, 0.5019), ("oc", 8, 0.5243),
                                           ("loop", 8, 0.5536), ("sc", 12, 0.4893)])
def test_thresholds_small_chains(family, L, want):
    res = bp_threshold(EnsembleSpec(family, 3, 6, L, 3))
    assert res.threshold == pytest.approx(want, abs=5e-4)
    assert res.bracket_width <= 1e-5


def test_threshold_bracket_is_consistent():
    spec = EnsembleSpec("oc", 3, 6, 10, 3)
    res = bp_threshold(spec, eps_tol=1e-4)
    assert evolve(spec, res.threshold - res.bracket_width).converged
    assert not evolve(spec, res.threshold + res.bracket_width).converged


@pytest.mark.parametrize("dl,dr,want", [(6, 6, 0.5819), (8, 8, 0.4876), (3, 6, 0.4294)])
def test_regular_thresholds(dl, dr, want):
    assert regular_bp_threshold(dl, dr) == pytest.approx(want, abs=5e-4)


@pytest.mark.parametrize("dl,dr", [(3, 6), (4, 8), (3, 5), (5, 10)])
def test_regular_threshold_matches_fixed_point_oracle(dl, dr):
    assert regular_bp_threshold(dl, dr) == pytest.approx(regular_threshold_grid(dl, dr), abs=1e-4)


def test_map_constants_are_stored():
    assert MAP_THRESHOLDS[(3, 6)] == 0.4881 and MAP_THRESHOLDS[(4, 8)] == 0.497


# --- iterations -------------------------------------------------------------------

def test_required_iterations_small_sc():
    assert required_iterations(EnsembleSpec("sc", 3, 6, 8, 3), 0.48) == pytest.approx(31, rel=0.1)


@given(specs)
def test_zero_channel_needs_one_iteration(spec):
    assert required_iterations(spec, 0.0) == 1


def test_required_iterations_failure_marker():
    assert required_iterations(EnsembleSpec("sc", 3, 6, 8, 3), 0.55) is None
    with pytest.raises(InvalidParametersError):
        required_iterations(EnsembleSpec("sc", 3, 6, 8, 3), 1.0)


# --- splitting and bounds ---------------------------------------------------------------

def test_no_splitting_for_short_chain():
    assert splitting_occurs(3, 6, 10, 3, 1e-4) is False


def test_necessary_condition_examples():
    assert splitting_necessary_condition(3, 6, 4, 3, 1e-4) is False
    assert splitting_necessary_condition(3, 6, 9, 3, 1e-4) is True


def test_bounds_trivial_grid():
    rep = oc_bounds_check(3, 6, 4, 3, [0.0])
    assert rep.ok
    assert rep.points[0].iterations_oc == rep.points[0].iterations_sc == 1


def test_bounds_small_case():
    rep = oc_bounds_check(3, 6, 8, 3, [0.4, 0.48])
    assert rep.ok
    assert rep.threshold_oc <= rep.threshold_sc + 1e-5


@pytest.mark.parametrize("dl,dr,Ls,eps", [(3, 6, 4, 0.45), (4, 8, 5, 0.48), (3, 6, 6, 0.3)])
def test_lemma_suite_small(dl, dr, Ls, eps):
    rep = lemma_suite(dl, dr, Ls, 3, eps)
    assert rep.ok, rep.violations[:5]
