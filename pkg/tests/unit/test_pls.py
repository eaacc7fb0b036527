"""
Unit tests for ptppm/core/pls.py

Tests the conditional error E(Phi) against brute force, the Hilbert-window
search and the E_m relaxation loop.
"""
import math

import numpy as np
import pytest

from ptppm.constants import Rotation
from ptppm.core.errors import Infeasible, ZeroMass
from ptppm.core.grid_map import rank_table
from ptppm.core.mobility import ProbVector, delta_location_set
from ptppm.core.pls import (
    ALL_ROTATIONS,
    PLSSearcher,
    conditional_error,
    make_pls,
    search_pls,
    search_pls_adaptive,
)

CELL = 620.0


def _brute_conditional_error(cells, prior, grid_map):
    mass = sum(prior.p[c] for c in cells)
    best = math.inf
    for g in range(grid_map.n_cells):
        total = sum(prior.p[x] * grid_map.distance_matrix[g, x] for x in cells) / mass
        best = min(best, total)
    return best


def _make_instance(grid_map, make_prior, seed=0, delta=0.2):
    prior = make_prior(grid_map.n_cells, seed=seed)
    return prior, delta_location_set(prior, delta)


def _largest_reachable_e(searcher, anchor):
    return max(
        float(searcher.growth(anchor, r).e_values[1:].max())
        for r in ALL_ROTATIONS
    )


# ---------------------------------------------------------------------------
# conditional_error
# ---------------------------------------------------------------------------

def test_conditional_error_matches_brute_force(grid8, make_prior):
    rng = np.random.default_rng(3)
    for seed in range(15):
        prior = make_prior(64, seed=seed)
        cells = rng.choice(64, size=2 + seed % 7, replace=False).tolist()
        assert conditional_error(cells, prior, grid8) == pytest.approx(
            _brute_conditional_error(cells, prior, grid8), rel=1e-12
        )


def test_conditional_error_two_equal_cells(grid4):
    prior = ProbVector.uniform(16)
    assert conditional_error([0, 1], prior, grid4) == pytest.approx(CELL / 2)


def test_conditional_error_zero_mass(grid4):
    prior = ProbVector.one_hot(16, 0)
    with pytest.raises(ZeroMass):
        conditional_error([5, 6], prior, grid4)


def test_make_pls_caches_geometry(grid4):
    pls = make_pls([5, 6, 10], 5, ProbVector.uniform(16), grid4)
    assert pls.cells == (5, 6, 10)
    assert pls.diameter_m == pytest.approx(CELL * math.sqrt(2))
    assert pls.rotation is None
    assert len(pls) == 3


def test_pls_anchor_must_be_member(grid4):
    with pytest.raises(ValueError):
        make_pls([5, 6], 7, ProbVector.uniform(16), grid4)


# ---------------------------------------------------------------------------
# search_pls
# ---------------------------------------------------------------------------

def test_search_pls_satisfies_condition(grid8, make_prior):
    for seed in range(6):
        prior, dset = _make_instance(grid8, make_prior, seed)
        for anchor in dset.cells[::5]:
            pls = search_pls(anchor, dset, prior, 0.5, 0.5 * CELL, grid8)
            assert pls.cells[0] == anchor
            assert len(pls) >= 2
            assert set(pls.cells) <= set(dset.cells)
            assert pls.satisfies(0.5, 0.5 * CELL)
            assert pls.e_value == pytest.approx(conditional_error(pls.cells, prior, grid8))


def test_search_pls_returns_curve_window(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior, seed=11)
    anchor = dset.cells[len(dset) // 2]
    pls = search_pls(anchor, dset, prior, 0.3, 0.5 * CELL, grid8)
    ranks = rank_table(grid8, pls.rotation)
    pool_by_rank = sorted(dset.cells, key=lambda c: ranks[c])
    positions = sorted(pool_by_rank.index(c) for c in pls.cells)
    assert positions == list(range(positions[0], positions[0] + len(positions)))


def test_search_pls_picks_smallest_diameter_rotation(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior, seed=4)
    anchor = dset.cells[0]
    best = search_pls(anchor, dset, prior, 0.5, 0.5 * CELL, grid8)
    for rotation in Rotation:
        try:
            single = search_pls(anchor, dset, prior, 0.5, 0.5 * CELL, grid8, rotations=[rotation])
        except Infeasible:
            continue
        assert best.diameter_m <= single.diameter_m + 1e-9


def test_search_pls_infeasible_threshold(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior)
    with pytest.raises(Infeasible):
        search_pls(dset.cells[0], dset, prior, 1.0, 100 * CELL, grid8)


def test_search_pls_anchor_outside_pool(grid8):
    prior = ProbVector.normalized(np.isin(np.arange(64), [0, 1, 8, 9]).astype(float))
    dset = delta_location_set(prior, 0.1)
    with pytest.raises(ValueError):
        search_pls(30, dset, prior, 0.5, CELL, grid8)


def test_search_pls_rejects_bad_parameters(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior)
    with pytest.raises(ValueError):
        search_pls(dset.cells[0], dset, prior, -0.1, CELL, grid8)
    with pytest.raises(ValueError):
        search_pls(dset.cells[0], dset, prior, 0.5, 0.0, grid8)


def test_growth_sequences_are_cached(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior)
    searcher = PLSSearcher(dset, prior, grid8)
    first = searcher.growth(dset.cells[0], Rotation.R90)
    assert searcher.growth(dset.cells[0], Rotation.R90) is first
    assert sorted(first.cells.tolist()) == list(dset.cells)
    assert np.all(np.diff(first.diameters) >= 0)


# ---------------------------------------------------------------------------
# search_pls_adaptive
# ---------------------------------------------------------------------------

def test_adaptive_search_without_adjustment(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior)
    searcher = PLSSearcher(dset, prior, grid8)
    pls, e_m_used, adjustments = search_pls_adaptive(searcher, dset.cells[0], 0.2, 0.4 * CELL)
    assert adjustments == 0
    assert e_m_used == 0.4 * CELL
    assert pls.satisfies(0.2, e_m_used)


def test_adaptive_search_relaxes_e_m(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior, seed=2)
    searcher = PLSSearcher(dset, prior, grid8)
    anchor = dset.cells[0]
    reachable = _largest_reachable_e(searcher, anchor)
    e_m = 1.1 * reachable / math.exp(0.5)

    pls, e_m_used, adjustments = search_pls_adaptive(searcher, anchor, 0.5, e_m, decay=0.8, max_adjustments=3)

    assert adjustments == 1
    assert e_m_used == pytest.approx(0.8 * e_m)
    assert pls.satisfies(0.5, e_m_used, slack=1e-9)


def test_adaptive_search_gives_up(grid8, make_prior):
    prior, dset = _make_instance(grid8, make_prior, seed=2)
    searcher = PLSSearcher(dset, prior, grid8)
    anchor = dset.cells[0]
    e_m = 1.1 * _largest_reachable_e(searcher, anchor) / math.exp(0.5)
    with pytest.raises(Infeasible):
        search_pls_adaptive(searcher, anchor, 0.5, e_m, decay=0.8, max_adjustments=0)
