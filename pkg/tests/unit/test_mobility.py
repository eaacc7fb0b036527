"""
Unit tests for ptppm/core/mobility.py

Tests trajectories, the transition matrix, prior propagation, Bayes updates,
the delta-location set (against an exhaustive oracle) and surrogates.
"""
import itertools

import numpy as np
import pytest

from ptppm.core.errors import DimensionMismatch, EmptyInput, ZeroEvidence
from ptppm.core.mobility import (
    ProbVector,
    Trajectory,
    TransitionMatrix,
    build_transition_matrix,
    delta_location_set,
    initial_posterior,
    posterior,
    propagate_prior,
    surrogate_location,
)


class _FixedLikelihood:
    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}

    def likelihood(self, released):
        return self.table[released]


def _min_cardinality(p, delta):
    """Smallest subset size with mass >= 1 - delta, by exhaustive search."""
    n = len(p)
    for k in range(1, n + 1):
        if any(sum(p[list(c)]) >= 1 - delta - 1e-12 for c in itertools.combinations(range(n), k)):
            return k
    return n


# ---------------------------------------------------------------------------
# Trajectory / ProbVector
# ---------------------------------------------------------------------------

def test_trajectory_from_cells():
    traj = Trajectory.from_cells([4, 5, 5], user_id="u", start=10)
    assert traj.steps == ((10, 4), (11, 5), (12, 5))
    assert traj.cells == [4, 5, 5]
    assert len(traj) == 3


def test_trajectory_requires_increasing_time():
    with pytest.raises(ValueError):
        Trajectory(user_id="u", steps=((3, 1), (3, 2)))


def test_prob_vector_rejects_bad_sum():
    with pytest.raises(ValueError):
        ProbVector(np.array([0.5, 0.4]))


def test_prob_vector_rejects_negative():
    with pytest.raises(ValueError):
        ProbVector(np.array([1.5, -0.5]))


def test_prob_vector_is_immutable():
    pv = ProbVector.uniform(4)
    with pytest.raises(ValueError):
        pv.p[0] = 1.0


def test_initial_posterior(grid4):
    assert initial_posterior(grid4)[3] == pytest.approx(1 / 16)
    assert initial_posterior(grid4, 5)[5] == 1.0


# ---------------------------------------------------------------------------
# Transition matrix
# ---------------------------------------------------------------------------

def test_transition_matrix_counts_consecutive_pairs(grid4):
    trajs = [Trajectory.from_cells([0, 1, 0, 1]), Trajectory.from_cells([0, 4])]
    m = build_transition_matrix(trajs, grid4)
    assert m.counts[0, 1] == 2
    assert m.counts[0, 4] == 1
    assert m.probs[0, 1] == pytest.approx(2 / 3)
    assert m.probs[1, 0] == 1.0
    np.testing.assert_allclose(m.probs.sum(axis=1), 1.0, atol=1e-12)


def test_unobserved_rows_stay_put(grid4):
    m = build_transition_matrix([Trajectory.from_cells([0, 1])], grid4)
    assert m.probs[9, 9] == 1.0


def test_smoothing_fills_every_entry(grid4):
    m = build_transition_matrix([Trajectory.from_cells([0, 1])], grid4, smoothing=1.0)
    assert np.all(m.probs > 0)
    assert m.probs[0, 1] == pytest.approx(2 / 17)


def test_transition_matrix_needs_two_steps(grid4):
    with pytest.raises(EmptyInput):
        build_transition_matrix([Trajectory.from_cells([3])], grid4)


def test_transition_matrix_rejects_foreign_cells(grid4):
    with pytest.raises(DimensionMismatch):
        build_transition_matrix([Trajectory.from_cells([0, 16])], grid4)


def test_perturbed_rows_remain_stochastic():
    m = TransitionMatrix.identity(6)
    noisy = m.perturbed(0.3, np.random.default_rng(1))
    np.testing.assert_allclose(noisy.probs.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.diag(noisy.probs) >= 0.7)
    assert not np.allclose(noisy.probs, m.probs)


def test_perturbed_strength_range():
    with pytest.raises(ValueError):
        TransitionMatrix.identity(3).perturbed(1.5, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# propagate_prior / posterior
# ---------------------------------------------------------------------------

def test_propagate_prior_is_row_vector_product():
    m = TransitionMatrix.from_probs(np.array([[0.5, 0.5, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]))
    prior = propagate_prior(ProbVector(np.array([0.2, 0.3, 0.5])), m)
    np.testing.assert_allclose(prior.p, [0.6, 0.1, 0.3])


def test_propagate_prior_two_state_example():
    m = TransitionMatrix.from_probs(np.array([[0.5, 0.5], [0.0, 1.0]]))
    np.testing.assert_allclose(propagate_prior(ProbVector.uniform(2), m).p, [0.25, 0.75], atol=1e-12)


def test_propagate_prior_one_hot_and_identity():
    rng = np.random.default_rng(4)
    m = TransitionMatrix.from_probs(rng.dirichlet(np.ones(6), size=6))
    np.testing.assert_allclose(propagate_prior(ProbVector.one_hot(6, 2), m).p, m.probs[2], atol=1e-12)
    prior = ProbVector.normalized(rng.random(6))
    np.testing.assert_allclose(propagate_prior(prior, TransitionMatrix.identity(6)).p, prior.p, atol=1e-12)


def test_propagate_prior_preserves_mass_for_random_matrices():
    rng = np.random.default_rng(21)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        m = TransitionMatrix.from_probs(rng.dirichlet(np.full(n, float(rng.uniform(0.1, 2.0))), size=n))
        weights = rng.random(n)
        weights[rng.random(n) < 0.3] = 0.0
        weights[0] += 0.01
        prior = ProbVector.normalized(weights)
        out = propagate_prior(prior, m)
        assert abs(out.p.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(out.p, prior.p @ m.probs, rtol=0, atol=1e-12)


def test_propagate_prior_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        propagate_prior(ProbVector.uniform(3), TransitionMatrix.identity(4))


def test_posterior_bayes_rule():
    prior = ProbVector(np.array([0.5, 0.25, 0.25]))
    mech = _FixedLikelihood({7: [0.2, 0.4, 0.0]})
    post = posterior(prior, 7, mech)
    np.testing.assert_allclose(post.p, [0.5, 0.5, 0.0])


def test_posterior_two_cell_example():
    post = posterior(ProbVector.uniform(2), 0, _FixedLikelihood({0: [0.6, 0.2]}))
    np.testing.assert_allclose(post.p, [0.75, 0.25], atol=1e-12)


def test_posterior_keeps_one_hot_prior():
    post = posterior(ProbVector.one_hot(4, 1), 3, _FixedLikelihood({3: [0.1, 0.05, 0.7, 0.15]}))
    np.testing.assert_array_equal(post.p, [0.0, 1.0, 0.0, 0.0])


def test_posterior_matches_brute_force_bayes():
    rng = np.random.default_rng(33)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        prior = ProbVector.normalized(rng.random(n) * (rng.random(n) > 0.2) + 1e-3 * (np.arange(n) == 0))
        released = int(rng.integers(n))
        lik = rng.random(n)
        post = posterior(prior, released, _FixedLikelihood({released: lik}))
        evidence = sum(prior[x] * lik[x] for x in range(n))
        expected = [prior[x] * lik[x] / evidence for x in range(n)]
        assert np.max(np.abs(post.p - expected)) < 1e-12


def test_posterior_zero_evidence():
    prior = ProbVector(np.array([1.0, 0.0]))
    with pytest.raises(ZeroEvidence):
        posterior(prior, 1, _FixedLikelihood({1: [0.0, 1.0]}))


# ---------------------------------------------------------------------------
# delta_location_set
# ---------------------------------------------------------------------------

def test_delta_location_set_small_example():
    prior = ProbVector(np.array([0.1, 0.5, 0.05, 0.35]))
    dset = delta_location_set(prior, 0.2)
    assert dset.cells == (1, 3)
    assert dset.covered_mass == pytest.approx(0.85)


def test_delta_location_set_ties_by_cell_id():
    dset = delta_location_set(ProbVector.uniform(4), 0.5)
    assert dset.cells == (0, 1)


def test_delta_location_set_skips_zero_mass():
    prior = ProbVector(np.array([0.0, 0.6, 0.4, 0.0]))
    assert delta_location_set(prior, 0.01).cells == (1, 2)


def test_delta_location_set_delta_range():
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            delta_location_set(ProbVector.uniform(3), bad)


def test_delta_location_set_is_minimal(make_prior):
    for seed in range(40):
        n = 4 + seed % 9
        prior = make_prior(n, seed=seed, zeros=seed % 3)
        for delta in (0.05, 0.2, 0.5):
            dset = delta_location_set(prior, delta)
            assert dset.covered_mass >= 1 - delta - 1e-12
            assert len(dset) == _min_cardinality(prior.p, delta)


# ---------------------------------------------------------------------------
# surrogate_location
# ---------------------------------------------------------------------------

def test_surrogate_is_true_cell_when_inside(grid4):
    dset = delta_location_set(ProbVector.one_hot(16, 5), 0.1)
    assert surrogate_location(5, dset, grid4) == 5


def test_surrogate_is_nearest_cell(grid4):
    prior = ProbVector.normalized(np.isin(np.arange(16), [0, 3, 15]).astype(float))
    dset = delta_location_set(prior, 0.01)
    assert surrogate_location(7, dset, grid4) == 3


def test_surrogate_ties_go_to_lower_id(grid4):
    prior = ProbVector.normalized(np.isin(np.arange(16), [4, 6]).astype(float))
    dset = delta_location_set(prior, 0.01)
    assert surrogate_location(5, dset, grid4) == 4
