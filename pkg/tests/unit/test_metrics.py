"""
Unit tests for ptppm/core/metrics.py

Exact metrics are checked against loop-based oracles; the Monte Carlo
estimators against the exact values.
"""
from dataclasses import replace

import numpy as np
import pytest

from ptppm.constants import AttackMode, MechanismTag
from ptppm.core.errors import MissingMechanism
from ptppm.core.mechanisms import ReleaseChannel, identity_distribution, pf_distribution
from ptppm.core.metrics import (
    attack_success,
    calibrate_epsilon,
    compare_per_location,
    dset_size_curve,
    evaluate_records,
    expected_inference_error,
    monte_carlo_privacy,
    monte_carlo_qos,
    privacy_metric,
    privacy_qos_frontier,
    qos_loss,
)
from ptppm.core.mobility import ProbVector, propagate_prior
from ptppm.core.pipeline import build_channel, run_pipeline
from ptppm.core.pls import make_pls


def _make_channel(grid_map, prior, cells, epsilon=1.0):
    pls = make_pls(cells, cells[0], prior, grid_map)
    return ReleaseChannel.from_mapping({c: pf_distribution(c, pls, epsilon, grid_map) for c in cells}, grid_map.n_cells)


def _restricted_prior(n, cells, seed=0):
    rng = np.random.default_rng(seed)
    w = np.zeros(n)
    w[cells] = rng.random(len(cells)) + 0.1
    return ProbVector.normalized(w)


def _oracle(prior, channel, grid_map, mode):
    """(privacy, qos, success) by explicit loops."""
    f = channel.matrix()
    dist = grid_map.distance_matrix
    n = grid_map.n_cells
    privacy = qos = success = 0.0
    for r in range(n):
        joint = [prior.p[x] * f[x, r] for x in range(n)]
        if sum(joint) == 0:
            continue
        if mode is AttackMode.OPTIMAL:
            costs = [sum(joint[x] * dist[g, x] for x in range(n)) for g in range(n)]
            guess = costs.index(min(costs))
        else:
            guess = joint.index(max(joint))
        for x in range(n):
            privacy += joint[x] * dist[x, guess]
            qos += joint[x] * dist[x, r]
        success += joint[guess]
    return privacy, qos, success


# ---------------------------------------------------------------------------
# Exact metrics
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("mode", [AttackMode.OPTIMAL, AttackMode.BAYESIAN])
def test_exact_metrics_match_oracle(grid4, mode):
    cells = [5, 6, 9, 10, 1]
    prior = _restricted_prior(16, cells, seed=1)
    channel = _make_channel(grid4, prior, cells, epsilon=1.2)
    privacy, qos, success = _oracle(prior, channel, grid4, mode)
    assert privacy_metric(prior, channel, mode, grid4) == pytest.approx(privacy, rel=1e-10)
    assert qos_loss(prior, channel, grid4) == pytest.approx(qos, rel=1e-10)
    assert attack_success(prior, channel, mode, grid4) == pytest.approx(success, rel=1e-10)


def test_identity_channel_has_no_privacy(grid4):
    prior = ProbVector.uniform(16)
    channel = ReleaseChannel.from_mapping({c: identity_distribution(c) for c in range(16)}, 16)
    assert privacy_metric(prior, channel, AttackMode.OPTIMAL, grid4) == 0.0
    assert qos_loss(prior, channel, grid4) == 0.0
    assert attack_success(prior, channel, AttackMode.BAYESIAN, grid4) == pytest.approx(1.0)


def test_metrics_require_cover(grid4):
    cells = [5, 6]
    channel = _make_channel(grid4, _restricted_prior(16, cells), cells)
    with pytest.raises(MissingMechanism):
        qos_loss(ProbVector.uniform(16), channel, grid4)


def test_attacker_prior_changes_guesses(grid4):
    cells = [5, 6, 9, 10]
    prior = _restricted_prior(16, cells, seed=2)
    channel = _make_channel(grid4, prior, cells, epsilon=0.5)
    wrong = ProbVector.normalized(np.where(np.isin(np.arange(16), cells), [1.0] * 16, 0.0) * np.arange(1, 17))
    informed = attack_success(prior, channel, AttackMode.BAYESIAN, grid4)
    misled = attack_success(prior, channel, AttackMode.BAYESIAN, grid4, attacker_prior=wrong)
    assert misled <= informed + 1e-12


def test_expected_inference_error(grid4):
    cells = [5, 6]
    prior = _restricted_prior(16, cells)
    channel = _make_channel(grid4, prior, cells)
    weights = prior.p * channel.likelihood(6)
    expected = min(grid4.distance_matrix[g] @ weights for g in range(16)) / weights.sum()
    assert expected_inference_error(prior, channel, 6, grid4) == pytest.approx(expected)
    assert expected_inference_error(prior, channel, 0, grid4) == float("inf")


# ---------------------------------------------------------------------------
# Monte Carlo cross-checks
# ---------------------------------------------------------------------------

def test_monte_carlo_agrees_with_exact(grid8):
    cells = [18, 19, 20, 26, 27, 28, 35]
    prior = _restricted_prior(64, cells, seed=4)
    channel = _make_channel(grid8, prior, cells, epsilon=0.8)
    rng = np.random.default_rng(0)
    p_mean, p_se = monte_carlo_privacy(prior, channel, AttackMode.OPTIMAL, grid8, 20000, rng)
    q_mean, q_se = monte_carlo_qos(prior, channel, grid8, 20000, rng)
    assert abs(p_mean - privacy_metric(prior, channel, AttackMode.OPTIMAL, grid8)) < 5 * p_se + 1e-9
    assert abs(q_mean - qos_loss(prior, channel, grid8)) < 5 * q_se + 1e-9


# ---------------------------------------------------------------------------
# Trends and comparisons
# ---------------------------------------------------------------------------

def test_dset_size_curve_non_increasing(make_prior):
    sizes = dset_size_curve(make_prior(50, seed=3), [0.01, 0.05, 0.1, 0.2])
    assert sizes == sorted(sizes, reverse=True)


def test_calibrate_epsilon_linear_objective():
    assert calibrate_epsilon(3.0, lambda e: 2.0 * e) == pytest.approx(1.5, abs=1e-4)


def test_calibrate_epsilon_unbracketed():
    with pytest.raises(ValueError):
        calibrate_epsilon(100.0, lambda e: e)


def test_privacy_qos_frontier(pipeline_cfg8):
    prior = propagate_prior(pipeline_cfg8.start_posterior, pipeline_cfg8.transition)
    points = privacy_qos_frontier(prior, [0.2, 0.6], pipeline_cfg8)
    assert [p.epsilon for p in points] == [0.2, 0.6]
    assert all(p.privacy >= 0 and p.qos_loss > 0 for p in points)


def test_compare_per_location(pipeline_cfg8):
    prior = propagate_prior(pipeline_cfg8.start_posterior, pipeline_cfg8.transition)
    summary = compare_per_location(prior, ProbVector.uniform(64), pipeline_cfg8)
    dset_cells = build_channel(prior, pipeline_cfg8).dset.cells
    assert [row.cell for row in summary.rows] == list(dset_cells)
    assert 0.0 <= summary.error_better_fraction <= 1.0
    assert 0.0 <= summary.success_better_fraction <= 1.0


# ---------------------------------------------------------------------------
# evaluate_records
# ---------------------------------------------------------------------------

def test_evaluate_records_one_row_per_step(pipeline_cfg8, walks8):
    records = run_pipeline(walks8[0], pipeline_cfg8, rng_seed=1)
    steps = evaluate_records(records, pipeline_cfg8)
    assert [s.t for s in steps] == [r.t for r in records]
    for step, record in zip(steps, records):
        assert step.dset_size == record.dset_size
        assert 0.0 <= step.success_bayesian <= 1.0
        assert step.privacy_optimal <= step.privacy_bayesian + 1e-9
        if record.skipped:
            assert step.qos_loss == 0.0


def test_evaluate_records_first_step_matches_exact(pipeline_cfg8, walks8):
    records = run_pipeline(walks8[1], pipeline_cfg8, rng_seed=2)
    first = evaluate_records(records, pipeline_cfg8)[0]
    if not records[0].skipped:
        assert first.qos_loss == pytest.approx(qos_loss(records[0].prior, records[0].channel, pipeline_cfg8.grid_map))


def test_evaluate_records_with_perturbed_attacker(pipeline_cfg8, walks8):
    attacker = pipeline_cfg8.transition.perturbed(0.3, np.random.default_rng(0))
    cfg = replace(pipeline_cfg8, attacker_transition=attacker)
    records = run_pipeline(walks8[0], cfg, rng_seed=1)
    assert len(evaluate_records(records, cfg)) == len(records)


def test_evaluate_records_empty(pipeline_cfg8):
    assert evaluate_records([], pipeline_cfg8) == []


def test_frontier_mechanism_override(pipeline_cfg8):
    prior = propagate_prior(pipeline_cfg8.start_posterior, pipeline_cfg8.transition)
    pf = privacy_qos_frontier(prior, [1.0], pipeline_cfg8)[0]
    em = privacy_qos_frontier(prior, [1.0], pipeline_cfg8, mechanism=MechanismTag.EXP)[0]
    assert pf.qos_loss < em.qos_loss
