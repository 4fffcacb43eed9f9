"""Exp3-IX core: weights, sampling, loss estimation, learning-rate schedule."""

import math

import numpy as np
import pytest

from banditix.exp3ix import (
    Exp3IXState,
    RoundObservation,
    exp3_default_gamma,
    exp3_init,
    exp3_round,
    exp3_weights,
    exp3dom_init,
    exp3dom_round,
    exp3ix_init,
    exp3ix_rate,
    exp3ix_round,
    hedge_init,
    hedge_round,
    ix_estimate,
    q_value,
)
from banditix.graphs import ObservabilityGraph, greedy_dominating_set
from banditix.rng import make_stream


def complete(d):
    return ObservabilityGraph(d, [(j, i) for j in range(d) for i in range(d) if i != j])


def test_exp3_weights_frozen_example():
    p = exp3_weights(np.array([0.0, math.log(2.0)]), 1.0)
    assert np.allclose(p, [2.0 / 3.0, 1.0 / 3.0], rtol=0, atol=1e-15)


def test_exp3_weights_uniform_and_shift_invariance():
    rng = np.random.default_rng(0)
    for _ in range(30):
        d = int(rng.integers(2, 10))
        cum = rng.random(d) * 50
        eta = rng.uniform(0.01, 2.0)
        p = exp3_weights(cum, eta)
        assert p.shape == (d,)
        assert np.all(p > 0)
        assert abs(p.sum() - 1.0) < 1e-12
        # adding a constant to all losses leaves the distribution unchanged
        q = exp3_weights(cum + 17.3, eta)
        assert np.allclose(p, q, rtol=1e-12)
    # eta = 0 gives the uniform distribution
    p = exp3_weights(np.array([5.0, 0.0, 2.0]), 0.0)
    assert np.allclose(p, 1.0 / 3.0)


def test_exp3_weights_extreme_losses_stable():
    # very large cumulative estimates must not overflow or collapse to nan
    cum = np.array([0.0, 5000.0, 10000.0])
    p = exp3_weights(cum, 1.0)
    assert np.isfinite(p).all()
    assert abs(p.sum() - 1.0) < 1e-12
    assert p[0] > 0.999


def test_ix_estimate_values():
    observed = np.array([True, True, False])
    obs = RoundObservation(chosen=0, observed=observed, values=np.array([0.5, 0.25]))
    o = np.array([0.6, 0.9, 0.4])
    est = ix_estimate(obs, o, gamma=0.1)
    assert est[0] == pytest.approx(0.5 / 0.7, rel=0, abs=1e-15)
    assert est[1] == pytest.approx(0.25 / 1.0, rel=0, abs=1e-15)
    assert est[2] == 0.0


def test_ix_estimate_validation():
    observed = np.array([True, False])
    o = np.array([0.5, 0.5])
    good = RoundObservation(chosen=0, observed=observed, values=np.array([0.5]))
    with pytest.raises(ValueError):
        ix_estimate(good, o, gamma=0.0)  # gamma must be positive
    with pytest.raises(ValueError):
        bad_loss = RoundObservation(0, observed, np.array([1.5]))
        ix_estimate(bad_loss, o, gamma=0.1)
    with pytest.raises(ValueError):
        blind = RoundObservation(1, observed, np.array([0.5]))  # chosen unobserved
        ix_estimate(blind, o, gamma=0.1)
    with pytest.raises(ValueError):
        misaligned = RoundObservation(0, observed, np.array([0.5, 0.5]))
        ix_estimate(misaligned, o, gamma=0.1)


def test_q_value():
    p = np.array([0.25, 0.75])
    o = np.array([0.5, 1.0])
    q = q_value(p, o, gamma=0.5)
    assert q == pytest.approx(0.25 / 1.0 + 0.75 / 1.5, rel=1e-15)
    with pytest.raises(ValueError):
        q_value(p, o, gamma=0.0)


def test_exp3ix_rate_frozen():
    assert exp3ix_rate(10, 0.0) == 0.47985259121880813
    assert exp3ix_rate(10, 1.0) == 0.45752149407969156
    # decreasing in accumulated q, decreasing in d
    assert exp3ix_rate(10, 5.0) < exp3ix_rate(10, 1.0)
    assert exp3ix_rate(20, 0.0) < exp3ix_rate(10, 0.0)
    with pytest.raises(ValueError):
        exp3ix_rate(1, 0.0)
    with pytest.raises(ValueError):
        exp3ix_rate(5, -0.5)


def test_exp3ix_round_complete_graph_exact():
    """On the complete graph every loss is observed with o = 1 exactly."""
    d = 6
    g = complete(d)
    rng = make_stream(0, 0, "policy")
    state = exp3ix_init(d)
    losses = np.linspace(0.0, 1.0, d)
    chosen, state, info = exp3ix_round(state, g, losses, rng)
    gamma = info["rate"]
    assert gamma == exp3ix_rate(d, 0.0)
    assert np.all(info["o"] == 1.0)
    assert np.allclose(info["estimates"], losses / (1.0 + gamma), rtol=0, atol=0)
    assert info["q"] == pytest.approx(1.0 / (1.0 + gamma), rel=1e-15)
    assert np.array_equal(state.cum_est, losses / (1.0 + gamma))
    assert state.sum_q == info["q"]
    assert state.t == 2


def test_exp3ix_round_manual_recompute():
    """Re-derive one round by hand from the state and the drawn uniform."""
    d = 4
    g = ObservabilityGraph(d, [(0, 1), (2, 3), (3, 2)])
    base = Exp3IXState(
        d=d,
        cum_est=np.array([0.3, 0.0, 1.2, 0.4]),
        sum_q=2.0,
        t=3,
    )
    losses = np.array([0.9, 0.1, 0.5, 0.3])

    rng = make_stream(5, 1, "policy")
    chosen, new_state, info = exp3ix_round(base, g, losses, rng)

    gamma = exp3ix_rate(d, base.sum_q)
    shifted = base.cum_est - base.cum_est.min()
    w = np.exp(-gamma * shifted)
    p = w / w.sum()
    # the same uniform is consumed by an identical fresh stream
    u = make_stream(5, 1, "policy").random()
    expected_chosen = int(np.searchsorted(np.cumsum(p), u, side="right"))
    assert chosen == expected_chosen

    adj = g.adjacency().astype(bool)
    observed = adj[chosen]
    o = adj.T.astype(float) @ p
    est = np.where(observed, losses / (o + gamma), 0.0)
    assert np.allclose(info["p"], p, rtol=1e-15)
    assert np.allclose(info["estimates"], est, rtol=1e-14)
    assert np.allclose(new_state.cum_est, base.cum_est + est, rtol=1e-14)
    assert info["q"] == pytest.approx(np.sum(p / (o + gamma)), rel=1e-14)
    assert new_state.sum_q == pytest.approx(base.sum_q + info["q"], rel=1e-15)
    assert info["incurred"] == losses[chosen]
    assert info["support"] == (chosen,)
    assert new_state.t == 4


def test_exp3ix_unobserved_entries_stay_zero():
    d = 5
    g = ObservabilityGraph(d)  # no side observations
    rng = make_stream(2, 0, "policy")
    state = exp3ix_init(d)
    losses = np.full(d, 0.5)
    chosen, state, info = exp3ix_round(state, g, losses, rng)
    nz = np.flatnonzero(info["estimates"])
    assert nz.tolist() == [chosen]
    assert np.flatnonzero(state.cum_est).tolist() == [chosen]


def test_exp3ix_estimator_optimistic_in_expectation():
    """Monte Carlo: E[loss estimate] <= true loss, within 4 standard errors."""
    d = 4
    g = ObservabilityGraph(d, [(0, 1), (1, 2)])
    state = Exp3IXState(
        d=d, cum_est=np.array([0.2, 0.8, 0.1, 0.5]), sum_q=1.5, t=2
    )
    losses = np.array([0.7, 0.4, 0.9, 0.2])
    n = 40000
    rng = make_stream(42, 0, "policy")
    total = np.zeros(d)
    for _ in range(n):
        _, _, info = exp3ix_round(state, g, losses, rng)
        total += info["estimates"]
    gamma = exp3ix_rate(d, state.sum_q)
    shifted = state.cum_est - state.cum_est.min()
    w = np.exp(-gamma * shifted)
    p = w / w.sum()
    o = g.adjacency().T.astype(float) @ p
    expected = losses * o / (o + gamma)
    emp = total / n
    # per-component standard error of the mean of the estimate
    var = (losses / (o + gamma)) ** 2 * o * (1 - o)
    se = np.sqrt(np.maximum(var, 1e-30) / n)
    assert np.all(expected <= losses + 1e-12)
    assert np.all(np.abs(emp - expected) <= 4 * se + 1e-9)


def test_exp3_round_importance_weighting():
    d = 3
    g = ObservabilityGraph(d)
    state = exp3_init(d, horizon=100)
    assert state.eta == pytest.approx(math.sqrt(math.log(d) / (d * 100)), rel=1e-15)
    losses = np.array([0.2, 0.6, 0.9])
    rng = make_stream(9, 0, "policy")
    gamma_explore = 0.1
    chosen, new_state, info = exp3_round(state, g, losses, rng, gamma_explore)
    s = info["sampling"]
    assert np.all(s >= gamma_explore / d - 1e-15)
    assert abs(s.sum() - 1.0) < 1e-12
    est = np.zeros(d)
    est[chosen] = losses[chosen] / s[chosen]
    assert np.allclose(new_state.cum_est, est, rtol=1e-14)
    with pytest.raises(ValueError):
        exp3_round(state, g, losses, rng, 1.5)


def test_exp3_default_gamma():
    g = exp3_default_gamma(10, 1000)
    assert g == pytest.approx(
        min(1.0, math.sqrt(10 * math.log(10) / ((math.e - 1) * 1000))), rel=1e-15
    )
    assert exp3_default_gamma(10, 1) == 1.0


def test_exp3dom_round_mixture_and_estimate():
    d = 5
    g = ObservabilityGraph(d, [(0, i) for i in range(1, d)])  # star
    dom = greedy_dominating_set(g)
    assert dom == [0]
    state = exp3dom_init(d)
    losses = np.array([0.1, 0.9, 0.4, 0.6, 0.2])
    rng = make_stream(3, 2, "policy")
    gamma = 0.2
    chosen, new_state, info = exp3dom_round(state, g, losses, rng, gamma)
    s = info["sampling"]
    # fresh state: weights are uniform, so s = (1-gamma)/d plus the dom bonus
    assert s[0] == pytest.approx((1 - gamma) / d + gamma, rel=1e-14)
    assert np.allclose(s[1:], (1 - gamma) / d, rtol=1e-14)
    # estimates divide by the induced observation probability (no bias term)
    o = g.adjacency().T.astype(float) @ s
    observed = g.adjacency().astype(bool)[chosen]
    est = np.where(observed, losses / o, 0.0)
    assert np.allclose(new_state.cum_est, est, rtol=1e-13)
    with pytest.raises(ValueError):
        exp3dom_round(state, g, losses, rng, 0.0)


def test_hedge_full_information():
    d = 4
    g = ObservabilityGraph(d)
    state = hedge_init(d)
    losses = np.array([0.25, 0.5, 0.75, 1.0])
    rng = make_stream(1, 0, "policy")
    chosen, state, info = hedge_round(state, g, losses, rng)
    assert info["rate"] == pytest.approx(math.sqrt(8 * math.log(d) / 1), rel=1e-15)
    # full information: the update uses the true losses, not estimates
    assert np.array_equal(state.cum_loss, losses)
    chosen, state, info = hedge_round(state, g, losses, rng)
    assert info["rate"] == pytest.approx(math.sqrt(8 * math.log(d) / 2), rel=1e-15)
    assert np.array_equal(state.cum_loss, 2 * losses)


def test_round_observation_alignment():
    obs = RoundObservation(
        chosen=1,
        observed=np.array([False, True, True]),
        values=np.array([0.5, 0.7]),
    )
    assert obs.chosen == 1
    assert obs.values.shape == (2,)
