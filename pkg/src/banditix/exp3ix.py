"""Exp3-IX and the weight-based baselines (Exp3, Exp3-DOM, anytime Hedge).

Exp3-IX plays exponential weights over loss estimates and biases the
importance weights with an implicit-exploration term: the loss of every
observed component i is estimated by

    lhat_i = O_i * l_i / (o_i + gamma_t),

where o_i is the probability that i is observed under the current sampling
distribution and gamma_t > 0 is the implicit-exploration parameter.  The bias
introduced by gamma keeps every estimate bounded by 1/gamma without any
explicit uniform mixing, and the same parameter doubles as the learning rate
on the adaptive schedule

    eta_t = gamma_t = sqrt(log d / (d + sum_{s<t} Q_s)),
    Q_t   = sum_i p_{t,i} / (o_{t,i} + gamma_t).

Observation probabilities are computed from the *unnormalized* weights,
o_i = (sum of w_j over j -> i) / W, so that on a complete graph the numerator
and denominator are the same sum evaluated in the same order and o_i == 1.0
holds exactly in floating point.
"""

import math
from dataclasses import dataclass

import numpy as np

from .graphs import greedy_dominating_set, observation_indicators


def _check_losses(values):
    values = np.asarray(values, dtype=np.float64)
    if values.size and (not np.all(np.isfinite(values)) or values.min() < 0 or values.max() > 1):
        raise ValueError("losses must lie in [0, 1]")
    return values


def _stable_weights(cum_est, eta):
    """Unnormalized exponential weights exp(-eta * cum_est), max-shifted.

    Shifting by the minimum cumulative estimate puts the largest weight at
    exactly 1, so the sum W never overflows and p = w / W is safe for any
    magnitude of cumulative estimates.
    """
    cum = np.asarray(cum_est, dtype=np.float64)
    w = np.exp(-eta * (cum - cum.min()))
    return w, float(np.sum(w))


def exp3_weights(cum_est, eta):
    """Sampling distribution p_i proportional to exp(-eta * cum_est_i)."""
    cum = np.asarray(cum_est, dtype=np.float64)
    if not np.all(np.isfinite(cum)):
        raise ValueError("cumulative estimates must be finite")
    if not (np.isfinite(eta) and eta >= 0):
        raise ValueError(f"eta must be finite and >= 0, got {eta}")
    w, total = _stable_weights(cum, eta)
    return w / total


def _sample_index(p, rng):
    """Inverse-CDF draw from p using a single uniform."""
    cdf = np.cumsum(p)
    u = rng.random()
    return int(min(np.searchsorted(cdf, u, side="right"), len(p) - 1))


def _weight_observation_probs(graph, w, total):
    """o_i = (sum of w_j over j with j -> i) / W, straight from the weights."""
    o = np.empty(graph.d, dtype=np.float64)
    for i in range(graph.d):
        o[i] = np.sum(w[graph.closed_in_indices(i)]) / total
    return o


@dataclass(frozen=True)
class RoundObservation:
    """What one bandit round reveals: the action and the observed losses.

    ``values`` holds the loss of each observed component, aligned with
    ``np.flatnonzero(observed)``.
    """

    chosen: int
    observed: np.ndarray
    values: np.ndarray


def ix_estimate(obs, o, gamma):
    """Implicit-exploration loss estimates for one round.

    Returns the full d-vector with lhat_i = l_i / (o_i + gamma) on observed
    components and 0 elsewhere.  Requires gamma > 0 (that is the whole point)
    and o_i >= 0.
    """
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be finite and positive, got {gamma}")
    o = np.asarray(o, dtype=np.float64)
    if np.any(o < 0) or not np.all(np.isfinite(o)):
        raise ValueError("observation probabilities must be finite and >= 0")
    observed = np.asarray(obs.observed, dtype=bool)
    if o.shape != observed.shape:
        raise ValueError("o and observed shapes differ")
    if not observed[obs.chosen]:
        raise ValueError("the chosen component must observe itself")
    values = _check_losses(obs.values)
    idx = np.flatnonzero(observed)
    if values.shape != idx.shape:
        raise ValueError("one loss value per observed component expected")
    est = np.zeros(o.shape[0], dtype=np.float64)
    est[idx] = values / (o[idx] + gamma)
    return est


def q_value(p, o, gamma):
    """Q = sum_i p_i / (o_i + gamma), the per-round stability term."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be finite and positive, got {gamma}")
    p = np.asarray(p, dtype=np.float64)
    o = np.asarray(o, dtype=np.float64)
    return float(np.sum(p / (o + gamma)))


def exp3ix_rate(d, sum_q):
    """Adaptive learning rate eta_t = sqrt(log d / (d + sum of past Q_s))."""
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    if not (np.isfinite(sum_q) and sum_q >= 0):
        raise ValueError(f"sum_q must be finite and >= 0, got {sum_q}")
    return math.sqrt(math.log(d) / (d + sum_q))


@dataclass(frozen=True)
class Exp3IXState:
    d: int
    cum_est: np.ndarray
    sum_q: float = 0.0
    t: int = 1


def exp3ix_init(d):
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    return Exp3IXState(d=int(d), cum_est=np.zeros(int(d), dtype=np.float64))


def exp3ix_round(state, graph, losses, rng):
    """One full Exp3-IX round: sample, observe along the graph, update.

    ``losses`` only needs elementwise indexing; entries are read exactly for
    the components revealed by the played action's out-neighborhood.
    Returns ``(action, new_state, info)`` where info carries the per-round
    log fields (rate, q, support, incurred, observed).
    """
    d = state.d
    if graph.d != d:
        raise ValueError(f"graph has d={graph.d}, state has d={d}")
    eta = exp3ix_rate(d, state.sum_q)
    w, total = _stable_weights(state.cum_est, eta)
    p = w / total
    chosen = _sample_index(p, rng)
    observed = observation_indicators(graph, [chosen])
    o = _weight_observation_probs(graph, w, total)
    idx = np.flatnonzero(observed)
    values = np.array([float(losses[i]) for i in idx], dtype=np.float64)
    est = ix_estimate(RoundObservation(chosen, observed, values), o, eta)
    q = q_value(p, o, eta)
    new_state = Exp3IXState(d, state.cum_est + est, state.sum_q + q, state.t + 1)
    info = {
        "support": (chosen,),
        "incurred": float(losses[chosen]),
        "rate": eta,
        "q": q,
        "observed": observed,
        "p": p,
        "o": o,
        "estimates": est,
    }
    return chosen, new_state, info


# --- Exp3 (no side observations) -----------------------------------------


@dataclass(frozen=True)
class Exp3State:
    d: int
    cum_est: np.ndarray
    eta: float
    t: int = 1


def exp3_default_gamma(d, horizon):
    """Classic uniform-exploration tuning: min(1, sqrt(d log d / ((e-1) T)))."""
    return min(1.0, math.sqrt(d * math.log(d) / ((math.e - 1.0) * horizon)))


def exp3_init(d, horizon):
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    eta = math.sqrt(math.log(d) / (d * horizon))
    return Exp3State(d=int(d), cum_est=np.zeros(int(d), dtype=np.float64), eta=eta)


def exp3_round(state, graph, losses, rng, gamma_explore):
    """Vanilla Exp3 round: importance weighting by s_I only, side info unused."""
    if not (0.0 <= gamma_explore <= 1.0):
        raise ValueError(f"gamma_explore must be in [0, 1], got {gamma_explore}")
    d = state.d
    w, total = _stable_weights(state.cum_est, state.eta)
    p = w / total
    s = (1.0 - gamma_explore) * p + gamma_explore / d
    chosen = _sample_index(s, rng)
    est = np.zeros(d, dtype=np.float64)
    est[chosen] = float(losses[chosen]) / s[chosen]
    new_state = Exp3State(d, state.cum_est + est, state.eta, state.t + 1)
    info = {
        "support": (chosen,),
        "incurred": float(losses[chosen]),
        "rate": state.eta,
        "sampling": s,
    }
    return chosen, new_state, info


# --- Exp3-DOM (explicit exploration on a dominating set) ------------------


@dataclass(frozen=True)
class Exp3DOMState:
    d: int
    cum_est: np.ndarray
    t: int = 1


def exp3dom_init(d):
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    return Exp3DOMState(d=int(d), cum_est=np.zeros(int(d), dtype=np.float64))


def exp3dom_round(state, graph, losses, rng, gamma):
    """Exp3-DOM round: mix gamma of uniform-on-dominating-set exploration.

    The dominating set of the *current* graph is recomputed every round —
    this baseline is allowed to inspect the graph before acting.  Estimates
    are plainly importance-weighted (no implicit-exploration bias), which is
    sound here because o_i >= gamma / |D| for every i.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    d = state.d
    if graph.d != d:
        raise ValueError(f"graph has d={graph.d}, state has d={d}")
    dom = greedy_dominating_set(graph)
    w, total = _stable_weights(state.cum_est, gamma)
    p = w / total
    s = (1.0 - gamma) * p
    s[dom] += gamma / len(dom)
    chosen = _sample_index(s, rng)
    observed = observation_indicators(graph, [chosen])
    o = np.empty(d, dtype=np.float64)
    for i in range(d):
        o[i] = np.sum(s[graph.closed_in_indices(i)])
    est = np.zeros(d, dtype=np.float64)
    for i in np.flatnonzero(observed):
        est[i] = float(losses[i]) / o[i]
    new_state = Exp3DOMState(d, state.cum_est + est, state.t + 1)
    info = {
        "support": (chosen,),
        "incurred": float(losses[chosen]),
        "rate": gamma,
        "observed": observed,
        "sampling": s,
    }
    return chosen, new_state, info


# --- Hedge (full information) ---------------------------------------------


@dataclass(frozen=True)
class HedgeState:
    d: int
    cum_loss: np.ndarray
    t: int = 1


def hedge_init(d):
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    return HedgeState(d=int(d), cum_loss=np.zeros(int(d), dtype=np.float64))


def _read_full(losses, d):
    if hasattr(losses, "full"):
        return _check_losses(losses.full())
    return _check_losses(np.asarray(losses, dtype=np.float64))


def hedge_round(state, graph, losses, rng):
    """Anytime Hedge with eta_t = sqrt(8 log d / t); sees the full loss vector."""
    d = state.d
    eta = math.sqrt(8.0 * math.log(d) / state.t)
    p = exp3_weights(state.cum_loss, eta)
    chosen = _sample_index(p, rng)
    row = _read_full(losses, d)
    new_state = HedgeState(d, state.cum_loss + row, state.t + 1)
    info = {
        "support": (chosen,),
        "incurred": float(row[chosen]),
        "rate": eta,
    }
    return chosen, new_state, info
