"""Numerical evaluators for the regret and stability guarantees.

Everything here is a plain function of realized quantities — independence
numbers of the graphs actually drawn, the rate schedule actually used — so
simulation results can be checked against their guarantees round by round:

* ``lemma2_bound``: deterministic cap on the Exp3-IX stability term
  Q_t = sum_i p_i / (o_i + gamma),
* ``lemma4_bound``: its combinatorial generalization for marginals summing
  to m with stabilizer c in (0, 1),
* ``corollary1_bound``: the explicit anytime regret bound for Exp3-IX on the
  adaptive schedule,
* ``theorem2_explicit_bound``: the explicit regret bound for FPL-IX,
* ``qtilde_diagnostic``: Monte Carlo estimate of the FPL stability sum
  Qtilde(c) = sum_i q_i / (o_i + c) under the current perturbed-leader law,
* ``empirical_regret``: realized loss minus the best fixed support in
  hindsight.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

_C_CLAMP = 1.0 - 1e-9


def lemma2_bound(alpha, d, gamma):
    """2 alpha log(1 + (ceil(d^2/gamma) + d)/alpha) + 2.

    Deterministic bound on Q = sum_i p_i/(o_i + gamma) for any distribution p
    on a graph with independence number alpha.
    """
    if alpha < 1 or alpha > d:
        raise ValueError(f"alpha must be in [1, d], got alpha={alpha}, d={d}")
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be positive, got {gamma}")
    return 2.0 * alpha * math.log(1.0 + (math.ceil(d * d / gamma) + d) / alpha) + 2.0


def lemma4_bound(alpha, d, m, c):
    """2 m alpha log(1 + (m ceil(d^2/c) + d)/alpha) + 2 m, for c in (0, 1)."""
    if alpha < 1 or alpha > d:
        raise ValueError(f"alpha must be in [1, d], got alpha={alpha}, d={d}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (0.0 < c < 1.0):
        raise ValueError(f"c must be in (0, 1), got {c}")
    return (
        2.0 * m * alpha * math.log(1.0 + (m * math.ceil(d * d / c) + d) / alpha)
        + 2.0 * m
    )


def corollary1_bound(d, alphas):
    """Explicit Exp3-IX regret bound after T = len(alphas) rounds.

    4 sqrt((d + 2 sum_t (H_t alpha_t + 1)) log d) with
    H_t = log(1 + (ceil(d^2 sqrt(t d / log d)) + d) / alpha_t), t = 1..T.
    Monotone in T for fixed per-round alphas.
    """
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.size == 0:
        raise ValueError("need at least one round")
    if alphas.min() < 1 or alphas.max() > d:
        raise ValueError("alphas must lie in [1, d]")
    ln_d = math.log(d)
    total = 0.0
    for t, alpha in enumerate(alphas, start=1):
        h = math.log(1.0 + (math.ceil(d * d * math.sqrt(t * d / ln_d)) + d) / alpha)
        total += h * alpha + 1.0
    return 4.0 * math.sqrt((d + 2.0 * total) * ln_d)


def theorem2_explicit_bound(m, d, etas, gammas, alphas):
    """Explicit FPL-IX regret bound from the realized schedule.

    m (log d + 1) / eta_T
      + sum_t [ 4 m eta_t * lemma4_bound(alpha_t, d, m, gamma_t/(1-gamma_t))
                + gamma_t * lemma4_bound(alpha_t, d, m, gamma_t) ].

    gamma_t <= 1/2 makes c = gamma/(1-gamma) <= 1; the boundary value c = 1
    (gamma exactly 1/2) is clamped just below 1 and logged.  With no rounds
    the leading term uses the schedule's first rate sqrt((log d + 1)/(m d)),
    clamped at 1/2.
    """
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    etas = np.asarray(etas, dtype=np.float64)
    gammas = np.asarray(gammas, dtype=np.float64)
    alphas = np.asarray(alphas, dtype=np.float64)
    if not (etas.shape == gammas.shape == alphas.shape):
        raise ValueError("etas, gammas, alphas must have equal length")
    if etas.size == 0:
        eta_T = min(0.5, math.sqrt((math.log(d) + 1.0) / (m * d)))
        return m * (math.log(d) + 1.0) / eta_T
    if etas.min() <= 0 or gammas.min() <= 0 or gammas.max() > 0.5 + 1e-12:
        raise ValueError("rates must be positive with gamma <= 1/2")
    total = m * (math.log(d) + 1.0) / float(etas[-1])
    clamped = 0
    for eta, gamma, alpha in zip(etas, gammas, alphas):
        c1 = gamma / (1.0 - gamma)
        if c1 >= 1.0:
            c1 = _C_CLAMP
            clamped += 1
        total += 4.0 * m * eta * lemma4_bound(alpha, d, m, c1)
        total += gamma * lemma4_bound(alpha, d, m, float(gamma))
    if clamped:
        logger.info(
            "theorem2_explicit_bound: clamped c=gamma/(1-gamma) to %.10f on %d round(s)",
            _C_CLAMP,
            clamped,
        )
    return total


def qtilde_diagnostic(dset, cum_est, eta, graph, c, rng, samples=10_000):
    """Monte Carlo Qtilde(c) = sum_i qhat_i / (ohat_i + c) under the FPL law.

    qhat_i estimates P(i in played support) and ohat_i estimates
    P(i observed), both from ``samples`` fresh perturbed-leader draws.
    """
    if not (np.isfinite(c) and c > 0):
        raise ValueError(f"c must be positive, got {c}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    cum = np.asarray(cum_est, dtype=np.float64)
    d = dset.d
    adj = graph.adjacency()
    q_counts = np.zeros(d, dtype=np.int64)
    o_counts = np.zeros(d, dtype=np.int64)
    remaining = int(samples)
    chunk = 65536
    while remaining > 0:
        n = min(remaining, chunk)
        remaining -= n
        u = rng.random((n, d))
        scores = eta * cum + np.log1p(-u)  # eta * cum - Z
        if dset.m == 1:
            sel = np.argmin(scores, axis=1)[:, None]
        else:
            sel = np.argpartition(scores, dset.m - 1, axis=1)[:, : dset.m]
        v = np.zeros((n, d), dtype=bool)
        v[np.arange(n)[:, None], sel] = True
        q_counts += v.sum(axis=0)
        obs = (v.astype(np.uint8) @ adj) > 0
        o_counts += obs.sum(axis=0)
    q_hat = q_counts / float(samples)
    o_hat = o_counts / float(samples)
    return float(np.sum(q_hat / (o_hat + c)))


def best_fixed_loss(cumulative, dset):
    """Loss of the best fixed support against a cumulative loss vector."""
    cumulative = np.asarray(cumulative, dtype=np.float64)
    support = dset.oracle(cumulative)
    return float(np.sum(cumulative[support]))


def empirical_regret(logs, trace, dset):
    """Realized cumulative loss minus the best fixed support in hindsight.

    ``logs`` is a list of round logs (anything with ``.incurred``) or a plain
    array of per-round incurred losses.
    """
    if isinstance(logs, np.ndarray):
        incurred = float(logs.sum())
        rounds = logs.shape[0]
    else:
        incurred = float(sum(entry.incurred for entry in logs))
        rounds = len(logs)
    if rounds != trace.T:
        raise ValueError(f"{rounds} logged rounds but trace has T={trace.T}")
    comparator = best_fixed_loss(trace.losses.sum(axis=0), dset)
    return incurred - comparator


@dataclass(frozen=True)
class BoundReport:
    """A named bound evaluation with the inputs that produced it."""

    name: str
    final_value: float
    inputs: dict = field(default_factory=dict, compare=False)
    per_round: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.final_value) and self.final_value >= 0):
            raise ValueError(
                f"bound {self.name!r} evaluated to {self.final_value!r}"
            )
