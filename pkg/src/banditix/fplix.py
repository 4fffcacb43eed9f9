"""FPL-IX: follow the perturbed leader with geometric resampling.

The combinatorial setting: actions are supports of size m from a structured
set S (single arms, or all m-subsets), losses are linear in the support, and
playing a support reveals the losses of its graph out-neighborhood.

Each round the learner draws i.i.d. unit-mean exponential perturbations Z and
plays the oracle minimizer of eta_t * Lhat - Z.  The importance weights
1 / o_i are not available in closed form, so they are *estimated* by
geometric resampling: redraw independent copies of the action (each costing
one oracle call) until a copy observes component i, and use the index K_i of
the first success.  Truncating K_i at an independent Geometric(gamma_t) cap
U_i yields

    E[K_i] = 1 / (o_i + (1 - o_i) gamma_t),

an implicit-exploration estimate of 1 / o_i with bias controlled by gamma_t.
One shared sequence of copies serves all pending components within a round,
which keeps the expected number of oracle calls below d.

Rate schedule: eta_t = gamma_t = sqrt((log d + 1) / (m (d + sum alpha~_s)))
clamped at 1/2, with alpha~_s the greedy independence number of the round-s
graph.
"""

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graphs import independence_number_greedy, observation_indicators

MAX_ENUMERATION = 1_000_000


@dataclass(frozen=True)
class DecisionSet:
    """A family of supports of fixed size m with a linear-minimization oracle.

    ``kind`` is one of ``"simplex"`` (single components, m = 1) or ``"msets"``
    (all subsets of size m).  Oracle ties break toward lexicographically
    smallest supports, so runs are reproducible.
    """

    kind: str
    d: int
    m: int

    @classmethod
    def simplex(cls, d):
        if d < 1:
            raise ValueError(f"d must be >= 1, got {d}")
        return cls("simplex", int(d), 1)

    @classmethod
    def msets(cls, d, m):
        if d < 1:
            raise ValueError(f"d must be >= 1, got {d}")
        if not (1 <= m <= d):
            raise ValueError(f"m must be in [1, d], got m={m}, d={d}")
        return cls("msets", int(d), int(m))

    @classmethod
    def parse(cls, key, d):
        """Parse a config key: ``"simplex"`` or ``"msets(m)"``."""
        key = key.strip()
        if key == "simplex":
            return cls.simplex(d)
        if key.startswith("msets(") and key.endswith(")"):
            try:
                m = int(key[len("msets(") : -1])
            except ValueError:
                raise ValueError(f"bad decision set key {key!r}")
            return cls.msets(d, m)
        raise ValueError(f"unknown decision set key {key!r}")

    def oracle(self, score):
        """Support minimizing sum(score[support]), sorted ascending.

        Ties go to smaller indices (stable), so equal scores never make two
        implementations disagree.
        """
        score = np.asarray(score, dtype=np.float64)
        if score.shape != (self.d,):
            raise ValueError(f"score has shape {score.shape}, expected ({self.d},)")
        if self.m == 1:
            return np.array([int(np.argmin(score))], dtype=np.int64)
        order = np.argsort(score, kind="stable")
        return np.sort(order[: self.m]).astype(np.int64)

    def enumerate_actions(self):
        """All supports, for brute-force comparisons on small instances."""
        total = math.comb(self.d, self.m)
        if total > MAX_ENUMERATION:
            raise ValueError(
                f"refusing to enumerate {total} supports (> {MAX_ENUMERATION})"
            )
        if self.m == 1:
            return [np.array([i], dtype=np.int64) for i in range(self.d)]
        return [
            np.array(c, dtype=np.int64) for c in combinations(range(self.d), self.m)
        ]


def draw_perturbation(rng, d):
    """d i.i.d. unit-mean exponentials from one block of uniforms."""
    u = rng.random(d)
    return -np.log1p(-u)


def perturbed_leader(cum_est, eta, z, dset):
    """Deterministic core of FPL: oracle(eta * cum_est - z)."""
    cum = np.asarray(cum_est, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return dset.oracle(eta * cum - z)


def perturb_and_lead(cum_est, eta, dset, rng):
    """Draw fresh perturbations and return the perturbed leader's support."""
    z = draw_perturbation(rng, dset.d)
    return perturbed_leader(cum_est, eta, z, dset)


def geometric_caps(rng, d, gamma):
    """d i.i.d. Geometric(gamma) caps on {1, 2, ...} via inverse CDF.

    Always consumes exactly d uniforms.  gamma = 1 gives all-ones.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    u = rng.random(d)
    with np.errstate(divide="ignore"):
        ratio = np.log1p(-u) / np.log1p(-gamma)
    return np.maximum(1, np.ceil(ratio)).astype(np.int64)


def resample_hard_cap(d, gamma):
    """Safety stop for the resampling loop: ceil((d / gamma) * log(d * 1e6))."""
    return int(math.ceil((d / gamma) * math.log(d * 1e6)))


@dataclass(frozen=True)
class ResampleOutcome:
    """Result of one round of geometric resampling.

    ``k``       int64 (d,) — K_i for observed components, 0 elsewhere,
    ``oracle_calls``       — number of fresh copies drawn (oracle invocations),
    ``capped``  bool (d,)  — components resolved by their geometric cap,
    ``hard_cap_hits``      — components force-stopped at the hard cap.
    """

    k: np.ndarray
    oracle_calls: int
    capped: np.ndarray
    hard_cap_hits: int


def geometric_resample(graph, observed, gamma, dset, cum_est, eta, rng, hard_cap):
    """Estimate first-observation indices K_i for all observed components.

    Draws one shared sequence of fresh perturbed-leader copies; before copy
    k+1 is drawn, any pending component whose cap U_i <= k+1 resolves to
    K_i = U_i.  Copy k+1 then resolves every pending component it observes to
    K_i = k+1.  If the loop would exceed ``hard_cap`` copies, the remaining
    components resolve to min(U_i, hard_cap) and are flagged.

    The caps U are drawn for all d components in index order regardless of
    ``observed`` (fixed stream consumption), then ignored where unobserved.
    """
    d = graph.d
    observed = np.asarray(observed, dtype=bool)
    caps = geometric_caps(rng, d, gamma)
    k = np.zeros(d, dtype=np.int64)
    capped = np.zeros(d, dtype=bool)
    pending = observed.copy()
    calls = 0
    copy_index = 0
    hard_hits = 0
    while True:
        resolve = pending & (caps <= copy_index + 1)
        k[resolve] = caps[resolve]
        capped |= resolve
        pending &= ~resolve
        if not pending.any():
            break
        if copy_index + 1 > hard_cap:
            k[pending] = np.minimum(caps[pending], hard_cap)
            capped |= pending
            hard_hits = int(pending.sum())
            break
        z = draw_perturbation(rng, d)
        support = perturbed_leader(cum_est, eta, z, dset)
        calls += 1
        copy_index += 1
        hits = pending & observation_indicators(graph, support)
        k[hits] = copy_index
        pending &= ~hits
    return ResampleOutcome(k=k, oracle_calls=calls, capped=capped, hard_cap_hits=hard_hits)


def fplix_estimate(outcome, observed, losses):
    """Loss estimates lhat_i = K_i * l_i on observed components, 0 elsewhere.

    Only the observed entries of ``losses`` are read.
    """
    observed = np.asarray(observed, dtype=bool)
    est = np.zeros(observed.shape[0], dtype=np.float64)
    for i in np.flatnonzero(observed):
        value = float(losses[i])
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"loss {value} outside [0, 1]")
        est[i] = outcome.k[i] * value
    return est


def fplix_rate(d, m, sum_alpha_tilde):
    """eta_t = min(1/2, sqrt((log d + 1) / (m (d + sum alpha~)))).

    The clamp at 1/2 only binds while m * d <= 4, where the schedule is
    degenerate anyway; a warning points that out once.
    """
    if d < 2:
        raise ValueError(f"need at least two components, got d={d}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got m={m}")
    if not (np.isfinite(sum_alpha_tilde) and sum_alpha_tilde >= 0):
        raise ValueError(f"sum_alpha_tilde must be finite and >= 0, got {sum_alpha_tilde}")
    if m * d <= 4:
        warnings.warn(
            f"m*d = {m * d} <= 4: the rate clamp at 1/2 binds at t=1",
            UserWarning,
            stacklevel=2,
        )
    raw = math.sqrt((math.log(d) + 1.0) / (m * (d + sum_alpha_tilde)))
    return min(0.5, raw)


@dataclass(frozen=True)
class FPLIXState:
    d: int
    cum_est: np.ndarray
    sum_alpha_tilde: float = 0.0
    t: int = 1


def fplix_init(dset):
    if dset.d < 2:
        raise ValueError(f"need at least two components, got d={dset.d}")
    return FPLIXState(d=dset.d, cum_est=np.zeros(dset.d, dtype=np.float64))


def fplix_round(state, graph, losses, dset, rng):
    """One FPL-IX round: perturb, lead, observe, resample, update.

    Stream consumption per round: d uniforms (perturbations), d uniforms
    (geometric caps), then d uniforms per resampling copy.  ``losses`` is
    read elementwise exactly on the revealed components.
    """
    d = state.d
    if graph.d != d or dset.d != d:
        raise ValueError("graph / decision set / state dimension mismatch")
    eta = fplix_rate(d, dset.m, state.sum_alpha_tilde)
    z = draw_perturbation(rng, d)
    support = perturbed_leader(state.cum_est, eta, z, dset)
    observed = observation_indicators(graph, support)
    hard_cap = resample_hard_cap(d, eta)
    outcome = geometric_resample(
        graph, observed, eta, dset, state.cum_est, eta, rng, hard_cap
    )
    est = fplix_estimate(outcome, observed, losses)
    alpha_tilde = independence_number_greedy(graph)
    incurred = 0.0
    for i in support:
        incurred += float(losses[i])
    new_state = FPLIXState(
        d,
        state.cum_est + est,
        state.sum_alpha_tilde + float(alpha_tilde),
        state.t + 1,
    )
    info = {
        "support": tuple(int(i) for i in support),
        "incurred": incurred,
        "rate": eta,
        "oracle_calls": outcome.oracle_calls,
        "alpha_tilde": alpha_tilde,
        "hard_cap_hits": outcome.hard_cap_hits,
        "observed": observed,
        "k": outcome.k,
        "estimates": est,
    }
    return support, new_state, info


# --- FPL with full information ---------------------------------------------


@dataclass(frozen=True)
class FPLState:
    d: int
    cum_loss: np.ndarray
    t: int = 1


def fpl_init(dset):
    if dset.d < 2:
        raise ValueError(f"need at least two components, got d={dset.d}")
    return FPLState(d=dset.d, cum_loss=np.zeros(dset.d, dtype=np.float64))


def fpl_full_round(state, graph, losses, dset, rng):
    """Perturbed leader with the full loss vector, eta_t = sqrt((log d + 1)/(m t))."""
    d = state.d
    eta = math.sqrt((math.log(d) + 1.0) / (dset.m * state.t))
    z = draw_perturbation(rng, d)
    support = perturbed_leader(state.cum_loss, eta, z, dset)
    if hasattr(losses, "full"):
        row = np.asarray(losses.full(), dtype=np.float64)
    else:
        row = np.asarray(losses, dtype=np.float64)
    incurred = 0.0
    for i in support:
        incurred += float(row[i])
    new_state = FPLState(d, state.cum_loss + row, state.t + 1)
    info = {
        "support": tuple(int(i) for i in support),
        "incurred": incurred,
        "rate": eta,
    }
    return support, new_state, info
