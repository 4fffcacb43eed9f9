"""Compiled whole-replication simulation loops.

Each kernel runs one policy over a full (T, d) loss trace with the adjacency
stack ``adj`` of shape (1, d, d) for a fixed graph or (T, d, d) per round.
Kernels consume the policy's random stream in exactly the same order as the
pure-numpy reference round functions (one uniform per weight-based action
draw; for FPL-IX: d perturbations, d geometric caps, then d per resampling
copy), so integer outputs — actions, supports, oracle-call counts — match the
reference bit for bit, and float logs match up to summation order.

Everything is ``cache=True``: first use compiles once per machine, forked
worker processes inherit the compiled code.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def run_exp3ix(losses, adj, per_round, gen):
    T, d = losses.shape
    ln_d = np.log(np.float64(d))
    cum = np.zeros(d, dtype=np.float64)
    w = np.empty(d, dtype=np.float64)
    p = np.empty(d, dtype=np.float64)
    o = np.empty(d, dtype=np.float64)
    inc = np.empty(T, dtype=np.float64)
    rates = np.empty(T, dtype=np.float64)
    qs = np.empty(T, dtype=np.float64)
    chosen = np.empty(T, dtype=np.int64)
    sum_q = 0.0
    for t in range(T):
        g = t if per_round else 0
        a = adj[g]
        eta = np.sqrt(ln_d / (d + sum_q))
        mn = cum[0]
        for i in range(1, d):
            if cum[i] < mn:
                mn = cum[i]
        total = 0.0
        for i in range(d):
            w[i] = np.exp(-eta * (cum[i] - mn))
            total += w[i]
        for i in range(d):
            p[i] = w[i] / total
        u = gen.random()
        pick = d - 1
        acc = 0.0
        for i in range(d):
            acc += p[i]
            if u < acc:
                pick = i
                break
        for i in range(d):
            s = 0.0
            for j in range(d):
                if a[j, i] != 0:
                    s += w[j]
            o[i] = s / total
        q = 0.0
        for i in range(d):
            q += p[i] / (o[i] + eta)
        for i in range(d):
            if a[pick, i]:
                cum[i] += losses[t, i] / (o[i] + eta)
        inc[t] = losses[t, pick]
        rates[t] = eta
        qs[t] = q
        chosen[t] = pick
        sum_q += q
    return inc, rates, qs, chosen


@njit(cache=True)
def run_exp3(losses, eta, gamma_explore, gen):
    T, d = losses.shape
    cum = np.zeros(d, dtype=np.float64)
    w = np.empty(d, dtype=np.float64)
    s = np.empty(d, dtype=np.float64)
    inc = np.empty(T, dtype=np.float64)
    chosen = np.empty(T, dtype=np.int64)
    mix = gamma_explore / d
    for t in range(T):
        mn = cum[0]
        for i in range(1, d):
            if cum[i] < mn:
                mn = cum[i]
        total = 0.0
        for i in range(d):
            w[i] = np.exp(-eta * (cum[i] - mn))
            total += w[i]
        for i in range(d):
            s[i] = (1.0 - gamma_explore) * (w[i] / total) + mix
        u = gen.random()
        pick = d - 1
        acc = 0.0
        for i in range(d):
            acc += s[i]
            if u < acc:
                pick = i
                break
        cum[pick] += losses[t, pick] / s[pick]
        inc[t] = losses[t, pick]
        chosen[t] = pick
    return inc, chosen


@njit(cache=True)
def run_exp3dom(losses, adj, per_round, dom_mask, dom_size, gamma, gen):
    T, d = losses.shape
    cum = np.zeros(d, dtype=np.float64)
    w = np.empty(d, dtype=np.float64)
    s = np.empty(d, dtype=np.float64)
    o = np.empty(d, dtype=np.float64)
    inc = np.empty(T, dtype=np.float64)
    chosen = np.empty(T, dtype=np.int64)
    for t in range(T):
        g = t if per_round else 0
        a = adj[g]
        mn = cum[0]
        for i in range(1, d):
            if cum[i] < mn:
                mn = cum[i]
        total = 0.0
        for i in range(d):
            w[i] = np.exp(-gamma * (cum[i] - mn))
            total += w[i]
        bonus = gamma / dom_size[g]
        for i in range(d):
            s[i] = (1.0 - gamma) * (w[i] / total)
            if dom_mask[g, i] != 0:
                s[i] += bonus
        u = gen.random()
        pick = d - 1
        acc = 0.0
        for i in range(d):
            acc += s[i]
            if u < acc:
                pick = i
                break
        for i in range(d):
            tot = 0.0
            for j in range(d):
                if a[j, i] != 0:
                    tot += s[j]
            o[i] = tot
        for i in range(d):
            if a[pick, i]:
                cum[i] += losses[t, i] / o[i]
        inc[t] = losses[t, pick]
        chosen[t] = pick
    return inc, chosen


@njit(cache=True)
def _select_msets(score, m, mask):
    """Mark the m smallest scores in ``mask`` (ties to lower index)."""
    d = score.shape[0]
    for i in range(d):
        mask[i] = False
    for _ in range(m):
        best = -1
        bv = np.inf
        for i in range(d):
            if not mask[i] and score[i] < bv:
                bv = score[i]
                best = i
        mask[best] = True


@njit(cache=True)
def run_fplix(losses, adj, per_round, alpha_tilde, m, gen):
    T, d = losses.shape
    ln_d1 = np.log(np.float64(d)) + 1.0
    cum = np.zeros(d, dtype=np.float64)
    score = np.empty(d, dtype=np.float64)
    cscore = np.empty(d, dtype=np.float64)
    mask = np.zeros(d, dtype=np.bool_)
    cmask = np.zeros(d, dtype=np.bool_)
    obs = np.zeros(d, dtype=np.bool_)
    pending = np.zeros(d, dtype=np.bool_)
    caps = np.empty(d, dtype=np.int64)
    kvals = np.zeros(d, dtype=np.int64)
    inc = np.empty(T, dtype=np.float64)
    rates = np.empty(T, dtype=np.float64)
    calls = np.empty(T, dtype=np.int64)
    support = np.empty((T, m), dtype=np.int64)
    sum_at = 0.0
    hard_hits = 0
    for t in range(T):
        g = t if per_round else 0
        a = adj[g]
        raw = np.sqrt(ln_d1 / (m * (d + sum_at)))
        eta = 0.5 if raw > 0.5 else raw
        # action draw: d perturbations
        for i in range(d):
            u = gen.random()
            score[i] = eta * cum[i] + np.log1p(-u)
        _select_msets(score, m, mask)
        pos = 0
        total_inc = 0.0
        for i in range(d):
            if mask[i]:
                support[t, pos] = i
                pos += 1
                total_inc += losses[t, i]
        inc[t] = total_inc
        # revealed components
        for i in range(d):
            seen = False
            for j in range(d):
                if mask[j] and a[j, i] != 0:
                    seen = True
                    break
            obs[i] = seen
        # geometric caps: d uniforms, drawn for every component
        lg = np.log1p(-eta)
        for i in range(d):
            u = gen.random()
            r = np.log1p(-u) / lg
            ki = int(np.ceil(r))
            caps[i] = ki if ki > 1 else 1
        # shared resampling loop
        hard_cap = int(np.ceil((d / eta) * np.log(d * 1e6)))
        n_pending = 0
        for i in range(d):
            pending[i] = obs[i]
            kvals[i] = 0
            if obs[i]:
                n_pending += 1
        n_calls = 0
        kk = 0
        while n_pending > 0:
            for i in range(d):
                if pending[i] and caps[i] <= kk + 1:
                    kvals[i] = caps[i]
                    pending[i] = False
                    n_pending -= 1
            if n_pending == 0:
                break
            if kk + 1 > hard_cap:
                for i in range(d):
                    if pending[i]:
                        kvals[i] = caps[i] if caps[i] < hard_cap else hard_cap
                        pending[i] = False
                        hard_hits += 1
                break
            for i in range(d):
                u = gen.random()
                cscore[i] = eta * cum[i] + np.log1p(-u)
            _select_msets(cscore, m, cmask)
            n_calls += 1
            kk += 1
            for i in range(d):
                if pending[i]:
                    seen = False
                    for j in range(d):
                        if cmask[j] and a[j, i] != 0:
                            seen = True
                            break
                    if seen:
                        kvals[i] = kk
                        pending[i] = False
                        n_pending -= 1
        for i in range(d):
            if obs[i]:
                cum[i] += kvals[i] * losses[t, i]
        rates[t] = eta
        calls[t] = n_calls
        sum_at += alpha_tilde[t]
    return inc, rates, calls, support, hard_hits


@njit(cache=True)
def resample_k_mc(o, gamma, trials, gen):
    """Monte Carlo of one component's resampled index K = min(Geom(o), Geom(gamma)).

    Per trial: one uniform for the cap, then one per synthetic copy, mirroring
    the shared-loop semantics for a single component whose copy observes it
    with probability o.  Returns (sum K, sum K^2, copies drawn).
    """
    lg_gamma = np.log1p(-gamma)
    sum_k = 0.0
    sum_k2 = 0.0
    sum_draws = 0
    for _ in range(trials):
        u = gen.random()
        r = np.log1p(-u) / lg_gamma
        cap = int(np.ceil(r))
        if cap < 1:
            cap = 1
        k = 0
        resolved = 0
        while True:
            if cap <= k + 1:
                resolved = cap
                break
            u = gen.random()
            k += 1
            if u < o:
                resolved = k
                break
        sum_k += resolved
        sum_k2 += resolved * resolved
        sum_draws += k
    return sum_k, sum_k2, sum_draws
