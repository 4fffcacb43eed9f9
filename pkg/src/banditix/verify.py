"""Randomized verification suites for the analytical guarantees.

Each suite draws many random instances and checks a guarantee numerically:

* ``lemma1``     — the graph counting inequality, exact independence numbers,
* ``lemma2``     — the Exp3-IX stability bound Q <= lemma2_bound,
* ``lemma4``     — the FPL stability bound, Q-tilde estimated by Monte Carlo,
* ``optimism``   — the implicit-exploration estimator's conditional mean:
                   E[lhat_i] = l_i o_i/(o_i + gamma) <= l_i, checked against
                   10^6 sampled rounds per instance,
* ``resampling`` — E[K] = 1/(o + (1-o) gamma) within 2% on an (o, gamma) grid,
                   10^6 trials per point.

Suites are deterministic given a seed and report failures rather than raising,
so the CLI can print one line per suite and exit nonzero if any failed.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .backend import resolve_backend
from .bounds import lemma2_bound, lemma4_bound, qtilde_diagnostic
from .environments import gen_graph
from .exp3ix import RoundObservation, ix_estimate, q_value
from .fplix import DecisionSet
from .graphs import (
    independence_number_exact,
    lemma1_sides,
    observation_probabilities,
)
from .rng import make_stream

SUITES = ("lemma1", "lemma2", "lemma4", "optimism", "resampling")


@dataclass
class SuiteReport:
    name: str
    cases: int
    failures: list = field(default_factory=list)
    elapsed: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f", {len(self.failures)} failure(s)" if self.failures else ""
        return f"{status} {self.name}: {self.cases} case(s){extra} [{self.elapsed:.2f}s]"


def _random_graph(rng, d):
    kind = int(rng.integers(0, 5))
    if kind == 0:
        return gen_graph("empty", {}, d, rng)
    if kind == 1:
        return gen_graph("complete", {}, d, rng)
    if kind == 2:
        return gen_graph("erdos_renyi", {"r": float(rng.uniform(0.05, 0.95))}, d, rng)
    if kind == 3:
        return gen_graph("clique_partition", {"c": int(rng.integers(1, d + 1))}, d, rng)
    return gen_graph("star", {"center": int(rng.integers(0, d))}, d, rng)


def suite_lemma1(cases=500, seed=0):
    report = SuiteReport(name="lemma1", cases=cases)
    start = time.perf_counter()
    rng = make_stream(seed, "verify", "lemma1")
    for case in range(cases):
        d = int(rng.integers(2, 13))
        graph = _random_graph(rng, d)
        m = int(rng.integers(1, 4))
        p = rng.random(d)
        if rng.random() < 0.3:  # sparse corners
            p[rng.random(d) < 0.5] = 0.0
        total = p.sum()
        if total > 0:
            p = p * (m * rng.random() / total)
        c = float(10.0 ** rng.uniform(-3, 0))
        lhs, rhs = lemma1_sides(graph, p, m, c)
        if not lhs <= rhs + 1e-9:
            report.failures.append(
                f"case {case}: d={d} m={m} c={c:.4g}: lhs={lhs:.6f} > rhs={rhs:.6f}"
            )
    report.elapsed = time.perf_counter() - start
    return report


def suite_lemma2(cases=300, seed=0):
    report = SuiteReport(name="lemma2", cases=cases)
    start = time.perf_counter()
    rng = make_stream(seed, "verify", "lemma2")
    for case in range(cases):
        d = int(rng.integers(2, 13))
        graph = _random_graph(rng, d)
        raw = -np.log1p(-rng.random(d))
        p = raw / raw.sum()
        gamma = float(10.0 ** rng.uniform(-2, 0))
        o = observation_probabilities(graph, p)
        q = q_value(p, o, gamma)
        alpha = independence_number_exact(graph)
        bound = lemma2_bound(alpha, d, gamma)
        if not q <= bound + 1e-9:
            report.failures.append(
                f"case {case}: d={d} alpha={alpha} gamma={gamma:.4g}: "
                f"Q={q:.6f} > bound={bound:.6f}"
            )
    report.elapsed = time.perf_counter() - start
    return report


def suite_lemma4(cases=60, seed=0, samples=20000, batches=10):
    """Monte Carlo Qtilde(c) <= lemma4_bound within 4 standard errors."""
    report = SuiteReport(name="lemma4", cases=cases)
    start = time.perf_counter()
    rng = make_stream(seed, "verify", "lemma4")
    per_batch = max(1, samples // batches)
    for case in range(cases):
        d = int(rng.integers(4, 11))
        m = int(rng.integers(1, min(4, d) + 1))
        dset = DecisionSet.msets(d, m)
        graph = _random_graph(rng, d)
        cum = rng.uniform(0.0, 30.0, size=d)
        eta = float(10.0 ** rng.uniform(-2, -0.3))
        c = float(rng.uniform(0.05, 0.95))
        estimates = np.array(
            [
                qtilde_diagnostic(dset, cum, eta, graph, c, rng, samples=per_batch)
                for _ in range(batches)
            ]
        )
        mean = float(estimates.mean())
        se = float(estimates.std(ddof=1) / np.sqrt(batches))
        alpha = independence_number_exact(graph)
        bound = lemma4_bound(alpha, d, m, c)
        if not mean <= bound + 4.0 * se + 1e-9:
            report.failures.append(
                f"case {case}: d={d} m={m} c={c:.3f}: Qtilde={mean:.4f} "
                f"(se={se:.4f}) > bound={bound:.4f}"
            )
    report.elapsed = time.perf_counter() - start
    return report


def suite_optimism(cases=50, seed=0, draws=1_000_000):
    """Per-component mean of the IX estimator vs its closed-form expectation.

    For a fixed sampling distribution p, graph, losses and gamma, the round
    outcome is a function of the drawn component alone, so the empirical mean
    over 10^6 rounds is assembled exactly from the d distinct ix_estimate
    outputs weighted by draw counts.  Three checks per case: the closed form
    never exceeds the true loss, |mean - l o/(o+gamma)| <= 4 SE componentwise,
    and the bias identity for the weighted sum,

        E[sum_i p_i lhat_i] = sum_i p_i l_i - gamma sum_i p_i l_i/(o_i+gamma),

    holds within 4 SE of the Monte Carlo mean.
    """
    report = SuiteReport(name="optimism", cases=cases)
    start = time.perf_counter()
    rng = make_stream(seed, "verify", "optimism")
    for case in range(cases):
        d = int(rng.integers(3, 11))
        graph = _random_graph(rng, d)
        raw = -np.log1p(-rng.random(d))
        p = raw / raw.sum()
        gamma = float(rng.uniform(0.05, 0.8))
        losses = rng.random(d)
        o = observation_probabilities(graph, p)
        adj = graph.adjacency().astype(bool)
        outcome = np.empty((d, d))
        for j in range(d):
            observed = adj[j]
            obs = RoundObservation(j, observed, losses[np.flatnonzero(observed)])
            outcome[j] = ix_estimate(obs, o, gamma)
        cdf = np.cumsum(p)
        picks = np.searchsorted(cdf, rng.random(draws), side="right")
        counts = np.bincount(np.minimum(picks, d - 1), minlength=d)
        emp = counts @ outcome / draws
        theo = losses * o / (o + gamma)
        variance = np.maximum(o * (1.0 - o), 0.0)  # o can sit one ulp above 1
        se = (losses / (o + gamma)) * np.sqrt(variance / draws)
        if np.any(theo > losses + 1e-12):
            report.failures.append(f"case {case}: closed form exceeds the loss")
        bad = np.abs(emp - theo) > 4.0 * se + 1e-12
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            report.failures.append(
                f"case {case}: component {i}: |{emp[i]:.6f} - {theo[i]:.6f}| "
                f"> 4*SE={4 * se[i]:.2e} (gamma={gamma:.3f}, o={o[i]:.3f})"
            )
        # bias identity for the p-weighted sum of estimates
        svals = outcome @ p  # weighted sum when component j is drawn
        emp_sum = float(counts @ svals) / draws
        theo_sum = float(np.sum(p * losses) - gamma * np.sum(p * losses / (o + gamma)))
        var_sum = max(float(np.sum(p * svals**2) - theo_sum**2), 0.0)
        se_sum = math.sqrt(var_sum / draws)
        if abs(emp_sum - theo_sum) > 4.0 * se_sum + 1e-12:
            report.failures.append(
                f"case {case}: weighted-sum bias |{emp_sum:.6f} - {theo_sum:.6f}| "
                f"> 4*SE={4 * se_sum:.2e} (gamma={gamma:.3f})"
            )
    report.elapsed = time.perf_counter() - start
    return report


_O_GRID = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
_GAMMA_GRID = (0.01, 0.1, 0.3, 0.5)


def _resample_mc_numpy(o, gamma, trials, rng):
    """Vectorized twin of the compiled per-trial loop (same distribution)."""
    caps = np.maximum(
        1, np.ceil(np.log1p(-rng.random(trials)) / np.log1p(-gamma))
    ).astype(np.int64)
    with np.errstate(divide="ignore"):
        denom = np.log1p(-o)
    if o >= 1.0:
        first = np.ones(trials, dtype=np.int64)
        rng.random(trials)  # keep consumption shape comparable
    else:
        first = np.maximum(1, np.ceil(np.log1p(-rng.random(trials)) / denom)).astype(
            np.int64
        )
    k = np.minimum(caps, first)
    draws = np.where(first < caps, first, caps - 1)
    return float(k.sum()), float((k.astype(np.float64) ** 2).sum()), int(draws.sum())


def suite_resampling(seed=0, trials=1_000_000, rtol=0.02):
    grid = [(o, g) for o in _O_GRID for g in _GAMMA_GRID]
    report = SuiteReport(name="resampling", cases=len(grid))
    start = time.perf_counter()
    backend = resolve_backend()
    for o, gamma in grid:
        rng = make_stream(seed, "verify", "resampling", repr(o), repr(gamma))
        if backend == "numba":
            from ._kernels import resample_k_mc

            sum_k, sum_k2, _ = resample_k_mc(o, gamma, trials, rng)
        else:
            sum_k, sum_k2, _ = _resample_mc_numpy(o, gamma, trials, rng)
        mean = sum_k / trials
        target = 1.0 / (o + (1.0 - o) * gamma)
        if abs(mean - target) > rtol * target:
            report.failures.append(
                f"o={o} gamma={gamma}: mean K={mean:.5f} vs 1/(o+(1-o)gamma)="
                f"{target:.5f} (rel err {abs(mean - target) / target:.3%})"
            )
    report.elapsed = time.perf_counter() - start
    return report


_DEFAULT_CASES = {
    "lemma1": 500,
    "lemma2": 300,
    "lemma4": 60,
    "optimism": 50,
}


def run_suite(name, cases=None, seed=0):
    if name == "lemma1":
        return suite_lemma1(cases or _DEFAULT_CASES["lemma1"], seed)
    if name == "lemma2":
        return suite_lemma2(cases or _DEFAULT_CASES["lemma2"], seed)
    if name == "lemma4":
        return suite_lemma4(cases or _DEFAULT_CASES["lemma4"], seed)
    if name == "optimism":
        return suite_optimism(cases or _DEFAULT_CASES["optimism"], seed)
    if name == "resampling":
        return suite_resampling(seed)
    raise ValueError(f"unknown suite {name!r} (choose from {SUITES} or 'all')")


def run_suites(name, cases=None, seed=0):
    names = SUITES if name == "all" else (name,)
    return [run_suite(entry, cases=cases, seed=seed) for entry in names]
