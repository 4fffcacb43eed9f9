"""Experiment harness: configuration, replication runner, and output emission.

An experiment is (policy, environment, horizon, replications, base seed).
Each replication r regenerates its environment and policy randomness from
streams keyed by (base_seed, r, role), so replications can run in any order
or in parallel worker processes and produce identical output.

Per replication the runner logs per-round arrays, checks the stability bound
for Exp3-IX round by round (a violation aborts the run), evaluates the
explicit regret bounds on realized quantities, and reduces everything to one
CSV row per checkpoint (decades 1-2-5 plus the horizon) with the fixed header

    rep,round,policy,cum_loss,cum_regret,rate,q_t,alpha_t,alpha_tilde_t,oracle_calls
"""

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing

import numpy as np

from . import exp3ix as _x3
from . import fplix as _fpl
from .backend import resolve_backend
from .bounds import (
    BoundReport,
    best_fixed_loss,
    corollary1_bound,
    lemma2_bound,
    theorem2_explicit_bound,
)
from .environments import build_trace, run_protocol
from .fplix import DecisionSet
from .graphs import (
    EXACT_ALPHA_LIMIT,
    greedy_dominating_set,
    independence_number_exact,
    independence_number_greedy,
)
from .rng import env_stream, policy_stream

CSV_HEADER = "rep,round,policy,cum_loss,cum_regret,rate,q_t,alpha_t,alpha_tilde_t,oracle_calls"

POLICIES = ("exp3ix", "exp3", "exp3dom", "fplix", "hedge_full_info", "fpl_full_info")
_WEIGHT_POLICIES = ("exp3ix", "exp3", "exp3dom", "hedge_full_info")
_ALLOWED_PARAMS = {
    "exp3ix": set(),
    "exp3": {"gamma_explore"},
    "exp3dom": {"gamma"},
    "fplix": set(),
    "hedge_full_info": set(),
    "fpl_full_info": set(),
}


class BoundViolationError(RuntimeError):
    """A realized quantity exceeded its deterministic guarantee."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


@dataclass
class ExperimentConfig:
    policy: str
    d: int
    horizon: int
    replications: int
    base_seed: int
    env: dict
    decision_set: str = "simplex"
    policy_params: dict = field(default_factory=dict)
    bound_checks: bool = True

    def validate(self):
        problems = []
        if self.policy not in POLICIES:
            problems.append(f"policy {self.policy!r} not in {POLICIES}")
        if not (isinstance(self.d, int) and self.d >= 2):
            problems.append(f"d must be an integer >= 2, got {self.d!r}")
        if not (isinstance(self.horizon, int) and self.horizon >= 1):
            problems.append(f"horizon must be an integer >= 1, got {self.horizon!r}")
        if not (isinstance(self.replications, int) and self.replications >= 1):
            problems.append(
                f"replications must be an integer >= 1, got {self.replications!r}"
            )
        if not isinstance(self.base_seed, int):
            problems.append(f"base_seed must be an integer, got {self.base_seed!r}")
        dset = None
        if not problems:
            try:
                dset = DecisionSet.parse(self.decision_set, self.d)
            except ValueError as exc:
                problems.append(str(exc))
        if dset is not None and self.policy in _WEIGHT_POLICIES and dset.m != 1:
            problems.append(
                f"policy {self.policy!r} plays single components; use decision_set='simplex'"
            )
        if not isinstance(self.env, dict):
            problems.append("env must be a dict with 'losses' and 'graph'")
        else:
            for key in ("losses", "graph"):
                section = self.env.get(key)
                if not (isinstance(section, dict) and "kind" in section):
                    problems.append(f"env.{key} must be a dict with a 'kind'")
        allowed = _ALLOWED_PARAMS.get(self.policy, set())
        unknown = set(self.policy_params) - allowed
        if unknown:
            problems.append(
                f"policy_params {sorted(unknown)} not understood for {self.policy!r}"
                + (f" (allowed: {sorted(allowed)})" if allowed else " (none allowed)")
            )
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def decision(self):
        return DecisionSet.parse(self.decision_set, self.d)

    def to_dict(self):
        return {
            "policy": self.policy,
            "d": self.d,
            "horizon": self.horizon,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "decision_set": self.decision_set,
            "env": self.env,
            "policy_params": dict(self.policy_params),
            "bound_checks": self.bound_checks,
        }

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        kwargs = {}
        for name in ("policy", "d", "horizon", "replications", "base_seed", "env"):
            if name not in raw:
                raise ConfigError(f"config is missing required key {name!r}")
            kwargs[name] = raw.pop(name)
        for name in ("decision_set", "policy_params", "bound_checks"):
            if name in raw:
                kwargs[name] = raw.pop(name)
        if raw:
            raise ConfigError(f"unknown config keys: {sorted(raw)}")
        return cls(**kwargs).validate()

    @classmethod
    def from_json_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})")
        return cls.from_dict(raw)


def checkpoint_rounds(T):
    """Logging checkpoints: 1, 2, 5, 10, 20, 50, ... up to and including T."""
    points = set()
    base = 1
    while base <= T:
        for mult in (1, 2, 5):
            if base * mult <= T:
                points.add(base * mult)
        base *= 10
    points.add(T)
    return sorted(points)


# --- policy adapters for the reference protocol ----------------------------


class _Adapter:
    full_information = False

    def play_round(self, graph, losses, rng):
        raise NotImplementedError


class _Exp3IXAdapter(_Adapter):
    def __init__(self, d):
        self.state = _x3.exp3ix_init(d)

    def play_round(self, graph, losses, rng):
        _, self.state, info = _x3.exp3ix_round(self.state, graph, losses, rng)
        return info


class _Exp3Adapter(_Adapter):
    def __init__(self, d, horizon, gamma_explore):
        self.state = _x3.exp3_init(d, horizon)
        self.gamma_explore = gamma_explore

    def play_round(self, graph, losses, rng):
        _, self.state, info = _x3.exp3_round(
            self.state, graph, losses, rng, self.gamma_explore
        )
        return info


class _Exp3DOMAdapter(_Adapter):
    def __init__(self, d, gamma):
        self.state = _x3.exp3dom_init(d)
        self.gamma = gamma

    def play_round(self, graph, losses, rng):
        _, self.state, info = _x3.exp3dom_round(
            self.state, graph, losses, rng, self.gamma
        )
        return info


class _FPLIXAdapter(_Adapter):
    def __init__(self, dset):
        self.state = _fpl.fplix_init(dset)
        self.dset = dset

    def play_round(self, graph, losses, rng):
        _, self.state, info = _fpl.fplix_round(
            self.state, graph, losses, self.dset, rng
        )
        return info


class _HedgeAdapter(_Adapter):
    full_information = True

    def __init__(self, d):
        self.state = _x3.hedge_init(d)

    def play_round(self, graph, losses, rng):
        _, self.state, info = _x3.hedge_round(self.state, graph, losses, rng)
        return info


class _FPLFullAdapter(_Adapter):
    full_information = True

    def __init__(self, dset):
        self.state = _fpl.fpl_init(dset)
        self.dset = dset

    def play_round(self, graph, losses, rng):
        _, self.state, info = _fpl.fpl_full_round(
            self.state, graph, losses, self.dset, rng
        )
        return info


def exp3dom_default_gamma(d, horizon):
    return min(0.5, math.sqrt(math.log(d) / horizon))


def make_policy(config):
    d, T = config.d, config.horizon
    params = config.policy_params
    if config.policy == "exp3ix":
        return _Exp3IXAdapter(d)
    if config.policy == "exp3":
        gamma_explore = float(
            params.get("gamma_explore", _x3.exp3_default_gamma(d, T))
        )
        return _Exp3Adapter(d, T, gamma_explore)
    if config.policy == "exp3dom":
        gamma = float(params.get("gamma", exp3dom_default_gamma(d, T)))
        return _Exp3DOMAdapter(d, gamma)
    if config.policy == "fplix":
        return _FPLIXAdapter(config.decision())
    if config.policy == "hedge_full_info":
        return _HedgeAdapter(d)
    if config.policy == "fpl_full_info":
        return _FPLFullAdapter(config.decision())
    raise ConfigError(f"unknown policy {config.policy!r}")


# --- per-replication simulation --------------------------------------------


@dataclass
class TraceStats:
    """Per-graph combinatorial quantities for a trace (one entry per graph)."""

    alpha_exact: np.ndarray  # int64, -1 where unavailable (d > exact limit)
    alpha_greedy: np.ndarray
    per_round: bool

    def exact_at(self, t):
        value = self.alpha_exact[t if self.per_round else 0]
        return int(value) if value > 0 else None

    def greedy_at(self, t):
        return int(self.alpha_greedy[t if self.per_round else 0])

    def best_alpha_per_round(self, T):
        """Exact alpha per round when known, greedy otherwise."""
        src = np.where(self.alpha_exact > 0, self.alpha_exact, self.alpha_greedy)
        return src if self.per_round else np.repeat(src, T)

    def greedy_per_round(self, T):
        return (
            self.alpha_greedy
            if self.per_round
            else np.repeat(self.alpha_greedy, T)
        )


def compute_trace_stats(trace):
    exact = np.empty(len(trace.graphs), dtype=np.int64)
    greedy = np.empty(len(trace.graphs), dtype=np.int64)
    small = trace.d <= EXACT_ALPHA_LIMIT
    for idx, graph in enumerate(trace.graphs):
        greedy[idx] = independence_number_greedy(graph)
        exact[idx] = independence_number_exact(graph) if small else -1
    return TraceStats(alpha_exact=exact, alpha_greedy=greedy, per_round=trace.per_round)


@dataclass
class RepArrays:
    incurred: np.ndarray
    rates: np.ndarray
    qs: np.ndarray
    oracle_calls: np.ndarray
    hard_cap_hits: int
    supports: np.ndarray = None


def _simulate_kernel(config, trace, stats, rng):
    from . import _kernels

    T = trace.T
    losses = np.ascontiguousarray(trace.losses)
    adj = np.stack([g.adjacency() for g in trace.graphs])
    per_round = bool(trace.per_round)
    nan = np.full(T, np.nan)
    if config.policy == "exp3ix":
        inc, rates, qs, chosen = _kernels.run_exp3ix(losses, adj, per_round, rng)
        return RepArrays(inc, rates, qs, np.zeros(T, np.int64), 0, chosen[:, None])
    if config.policy == "exp3":
        eta = math.sqrt(math.log(config.d) / (config.d * T))
        gamma_explore = float(
            config.policy_params.get(
                "gamma_explore", _x3.exp3_default_gamma(config.d, T)
            )
        )
        inc, chosen = _kernels.run_exp3(losses, eta, gamma_explore, rng)
        return RepArrays(
            inc, np.full(T, eta), nan, np.zeros(T, np.int64), 0, chosen[:, None]
        )
    if config.policy == "exp3dom":
        gamma = float(
            config.policy_params.get("gamma", exp3dom_default_gamma(config.d, T))
        )
        n_graphs = len(trace.graphs)
        dom_mask = np.zeros((n_graphs, config.d), dtype=np.uint8)
        dom_size = np.empty(n_graphs, dtype=np.int64)
        for idx, graph in enumerate(trace.graphs):
            dom = greedy_dominating_set(graph)
            dom_mask[idx, dom] = 1
            dom_size[idx] = len(dom)
        inc, chosen = _kernels.run_exp3dom(
            losses, adj, per_round, dom_mask, dom_size, gamma, rng
        )
        return RepArrays(
            inc, np.full(T, gamma), nan, np.zeros(T, np.int64), 0, chosen[:, None]
        )
    if config.policy == "fplix":
        dset = config.decision()
        alpha_tilde = stats.greedy_per_round(T).astype(np.float64)
        inc, rates, calls, supports, hard_hits = _kernels.run_fplix(
            losses, adj, per_round, alpha_tilde, dset.m, rng
        )
        return RepArrays(inc, rates, nan, calls, int(hard_hits), supports)
    raise ConfigError(f"no kernel for policy {config.policy!r}")


def _simulate_reference(config, trace, rng, strict=False):
    policy = make_policy(config)
    logs = run_protocol(policy, trace, rng, strict=strict)
    T = trace.T
    inc = np.fromiter((lg.incurred for lg in logs), np.float64, count=T)
    rates = np.fromiter((lg.rate for lg in logs), np.float64, count=T)
    qs = np.fromiter((lg.q for lg in logs), np.float64, count=T)
    calls = np.fromiter((lg.oracle_calls for lg in logs), np.int64, count=T)
    hard = int(sum(lg.hard_cap_hits for lg in logs))
    m = len(logs[0].support)
    supports = np.array([lg.support for lg in logs], dtype=np.int64).reshape(T, m)
    return RepArrays(inc, rates, qs, calls, hard, supports)


def simulate_replication(config, trace, stats, rng, backend=None, strict=False):
    """Run one policy over one trace on the chosen backend."""
    chosen = resolve_backend(backend)
    kernel_ready = config.policy in ("exp3ix", "exp3", "exp3dom", "fplix")
    if chosen == "numba" and kernel_ready and not strict:
        return _simulate_kernel(config, trace, stats, rng)
    return _simulate_reference(config, trace, rng, strict=strict)


_Q_TOLERANCE = 1e-9


def _check_lemma2(config, stats, arrays):
    """Round-by-round Q_t <= bound check for Exp3-IX; violations abort."""
    T = arrays.qs.shape[0]
    violations = []
    max_ratio = 0.0
    for t in range(T):
        alpha = stats.exact_at(t)
        if alpha is None:
            return {"checked": False, "reason": f"d > {EXACT_ALPHA_LIMIT}"}
        bound = lemma2_bound(alpha, config.d, arrays.rates[t])
        ratio = arrays.qs[t] / bound
        if ratio > max_ratio:
            max_ratio = ratio
        if arrays.qs[t] > bound + _Q_TOLERANCE:
            violations.append((t, float(arrays.qs[t]), float(bound)))
    if violations:
        t, q, bound = violations[0]
        raise BoundViolationError(
            f"stability bound violated at round {t}: Q={q:.6f} > {bound:.6f}"
            f" ({len(violations)} round(s) total)"
        )
    return {"checked": True, "max_ratio": float(max_ratio)}


def prepare_replication(config, rep):
    """Materialize one replication's trace and graph stats (no simulation)."""
    env_rng = env_stream(config.base_seed, rep)
    trace = build_trace(config.env, config.d, config.horizon, env_rng)
    return trace, compute_trace_stats(trace)


def run_replication(config, rep, backend=None, strict=False):
    """One replication: returns (checkpoint rows, per-rep summary dict)."""
    pol_rng = policy_stream(config.base_seed, rep)
    trace, stats = prepare_replication(config, rep)
    arrays = simulate_replication(config, trace, stats, pol_rng, backend, strict)
    T = trace.T
    dset = config.decision()

    summary = {
        "rep": rep,
        "final_cum_loss": float(arrays.incurred.sum()),
        "mean_oracle_calls": float(arrays.oracle_calls.mean()),
        "max_oracle_calls": int(arrays.oracle_calls.max()),
        "hard_cap_hits": int(arrays.hard_cap_hits),
    }

    if config.bound_checks and config.policy == "exp3ix":
        summary["lemma2"] = _check_lemma2(config, stats, arrays)
    alphas = stats.best_alpha_per_round(T)
    if config.policy == "exp3ix":
        summary["corollary1_bound"] = corollary1_bound(config.d, alphas)
    if config.policy == "fplix":
        summary["theorem2_bound"] = theorem2_explicit_bound(
            dset.m, config.d, arrays.rates, arrays.rates, alphas
        )

    cum_inc = np.cumsum(arrays.incurred)
    col_cum = np.cumsum(trace.losses, axis=0)
    rows = []
    for n in checkpoint_rounds(T):
        cum_loss = float(cum_inc[n - 1])
        regret = cum_loss - best_fixed_loss(col_cum[n - 1], dset)
        exact = stats.exact_at(n - 1)
        rows.append(
            (
                rep,
                n,
                config.policy,
                cum_loss,
                float(regret),
                float(arrays.rates[n - 1]),
                float(arrays.qs[n - 1]),
                float(exact) if exact is not None else float("nan"),
                float(stats.greedy_at(n - 1)),
                int(arrays.oracle_calls[n - 1]),
            )
        )
    summary["final_regret"] = rows[-1][4]
    return rows, summary


def _worker(payload):
    config_dict, rep, backend = payload
    config = ExperimentConfig.from_dict(config_dict)
    return rep, run_replication(config, rep, backend=backend)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    rep_summaries: list
    backend: str
    elapsed: float

    def final_regrets(self):
        return np.array([s["final_regret"] for s in self.rep_summaries])

    def regrets_at(self, checkpoint):
        out = [row[4] for row in self.rows if row[1] == checkpoint]
        if not out:
            raise ValueError(f"no rows logged at round {checkpoint}")
        return np.array(out)


def run_experiment(config, jobs=1, backend=None):
    """Run all replications; output is independent of ``jobs``."""
    config.validate()
    chosen = resolve_backend(backend)
    start = time.perf_counter()
    results = {}
    if jobs and jobs > 1 and config.replications > 1:
        payloads = [
            (config.to_dict(), rep, chosen) for rep in range(config.replications)
        ]
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            for rep, outcome in pool.map(_worker, payloads):
                results[rep] = outcome
    else:
        for rep in range(config.replications):
            results[rep] = run_replication(config, rep, backend=chosen)
    rows = []
    summaries = []
    for rep in range(config.replications):
        rep_rows, rep_summary = results[rep]
        rows.extend(rep_rows)
        summaries.append(rep_summary)
    elapsed = time.perf_counter() - start
    return ExperimentResult(
        config=config,
        rows=rows,
        rep_summaries=summaries,
        backend=chosen,
        elapsed=elapsed,
    )


# --- emission ----------------------------------------------------------------


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_csv(result, path):
    """Write checkpoint rows; shortest-roundtrip float formatting."""
    lines = [CSV_HEADER]
    for row in result.rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv_rows(path):
    """Parse a results CSV back into typed tuples (inverse of emit_csv)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = []
        for line in fh:
            parts = line.strip().split(",")
            rows.append(
                (
                    int(parts[0]),
                    int(parts[1]),
                    parts[2],
                    float(parts[3]),
                    float(parts[4]),
                    float(parts[5]),
                    float(parts[6]),
                    float(parts[7]),
                    float(parts[8]),
                    int(parts[9]),
                )
            )
    return rows


def _mean_se(values):
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if values.size < 2:
        return mean, float("nan")
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))


def summarize(result):
    """JSON-ready summary: checkpoint aggregates, bound reports, check status."""
    config = result.config
    per_checkpoint = []
    for n in checkpoint_rounds(config.horizon):
        regrets = result.regrets_at(n)
        losses = np.array([row[3] for row in result.rows if row[1] == n])
        mean_regret, se_regret = _mean_se(regrets)
        per_checkpoint.append(
            {
                "round": n,
                "mean_cum_loss": float(losses.mean()),
                "mean_regret": mean_regret,
                "se_regret": se_regret,
            }
        )
    summary = {
        "config": config.to_dict(),
        "backend": result.backend,
        "checkpoints": per_checkpoint,
        "final": {
            "mean_regret": per_checkpoint[-1]["mean_regret"],
            "se_regret": per_checkpoint[-1]["se_regret"],
        },
        "oracle": {
            "mean_calls_per_round": float(
                np.mean([s["mean_oracle_calls"] for s in result.rep_summaries])
            ),
            "max_calls_in_a_round": int(
                max(s["max_oracle_calls"] for s in result.rep_summaries)
            ),
            "hard_cap_hits": int(
                sum(s["hard_cap_hits"] for s in result.rep_summaries)
            ),
        },
        "checks": {},
        "bounds": {},
        "timing": {"elapsed_s": result.elapsed},
    }
    lemma2 = [s.get("lemma2") for s in result.rep_summaries if "lemma2" in s]
    if lemma2:
        checked = [entry for entry in lemma2 if entry.get("checked")]
        summary["checks"]["lemma2"] = {
            "checked_reps": len(checked),
            "passed": True,  # violations raise before we get here
            "max_ratio": max((e["max_ratio"] for e in checked), default=None),
        }
    for key, label in (("corollary1_bound", "corollary1"), ("theorem2_bound", "theorem2")):
        values = [s[key] for s in result.rep_summaries if key in s]
        if values:
            mean_bound = float(np.mean(values))
            summary["bounds"][label] = {
                "mean_value": mean_bound,
                "mean_final_regret": summary["final"]["mean_regret"],
                "holds_on_mean": bool(
                    summary["final"]["mean_regret"] <= mean_bound
                ),
            }
    return summary


def emit_summary(result, path):
    summary = summarize(result)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def bound_reports(result):
    """BoundReport objects for whichever explicit bounds apply to this run."""
    reports = []
    for key, name in (("corollary1_bound", "corollary1"), ("theorem2_bound", "theorem2")):
        values = [s[key] for s in result.rep_summaries if key in s]
        if values:
            reports.append(
                BoundReport(
                    name=name,
                    final_value=float(np.mean(values)),
                    inputs={
                        "policy": result.config.policy,
                        "d": result.config.d,
                        "horizon": result.config.horizon,
                        "replications": result.config.replications,
                    },
                )
            )
    return reports
