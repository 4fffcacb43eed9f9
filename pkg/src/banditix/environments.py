"""Loss sequences, observability-graph sequences, and the interaction protocol.

A replication's environment is materialized up front as an
:class:`EnvironmentTrace`: a (T, d) loss matrix plus either one fixed graph or
one graph per round.  Generation draws from the environment stream in a fixed
order — losses first, then per-round graphs — so the same base seed yields the
same loss trace regardless of the graph configuration (which is what makes
paired graph comparisons same-trace).

``run_protocol`` drives a policy over a trace and enforces the information
structure: after the policy commits to a support, exactly the losses of the
support's out-neighborhood are revealed.  Loss rows are handed to policies
through a recording wrapper, and in strict mode any read outside the revealed
set aborts the run.
"""

from dataclasses import dataclass, field

import numpy as np

from .graphs import ObservabilityGraph, observation_indicators

LOSS_KINDS = ("iid_bernoulli", "iid_uniform", "switching", "from_file")
GRAPH_KINDS = ("empty", "complete", "erdos_renyi", "clique_partition", "star")


class ProtocolViolationError(RuntimeError):
    """A policy read a loss entry the graph did not reveal."""


def gen_losses(kind, params, d, T, rng):
    """A (T, d) float64 loss matrix with entries in [0, 1].

    Kinds: ``iid_bernoulli`` (params: means, length-d list), ``iid_uniform``,
    ``switching`` (params: period, gap — the best component rotates every
    ``period`` rounds, its mean is 0.5 - gap/2 against 0.5 + gap/2 for the
    rest), ``from_file`` (params: path to a CSV with T rows and d columns).
    """
    params = dict(params or {})
    if kind == "iid_bernoulli":
        means = np.asarray(params.pop("means", None), dtype=np.float64)
        if means.shape != (d,):
            raise ValueError(f"iid_bernoulli needs 'means' of length {d}")
        if means.min() < 0 or means.max() > 1:
            raise ValueError("Bernoulli means must lie in [0, 1]")
        losses = (rng.random((T, d)) < means).astype(np.float64)
    elif kind == "iid_uniform":
        losses = rng.random((T, d))
    elif kind == "switching":
        period = int(params.pop("period", 0))
        gap = float(params.pop("gap", -1.0))
        if period < 1:
            raise ValueError(f"switching needs period >= 1, got {period}")
        if not (0.0 <= gap <= 1.0):
            raise ValueError(f"switching needs gap in [0, 1], got {gap}")
        segments = np.arange(T) // period
        best = segments % d
        means = np.full((T, d), 0.5 + gap / 2.0)
        means[np.arange(T), best] = 0.5 - gap / 2.0
        losses = (rng.random((T, d)) < means).astype(np.float64)
    elif kind == "from_file":
        path = params.pop("path", None)
        if path is None:
            raise ValueError("from_file needs 'path'")
        losses = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
        if losses.shape != (T, d):
            raise ValueError(
                f"loss file {path} has shape {losses.shape}, expected ({T}, {d})"
            )
        if losses.min() < 0 or losses.max() > 1 or not np.all(np.isfinite(losses)):
            raise ValueError(f"loss file {path} has entries outside [0, 1]")
    else:
        raise ValueError(f"unknown loss kind {kind!r} (choose from {LOSS_KINDS})")
    if params:
        raise ValueError(f"unused loss params for kind {kind!r}: {sorted(params)}")
    return losses


def gen_graph(kind, params, d, rng):
    """One observability graph.  Only ``erdos_renyi`` consumes randomness.

    Kinds: ``empty`` (self-loops only), ``complete``, ``erdos_renyi``
    (params: r — each ordered cross pair independently with probability r;
    always consumes d*d uniforms), ``clique_partition`` (params: c — nodes
    split into c contiguous near-equal bidirected cliques), ``star``
    (params: center, default 0 — edges center -> i for all other i).
    """
    params = dict(params or {})
    if kind == "empty":
        graph = ObservabilityGraph(d)
    elif kind == "complete":
        graph = ObservabilityGraph(
            d, [(j, i) for j in range(d) for i in range(d) if i != j]
        )
    elif kind == "erdos_renyi":
        r = params.pop("r", None)
        if r is None or not (0.0 <= float(r) <= 1.0):
            raise ValueError(f"erdos_renyi needs r in [0, 1], got {r!r}")
        u = rng.random((d, d))
        pairs = np.argwhere(u < float(r))
        graph = ObservabilityGraph(d, [(j, i) for j, i in pairs if j != i])
    elif kind == "clique_partition":
        c = params.pop("c", None)
        if c is None or not (1 <= int(c) <= d):
            raise ValueError(f"clique_partition needs c in [1, d], got {c!r}")
        c = int(c)
        sizes = [d // c + (1 if b < d % c else 0) for b in range(c)]
        edges = []
        start = 0
        for size in sizes:
            block = range(start, start + size)
            edges += [(j, i) for j in block for i in block if i != j]
            start += size
        graph = ObservabilityGraph(d, edges)
    elif kind == "star":
        center = int(params.pop("center", 0))
        if not (0 <= center < d):
            raise ValueError(f"star center {center} out of range for d={d}")
        graph = ObservabilityGraph(d, [(center, i) for i in range(d) if i != center])
    else:
        raise ValueError(f"unknown graph kind {kind!r} (choose from {GRAPH_KINDS})")
    if params:
        raise ValueError(f"unused graph params for kind {kind!r}: {sorted(params)}")
    return graph


@dataclass(frozen=True)
class EnvironmentTrace:
    """A fully materialized environment: losses plus graph(s)."""

    losses: np.ndarray
    graphs: tuple
    per_round: bool

    @property
    def T(self):
        return self.losses.shape[0]

    @property
    def d(self):
        return self.losses.shape[1]

    def graph_at(self, t):
        return self.graphs[t] if self.per_round else self.graphs[0]


def build_trace(env, d, T, rng):
    """Materialize a trace from an env config dict.

    ``env`` has keys ``losses`` ({"kind": ..., **params}), ``graph``
    ({"kind": ..., **params}) and optional ``per_round`` (default False).
    Losses are always drawn before graphs.
    """
    env = dict(env)
    loss_cfg = dict(env.pop("losses"))
    graph_cfg = dict(env.pop("graph"))
    per_round = bool(env.pop("per_round", False))
    if env:
        raise ValueError(f"unused env keys: {sorted(env)}")
    loss_kind = loss_cfg.pop("kind")
    graph_kind = graph_cfg.pop("kind")
    losses = gen_losses(loss_kind, loss_cfg, d, T, rng)
    if per_round:
        graphs = tuple(gen_graph(graph_kind, graph_cfg, d, rng) for _ in range(T))
    else:
        graphs = (gen_graph(graph_kind, graph_cfg, d, rng),)
    return EnvironmentTrace(losses=losses, graphs=graphs, per_round=per_round)


class LossRow:
    """Elementwise view of one loss row that records which entries were read."""

    __slots__ = ("_row", "reads")

    def __init__(self, row):
        self._row = row
        self.reads = set()

    def __len__(self):
        return self._row.shape[0]

    def __getitem__(self, i):
        i = int(i)
        self.reads.add(i)
        return float(self._row[i])

    def full(self):
        """Read the whole row (full-information policies only)."""
        self.reads.update(range(self._row.shape[0]))
        return self._row.copy()


@dataclass(frozen=True)
class RoundLog:
    t: int
    support: tuple
    incurred: float
    n_observed: int
    rate: float = float("nan")
    q: float = float("nan")
    alpha_tilde: float = float("nan")
    oracle_calls: int = 0
    hard_cap_hits: int = 0
    extras: dict = field(default_factory=dict, compare=False)


def run_protocol(policy, trace, rng, strict=False):
    """Drive ``policy`` over ``trace``; returns one RoundLog per round.

    ``policy`` implements ``play_round(graph, losses, rng) -> info`` (info
    carrying at least "support" and "incurred") and declares
    ``full_information``.  In strict mode every loss read is checked against
    the revealed set of the committed support and violations raise
    :class:`ProtocolViolationError`.
    """
    logs = []
    for t in range(trace.T):
        graph = trace.graph_at(t)
        row = LossRow(trace.losses[t])
        info = policy.play_round(graph, row, rng)
        support = np.asarray(info["support"], dtype=np.int64)
        revealed = observation_indicators(graph, support)
        if strict:
            allowed = (
                set(range(trace.d))
                if policy.full_information
                else {int(i) for i in np.flatnonzero(revealed)}
            )
            illegal = row.reads - allowed
            if illegal:
                raise ProtocolViolationError(
                    f"round {t}: policy read unrevealed entries {sorted(illegal)}"
                )
        logs.append(
            RoundLog(
                t=t,
                support=tuple(int(i) for i in support),
                incurred=float(info["incurred"]),
                n_observed=int(revealed.sum()),
                rate=float(info.get("rate", float("nan"))),
                q=float(info.get("q", float("nan"))),
                alpha_tilde=float(info.get("alpha_tilde", float("nan"))),
                oracle_calls=int(info.get("oracle_calls", 0)),
                hard_cap_hits=int(info.get("hard_cap_hits", 0)),
            )
        )
    return logs
