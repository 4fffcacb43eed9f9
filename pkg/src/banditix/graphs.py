"""Directed observability graphs and their combinatorial quantities.

An observability graph on d nodes encodes which losses become visible when a
component is played: the edge j -> i means "playing j reveals the loss of i".
Every node always observes itself, so self-loops are mandatory and implicit —
constructors accept cross edges only (self-loops in the input are tolerated
and deduplicated), and the stored ``out_edges`` lists always contain them.

The quantities computed here drive both the algorithms and their guarantees:

* observation probabilities o_i = sum of p_j over j with j -> i (self included),
* the independence number alpha of the undirected union (exact via
  branch-and-bound up to ``EXACT_ALPHA_LIMIT`` nodes, greedy beyond),
* a greedy dominating set (used by the Exp3-DOM baseline),
* the two sides of the key counting inequality relating weighted inverse
  observation probabilities to alpha (``lemma1_sides``).
"""

import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

EXACT_ALPHA_LIMIT = 30


class GraphSizeError(ValueError):
    """Raised when an exact computation is requested beyond its size limit."""


class ObservabilityGraph:
    """Immutable directed graph with mandatory self-loops.

    Parameters
    ----------
    d : int
        Number of nodes, >= 1.
    cross_edges : iterable of (j, i) pairs
        Directed edges j -> i with j != i.  Duplicates are ignored;
        self-loops in the input are tolerated (they are implied anyway).
    """

    __slots__ = ("d", "out_edges", "_adj", "_closed_in")

    def __init__(self, d, cross_edges=()):
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise ValueError(f"d must be a positive integer, got {d!r}")
        d = int(d)
        out = [{i} for i in range(d)]
        for j, i in cross_edges:
            j = int(j)
            i = int(i)
            if not (0 <= j < d and 0 <= i < d):
                raise ValueError(f"edge ({j}, {i}) out of range for d={d}")
            out[j].add(i)
        self.d = d
        self.out_edges = tuple(tuple(sorted(s)) for s in out)
        self._adj = None
        self._closed_in = None

    def adjacency(self):
        """Dense (d, d) uint8 matrix, adj[j, i] = 1 iff j -> i.  Cached."""
        if self._adj is None:
            adj = np.zeros((self.d, self.d), dtype=np.uint8)
            for j, targets in enumerate(self.out_edges):
                adj[j, list(targets)] = 1
            adj.setflags(write=False)
            self._adj = adj
        return self._adj

    def closed_in_indices(self, i):
        """Sorted int array of {j : j -> i}, which always includes i. Cached."""
        if self._closed_in is None:
            adj = self.adjacency()
            self._closed_in = tuple(
                np.flatnonzero(adj[:, i]).astype(np.int64) for i in range(self.d)
            )
        return self._closed_in[i]

    def cross_edges(self):
        """All (j, i) edges with j != i, sorted."""
        return [
            (j, i) for j, targets in enumerate(self.out_edges) for i in targets if i != j
        ]

    def __eq__(self, other):
        if not isinstance(other, ObservabilityGraph):
            return NotImplemented
        return self.d == other.d and self.out_edges == other.out_edges

    def __hash__(self):
        return hash((self.d, self.out_edges))

    def __repr__(self):
        n_cross = sum(len(t) - 1 for t in self.out_edges)
        return f"ObservabilityGraph(d={self.d}, cross_edges={n_cross})"


def in_neighborhood(graph, i):
    """Set of j != i with an edge j -> i (the self-loop is excluded)."""
    if not (0 <= i < graph.d):
        raise ValueError(f"node {i} out of range for d={graph.d}")
    return {int(j) for j in graph.closed_in_indices(i) if j != i}


def observation_probabilities(graph, p):
    """o_i = sum of p_j over all j with j -> i, including j = i.

    ``p`` is any nonnegative weight vector of length d (typically a
    probability distribution, or marginal play probabilities summing to m).
    Because of the self-loop, o_i >= p_i always.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (graph.d,):
        raise ValueError(f"p has shape {p.shape}, expected ({graph.d},)")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("p must be finite and nonnegative")
    adj = graph.adjacency()
    return adj.T.astype(np.float64) @ p


def observation_indicators(graph, support):
    """Boolean vector of losses revealed when ``support`` is played.

    Component i is observed iff some played j has the edge j -> i; with
    self-loops this always includes the support itself.
    """
    support = np.asarray(support, dtype=np.int64).ravel()
    if support.size == 0:
        raise ValueError("support must be nonempty")
    if support.min() < 0 or support.max() >= graph.d:
        raise ValueError(f"support {support.tolist()} out of range for d={graph.d}")
    adj = graph.adjacency()
    return adj[support, :].any(axis=0)


def _undirected_neighbor_masks(graph):
    """Bitmask per node of {j != i : i -> j or j -> i}."""
    adj = graph.adjacency()
    und = (adj | adj.T).astype(bool)
    masks = []
    for i in range(graph.d):
        m = 0
        for j in np.flatnonzero(und[i]):
            if j != i:
                m |= 1 << int(j)
        masks.append(m)
    return masks


def independence_number_exact(graph, limit=EXACT_ALPHA_LIMIT):
    """Exact independence number of the undirected union, by branch-and-bound.

    Two distinct nodes are adjacent iff an edge runs between them in either
    direction; self-loops are ignored.  Graphs larger than ``limit`` nodes
    raise GraphSizeError — use the greedy lower bound instead.
    """
    if graph.d > limit:
        raise GraphSizeError(
            f"exact independence number limited to d <= {limit}, got d={graph.d}"
        )
    masks = _undirected_neighbor_masks(graph)
    best = 0

    def expand(cand, size):
        nonlocal best
        if size + cand.bit_count() <= best:
            return
        if cand == 0:
            best = size
            return
        v = (cand & -cand).bit_length() - 1
        bit = 1 << v
        nb = masks[v] & cand
        expand(cand & ~(nb | bit), size + 1)
        if nb:
            expand(cand & ~bit, size)

    expand((1 << graph.d) - 1, 0)
    return best


def independence_number_greedy(graph):
    """Greedy lower bound on the independence number.

    Repeatedly picks the surviving node of minimum total degree (in-degree
    plus out-degree over cross edges, so a bidirected pair counts twice),
    breaking ties by smallest node id, and removes it together with all its
    undirected neighbors.  The selected nodes form an independent set, so the
    count is always <= the exact independence number.
    """
    adj = graph.adjacency().astype(bool)
    d = graph.d
    alive = np.ones(d, dtype=bool)
    np.fill_diagonal(adj, False)  # local copy; cross edges only
    count = 0
    while alive.any():
        sub = adj[np.ix_(alive, alive)]
        degs = sub.sum(axis=0) + sub.sum(axis=1)
        ids = np.flatnonzero(alive)
        pick = ids[int(np.argmin(degs))]  # argmin takes the first = lowest id
        count += 1
        closed = adj[pick] | adj[:, pick]
        closed[pick] = True
        alive &= ~closed
    return count


def greedy_dominating_set(graph):
    """Greedy dominating set: every node has an in-neighbor (or itself) in it.

    Repeatedly adds the node covering the most uncovered nodes through its
    out-edges (self-loop included), breaking ties by smallest node id.
    Termination is guaranteed by self-loops; the result is checked before
    returning.
    """
    adj = graph.adjacency().astype(bool)
    d = graph.d
    covered = np.zeros(d, dtype=bool)
    dom = []
    while not covered.all():
        gains = (adj & ~covered[None, :]).sum(axis=1)
        pick = int(np.argmax(gains))  # first max = lowest id
        if gains[pick] == 0:  # unreachable thanks to self-loops
            raise AssertionError("greedy dominating set stalled")
        dom.append(pick)
        covered |= adj[pick]
    assert covered.all()
    return dom


def lemma1_sides(graph, p, m, c):
    """Both sides of the weighted inverse-observability inequality.

    For weights p >= 0 with sum(p) <= m and a stabilizer c > 0, returns
    ``(lhs, rhs)`` where

        lhs = sum_i p_i / ((p_i + P_i)/m + c),   P_i = sum of p_j over in-
                                                 neighbors j != i,
        rhs = 2 m alpha log(1 + (m ceil(d^2/c) + d)/alpha) + 2 m,

    with alpha the exact independence number when d <= EXACT_ALPHA_LIMIT and
    the greedy lower bound (logged) beyond.  c is clamped below at 1e-12.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (graph.d,):
        raise ValueError(f"p has shape {p.shape}, expected ({graph.d},)")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("p must be finite and nonnegative")
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    if p.sum() > m + 1e-9:
        raise ValueError(f"sum(p)={p.sum()} exceeds m={m}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    c = max(float(c), 1e-12)
    d = graph.d
    closed = observation_probabilities(graph, p)  # p_i + P_i
    lhs = float(np.sum(p / (closed / m + c)))
    if d <= EXACT_ALPHA_LIMIT:
        alpha = independence_number_exact(graph)
    else:
        alpha = independence_number_greedy(graph)
        logger.warning(
            "lemma1_sides: d=%d exceeds exact limit, using greedy alpha=%d", d, alpha
        )
    rhs = 2.0 * m * alpha * math.log(1.0 + (m * math.ceil(d * d / c) + d) / alpha) + 2.0 * m
    return lhs, rhs


def save_graph(graph, path):
    """Write the text format: first line d, then one 'j i' line per cross edge."""
    lines = [str(graph.d)]
    lines += [f"{j} {i}" for j, i in graph.cross_edges()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path):
    """Read the text format written by :func:`save_graph`.

    Self-loop lines are accepted and ignored (they are implicit).  Malformed
    lines, out-of-range endpoints, or a missing node count raise ValueError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = [ln.strip() for ln in fh]
    lines = [ln for ln in raw if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    try:
        d = int(lines[0])
    except ValueError:
        raise ValueError(f"{path}: first line must be the node count, got {lines[0]!r}")
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: bad edge line {ln!r}")
        j, i = int(parts[0]), int(parts[1])
        if j != i:
            edges.append((j, i))
    return ObservabilityGraph(d, edges)


def graph_stats(graph, exact_limit=EXACT_ALPHA_LIMIT):
    """Convenience bundle: (alpha_exact or None, alpha_greedy, dominating set)."""
    exact = (
        independence_number_exact(graph, exact_limit)
        if graph.d <= exact_limit
        else None
    )
    return GraphStats(
        alpha_exact=exact,
        alpha_greedy=independence_number_greedy(graph),
        dominating_set=tuple(greedy_dominating_set(graph)),
    )


class GraphStats:
    __slots__ = ("alpha_exact", "alpha_greedy", "dominating_set")

    def __init__(self, alpha_exact, alpha_greedy, dominating_set):
        self.alpha_exact = alpha_exact
        self.alpha_greedy = alpha_greedy
        self.dominating_set = dominating_set

    def __repr__(self):
        return (
            f"GraphStats(alpha_exact={self.alpha_exact}, "
            f"alpha_greedy={self.alpha_greedy}, dominating_set={self.dominating_set})"
        )
