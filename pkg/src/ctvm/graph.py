"""Probabilistic influence graph with per-node costs and benefits.

A graph is a set of directed edges (src, dst, p) over dense 0-based node
ids, plus a selection cost and an influence benefit per node.  Graphs are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import io
import math
import os
from typing import Iterable, TextIO

import numpy as np

LT_WEIGHT_TOL = 1e-9

# node-count guard for the dense synthetic generator (n^2 Bernoulli draws)
_GEN_MAX_NODES = 5000


class GraphError(ValueError):
    """Malformed or inconsistent graph input."""


class Graph:
    """Immutable directed probabilistic graph.

    Attributes:
        n: node count; ids are the dense range [0, n).
        edges: tuple of (src, dst, p) with p in (0, 1].
        cost: per-node selection cost (>= 0).
        benefit: per-node influence benefit (>= 0, total > 0).
        model_hint: "IC" or "LT"; under "LT" the in-weight sums are
            validated at construction.
    """

    __slots__ = (
        "n", "edges", "cost", "benefit", "model_hint",
        "rev_src", "rev_prob", "rev_cum", "out_adj",
        "benefit_cum", "total_benefit_", "lt_valid",
    )

    def __init__(self, n, edges, cost=None, benefit=None, model_hint="IC"):
        model_hint = str(model_hint).upper()
        if model_hint not in ("IC", "LT"):
            raise GraphError(f"unknown model hint {model_hint!r}")
        if n < 1:
            raise GraphError("graph needs at least one node")
        edges = tuple((int(u), int(v), float(p)) for (u, v, p) in edges)
        seen = set()
        for u, v, p in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) endpoint outside [0,{n})")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0.0 < p <= 1.0):
                raise GraphError(f"edge ({u},{v}): probability out of range: {p}")
            if (u, v) in seen:
                raise GraphError(f"duplicate edge ({u},{v})")
            seen.add((u, v))

        cost = np.ones(n) if cost is None else np.asarray(cost, dtype=float).copy()
        benefit = np.ones(n) if benefit is None else np.asarray(benefit, dtype=float).copy()
        if cost.shape != (n,) or benefit.shape != (n,):
            raise GraphError("cost/benefit arrays must have one entry per node")
        if np.any(cost < 0):
            raise GraphError("negative cost")
        if np.any(benefit < 0):
            raise GraphError("negative benefit")
        total = float(benefit.sum())
        if total <= 0:
            raise GraphError("total benefit must be positive")

        # reverse adjacency in CSR-ish per-node arrays; cumulative in-weights
        # drive the one-draw categorical step of the LT reverse walk
        rev_src = [[] for _ in range(n)]
        rev_prob = [[] for _ in range(n)]
        for u, v, p in edges:
            rev_src[v].append(u)
            rev_prob[v].append(p)
        out_adj = [[] for _ in range(n)]
        for u, v, p in edges:
            out_adj[u].append((v, p))

        lt_valid = True
        for v in range(n):
            if sum(rev_prob[v]) > 1.0 + LT_WEIGHT_TOL:
                lt_valid = False
                if model_hint == "LT":
                    raise GraphError(
                        f"node {v}: LT in-weight sum {sum(rev_prob[v]):.6f} exceeds 1")

        self.n = int(n)
        self.edges = edges
        self.cost = cost
        self.cost.setflags(write=False)
        self.benefit = benefit
        self.benefit.setflags(write=False)
        self.model_hint = model_hint
        self.rev_src = tuple(np.asarray(s, dtype=np.int64) for s in rev_src)
        self.rev_prob = tuple(np.asarray(p, dtype=float) for p in rev_prob)
        self.rev_cum = tuple(np.cumsum(p) for p in self.rev_prob)
        self.out_adj = tuple(tuple(a) for a in out_adj)
        self.benefit_cum = np.cumsum(benefit)
        self.total_benefit_ = total
        self.lt_valid = lt_valid

    @property
    def m(self):
        return len(self.edges)

    def __repr__(self):
        return (f"Graph(n={self.n}, m={self.m}, gamma={self.total_benefit_:g}, "
                f"hint={self.model_hint})")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and self.edges == other.edges
                and np.array_equal(self.cost, other.cost)
                and np.array_equal(self.benefit, other.benefit)
                and self.model_hint == other.model_hint)

    __hash__ = None


def total_benefit(g: Graph) -> float:
    """Total benefit over all nodes (the coverage-probability normalizer)."""
    return g.total_benefit_


def max_seed_size(g: Graph, budget: float) -> int:
    """Largest q such that the q cheapest node costs sum to at most budget.

    A safe over-estimate of the largest feasible seed set under a knapsack
    budget; only used to size combinatorial terms, never to restrict search.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    prefix = 0.0
    q = 0
    for c in sorted(g.cost):
        if prefix + c > budget:
            break
        prefix += c
        q += 1
    return q


def _iter_lines(source) -> Iterable[tuple[int, str]]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
    else:
        yield from enumerate(source, start=1)


def load_graph(edge_source, attr_source=None, model_hint="IC") -> Graph:
    """Parse a graph from an edge list and optional attribute list.

    Edge lines are ``src dst p`` (whitespace separated); attribute lines are
    ``node cost benefit``.  ``#`` starts a comment line in either file.
    Nodes absent from the attribute file default to cost 1, benefit 1.
    Node ids must be dense: every id in [0, max_id] has to appear in the
    edge or attribute input.

    Args:
        edge_source: path or iterable of text lines.
        attr_source: optional path or iterable of text lines.
        model_hint: "IC" or "LT"; "LT" enables in-weight validation.
    """
    edges = []
    mentioned = set()
    for lineno, raw in _iter_lines(edge_source):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphError(f"edge line {lineno}: expected 'src dst p', got {line!r}")
        try:
            u, v, p = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise GraphError(f"edge line {lineno}: {exc}") from exc
        if u < 0 or v < 0:
            raise GraphError(f"edge line {lineno}: negative node id")
        edges.append((u, v, p))
        mentioned.add(u)
        mentioned.add(v)

    attrs = {}
    if attr_source is not None:
        for lineno, raw in _iter_lines(attr_source):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise GraphError(
                    f"attr line {lineno}: expected 'node cost benefit', got {line!r}")
            try:
                v, c, b = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise GraphError(f"attr line {lineno}: {exc}") from exc
            if v < 0:
                raise GraphError(f"attr line {lineno}: negative node id")
            if v in attrs:
                raise GraphError(f"attr line {lineno}: duplicate attributes for node {v}")
            attrs[v] = (c, b)
            mentioned.add(v)

    if not mentioned:
        raise GraphError("empty graph input")
    n = max(mentioned) + 1
    missing = set(range(n)) - mentioned
    if missing:
        raise GraphError(
            f"node ids are not dense: ids {sorted(missing)[:5]} never appear")

    cost = np.ones(n)
    benefit = np.ones(n)
    for v, (c, b) in attrs.items():
        cost[v] = c
        benefit[v] = b
    return Graph(n, edges, cost, benefit, model_hint=model_hint)


def save_graph(g: Graph, edge_sink: TextIO, attr_sink: TextIO) -> None:
    """Serialize in the load_graph format; round-trips exactly."""
    for u, v, p in g.edges:
        edge_sink.write(f"{u} {v} {p!r}\n")
    for v in range(g.n):
        attr_sink.write(f"{v} {g.cost[v]!r} {g.benefit[v]!r}\n")


def graph_to_strings(g: Graph) -> tuple[str, str]:
    """Serialized (edge_text, attr_text) pair."""
    eb, ab = io.StringIO(), io.StringIO()
    save_graph(g, eb, ab)
    return eb.getvalue(), ab.getvalue()


def _parse_rule(rule: str):
    parts = str(rule).split(":")
    return parts[0], parts[1:]


def gen_synthetic(n, avg_degree, weight_rule="in_degree_reciprocal",
                  cost_rule="uniform", benefit_rule="uniform",
                  seed=0, model_hint=None) -> Graph:
    """Deterministic synthetic graph generator.

    Edges are sampled as a directed G(n, q) with q = avg_degree/(n-1) and no
    self loops, so the edge count concentrates around n * avg_degree.

    Rules (string form, extra parameters after colons):
      weight_rule:  "in_degree_reciprocal[:scale]" sets p(u,v) = scale/d_in(v)
                    (scale <= 1 keeps the graph LT-valid); "constant:p" uses a
                    fixed probability.
      cost_rule:    "uniform" (all 1), "random01" (uniform [0,1)),
                    "out_degree_linear" (cost = n/m * d_out).
      benefit_rule: "uniform" (all 1), "targeted:frac:lo:hi" (a random
                    fraction of nodes gets benefit uniform [lo, hi), the
                    rest 0).

    The output is a pure function of the arguments; the generator draws in a
    fixed order (edges, costs, benefits).
    """
    n = int(n)
    if n < 2:
        raise GraphError("gen_synthetic needs n >= 2")
    if n > _GEN_MAX_NODES:
        raise GraphError(f"gen_synthetic supports n <= {_GEN_MAX_NODES}")
    if avg_degree < 0:
        raise GraphError("avg_degree must be nonnegative")

    rng = np.random.default_rng(seed)
    q = min(avg_degree / (n - 1), 1.0)
    mask = rng.random((n, n)) < q
    np.fill_diagonal(mask, False)
    srcs, dsts = np.nonzero(mask)

    wname, wargs = _parse_rule(weight_rule)
    if wname == "in_degree_reciprocal":
        scale = float(wargs[0]) if wargs else 1.0
        if not (0.0 < scale <= 1.0):
            raise GraphError("in_degree_reciprocal scale must be in (0,1]")
        indeg = np.bincount(dsts, minlength=n)
        probs = scale / indeg[dsts]
    elif wname == "constant":
        if not wargs:
            raise GraphError("constant weight rule needs a probability, e.g. 'constant:0.3'")
        p = float(wargs[0])
        if not (0.0 < p <= 1.0):
            raise GraphError("constant edge probability out of range")
        probs = np.full(len(srcs), p)
    else:
        raise GraphError(f"unknown weight rule {weight_rule!r}")

    cname, _ = _parse_rule(cost_rule)
    if cname == "uniform":
        cost = np.ones(n)
    elif cname == "random01":
        cost = rng.random(n)
    elif cname == "out_degree_linear":
        if len(srcs) == 0:
            raise GraphError("out_degree_linear needs at least one edge")
        outdeg = np.bincount(srcs, minlength=n)
        cost = (n / len(srcs)) * outdeg.astype(float)
    else:
        raise GraphError(f"unknown cost rule {cost_rule!r}")

    bname, bargs = _parse_rule(benefit_rule)
    if bname == "uniform":
        benefit = np.ones(n)
    elif bname == "targeted":
        if len(bargs) != 3:
            raise GraphError("targeted benefit rule is 'targeted:frac:lo:hi'")
        frac, lo, hi = float(bargs[0]), float(bargs[1]), float(bargs[2])
        if not (0.0 < frac <= 1.0) or not (0.0 < lo <= hi):
            raise GraphError("targeted benefit parameters out of range")
        count = max(1, int(round(frac * n)))
        chosen = rng.choice(n, size=count, replace=False)
        benefit = np.zeros(n)
        benefit[chosen] = rng.uniform(lo, hi, size=count)
    else:
        raise GraphError(f"unknown benefit rule {benefit_rule!r}")

    if model_hint is None:
        model_hint = "LT" if wname == "in_degree_reciprocal" else "IC"
    edges = [(int(u), int(v), float(p)) for u, v, p in zip(srcs, dsts, probs)]
    return Graph(n, edges, cost, benefit, model_hint=model_hint)
