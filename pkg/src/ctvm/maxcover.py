"""Exact and greedy solvers for budgeted max coverage over an RR-set pool.

The exact solver is a depth-first branch and bound over node-inclusion
decisions.  It also backs the two-stage program solver, so the core works
on generic weighted elements: an element is anything a node can cover, with
a nonnegative weight (RR sets with weight 1 here, realization/node pairs
weighted by probability times benefit there).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import coverage
from .coverage import RRCollection

DEFAULT_WIDTH_CAP = 500_000
_CAP_ENV = "CTVM_SOLVER_CAP"

# objective values within this relative slack count as ties and fall through
# to the smaller-then-lexicographic preference
TIE_REL_TOL = 1e-9


class SolverCapError(RuntimeError):
    """Instance exceeds the configured branch-and-bound size cap."""


@dataclass(frozen=True)
class SeedSet:
    """Chosen nodes (sorted) and their total selection cost."""

    nodes: tuple
    total_cost: float

    @classmethod
    def from_nodes(cls, nodes, costs) -> "SeedSet":
        nodes = tuple(sorted(int(v) for v in set(nodes)))
        return cls(nodes, float(math.fsum(costs[v] for v in nodes)))

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


@dataclass(frozen=True)
class CoverSolution:
    seed: SeedSet
    covered: int
    optimal: bool


def _width_cap(width_cap) -> int:
    if width_cap is not None:
        return int(width_cap)
    return int(os.environ.get(_CAP_ENV, DEFAULT_WIDTH_CAP))


def _tie_better(size_a, key_a, size_b, key_b) -> bool:
    """Smaller-then-lexicographic preference between equal-objective sets."""
    return (size_a, key_a) < (size_b, key_b)


class _WeightedCover:
    """Branch-and-bound state for exact weighted budgeted max coverage."""

    def __init__(self, node_elems, elem_weight, costs, budget):
        self.costs = costs
        self.budget = float(budget)
        self.n = len(node_elems)
        # nodes covering nothing cannot change the objective
        active = [u for u in range(self.n) if len(node_elems[u]) > 0]
        self.elems = {u: node_elems[u] for u in active}
        self.weights = {u: elem_weight[node_elems[u]] for u in active}
        deg = {u: float(self.weights[u].sum()) for u in active}
        # static branching order: heaviest coverage first, ids break ties
        self.order = sorted(active, key=lambda u: (-deg[u], u))
        m = max((int(e.max()) + 1 for e in self.elems.values() if len(e)), default=0)
        self.covered = np.zeros(m, dtype=bool)
        self.tol = TIE_REL_TOL * max(1.0, float(elem_weight.sum()))
        self.best_obj = -1.0
        self.best_nodes: tuple = ()
        self.chosen: list[int] = []
        self.obj = 0.0

    def seed_incumbent(self, nodes, obj):
        self.best_nodes = tuple(sorted(nodes))
        self.best_obj = float(obj)

    def _consider(self, obj):
        if obj > self.best_obj + self.tol:
            self.best_obj = obj
            self.best_nodes = tuple(sorted(self.chosen))
        elif obj >= self.best_obj - self.tol:
            key = tuple(sorted(self.chosen))
            if _tie_better(len(key), key, len(self.best_nodes), self.best_nodes):
                self.best_obj = max(self.best_obj, obj)
                self.best_nodes = key

    def _marginal(self, u) -> float:
        e = self.elems[u]
        return float(self.weights[u][~self.covered[e]].sum())

    def _knapsack_bound(self, items, rem) -> float:
        # fractional relaxation over (marginal, cost); admissible because
        # marginal gains of a set are subadditive in its members
        gain = 0.0
        cap = rem
        for marg, cost in items:
            if cost <= 0.0:
                gain += marg
            elif cost <= cap:
                gain += marg
                cap -= cost
            else:
                if cap > 0.0:
                    gain += marg * (cap / cost)
                break
        return gain

    def _recurse(self, pos, rem):
        useful = []
        for i in range(pos, len(self.order)):
            u = self.order[i]
            if self.costs[u] > rem:
                continue
            marg = self._marginal(u)
            if marg > 0.0:
                useful.append((i, u, marg))
        if not useful:
            return
        by_density = sorted(
            useful,
            key=lambda t: -(t[2] / self.costs[t[1]] if self.costs[t[1]] > 0 else math.inf))

        for j, (i, u, marg) in enumerate(useful):
            # bound for the subtree in which useful[:j] are all excluded;
            # the candidate pool is exactly the positions >= i
            remaining = [(m, self.costs[v]) for (ii, v, m) in by_density
                         if ii >= i]
            bound = self.obj + self._knapsack_bound(remaining, rem)
            if bound < self.best_obj - self.tol:
                return
            if bound <= self.best_obj + self.tol and \
                    len(self.chosen) + 1 > len(self.best_nodes):
                return
            e = self.elems[u]
            newly = e[~self.covered[e]]
            self.covered[newly] = True
            self.chosen.append(u)
            self.obj += marg
            self._consider(self.obj)
            self._recurse(i + 1, rem - self.costs[u])
            self.obj -= marg
            self.chosen.pop()
            self.covered[newly] = False

    def solve(self):
        self._consider(0.0)
        self._recurse(0, self.budget)
        return self.best_nodes, self.best_obj


def solve_weighted(node_elems: Sequence[np.ndarray], elem_weight: np.ndarray,
                   costs: np.ndarray, budget: float,
                   width_cap=None) -> tuple[tuple, float]:
    """Exact weighted budgeted max coverage; returns (nodes, objective).

    Ties on the objective prefer the smaller, then lexicographically
    smallest node set.  Raises SolverCapError when the instance width
    (total element memberships) exceeds the cap.
    """
    cap = _width_cap(width_cap)
    width = sum(len(e) for e in node_elems)
    if width > cap:
        raise SolverCapError(
            f"instance width {width} exceeds solver cap {cap} "
            f"(override with {_CAP_ENV})")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    bb = _WeightedCover(node_elems, elem_weight, costs, budget)
    warm_nodes, warm_obj = _greedy_weighted(
        bb.elems, bb.weights, costs, budget, density=True)
    if warm_nodes:
        bb.seed_incumbent(warm_nodes, warm_obj)
    return bb.solve()


def _greedy_weighted(elems, weights, costs, budget, density):
    """Lazy greedy on weighted elements; returns (nodes, objective)."""
    import heapq

    m = 0
    for e in elems.values():
        if len(e):
            m = max(m, int(e.max()) + 1)
    covered = np.zeros(m, dtype=bool)

    def marginal(u):
        e = elems[u]
        return float(weights[u][~covered[e]].sum())

    def key(u, marg):
        if not density:
            return marg
        c = costs[u]
        return marg / c if c > 0 else math.inf

    heap = []
    for u in elems:
        if costs[u] <= budget:
            marg = marginal(u)
            if marg > 0:
                heapq.heappush(heap, (-key(u, marg), u, marg, 0))

    chosen = []
    obj = 0.0
    rem = budget
    stamp = 0
    while heap:
        negk, u, marg, at = heapq.heappop(heap)
        if costs[u] > rem:
            continue
        if at < stamp:
            marg = marginal(u)
            if marg <= 0:
                continue
            heapq.heappush(heap, (-key(u, marg), u, marg, stamp))
            continue
        chosen.append(u)
        obj += marg
        rem -= costs[u]
        e = elems[u]
        covered[e] = True
        stamp += 1
    return tuple(sorted(chosen)), obj


def _collection_arrays(c: RRCollection):
    node_elems = [np.asarray(lst, dtype=np.int64) for lst in c.inverted]
    elem_weight = np.ones(c.T)
    return node_elems, elem_weight


def solve_exact(c: RRCollection, costs, budget: float,
                width_cap=None) -> CoverSolution:
    """Seed set of total cost <= budget covering the most RR sets, exactly."""
    if c.total_width > _width_cap(width_cap):
        raise SolverCapError(
            f"collection width {c.total_width} exceeds solver cap "
            f"{_width_cap(width_cap)} (override with {_CAP_ENV})")
    costs = np.asarray(costs, dtype=float)
    node_elems, elem_weight = _collection_arrays(c)
    nodes, _ = solve_weighted(node_elems, elem_weight, costs, budget,
                              width_cap=width_cap)
    seed = SeedSet.from_nodes(nodes, costs)
    return CoverSolution(seed=seed, covered=coverage.cov(c, seed), optimal=True)


def solve_greedy(c: RRCollection, costs, budget: float) -> CoverSolution:
    """Lazily evaluated greedy with the best-affordable-singleton safeguard.

    Picks the affordable node with the best marginal coverage per unit cost
    (plain marginal coverage under uniform costs), then returns the better
    of the greedy set and the single best affordable node.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    costs = np.asarray(costs, dtype=float)
    uniform = bool(np.all(costs == costs[0])) if len(costs) else True
    elems = {u: np.asarray(lst, dtype=np.int64)
             for u, lst in enumerate(c.inverted) if lst}
    weights = {u: np.ones(len(e)) for u, e in elems.items()}
    nodes, _ = _greedy_weighted(elems, weights, costs, budget,
                                density=not uniform)
    greedy_seed = SeedSet.from_nodes(nodes, costs)
    greedy_cov = coverage.cov(c, greedy_seed)

    best_single = None
    best_single_cov = -1
    for u in sorted(elems):
        if costs[u] <= budget:
            cu = len(c.inverted[u])
            if cu > best_single_cov:
                best_single, best_single_cov = u, cu
    if best_single is not None and best_single_cov > greedy_cov:
        seed = SeedSet.from_nodes([best_single], costs)
        return CoverSolution(seed=seed, covered=best_single_cov, optimal=False)
    return CoverSolution(seed=greedy_seed, covered=greedy_cov, optimal=False)


def export_ilp(c: RRCollection, costs, budget: float, sink) -> None:
    """Write the max-coverage integer program in LP text format.

    Uses the same writer as the two-stage model export; the objective is
    stated as minimizing the number of uncovered sets (a constant T apart
    from the coverage objective).
    """
    from .texact import write_lp

    costs = np.asarray(costs, dtype=float)
    objective = [(-1.0, f"y_{j}") for j in range(c.T)]
    rows = []
    rows.append(("budget",
                 [(float(costs[v]), f"s_{v}") for v in range(c.n)
                  if costs[v] != 0.0],
                 "<=", float(budget)))
    for j, rr in enumerate(c.sets):
        terms = [(1.0, f"s_{v}") for v in sorted(rr.members)]
        terms.append((1.0, f"y_{j}"))
        rows.append((f"cover_{j}", terms, ">=", 1.0))
    binaries = [f"s_{v}" for v in range(c.n)] + [f"y_{j}" for j in range(c.T)]
    write_lp(sink, objective, rows, binaries,
             comment=f"max coverage over {c.T} RR sets; "
                     f"maximize T + objective (T = {c.T})")
