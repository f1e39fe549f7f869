"""Indexed RR-set pool with coverage counting and benefit estimation."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .sampler import RRSet


class RRCollection:
    """A pool of RR sets with an inverted node -> set-index map.

    Reads are safe from any number of threads; appends require exclusive
    access (the single writer grows the pool in place between solves).
    """

    __slots__ = ("n", "sets", "inverted", "total_width")

    def __init__(self, n: int, sets: Iterable[RRSet] = ()):
        self.n = int(n)
        self.sets: list[RRSet] = []
        self.inverted: list[list[int]] = [[] for _ in range(self.n)]
        self.total_width = 0
        self.extend(sets)

    @property
    def T(self) -> int:
        return len(self.sets)

    def append(self, rr: RRSet) -> None:
        idx = len(self.sets)
        self.sets.append(rr)
        for v in rr.members:
            self.inverted[v].append(idx)
        self.total_width += len(rr.members)

    def extend(self, rrs: Iterable[RRSet]) -> None:
        for rr in rrs:
            self.append(rr)

    def __len__(self) -> int:
        return len(self.sets)


def cov(c: RRCollection, seeds) -> int:
    """Number of RR sets in the pool that intersect the seed set."""
    nodes = getattr(seeds, "nodes", seeds)
    lists = [c.inverted[v] for v in set(nodes)]
    if not lists:
        return 0
    hit = np.zeros(len(c.sets), dtype=bool)
    for lst in lists:
        if lst:
            hit[lst] = True
    return int(hit.sum())


def benefit_estimate(c: RRCollection, seeds, gamma: float) -> float:
    """Estimated expected benefit: gamma * cov / T."""
    if c.T == 0:
        raise ValueError("cannot estimate benefit from an empty collection")
    return gamma * cov(c, seeds) / c.T
