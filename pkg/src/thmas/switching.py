"""Graph families over equal-size follower subsets and the periodic switching rule."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional

from .graph import DirectedGraph, build_ring_subgraph, max_in_degree


def _check_sigma(n: int, sigma: int) -> None:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    if not 1 <= sigma <= n:
        raise ValueError(f"sigma={sigma} violates 1 <= sigma <= N (N={n})")


def enumerate_active_sets(n: int, sigma: int) -> list[tuple[int, ...]]:
    """All ``sigma``-subsets of followers ``1..n`` in lexicographic order."""
    _check_sigma(n, sigma)
    return list(combinations(range(1, n + 1), sigma))


def family_size(n: int, sigma: int) -> int:
    _check_sigma(n, sigma)
    return comb(n, sigma)


@dataclass(frozen=True)
class GraphFamily:
    n: int
    sigma: int
    graphs: tuple[DirectedGraph, ...]

    @property
    def p(self) -> int:
        return len(self.graphs)

    @property
    def leader(self) -> int:
        return self.n + 1

    def max_degree(self) -> int:
        return max(max_in_degree(g) for g in self.graphs)

    def __getitem__(self, i: int) -> DirectedGraph:
        return self.graphs[i]

    def __len__(self) -> int:
        return len(self.graphs)


def build_family(n: int, sigma: int) -> GraphFamily:
    leader = n + 1
    graphs = tuple(build_ring_subgraph(s, leader) for s in enumerate_active_sets(n, sigma))
    return GraphFamily(n, sigma, graphs)


@dataclass(frozen=True)
class SwitchState:
    index: int = 0
    sigma_prev: Optional[int] = None


def advance(
    state: SwitchState,
    family: GraphFamily,
    sigma_changed: bool,
    at_major_tick: bool,
) -> tuple[SwitchState, DirectedGraph]:
    """Select the graph for the next lower-layer tick.

    A change of active count seen at a major tick restarts the cycle at
    graph 0; otherwise the index steps forward modulo the family size.
    """
    if sigma_changed and at_major_tick:
        index = 0
    else:
        index = (state.index + 1) % family.p
    return SwitchState(index, family.sigma), family.graphs[index]
