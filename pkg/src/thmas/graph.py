"""Directed communication graphs over a leader and a subset of active followers.

Agents are labelled ``1..N`` (followers) and ``N+1`` (the leader).  An edge is
stored as ``(receiver, sender)``: agent ``receiver`` reads the state of agent
``sender``.  Matrix row/column ``i-1`` belongs to agent ``i``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Edge = tuple[int, int]


class GraphError(ValueError):
    """Raised when a graph would violate its structural invariants."""


@dataclass(frozen=True)
class DirectedGraph:
    num_agents: int
    edges: frozenset[Edge]
    active_followers: tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.num_agents
        if n < 2:
            raise GraphError(f"num_agents must be >= 2 (N >= 1 followers), got {n}")
        object.__setattr__(self, "edges", frozenset(self.edges))
        active = tuple(sorted(set(self.active_followers)))
        object.__setattr__(self, "active_followers", active)
        leader = n
        for f in active:
            if not 1 <= f < leader:
                raise GraphError(f"active follower {f} outside 1..{leader - 1}")
        allowed = set(active) | {leader}
        for receiver, sender in self.edges:
            if receiver == sender:
                raise GraphError(f"self-loop at agent {receiver}")
            if receiver not in allowed or sender not in allowed:
                raise GraphError(f"edge {(receiver, sender)} touches an inactive agent")
            if receiver == leader:
                raise GraphError("the leader cannot receive edges")

    @property
    def leader(self) -> int:
        return self.num_agents

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(self.active_followers) | {self.leader}


def make_graph(num_agents: int, edges: Iterable[Edge], active_followers: Iterable[int] | None = None) -> DirectedGraph:
    """Build a graph, inferring the active set from edge endpoints if not given."""
    edges = frozenset((int(r), int(s)) for r, s in edges)
    if active_followers is None:
        active_followers = {a for e in edges for a in e if a != num_agents}
    return DirectedGraph(num_agents, edges, tuple(active_followers))


def adjacency_matrix(g: DirectedGraph) -> np.ndarray:
    a = np.zeros((g.num_agents, g.num_agents))
    for receiver, sender in g.edges:
        a[receiver - 1, sender - 1] = 1.0
    return a


def degree_matrix(g: DirectedGraph) -> np.ndarray:
    """Diagonal matrix of in-degrees (edges received by each agent)."""
    return np.diag(adjacency_matrix(g).sum(axis=1))


def laplacian(g: DirectedGraph) -> np.ndarray:
    return degree_matrix(g) - adjacency_matrix(g)


def max_in_degree(g: DirectedGraph) -> int:
    counts = [0] * (g.num_agents + 1)
    for receiver, _ in g.edges:
        counts[receiver] += 1
    return max(counts)


def reachable_from(g: DirectedGraph, root: int) -> set[int]:
    """Nodes reachable from ``root`` following information flow sender -> receiver."""
    out: dict[int, list[int]] = {}
    for receiver, sender in g.edges:
        out.setdefault(sender, []).append(receiver)
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for nxt in out.get(v, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def has_spanning_tree(g: DirectedGraph, root: int) -> bool:
    if root not in g.nodes:
        raise GraphError(f"root {root} is neither the leader nor an active follower")
    return g.nodes <= reachable_from(g, root)


def union_graphs(gs: Sequence[DirectedGraph]) -> DirectedGraph:
    if not gs:
        raise GraphError("cannot take the union of an empty list of graphs")
    n = gs[0].num_agents
    if any(g.num_agents != n for g in gs):
        raise GraphError("all graphs must share num_agents")
    edges = frozenset().union(*(g.edges for g in gs))
    active = set().union(*(g.active_followers for g in gs))
    return DirectedGraph(n, edges, tuple(active))


def build_ring_subgraph(active_set: Iterable[int], leader: int) -> DirectedGraph:
    """Directed ring over the sorted active set, fed by the leader at its smallest member.

    For ``s_1 < ... < s_k`` the ring is ``s_1 -> s_2 -> ... -> s_k -> s_1``
    (each node receives from its predecessor), plus the edge ``leader -> s_1``.
    """
    s = sorted(set(active_set))
    if not s:
        raise GraphError("active_set must be nonempty")
    if leader in s:
        raise GraphError("active_set must not contain the leader")
    edges = {(s[0], leader)}
    if len(s) >= 2:
        for i, node in enumerate(s):
            edges.add((s[(i + 1) % len(s)], node))
    return DirectedGraph(leader, frozenset(edges), tuple(s))
