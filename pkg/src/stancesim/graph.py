"""Directed follower -> followee graph. Information flows against the edge direction."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    pass


class SocialGraph:
    """Edge (u, v) means u follows v; v's posts are delivered to u.

    ``followees[u]`` is the forward adjacency and ``followers[v]`` the reverse
    index used for delivery. Both are kept in sync by :meth:`follow` and
    :meth:`unfollow`.
    """

    def __init__(self, n_agents: int = 0):
        self.followees: list[set[int]] = [set() for _ in range(n_agents)]
        self.followers: list[set[int]] = [set() for _ in range(n_agents)]
        self._counts = None

    @classmethod
    def from_edges(cls, n_agents: int, edges) -> "SocialGraph":
        g = cls(n_agents)
        for u, v in edges:
            g.follow(u, v)
        return g

    @property
    def n_agents(self) -> int:
        return len(self.followees)

    def add_node(self) -> int:
        self._counts = None
        self.followees.append(set())
        self.followers.append(set())
        return len(self.followees) - 1

    def follow(self, follower: int, followee: int) -> bool:
        if follower == followee:
            raise ValueError("self-follow is not allowed")
        out = self.followees[follower]
        if followee in out:
            return False
        out.add(followee)
        self.followers[followee].add(follower)
        self._counts = None
        return True

    def unfollow(self, follower: int, followee: int) -> bool:
        out = self.followees[follower]
        if followee not in out:
            return False
        out.discard(followee)
        self.followers[followee].discard(follower)
        self._counts = None
        return True

    def _degree_arrays(self):
        if self._counts is None:
            self._counts = (np.array([len(s) for s in self.followers], dtype=np.int64),
                            np.array([len(s) for s in self.followees], dtype=np.int64))
        return self._counts

    def follower_counts(self) -> np.ndarray:
        """In-degree per node as an array; cached until the next edge change."""
        return self._degree_arrays()[0]

    def followee_counts(self) -> np.ndarray:
        return self._degree_arrays()[1]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.followees[u]

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, outs in enumerate(self.followees) for v in sorted(outs)]

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.followees)

    def in_degree(self, v: int) -> int:
        return len(self.followers[v])

    def out_degree(self, u: int) -> int:
        return len(self.followees[u])

    def reciprocity(self) -> float:
        """Fraction of edges whose reverse edge also exists."""
        m = self.n_edges
        if m == 0:
            return 0.0
        mutual = sum(1 for u, outs in enumerate(self.followees) for v in outs
                     if u in self.followees[v])
        return mutual / m

    def check_index(self) -> bool:
        rebuilt = [set() for _ in range(self.n_agents)]
        for u, outs in enumerate(self.followees):
            for v in outs:
                rebuilt[v].add(u)
        return rebuilt == self.followers

    def copy(self) -> "SocialGraph":
        g = SocialGraph(0)
        g._counts = None
        g.followees = [set(s) for s in self.followees]
        g.followers = [set(s) for s in self.followers]
        return g

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(range(self.n_agents))
        g.add_edges_from(self.edges())
        return g


@dataclass
class GraphGenParams:
    n_nodes: int = 1000
    target_mean_out_degree: float = 10.0
    reciprocity_fraction: float = 0.221
    attachment_exponent: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be at least 2")
        if self.target_mean_out_degree <= 0:
            raise ValueError("target_mean_out_degree must be positive")
        if not 0.0 <= self.reciprocity_fraction <= 1.0:
            raise ValueError("reciprocity_fraction must be in [0, 1]")
        if self.attachment_exponent < 0:
            raise ValueError("attachment_exponent must be non-negative")


def generate_scale_free(params: GraphGenParams) -> SocialGraph:
    """Preferential-attachment directed graph with a reciprocity pass.

    Nodes arrive one at a time and follow earlier nodes with probability
    proportional to ``(in_degree + 1) ** attachment_exponent``. A share of
    edges then gets its reverse added, sized so that the measured reciprocity
    (fraction of reciprocated edges) lands on ``reciprocity_fraction``.
    """
    params.validate()
    n = params.n_nodes
    rng = np.random.default_rng(params.seed)
    r = params.reciprocity_fraction
    # reversing a share q of base edges gives reciprocity 2q / (1 + q)
    q = r / (2.0 - r)
    per_node = params.target_mean_out_degree / (1.0 + q)

    g = SocialGraph(n)
    indeg = np.zeros(n)
    order = rng.permutation(n)
    base: list[tuple[int, int]] = []
    for i in range(1, n):
        u = int(order[i])
        k = int(per_node) + (rng.random() < per_node - int(per_node))
        k = max(1, min(k, i))
        pool = order[:i]
        w = (indeg[pool] + 1.0) ** params.attachment_exponent
        targets = rng.choice(pool, size=k, replace=False, p=w / w.sum())
        for v in targets:
            v = int(v)
            g.follow(u, v)
            base.append((u, v))
            indeg[v] += 1
    for u, v in base:
        if rng.random() < q:
            g.follow(v, u)
    return g


def attach_fringe_bots(g: SocialGraph, bot_ids, rng: random.Random) -> SocialGraph:
    """Append bots that each follow exactly one existing human and have no followers."""
    humans = list(range(g.n_agents))
    if not humans:
        raise ValueError("cannot attach fringe bots to an empty graph")
    for b in bot_ids:
        if b != g.n_agents:
            raise ValueError(f"bot id {b} must be the next free node id {g.n_agents}")
        g.add_node()
        g.follow(b, rng.choice(humans))
    return g


def load_edge_list(path) -> SocialGraph:
    path = Path(path)
    n_declared = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("n="):
                if edges or n_declared is not None:
                    raise GraphFormatError(f"{path}, line {lineno}: header must come first")
                try:
                    n_declared = int(line[2:])
                except ValueError:
                    raise GraphFormatError(f"{path}, line {lineno}: bad header {line!r}") from None
                continue
            parts = line.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise GraphFormatError(f"{path}, line {lineno}: expected 'follower followee', got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            if u == v:
                raise GraphFormatError(f"{path}, line {lineno}: self-loop {u} -> {v}")
            if (u, v) in seen:
                log.warning("%s, line %d: duplicate edge %d -> %d dropped", path, lineno, u, v)
                continue
            seen.add((u, v))
            edges.append((u, v))
    n = max((max(e) for e in edges), default=-1) + 1
    if n_declared is not None:
        if n_declared < n:
            raise GraphFormatError(f"{path}: header declares {n_declared} nodes but ids reach {n - 1}")
        n = n_declared
    return SocialGraph.from_edges(n, edges)


def save_edge_list(g: SocialGraph, path) -> None:
    with Path(path).open("w") as fh:
        fh.write(f"n={g.n_agents}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def graph_stats(g: SocialGraph) -> dict:
    indeg = np.array([len(s) for s in g.followers])
    outdeg = np.array([len(s) for s in g.followees])
    isolates = int(np.sum((indeg == 0) & (outdeg == 0)))
    return {
        "nodes": g.n_agents,
        "edges": g.n_edges,
        "mean_out_degree": float(outdeg.mean()) if len(outdeg) else 0.0,
        "max_in_degree": int(indeg.max()) if len(indeg) else 0,
        "median_in_degree": float(np.median(indeg)) if len(indeg) else 0.0,
        "reciprocity": g.reciprocity(),
        "isolates": isolates,
    }


def to_dot(g: SocialGraph, stances=None, classes=None, name: str = "social") -> str:
    """DOT text for the follower graph; node attributes stance/class, edge weight 1."""
    lines = [f"digraph {name} {{"]
    for v in range(g.n_agents):
        attrs = []
        if stances is not None:
            attrs.append(f'stance="{stances[v]}"')
        if classes is not None:
            attrs.append(f'class="{classes[v]}"')
        lines.append(f"  {v}" + (f" [{', '.join(attrs)}]" if attrs else "") + ";")
    for u, v in g.edges():
        lines.append(f"  {u} -> {v} [weight=1];")
    lines.append("}")
    return "\n".join(lines) + "\n"
