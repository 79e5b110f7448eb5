"""Road networks, shortest paths, incidence and the observation quotient.

A network is a directed graph with strictly positive travel times. Paths
are edge sequences; their link-incidence bit vectors are the columns the
estimator recovers. When only a subset of edges carries sensors, distinct
paths can project onto the same observed footprint; grouping them into
equivalence classes (and summing their Poisson rates, which stays Poisson)
restores the distinct-column condition the estimator needs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Sequence

import numpy as np

from .poset import BitVector

__all__ = [
    "NoPathError",
    "Network",
    "Path",
    "ObservationPlan",
    "QuotientModel",
    "load_network",
    "read_tntp",
    "read_json_network",
    "shortest_path",
    "path_indicator",
    "project",
    "build_quotient",
    "incidence",
    "reachable_from",
]


class NoPathError(ValueError):
    """Destination unreachable from origin."""


class Network:
    """Directed graph with positive edge travel times.

    Edge order is the file/listing order and defines the edge indices used
    everywhere else (incidence rows, observation plans, CSV headers).
    """

    def __init__(self, nodes: Sequence, edges: Sequence[tuple], name: str = "network"):
        self.name = name
        self.nodes = tuple(nodes)
        self.node_index = {v: i for i, v in enumerate(self.nodes)}
        if len(self.node_index) != len(self.nodes):
            raise ValueError("duplicate node ids")
        seen = set()
        parsed = []
        adjacency: dict = {v: [] for v in self.nodes}
        for e_idx, (tail, head, time) in enumerate(edges):
            if tail not in self.node_index or head not in self.node_index:
                raise ValueError(f"edge ({tail}, {head}) references unknown node")
            if tail == head:
                raise ValueError(f"self-loop at {tail}")
            if (tail, head) in seen:
                raise ValueError(f"duplicate edge ({tail}, {head})")
            time = float(time)
            if not time > 0:
                raise ValueError(f"edge ({tail}, {head}) must have positive time")
            seen.add((tail, head))
            parsed.append((tail, head, time))
            adjacency[tail].append((e_idx, head, time))
        self.edges = tuple(parsed)
        self.adjacency = adjacency
        self.edge_index = {(t, h): i for i, (t, h, _) in enumerate(self.edges)}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f"Network({self.name!r}, n={self.n_nodes}, m={self.n_edges})"


@dataclass(frozen=True)
class Path:
    """Sequence of adjacent edge indices without repetition."""

    edges: tuple[int, ...]
    nodes: tuple
    origin: object = field(init=False)
    destination: object = field(init=False)

    def __post_init__(self):
        if len(self.nodes) != len(self.edges) + 1 or not self.edges:
            raise ValueError("path needs n edges and n+1 nodes, n >= 1")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("repeated edge in path")
        object.__setattr__(self, "origin", self.nodes[0])
        object.__setattr__(self, "destination", self.nodes[-1])

    @classmethod
    def from_edges(cls, net: Network, edge_ids: Sequence[int]) -> "Path":
        edge_ids = tuple(edge_ids)
        nodes = [net.edges[edge_ids[0]][0]]
        for e in edge_ids:
            tail, head, _ = net.edges[e]
            if tail != nodes[-1]:
                raise ValueError("edges are not consecutive")
            nodes.append(head)
        return cls(edge_ids, tuple(nodes))

    def travel_time(self, net: Network) -> float:
        return sum(net.edges[e][2] for e in self.edges)


@dataclass(frozen=True)
class ObservationPlan:
    """Which edge indices carry sensors, in measurement-column order."""

    observed: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.observed)) != len(self.observed):
            raise ValueError("observed edges must be distinct")
        if not self.observed:
            raise ValueError("observation plan must not be empty")
        if any(e < 0 for e in self.observed):
            raise ValueError("edge indices must be nonnegative")

    @classmethod
    def all_edges(cls, net: Network) -> "ObservationPlan":
        return cls(tuple(range(net.n_edges)))

    def __len__(self) -> int:
        return len(self.observed)


def reachable_from(net: Network, s) -> set:
    """Nodes reachable from s (including s), by BFS."""
    seen = {s}
    frontier = [s]
    while frontier:
        nxt = []
        for u in frontier:
            for _, head, _ in net.adjacency[u]:
                if head not in seen:
                    seen.add(head)
                    nxt.append(head)
        frontier = nxt
    return seen


def shortest_path(net: Network, s, t) -> Path:
    """Minimal travel-time path from s to t.

    Ties are broken toward the lexicographically smallest node sequence so
    results are reproducible on networks with symmetric costs. Dijkstra
    with (cost, node-sequence) keys: with positive times, equal-cost paths
    to a node are never prefixes of one another, so sequence order is
    preserved under extension and the first settlement of a node is its
    minimum.
    """
    if s == t:
        raise ValueError("origin and destination must differ")
    if s not in net.node_index or t not in net.node_index:
        raise ValueError("unknown endpoint")
    settled = set()
    heap = [(0.0, (s,), ())]
    while heap:
        cost, seq, edges = heappop(heap)
        u = seq[-1]
        if u in settled:
            continue
        settled.add(u)
        if u == t:
            return Path(edges, seq)
        for e_idx, head, time in net.adjacency[u]:
            if head not in settled:
                heappush(heap, (cost + time, seq + (head,), edges + (e_idx,)))
    raise NoPathError(f"no path from {s} to {t} in {net.name}")


def path_indicator(path: Path, m: int) -> BitVector:
    """Bit vector over all m edges with the path's edges set."""
    mask = 0
    for e in path.edges:
        if e >= m:
            raise ValueError(f"edge index {e} out of range for m={m}")
        mask |= 1 << e
    return BitVector(mask, m)


def project(indicator: BitVector, plan: ObservationPlan) -> BitVector:
    """Restrict a full-edge indicator to the observed coordinates.

    May be all-zero (a path that dodges every sensor); callers must drop
    such vectors before estimation.
    """
    mask = 0
    for out_pos, e in enumerate(plan.observed):
        if e >= indicator.width:
            raise ValueError(f"plan observes edge {e} beyond width {indicator.width}")
        if indicator.bit(e):
            mask |= 1 << out_pos
    return BitVector(mask, len(plan.observed))


@dataclass
class QuotientModel:
    """Paths grouped by observed footprint, rates summed per class.

    Classes are keyed by the projected indicator; summing independent
    Poisson rates inside a class is exact (the aggregate is Poisson with
    the summed mean). Paths invisible to the plan are dropped and
    accounted for in ``dropped_paths`` / ``dropped_mass``.
    """

    width: int
    classes: dict[BitVector, tuple[int, ...]]
    means: dict[BitVector, float]
    dropped_paths: tuple[int, ...]
    dropped_mass: float

    def total_mean(self) -> float:
        return float(sum(self.means.values()))

    def to_exact_model(self):
        from .cumulants import ExactModel

        cols = sorted(self.classes, key=BitVector.sort_key)
        return ExactModel(cols, [self.means[c] for c in cols])

    def as_dict(self) -> dict[BitVector, float]:
        return dict(self.means)


def build_quotient(
    paths: Sequence[Path], means: Sequence[float], plan: ObservationPlan, m: int
) -> QuotientModel:
    """Group paths by projected indicator and aggregate their means."""
    means = np.asarray(means, dtype=np.float64)
    if means.shape != (len(paths),):
        raise ValueError("one mean per path required")
    if (means <= 0).any():
        raise ValueError("path means must be strictly positive")
    classes: dict[BitVector, list[int]] = {}
    agg: dict[BitVector, float] = {}
    dropped: list[int] = []
    dropped_mass = 0.0
    for j, path in enumerate(paths):
        key = project(path_indicator(path, m), plan)
        if key.mask == 0:
            dropped.append(j)
            dropped_mass += float(means[j])
            continue
        classes.setdefault(key, []).append(j)
        agg[key] = agg.get(key, 0.0) + float(means[j])
    return QuotientModel(
        width=len(plan),
        classes={k: tuple(v) for k, v in classes.items()},
        means=agg,
        dropped_paths=tuple(dropped),
        dropped_mass=dropped_mass,
    )


def incidence(paths: Sequence[Path], m: int) -> np.ndarray:
    """Edge-path incidence matrix: rows = edges, columns = paths."""
    out = np.zeros((m, len(paths)), dtype=np.uint8)
    for j, path in enumerate(paths):
        for e in path.edges:
            if e >= m:
                raise ValueError(f"edge index {e} out of range for m={m}")
            out[e, j] = 1
    return out


def read_tntp(path: str, name: str | None = None) -> Network:
    """Read a TNTP-style network file.

    Metadata lines start with '<'; '~' lines are comments. Edge records
    are whitespace-separated with an optional trailing ';'; only the tail
    node, head node and free-flow travel time (fields 1, 2 and 5) are
    used.
    """
    nodes_seen: dict = {}
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("<") or line.startswith("~"):
                continue
            parts = line.rstrip(";").split()
            if len(parts) < 5:
                raise ValueError(f"{path}:{lineno}: expected >= 5 fields, got {len(parts)}")
            try:
                tail = int(parts[0])
                head = int(parts[1])
                time = float(parts[4])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad edge record: {exc}") from None
            nodes_seen.setdefault(tail, None)
            nodes_seen.setdefault(head, None)
            edges.append((tail, head, time))
    if not edges:
        raise ValueError(f"{path}: no edge records found")
    return Network(sorted(nodes_seen), edges, name=name or _stem(path))


def read_json_network(path: str, name: str | None = None) -> Network:
    """Read the minimal JSON format {nodes: [...], edges: [{from, to, time}]}."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        nodes = doc["nodes"]
        edges = [(e["from"], e["to"], e["time"]) for e in doc["edges"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed network JSON ({exc})") from None
    return Network(nodes, edges, name=name or doc.get("name", _stem(path)))


def load_network(path: str, fmt: str | None = None) -> Network:
    """Load a network, inferring the format from the extension by default."""
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "tntp"
    if fmt == "json":
        return read_json_network(path)
    if fmt == "tntp":
        return read_tntp(path)
    raise ValueError(f"unknown network format {fmt!r}")


def _stem(path: str) -> str:
    base = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    return base.rsplit(".", 1)[0]
