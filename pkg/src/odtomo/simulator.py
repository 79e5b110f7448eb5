"""Synthetic traffic instances and seeded Poisson measurement generation.

An instance picks k origin-destination pairs, routes each along its
shortest path, and assigns each a Poisson demand rate. Measuring an
instance draws per-path Poisson counts row by row and aggregates them
onto the observed edges. Everything is reproducible: the master seed
fully determines OD choice, rates and every sample.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
import numpy as np

from . import _kernels
from .cumulants import SampleMatrix
from .graph import Network, ObservationPlan, Path, QuotientModel, build_quotient
from .graph import incidence, reachable_from, shortest_path
from .rng import SplitMix64, derive_stream

__all__ = [
    "Instance",
    "MeasurementSet",
    "poisson_sample",
    "od_universe",
    "make_instance",
    "measure",
    "write_csv",
    "read_csv",
]

DEFAULT_MEAN_RANGE = (1.0, 10.0)

# Per-run stream labels, fixed so seed derivation never shifts between
# releases or call sites.
_STREAM_INSTANCE = 0x0D
_STREAM_MEASURE = 0x5E


def poisson_sample(mean: float, rng: SplitMix64) -> int:
    """One Poisson draw. Small means use Knuth multiplication, large means
    transformed rejection; the kernel picks per the documented cutoff."""
    out = np.empty(1, dtype=np.int64)
    rng.state = _kernels.poisson_fill(out, float(mean), rng.state)
    return int(out[0])


def od_universe(net: Network) -> list[tuple]:
    """All usable OD pairs: one per unordered node pair, deterministic.

    Each unordered pair {a, b} (a before b in node-list order) yields the
    directed pair (a, b) when b is reachable from a, else (b, a) when the
    reverse holds, else nothing. Counting unordered pairs matches how the
    benchmark networks are sized (a 14-node network has 91 OD pairs).
    """
    reach = {v: reachable_from(net, v) for v in net.nodes}
    pairs = []
    nodes = net.nodes
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            a, b = nodes[i], nodes[j]
            if b in reach[a]:
                pairs.append((a, b))
            elif a in reach[b]:
                pairs.append((b, a))
    return pairs


@dataclass(frozen=True)
class Instance:
    """Ground-truth scenario: active paths, their rates, and the plan."""

    network: Network
    od_pairs: tuple[tuple, ...]
    paths: tuple[Path, ...]
    means: np.ndarray
    plan: ObservationPlan
    seed: int

    def quotient(self) -> QuotientModel:
        """Observable ground truth: per-footprint aggregated demands."""
        return build_quotient(self.paths, self.means, self.plan, self.network.n_edges)

    def total_mean(self) -> float:
        return float(self.means.sum())

    def content_hash(self) -> str:
        doc = {
            "network": self.network.name,
            "paths": [list(p.edges) for p in self.paths],
            "means": [repr(float(x)) for x in self.means],
            "observed": list(self.plan.observed),
        }
        blob = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def make_instance(
    net: Network,
    k: int,
    mean_range: tuple[float, float] = DEFAULT_MEAN_RANGE,
    plan: ObservationPlan | None = None,
    seed: int = 0,
) -> Instance:
    """Sample k distinct OD pairs, route them, and draw their rates.

    OD pairs are drawn uniformly without replacement from
    :func:`od_universe`; rates are uniform in ``mean_range``. Fully
    determined by ``seed``.
    """
    lo, hi = mean_range
    if not (0 < lo <= hi) or not math.isfinite(hi):
        raise ValueError(f"bad mean range {mean_range}")
    if plan is None:
        plan = ObservationPlan.all_edges(net)
    universe = od_universe(net)
    if not 1 <= k <= len(universe):
        raise ValueError(f"k={k} infeasible: network has {len(universe)} usable OD pairs")
    rng = SplitMix64(derive_stream(seed, _STREAM_INSTANCE))
    chosen = sorted(rng.sample_indices(len(universe), k))
    od_pairs = tuple(universe[i] for i in chosen)
    paths = tuple(shortest_path(net, s, t) for s, t in od_pairs)
    means = np.array([rng.uniform_range(lo, hi) for _ in range(k)], dtype=np.float64)
    return Instance(net, od_pairs, paths, means, plan, seed)


@dataclass(frozen=True)
class MeasurementSet:
    """N samples of the observed link flows plus generation metadata."""

    samples: SampleMatrix
    observed: tuple[int, ...]
    seed_state: int
    instance_hash: str

    @property
    def n_samples(self) -> int:
        return self.samples.n_samples


def measure(inst: Instance, n_samples: int, rng: SplitMix64 | None = None) -> MeasurementSet:
    """Draw n_samples rows of observed link flows from the instance.

    Per row, each active path gets an independent Poisson count; the
    observed flow is the sum over paths crossing each observed edge.
    Draws happen path-by-path (column-major) off a single stream, so the
    output is a pure function of (instance, rng state, n_samples). With
    ``rng`` omitted, a stream derived from (instance seed, n_samples) is
    used, making the triple (instance, seed, n) self-contained.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if rng is None:
        rng = SplitMix64(derive_stream(inst.seed, _STREAM_MEASURE, n_samples))
    seed_state = rng.state
    k = len(inst.paths)
    x = np.empty((n_samples, k), dtype=np.int64)
    state = rng.state
    for j in range(k):
        col = np.empty(n_samples, dtype=np.int64)
        state = _kernels.poisson_fill(col, float(inst.means[j]), state)
        x[:, j] = col
    rng.state = state
    full = incidence(inst.paths, inst.network.n_edges).astype(np.int64)
    a_obs = full[list(inst.plan.observed), :]
    y = x @ a_obs.T
    return MeasurementSet(
        samples=SampleMatrix(y.astype(np.float64)),
        observed=inst.plan.observed,
        seed_state=seed_state,
        instance_hash=inst.content_hash(),
    )


def write_csv(ms: MeasurementSet, path: str) -> None:
    """Write one sample per line; header names the observed edge indices."""
    header = ",".join(f"edge_{e}" for e in ms.observed)
    data = ms.samples.data
    lines = [header]
    ints = data.astype(np.int64)
    if np.array_equal(ints, data):
        body = [",".join(map(str, row)) for row in ints.tolist()]
    else:
        body = [",".join(repr(x) for x in row) for row in data.tolist()]
    lines.extend(body)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_csv(path: str) -> tuple[SampleMatrix, tuple[int, ...]]:
    """Read a measurement CSV back into samples + observed edge indices."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty file")
        cols = header.split(",")
        observed = []
        for c in cols:
            if not c.startswith("edge_"):
                raise ValueError(f"{path}: bad header column {c!r}")
            observed.append(int(c[5:]))
        try:
            data = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise ValueError(f"{path}: bad sample data: {exc}") from None
    if data.size == 0:
        raise ValueError(f"{path}: no sample rows")
    return SampleMatrix(data), tuple(observed)
