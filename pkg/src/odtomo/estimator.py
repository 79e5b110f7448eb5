"""Support discovery and rate recovery over the incidence-vector lattice.

The search starts at the all-zeros sentinel and walks the lattice
breadth-first: pop a vector, look at its covers (one extra bit), keep
those whose joint cumulant clears the acceptance threshold, and enqueue
them. Because the cumulant function is monotone non-increasing along the
order (it sums the rates of dominating columns), nothing above a zero is
ever reachable, so the visited set stays near the true support instead of
the full 2^l - 1 lattice.

With exact cumulants the threshold is the literal "phi > 0". Empirical
cumulants of true zeros fluctuate around zero, so by default the
threshold adapts per vector to a z multiple of the cumulant's standard
error; otherwise the search would wander the noise floor.

Rates are then recovered in one back-substitution: the order matrix of
the visit sequence is unit upper triangular by construction.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .cumulants import CumulantOrderError, CumulantSource, ExactModel
from .graph import QuotientModel
from .poset import BitVector, OrderedSupport, solve_unitriangular, successors

__all__ = [
    "DpConfig",
    "DpStats",
    "DpRun",
    "EstimationResult",
    "ErrorMetrics",
    "run_dp",
    "recover",
    "estimate",
    "error_metrics",
]

RESULT_SCHEMA = "odtomo.result/1"


@dataclass(frozen=True)
class DpConfig:
    """Search and recovery knobs.

    epsilon: absolute acceptance threshold on phi estimates.
    order_cap: cumulant orders above this are treated as unresolvable;
        high-order empirical cumulants are numerically unstable and noise
        dominated, so the cap makes truncation explicit instead of silent.
    threshold_mode: "statistical" lifts the threshold per vector to
        max(epsilon, z * SE(phi)); "absolute" uses epsilon alone. Exact
        sources always use the strict positive test regardless.
    join_repair: with noisy cumulants a true high-order column whose own
        estimate drowns in its standard error gets rejected, and the
        solve then credits its rate once per retained face below it. The
        repair pass detects the signature of that event (a significantly
        negative recovered rate at a meet of the faces), inserts the join
        of the faces with a monotonicity-consistent imputed cumulant, and
        re-solves. Ignored for exact sources, which cannot produce the
        signature.
    support_tol: relative floor below which a recovered rate is treated
        as a numerical zero and dropped from the support.
    """

    epsilon: float = 0.0
    order_cap: int = 8
    threshold_mode: str = "statistical"
    z: float = 3.0
    join_repair: bool = True
    support_tol: float = 1e-9

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.order_cap < 1:
            raise ValueError("order_cap must be >= 1")
        if self.threshold_mode not in ("statistical", "absolute"):
            raise ValueError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.z < 0:
            raise ValueError("z must be >= 0")


@dataclass
class DpStats:
    """Diagnostics of one search."""

    queue_pops: int = 0
    phi_evaluations: int = 0
    rejected: int = 0
    order_cap_skips: int = 0
    max_order_queried: int = 0
    imputed_joins: int = 0
    truncated: bool = False

    def as_dict(self) -> dict:
        return {
            "queue_pops": self.queue_pops,
            "phi_evaluations": self.phi_evaluations,
            "rejected": self.rejected,
            "order_cap_skips": self.order_cap_skips,
            "max_order_queried": self.max_order_queried,
            "imputed_joins": self.imputed_joins,
            "truncated": self.truncated,
        }


@dataclass
class DpRun:
    """Raw output of the search: retained vectors in visit order."""

    width: int
    vectors: tuple[BitVector, ...]
    phi: np.ndarray
    thresholds: np.ndarray
    stats: DpStats

    def support(self) -> OrderedSupport:
        return OrderedSupport(self.vectors)


def run_dp(source: CumulantSource, config: DpConfig | None = None) -> DpRun:
    """Breadth-first discovery of vectors with significant cumulants.

    FIFO order and the ascending successor order make the visit sequence
    fully deterministic; vectors already retained or rejected are never
    re-queued. Candidates whose order exceeds the cap are counted as
    unresolved and not expanded, flagging the run as truncated.
    """
    if config is None:
        config = DpConfig()
    width = source.width
    cap = min(config.order_cap, source.order_cap)
    stats = DpStats()

    accepted: set[int] = set()
    rejected: set[int] = set()
    unresolved: set[int] = set()
    vectors: list[BitVector] = []
    phis: list[float] = []
    thresholds: list[float] = []

    queue: deque[BitVector] = deque([BitVector.zeros(width)])
    while queue:
        v = queue.popleft()
        stats.queue_pops += 1
        todo = []
        for w in successors(v):
            m = w.mask
            if m in accepted or m in rejected or m in unresolved:
                continue
            if w.popcount > cap:
                unresolved.add(m)
                stats.order_cap_skips += 1
                stats.truncated = True
                continue
            todo.append(w)
        if not todo:
            continue
        try:
            values = source.phi_many(todo)
        except CumulantOrderError:
            # source cap tighter than advertised; treat the whole batch
            # as unresolved rather than dying mid-search
            for w in todo:
                unresolved.add(w.mask)
                stats.order_cap_skips += 1
            stats.truncated = True
            continue
        stats.phi_evaluations += len(todo)
        stats.max_order_queried = max(stats.max_order_queried, todo[0].popcount)
        for w, value in zip(todo, values):
            thr = _threshold(source, config, w)
            if value > thr:
                accepted.add(w.mask)
                vectors.append(w)
                phis.append(float(value))
                thresholds.append(thr)
                queue.append(w)
            else:
                rejected.add(w.mask)
                stats.rejected += 1
    run = DpRun(
        width=width,
        vectors=tuple(vectors),
        phi=np.array(phis, dtype=np.float64),
        thresholds=np.array(thresholds, dtype=np.float64),
        stats=stats,
    )
    if config.join_repair and not source.is_exact and run.vectors:
        run = _repair_missing_joins(source, config, run, cap)
    return run


def _repair_missing_joins(
    source: CumulantSource, config: DpConfig, run: DpRun, cap: int
) -> DpRun:
    """Reinstate columns the threshold rejected but the solve demands.

    A single true column of order p whose cumulant estimate is hopelessly
    noisy leaves all p of its faces retained with the column's full rate,
    and drives the recovered rate at the meets of those faces strongly
    negative. Each round finds the most significant negative entry, joins
    the positive-rate vectors above it, and inserts that join with a
    cumulant imputed from the monotone bound (the smallest estimate among
    its retained lower neighbours, which bounds the true value from
    above). Runs that needed repair are flagged truncated: the inserted
    value is an imputation, not a measurement.
    """
    entries = {v.mask: (v, p, t) for v, p, t in zip(run.vectors, run.phi, run.thresholds)}
    width = run.width
    max_rounds = 64

    for _ in range(max_rounds):
        vecs = sorted((e[0] for e in entries.values()), key=BitVector.sort_key)
        support = OrderedSupport(vecs)
        phi = np.array([entries[v.mask][1] for v in vecs])
        psi = solve_unitriangular(support, phi)
        thresholds = np.array([entries[v.mask][2] for v in vecs])
        floor = config.support_tol * max(1.0, float(np.abs(phi).max()))

        # significant negatives, most negative first; the significance cut
        # includes the thresholds of everything subtracted from above, since
        # psi inherits their noise
        cuts = _inherited_thresholds(support, thresholds)
        witnesses = [
            (value, v)
            for v, value, cut in zip(vecs, psi, cuts)
            if value < -max(cut, floor)
        ]
        witnesses.sort(key=lambda t: (t[0], t[1].mask))

        inserted = False
        for _worst, witness in witnesses:
            faces = [
                v for v, value in zip(vecs, psi)
                if value > 0 and witness.mask & ~v.mask == 0 and v.mask != witness.mask
            ]
            if len(faces) < 2:
                continue
            # minimal pairwise join not yet present: one step toward the
            # column the data demands, without overshooting to the union of
            # several unresolved columns
            best = None
            for a in range(len(faces)):
                for b in range(a + 1, len(faces)):
                    jm = faces[a].mask | faces[b].mask
                    if jm in entries:
                        continue
                    key = (jm.bit_count(), jm)
                    if best is None or key < best:
                        best = key
            if best is None or best[0] > cap:
                continue
            join = BitVector(best[1], width)
            below = [v for v in vecs if v.mask & ~join.mask == 0 and v.mask != join.mask]
            if not below:
                continue
            # impute the join's cumulant from its direct parents: for an
            # isolated missed column each parent estimates the same rate, so
            # the median is nearly unbiased where a minimum over all subsets
            # would inherit extreme-value bias; the min over the remaining
            # subsets still applies as the monotone upper bound
            direct = [v for v in below if v.popcount == join.popcount - 1]
            bound = min(entries[v.mask][1] for v in below)
            if direct:
                imputed = min(float(np.median([entries[v.mask][1] for v in direct])), bound)
            else:
                imputed = bound
            if imputed <= 0:
                continue
            # the imputed value is a monotonicity bound, not a measurement:
            # gate its support membership on epsilon alone, not on the
            # (enormous) SE at its order
            entries[join.mask] = (join, imputed, config.epsilon)
            run.stats.imputed_joins += 1
            run.stats.truncated = True
            inserted = True
            break
        if not inserted:
            break

    if run.stats.imputed_joins == 0:
        return run
    vecs = sorted((e[0] for e in entries.values()), key=BitVector.sort_key)
    return DpRun(
        width=width,
        vectors=tuple(vecs),
        phi=np.array([entries[v.mask][1] for v in vecs]),
        thresholds=np.array([entries[v.mask][2] for v in vecs]),
        stats=run.stats,
    )


def _threshold(source: CumulantSource, config: DpConfig, v: BitVector) -> float:
    if source.is_exact:
        # exact cumulants make "phi > 0" a sound test; epsilon is ignored
        return 0.0
    if config.threshold_mode == "absolute":
        return config.epsilon
    return max(config.epsilon, config.z * source.stderr(v))


def _inherited_thresholds(support: OrderedSupport, thresholds: np.ndarray) -> np.ndarray:
    """Per-vector max of the thresholds of all dominating support vectors."""
    words = support.masks_as_words()
    from .poset import _containment

    dominates = _containment(words, words)
    return np.where(dominates, thresholds[None, :], 0.0).max(axis=1)


@dataclass
class EstimationResult:
    """Recovered support and rates, plus everything needed to audit them."""

    width: int
    support: tuple[BitVector, ...]
    means: np.ndarray
    visited: tuple[BitVector, ...]
    phi: np.ndarray
    psi: np.ndarray
    stats: DpStats
    dropped_nonpositive: int = 0
    dropped_small: int = 0

    @property
    def truncated(self) -> bool:
        return self.stats.truncated

    def total_mean(self) -> float:
        return float(self.means.sum())

    def as_dict(self) -> dict[BitVector, float]:
        return {v: float(m) for v, m in zip(self.support, self.means)}

    def to_json_dict(self) -> dict:
        diag = self.stats.as_dict()
        diag["dropped_nonpositive"] = self.dropped_nonpositive
        diag["dropped_small"] = self.dropped_small
        return {
            "schema": RESULT_SCHEMA,
            "width": self.width,
            "support": [str(v) for v in self.support],
            "means": [float(x) for x in self.means],
            "visited": [str(v) for v in self.visited],
            "phi": [float(x) for x in self.phi],
            "truncated": self.truncated,
            "diagnostics": diag,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=False)


def recover(run: DpRun, config: DpConfig | None = None) -> EstimationResult:
    """Back-substitute rates from the visited cumulants and pick the support.

    Recovered rates can come out negative or numerically tiny under
    sampling noise (never with exact cumulants); those vectors are
    excluded from the support and counted, not clamped. The support cut
    for a vector inherits the thresholds of every visited vector above
    it: a recovered rate is a cumulant minus higher-order recovered
    rates, so its noise floor is set by the noisiest thing subtracted,
    not by the vector's own (possibly tiny) cumulant error.
    """
    if config is None:
        config = DpConfig()
    if not run.vectors:
        return EstimationResult(
            width=run.width,
            support=(),
            means=np.empty(0),
            visited=(),
            phi=run.phi.copy(),
            psi=np.empty(0),
            stats=run.stats,
        )
    support_set = run.support()
    psi = solve_unitriangular(support_set, run.phi)
    floor = config.support_tol * max(1.0, float(np.abs(run.phi).max()))
    cuts = _inherited_thresholds(support_set, run.thresholds)
    support = []
    means = []
    dropped_nonpositive = 0
    dropped_small = 0
    for v, value, cut in zip(run.vectors, psi, cuts):
        cut = max(cut, floor)
        if value > cut:
            support.append(v)
            means.append(float(value))
        elif value <= 0:
            dropped_nonpositive += 1
        else:
            dropped_small += 1
    return EstimationResult(
        width=run.width,
        support=tuple(support),
        means=np.array(means, dtype=np.float64),
        visited=run.vectors,
        phi=run.phi.copy(),
        psi=psi,
        stats=run.stats,
        dropped_nonpositive=dropped_nonpositive,
        dropped_small=dropped_small,
    )


def estimate(source: CumulantSource, config: DpConfig | None = None) -> EstimationResult:
    """Full pipeline: search the lattice, then recover rates."""
    if config is None:
        config = DpConfig()
    return recover(run_dp(source, config), config)


@dataclass(frozen=True)
class ErrorMetrics:
    """Estimate-vs-truth scores keyed on incidence vectors."""

    rel_total_flow_error: float
    support_precision: float
    support_recall: float
    l1_error: float
    matched: int
    spurious: int
    missed: int

    def as_dict(self) -> dict:
        return {
            "rel_total_flow_error": self.rel_total_flow_error,
            "support_precision": self.support_precision,
            "support_recall": self.support_recall,
            "l1_error": self.l1_error,
            "matched": self.matched,
            "spurious": self.spurious,
            "missed": self.missed,
        }


def _truth_dict(truth) -> dict[BitVector, float]:
    if isinstance(truth, dict):
        return truth
    if isinstance(truth, (ExactModel, QuotientModel)):
        return truth.as_dict()
    raise TypeError(f"cannot interpret {type(truth).__name__} as ground truth")


def error_metrics(truth, est: EstimationResult) -> ErrorMetrics:
    """Compare an estimate against ground truth.

    Total-flow error is relative to the true total; the L1 error matches
    classes by their bit vector, with unmatched classes contributing
    their whole rate.
    """
    true_means = _truth_dict(truth)
    est_means = est.as_dict()
    total_true = sum(true_means.values())
    if total_true <= 0:
        raise ValueError("ground truth must carry positive total flow")
    total_est = sum(est_means.values())
    keys = set(true_means) | set(est_means)
    l1 = sum(abs(est_means.get(k, 0.0) - true_means.get(k, 0.0)) for k in keys)
    matched = len(set(true_means) & set(est_means))
    precision = matched / len(est_means) if est_means else 1.0
    recall = matched / len(true_means) if true_means else 1.0
    return ErrorMetrics(
        rel_total_flow_error=abs(total_est - total_true) / total_true,
        support_precision=precision,
        support_recall=recall,
        l1_error=l1,
        matched=matched,
        spurious=len(est_means) - matched,
        missed=len(true_means) - matched,
    )
