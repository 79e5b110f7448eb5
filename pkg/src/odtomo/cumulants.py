"""Joint cumulants of measured link flows.

The quantity driving the whole estimation is phi(v): the joint cumulant of
the flow components selected by the bit vector v. Two interchangeable
backends provide it:

* :class:`EmpiricalSource` estimates it from samples with the classical
  set-partition expansion (cumulant = signed sum over partitions of
  products of moments), using plug-in moments.
* :class:`ExactSource` evaluates it from a known model: for sums of
  independent Poisson streams the joint cumulant of a selection equals the
  summed rates of every stream whose incidence vector dominates the
  selection. This is the oracle used in tests and exact-mode runs.

Both cache per-vector results, so the search can re-query freely.
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .poset import BitVector, _containment, _to_words

__all__ = [
    "CumulantOrderError",
    "SampleMatrix",
    "ExactModel",
    "CumulantSource",
    "EmpiricalSource",
    "ExactSource",
    "set_partitions",
    "empirical_moment",
    "joint_cumulant",
    "exact_phi",
    "phi",
]

MAX_PARTITION_ORDER = 12
DEFAULT_ORDER_CAP = 8


class CumulantOrderError(Exception):
    """Requested cumulant order exceeds the configured cap.

    Distinct from ValueError on purpose: the caller is expected to treat
    the cumulant as unresolvable (and stop expanding past it), not as a
    programming error.
    """

    def __init__(self, order: int, cap: int):
        super().__init__(f"cumulant order {order} exceeds cap {cap}")
        self.order = order
        self.cap = cap


class SampleMatrix:
    """N x l table of measured link flows, one row per realization."""

    __slots__ = ("data", "n_samples", "n_links", "_col_means")

    def __init__(self, data):
        data = np.ascontiguousarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"need a nonempty 2-d sample table, got shape {data.shape}")
        if not np.all(np.isfinite(data)) or (data < 0).any():
            raise ValueError("samples must be finite and nonnegative")
        self.data = data
        self.n_samples, self.n_links = data.shape
        self._col_means = None

    @property
    def column_means(self) -> np.ndarray:
        if self._col_means is None:
            self._col_means = self.data.mean(axis=0)
        return self._col_means

    def __repr__(self) -> str:
        return f"SampleMatrix(n_samples={self.n_samples}, n_links={self.n_links})"


class ExactModel:
    """Known ground truth: distinct incidence columns and positive rates."""

    __slots__ = ("columns", "means", "width")

    def __init__(self, columns: Sequence[BitVector], means):
        columns = tuple(columns)
        means = np.asarray(means, dtype=np.float64)
        if len(columns) == 0:
            raise ValueError("model needs at least one column")
        if means.shape != (len(columns),):
            raise ValueError("one mean per column required")
        if (means <= 0).any():
            raise ValueError("means must be strictly positive")
        width = columns[0].width
        masks = set()
        for c in columns:
            if c.width != width:
                raise ValueError("mixed column widths")
            if c.mask == 0:
                raise ValueError("zero column is not observable")
            if c.mask in masks:
                raise ValueError(f"duplicate column {c}: model not identifiable")
            masks.add(c.mask)
        self.columns = columns
        self.means = means
        self.width = width

    def total_mean(self) -> float:
        return float(self.means.sum())

    def as_dict(self) -> dict[BitVector, float]:
        return {c: float(m) for c, m in zip(self.columns, self.means)}

    def __repr__(self) -> str:
        return f"ExactModel(q={len(self.columns)}, width={self.width})"


def set_partitions(k: int, max_order: int = MAX_PARTITION_ORDER) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Stream all set partitions of range(k) as tuples of index blocks.

    Enumeration is by restricted-growth strings, iteratively, so no more
    than one partition is materialized at a time (there are Bell(k) of
    them, which explodes quickly). Blocks are ordered by their smallest
    element; indices inside a block are ascending.
    """
    if not 1 <= k <= max_order:
        raise ValueError(f"partition order {k} out of range 1..{max_order}")
    a = [0] * k  # a[i] = block label of element i, restricted growth
    b = [1] * k  # b[i] = max allowed label at position i

    def emit():
        blocks: list[list[int]] = [[] for _ in range(max(a) + 1)]
        for pos, g in enumerate(a):
            blocks[g].append(pos)
        return tuple(tuple(blk) for blk in blocks)

    while True:
        yield emit()
        i = k - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        grown = b[i] + 1 if a[i] == b[i] else b[i]
        for j in range(i + 1, k):
            a[j] = 0
            b[j] = grown


def empirical_moment(samples: SampleMatrix, idx: Sequence[int]) -> float:
    """Plug-in moment: mean over rows of the product of the idx columns."""
    idx = list(idx)
    if not idx:
        raise ValueError("index set must be nonempty")
    for i in idx:
        if not 0 <= i < samples.n_links:
            raise ValueError(f"column index {i} out of range 0..{samples.n_links - 1}")
    return float(samples.data[:, idx].prod(axis=1).mean())


def _cumulant_from_subset_means(sm: np.ndarray, p: int) -> float:
    """Combine subset-product moments into the order-p joint cumulant.

    sm[s] is the empirical moment of the subset s of the p selected
    columns. The partition expansion carries coefficient
    (|P|-1)! * (-1)^(|P|-1) for a partition P.
    """
    fact = [1.0] * (p + 1)
    for i in range(2, p + 1):
        fact[i] = fact[i - 1] * i
    total = 0.0
    for blocks in set_partitions(p):
        nb = len(blocks)
        term = fact[nb - 1] if nb % 2 == 1 else -fact[nb - 1]
        for blk in blocks:
            s = 0
            for pos in blk:
                s |= 1 << pos
            term *= sm[s]
        total += term
    return total


def joint_cumulant(
    samples: SampleMatrix, v: BitVector, order_cap: int = MAX_PARTITION_ORDER
) -> float:
    """Empirical joint cumulant of the sample columns selected by v.

    The partition sum runs over the selected index set only; with a single
    selected column this is the sample mean, with two it is the
    (uncorrected) covariance.
    """
    if v.width != samples.n_links:
        raise ValueError(f"vector width {v.width} != sample columns {samples.n_links}")
    sel = v.indices()
    p = len(sel)
    if p == 0:
        raise ValueError("cannot take the cumulant of an empty selection")
    if p > order_cap:
        raise CumulantOrderError(p, order_cap)
    sm = _kernels.subset_means(samples.data[:, sel])
    return _cumulant_from_subset_means(sm, p)


def exact_phi(model: ExactModel, v: BitVector) -> float:
    """Sum of the rates of every model column dominating v."""
    if v.width != model.width:
        raise ValueError(f"vector width {v.width} != model width {model.width}")
    total = 0.0
    vm = v.mask
    for c, lam in zip(model.columns, model.means):
        if vm & ~c.mask == 0:
            total += lam
    return total


class CumulantSource:
    """Uniform phi(v) interface over the empirical and exact backends.

    Subclasses fill ``_phi_uncached``; this base handles the per-vector
    cache so that repeated queries are free and always return the
    identical value. Values are pure functions of immutable inputs, so
    even racing cache writers store the same number; concurrent use of
    one source is safe under that contract, though the intended pattern
    is one source per worker.
    """

    width: int
    is_exact: bool
    order_cap: int

    def __init__(self):
        self._phi_cache: dict[int, float] = {}

    def phi(self, v: BitVector) -> float:
        got = self._phi_cache.get(v.mask)
        if got is None:
            got = self._phi_uncached(v)
            self._phi_cache[v.mask] = got
        return got

    def phi_many(self, vs: Sequence[BitVector]) -> np.ndarray:
        return np.array([self.phi(v) for v in vs], dtype=np.float64)

    def stderr(self, v: BitVector) -> float:
        """Standard-error heuristic for phi(v); exactly 0 for exact sources."""
        raise NotImplementedError

    def _phi_uncached(self, v: BitVector) -> float:
        raise NotImplementedError


class ExactSource(CumulantSource):
    """phi oracle over a known model; vectorized for batched queries."""

    is_exact = True

    def __init__(self, model: ExactModel):
        super().__init__()
        self.model = model
        self.width = model.width
        self.order_cap = model.width  # nothing to cap: values are exact
        self._col_words = _to_words([c.mask for c in model.columns], model.width)

    def _phi_uncached(self, v: BitVector) -> float:
        return exact_phi(self.model, v)

    def phi_many(self, vs: Sequence[BitVector]) -> np.ndarray:
        out = np.empty(len(vs), dtype=np.float64)
        missing = [i for i, v in enumerate(vs) if v.mask not in self._phi_cache]
        if missing:
            words = _to_words([vs[i].mask for i in missing], self.width)
            contained = _containment(words, self._col_words)
            vals = contained @ self.model.means
            for i, val in zip(missing, vals):
                self._phi_cache[vs[i].mask] = float(val)
        for i, v in enumerate(vs):
            out[i] = self._phi_cache[v.mask]
        return out

    def stderr(self, v: BitVector) -> float:
        return 0.0


class EmpiricalSource(CumulantSource):
    """phi estimated from a SampleMatrix.

    Subset-product moments are cached globally by column mask, so queries
    for overlapping selections (which the lattice search makes constantly)
    share work. Querying past ``order_cap`` raises CumulantOrderError.
    """

    is_exact = False

    def __init__(self, samples: SampleMatrix, order_cap: int = DEFAULT_ORDER_CAP):
        super().__init__()
        if order_cap < 1:
            raise ValueError("order_cap must be >= 1")
        self.samples = samples
        self.width = samples.n_links
        self.order_cap = order_cap
        self._moments: dict[int, float] = {}
        self._se_cache: dict[int, float] = {}

    def _phi_uncached(self, v: BitVector) -> float:
        sel = v.indices()
        p = len(sel)
        if p == 0:
            raise ValueError("cannot take the cumulant of an empty selection")
        if p > self.order_cap:
            raise CumulantOrderError(p, self.order_cap)
        sub = self._subset_moments(sel)
        return _cumulant_from_subset_means(sub, p)

    def _subset_moments(self, sel: tuple[int, ...]) -> np.ndarray:
        p = len(sel)
        full = 0
        for i in sel:
            full |= 1 << i
        # translate cached global-mask moments into the local subset table
        sub = np.empty(1 << p, dtype=np.float64)
        sub[0] = 1.0
        missing = False
        for s in range(1, 1 << p):
            g = 0
            for pos in range(p):
                if (s >> pos) & 1:
                    g |= 1 << sel[pos]
            got = self._moments.get(g)
            if got is None:
                missing = True
                break
            sub[s] = got
        if not missing:
            return sub
        sub = _kernels.subset_means(self.samples.data[:, list(sel)])
        for s in range(1, 1 << p):
            g = 0
            for pos in range(p):
                if (s >> pos) & 1:
                    g |= 1 << sel[pos]
            self._moments[g] = float(sub[s])
        return sub

    def stderr(self, v: BitVector) -> float:
        """Heuristic SE of phi(v): std of the centered row product / sqrt(N).

        The centered product is the leading fluctuation term of the
        plug-in cumulant; good enough to threshold against, not a
        confidence interval.
        """
        got = self._se_cache.get(v.mask)
        if got is not None:
            return got
        sel = list(v.indices())
        if not sel:
            raise ValueError("cannot take the stderr of an empty selection")
        means = self.samples.column_means[sel]
        _, var_t = _kernels.centered_product_stats(self.samples.data[:, sel], means)
        se = math.sqrt(var_t / self.samples.n_samples)
        self._se_cache[v.mask] = se
        return se


def phi(source: CumulantSource, v: BitVector) -> float:
    """Joint cumulant of the components selected by v, cached."""
    return source.phi(v)
