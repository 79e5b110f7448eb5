"""Pure-Python/numpy reference kernels.

These are the fallback implementations selected when the compiled
extension is unavailable. Contract with ``_native``:

* ``poisson_fill`` must be bit-identical to the native kernel: it consumes
  the same SplitMix64 stream with the same arithmetic, so a seeded run
  produces the same samples no matter which backend is active.
* the moment kernels (``subset_means``, ``centered_product_stats``) may
  differ from native in the last few ulps because numpy reduces in
  pairwise order; they agree to ~1e-12 relative.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / (1 << 53)

# Poisson means at or above this switch from Knuth multiplication to
# transformed rejection; must match _native.
PTRS_CUTOFF = 30.0

_MAX_SUBSET_ORDER = 20
_CHUNK_ROWS = 4096

# log(k!) table, grown on demand; values are built by plain summation of
# libm logs so both backends produce identical entries.
_logfact = [0.0, 0.0]


def _logfact_upto(k: int) -> None:
    while len(_logfact) <= k:
        _logfact.append(_logfact[-1] + math.log(len(_logfact)))


def subset_means(data: np.ndarray) -> np.ndarray:
    """Empirical means of all subset products of the columns of ``data``.

    data: (N, p) float64. Returns out of length 2**p where
    out[s] = mean over rows of prod(data[r, i] for set bits i of s),
    and out[0] = 1. Work is O(N * 2**p) via the shared-prefix recursion
    prod[s] = prod[s minus lowest bit] * column[lowest bit].
    """
    data = np.ascontiguousarray(data, dtype=np.float64)
    n, p = data.shape
    if p < 1 or p > _MAX_SUBSET_ORDER:
        raise ValueError(f"column count {p} out of range 1..{_MAX_SUBSET_ORDER}")
    n_sub = 1 << p
    acc = np.zeros(n_sub, dtype=np.float64)
    prods = [None] * n_sub
    for start in range(0, n, _CHUNK_ROWS):
        block = data[start : start + _CHUNK_ROWS]
        prods[0] = np.ones(block.shape[0], dtype=np.float64)
        for s in range(1, n_sub):
            low = (s & -s).bit_length() - 1
            prods[s] = prods[s & (s - 1)] * block[:, low]
            acc[s] += prods[s].sum()
    acc /= n
    acc[0] = 1.0
    return acc


def centered_product_stats(data: np.ndarray, means: np.ndarray) -> tuple[float, float]:
    """Mean and population variance of per-row products of centered columns.

    Used to attach a standard error to an empirical joint cumulant: the
    row statistic prod_i (Y_i - mean_i) is the leading fluctuation term of
    the plug-in estimator.
    """
    data = np.asarray(data, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    if data.ndim != 2 or means.shape != (data.shape[1],):
        raise ValueError("data must be (N, p) with one mean per column")
    n = data.shape[0]
    total = 0.0
    total_sq = 0.0
    for start in range(0, n, _CHUNK_ROWS):
        t = (data[start : start + _CHUNK_ROWS] - means).prod(axis=1)
        total += t.sum()
        total_sq += (t * t).sum()
    mean_t = total / n
    var_t = max(total_sq / n - mean_t * mean_t, 0.0)
    return mean_t, var_t


def _next_uniform(state: int) -> tuple[int, float]:
    state = (state + GOLDEN) & MASK64
    x = state
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return state, (x >> 11) * _INV53


def _poisson_knuth(mean: float, state: int) -> tuple[int, int]:
    limit = math.exp(-mean)
    k = 0
    p = 1.0
    while True:
        state, u = _next_uniform(state)
        p *= u
        if p <= limit:
            return k, state
        k += 1


def _poisson_ptrs(mean: float, state: int) -> tuple[int, int]:
    # Hormann's PTRS transformed rejection, exact for mean >= 10; we use it
    # above PTRS_CUTOFF where Knuth multiplication gets slow.
    slam = math.sqrt(mean)
    loglam = math.log(mean)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        state, u = _next_uniform(state)
        state, v = _next_uniform(state)
        u -= 0.5
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + mean + 0.43))
        if us >= 0.07 and v <= vr:
            return k, state
        if k < 0 or (us < 0.013 and v > us):
            continue
        _logfact_upto(k)
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)) <= (
            k * loglam - mean - _logfact[k]
        ):
            return k, state


def poisson_fill(out: np.ndarray, mean: float, state: int) -> int:
    """Fill ``out`` (int64) with Poisson(mean) draws; return advanced state.

    The draw sequence is a function of (mean, state) only.
    """
    if not (mean > 0.0 and math.isfinite(mean)):
        raise ValueError(f"mean must be positive and finite, got {mean}")
    state &= MASK64
    draw = _poisson_knuth if mean < PTRS_CUTOFF else _poisson_ptrs
    for i in range(out.shape[0]):
        out[i], state = draw(mean, state)
    return state
