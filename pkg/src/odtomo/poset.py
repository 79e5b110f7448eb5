"""Componentwise partial order on binary link-incidence vectors.

A :class:`BitVector` records which observed links a candidate path
traverses. The componentwise order (``v <= w`` iff every set bit of ``v``
is set in ``w``) turns the nonzero vectors into a lattice; the search
walks it bottom-up, and demand rates are recovered by inverting the
order matrix of the visited vectors. Because any popcount-respecting
enumeration is a linear extension of the order, that matrix is always
unit upper triangular and the inversion is a plain back-substitution.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from .rng import MASK64

__all__ = [
    "BitVector",
    "OrderedSupport",
    "leq",
    "successors",
    "order_matrix",
    "solve_unitriangular",
    "lattice",
]


class BitVector:
    """Immutable fixed-width vector of bits, ordered componentwise.

    Bits are indexed 0..width-1; index ``i`` of the vector is bit ``i`` of
    ``mask``, so any width fits in one Python int. The all-zeros vector is
    constructible because the search uses it as its start sentinel, but it
    is not a valid support element and is rejected wherever supports are
    built.
    """

    __slots__ = ("mask", "width")

    def __init__(self, mask: int, width: int):
        if width < 1:
            raise ValueError("width must be >= 1")
        if mask < 0 or mask >> width:
            raise ValueError(f"mask {mask:#x} does not fit in width {width}")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "width", width)

    def __setattr__(self, name, value):
        raise AttributeError("BitVector is immutable")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        bits = tuple(bits)
        mask = 0
        for i, b in enumerate(bits):
            if b not in (0, 1, False, True):
                raise ValueError("bits must be 0 or 1")
            if b:
                mask |= 1 << i
        return cls(mask, len(bits))

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        return cls.from_bits(int(c) for c in s)

    @classmethod
    def zeros(cls, width: int) -> "BitVector":
        return cls(0, width)

    @classmethod
    def singleton(cls, index: int, width: int) -> "BitVector":
        return cls(1 << index, width)

    @property
    def popcount(self) -> int:
        return self.mask.bit_count()

    def bit(self, i: int) -> int:
        return (self.mask >> i) & 1

    def bits(self) -> tuple[int, ...]:
        return tuple((self.mask >> i) & 1 for i in range(self.width))

    def indices(self) -> tuple[int, ...]:
        """Positions of the set bits, ascending."""
        return tuple(i for i in range(self.width) if (self.mask >> i) & 1)

    def sort_key(self) -> tuple[int, int]:
        """(popcount, mask): a linear extension of the componentwise order."""
        return (self.mask.bit_count(), self.mask)

    def __le__(self, other: "BitVector") -> bool:
        return leq(self, other)

    def __lt__(self, other: "BitVector") -> bool:
        return self.mask != other.mask and leq(self, other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and self.mask == other.mask
            and self.width == other.width
        )

    def __hash__(self) -> int:
        return hash((self.mask, self.width))

    def __str__(self) -> str:
        return "".join("1" if (self.mask >> i) & 1 else "0" for i in range(self.width))

    def __repr__(self) -> str:
        return f"BitVector('{self}')"


def leq(v: BitVector, w: BitVector) -> bool:
    """Componentwise order: every set bit of v is set in w."""
    if v.width != w.width:
        raise ValueError(f"width mismatch: {v.width} != {w.width}")
    return v.mask & ~w.mask == 0


def successors(v: BitVector) -> list[BitVector]:
    """Covers of v: each zero bit flipped to one, in ascending bit order.

    The all-ones vector has no successors. The ascending order is load
    bearing: it fixes the traversal order of the search.
    """
    out = []
    mask, width = v.mask, v.width
    for i in range(width):
        if not (mask >> i) & 1:
            out.append(BitVector(mask | (1 << i), width))
    return out


class OrderedSupport:
    """Ordered sequence of distinct nonzero BitVectors of one width.

    The sequence must be sorted by nondecreasing popcount. That is
    sufficient for it to be a linear extension of the componentwise order,
    which in turn makes :func:`order_matrix` unit upper triangular. The
    search's visit order satisfies it by construction (breadth-first by
    level); arbitrary vector sets can be canonicalized with
    :meth:`from_unordered`.
    """

    __slots__ = ("vectors", "width")

    def __init__(self, vectors: Sequence[BitVector]):
        vectors = tuple(vectors)
        if not vectors:
            raise ValueError("support must be nonempty")
        width = vectors[0].width
        seen = set()
        prev_pop = 0
        for v in vectors:
            if v.width != width:
                raise ValueError("mixed widths in support")
            if v.mask == 0:
                raise ValueError("all-zeros vector is not a support element")
            if v.mask in seen:
                raise ValueError(f"duplicate vector {v}")
            seen.add(v.mask)
            pop = v.popcount
            if pop < prev_pop:
                raise ValueError("support order must have nondecreasing popcount")
            prev_pop = pop
        self.vectors = vectors
        self.width = width

    @classmethod
    def from_unordered(cls, vectors: Iterable[BitVector]) -> "OrderedSupport":
        """Canonical order: popcount ascending, then mask ascending."""
        return cls(sorted(set(vectors), key=BitVector.sort_key))

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self) -> Iterator[BitVector]:
        return iter(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]

    def index_of(self, v: BitVector) -> int:
        return self.vectors.index(v)

    def masks_as_words(self) -> np.ndarray:
        """(r, W) uint64 array of the masks split into 64-bit words."""
        return _to_words([v.mask for v in self.vectors], self.width)

    def __repr__(self) -> str:
        return f"OrderedSupport([{', '.join(str(v) for v in self.vectors)}])"


def _to_words(masks: Sequence[int], width: int) -> np.ndarray:
    n_words = max(1, (width + 63) // 64)
    out = np.empty((len(masks), n_words), dtype=np.uint64)
    for i, m in enumerate(masks):
        for w in range(n_words):
            out[i, w] = (m >> (64 * w)) & MASK64
    return out


def _containment(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Boolean matrix C[i, j] = (mask a_i is a subset of mask b_j).

    a: (n, W) words, b: (m, W) words. Vectorized over all pairs.
    """
    c = np.ones((a.shape[0], b.shape[0]), dtype=bool)
    for w in range(a.shape[1]):
        c &= (a[:, w, None] & ~b[None, :, w]) == 0
    return c


def order_matrix(support: OrderedSupport) -> np.ndarray:
    """0/1 matrix M with M[i, j] = 1 iff support[i] <= support[j].

    Unit upper triangular for every valid OrderedSupport.
    """
    words = support.masks_as_words()
    return _containment(words, words).astype(np.uint8)


def solve_unitriangular(support: OrderedSupport, phi: Sequence[float]) -> np.ndarray:
    """Solve M_S psi = phi by back-substitution over popcount levels.

    Vectors within one popcount level are pairwise incomparable, so the
    whole level can be eliminated at once against the already-solved
    higher levels: psi[level] = phi[level] - C @ psi[higher], with C the
    containment matrix. This keeps large supports (tens of thousands of
    vectors) in numpy instead of a Python double loop; higher-level blocks
    are chunked to bound peak memory.
    """
    phi = np.asarray(phi, dtype=np.float64)
    r = len(support)
    if phi.shape != (r,):
        raise ValueError(f"phi has shape {phi.shape}, expected ({r},)")
    psi = phi.copy()
    words = support.masks_as_words()
    pops = np.array([v.popcount for v in support.vectors])

    # contiguous index ranges per popcount level (support is level-sorted)
    boundaries = [0]
    for i in range(1, r):
        if pops[i] != pops[i - 1]:
            boundaries.append(i)
    boundaries.append(r)

    chunk = 1 << 14
    for li in range(len(boundaries) - 2, -1, -1):
        lo, hi = boundaries[li], boundaries[li + 1]
        level_words = words[lo:hi]
        for start in range(hi, r, chunk):
            stop = min(start + chunk, r)
            c = _containment(level_words, words[start:stop])
            psi[lo:hi] -= c @ psi[start:stop]
    return psi


def lattice(width: int) -> Iterator[BitVector]:
    """All nonzero vectors of the given width in canonical order.

    Exponential in width; intended for tests and tiny instances only.
    """
    masks = sorted(range(1, 1 << width), key=lambda m: (m.bit_count(), m))
    for m in masks:
        yield BitVector(m, width)
