"""Partial-order laws, order matrices and the triangular solve."""

import numpy as np
import pytest

from odtomo.poset import (
    BitVector,
    OrderedSupport,
    lattice,
    leq,
    order_matrix,
    solve_unitriangular,
    successors,
)


def bv(s):
    return BitVector.from_string(s)


def random_vector(rng, width):
    return BitVector(int(rng.integers(0, 1 << width)), width)


class TestBitVector:
    def test_roundtrip_and_popcount(self):
        v = bv("1101")
        assert str(v) == "1101"
        assert v.popcount == 3
        assert v.indices() == (0, 1, 3)
        assert v.bits() == (1, 1, 0, 1)

    def test_zero_allowed_as_value(self):
        assert BitVector.zeros(4).popcount == 0

    def test_immutable_and_hashable(self):
        v = bv("10")
        with pytest.raises(AttributeError):
            v.mask = 3
        assert len({bv("10"), bv("10"), bv("01")}) == 2

    def test_width_guard(self):
        with pytest.raises(ValueError):
            BitVector(4, 2)
        with pytest.raises(ValueError):
            BitVector(1, 0)

    def test_large_width(self):
        v = BitVector.singleton(127, 128)
        w = BitVector((1 << 128) - 1, 128)
        assert leq(v, w) and not leq(w, v)


class TestLeq:
    def test_paper_pair(self):
        assert leq(bv("100"), bv("110"))

    def test_reflexive(self):
        assert leq(bv("011"), bv("011"))

    def test_incomparable_pair(self):
        assert not leq(bv("110"), bv("011"))
        assert not leq(bv("011"), bv("110"))

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            leq(bv("10"), bv("100"))

    def test_partial_order_laws(self):
        # reflexivity, antisymmetry, transitivity over random triples
        rng = np.random.default_rng(20240811)
        for _ in range(10_000):
            width = int(rng.integers(1, 9))
            u, v, w = (random_vector(rng, width) for _ in range(3))
            assert leq(u, u)
            if leq(u, v) and leq(v, u):
                assert u == v
            if leq(u, v) and leq(v, w):
                assert leq(u, w)


class TestSuccessors:
    def test_from_bottom(self):
        got = successors(BitVector.zeros(3))
        assert got == [bv("100"), bv("010"), bv("001")]

    def test_from_singleton(self):
        assert set(successors(bv("100"))) == {bv("110"), bv("101")}

    def test_top_has_none(self):
        assert successors(bv("111")) == []

    def test_cover_property(self):
        rng = np.random.default_rng(99)
        for _ in range(500):
            width = int(rng.integers(1, 10))
            v = random_vector(rng, width)
            succ = successors(v)
            assert len(succ) == width - v.popcount
            for w in succ:
                assert w.popcount == v.popcount + 1
                assert leq(v, w)


class TestUpperSets:
    @pytest.mark.parametrize("width", [1, 2, 3, 4])
    def test_upper_set_counts(self, width):
        # |up(v)| = 2**(width - popcount(v)), counting v itself, by brute force
        space = [BitVector(m, width) for m in range(1, 1 << width)]
        for v in space:
            ups = [w for w in space if leq(v, w)]
            assert len(ups) == 1 << (width - v.popcount)


class TestOrderedSupport:
    def test_rejects_duplicates_and_zero(self):
        with pytest.raises(ValueError):
            OrderedSupport([bv("10"), bv("10")])
        with pytest.raises(ValueError):
            OrderedSupport([BitVector.zeros(2)])
        with pytest.raises(ValueError):
            OrderedSupport([])

    def test_rejects_popcount_decrease(self):
        with pytest.raises(ValueError):
            OrderedSupport([bv("110"), bv("100")])

    def test_canonical_order_matches_example_listing(self):
        # popcount then mask reproduces the worked example's v1..v7 listing
        supp = OrderedSupport.from_unordered(lattice(3))
        assert [str(v) for v in supp] == ["100", "010", "001", "110", "101", "011", "111"]


class TestOrderMatrix:
    def test_full_three_bit_lattice(self):
        supp = OrderedSupport.from_unordered(lattice(3))
        expected = np.array(
            [
                [1, 0, 0, 1, 1, 0, 1],
                [0, 1, 0, 1, 0, 1, 1],
                [0, 0, 1, 0, 1, 1, 1],
                [0, 0, 0, 1, 0, 0, 1],
                [0, 0, 0, 0, 1, 0, 1],
                [0, 0, 0, 0, 0, 1, 1],
                [0, 0, 0, 0, 0, 0, 1],
            ],
            dtype=np.uint8,
        )
        assert np.array_equal(order_matrix(supp), expected)

    def test_singleton(self):
        assert np.array_equal(order_matrix(OrderedSupport([bv("01")])), [[1]])

    def test_visit_subset_of_example(self):
        supp = OrderedSupport([bv("100"), bv("010"), bv("001"), bv("110")])
        expected = np.array(
            [[1, 0, 0, 1], [0, 1, 0, 1], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=np.uint8
        )
        assert np.array_equal(order_matrix(supp), expected)

    def test_unitriangular_for_random_supports(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            width = int(rng.integers(2, 11))
            size = int(rng.integers(1, min(25, (1 << width) - 1) + 1))
            masks = rng.choice(np.arange(1, 1 << width), size=size, replace=False)
            supp = OrderedSupport.from_unordered(BitVector(int(m), width) for m in masks)
            m = order_matrix(supp)
            assert np.array_equal(np.diag(m), np.ones(len(supp), dtype=np.uint8))
            assert not np.tril(m, -1).any()


class TestSolve:
    def test_full_lattice_example(self):
        supp = OrderedSupport.from_unordered(lattice(3))
        psi = solve_unitriangular(supp, [2, 4, 2, 1, 0, 0, 0])
        assert np.allclose(psi, [1, 3, 2, 1, 0, 0, 0], atol=0)

    def test_visit_subset_example(self):
        supp = OrderedSupport([bv("100"), bv("010"), bv("001"), bv("110")])
        psi = solve_unitriangular(supp, [2, 4, 2, 1])
        assert np.array_equal(psi, [1, 3, 2, 1])

    def test_zero_vector(self):
        supp = OrderedSupport.from_unordered(lattice(3))
        assert np.array_equal(solve_unitriangular(supp, np.zeros(7)), np.zeros(7))

    def test_size_mismatch(self):
        supp = OrderedSupport([bv("10")])
        with pytest.raises(ValueError):
            solve_unitriangular(supp, [1.0, 2.0])

    def test_round_trip_random(self):
        rng = np.random.default_rng(1234)
        for _ in range(300):
            width = int(rng.integers(2, 11))
            size = int(rng.integers(1, min(30, (1 << width) - 1) + 1))
            masks = rng.choice(np.arange(1, 1 << width), size=size, replace=False)
            supp = OrderedSupport.from_unordered(BitVector(int(m), width) for m in masks)
            x = rng.normal(size=size)
            phi = order_matrix(supp).astype(float) @ x
            assert np.allclose(solve_unitriangular(supp, phi), x, atol=1e-10)

    def test_large_support_uses_level_blocks(self):
        # exercise the chunked path on a full 12-bit lattice slice
        width = 12
        vecs = [BitVector(m, width) for m in range(1, 1 << width) if m.bit_count() <= 3]
        supp = OrderedSupport.from_unordered(vecs)
        rng = np.random.default_rng(5)
        x = rng.normal(size=len(supp))
        phi = order_matrix(supp).astype(float) @ x
        assert np.allclose(solve_unitriangular(supp, phi), x, atol=1e-10)
