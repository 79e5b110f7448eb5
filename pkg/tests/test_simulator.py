"""Poisson sampling, instance generation and measurement synthesis."""

import math

import numpy as np
import pytest

from odtomo.datasets import nsfnet
from odtomo.graph import Network, ObservationPlan
from odtomo.rng import SplitMix64, derive_stream
from odtomo.simulator import (
    Instance,
    make_instance,
    measure,
    od_universe,
    poisson_sample,
    read_csv,
    write_csv,
)


class TestPoissonSampler:
    def test_mean_within_clt_bound(self):
        rng = SplitMix64(101)
        n = 100_000
        draws = np.array([poisson_sample(4.0, rng) for _ in range(n)])
        assert abs(draws.mean() - 4.0) <= 5 * math.sqrt(4.0 / n)

    def test_variance_matches_mean(self):
        rng = SplitMix64(102)
        n = 100_000
        draws = np.array([poisson_sample(4.0, rng) for _ in range(n)])
        assert abs(draws.var() - 4.0) <= 0.15 * 4.0

    def test_large_mean_regime(self):
        # exercises the rejection sampler past the method cutoff
        rng = SplitMix64(103)
        n = 50_000
        lam = 250.0
        draws = np.array([poisson_sample(lam, rng) for _ in range(n)])
        assert abs(draws.mean() - lam) <= 5 * math.sqrt(lam / n)
        assert abs(draws.var() - lam) <= 0.15 * lam

    def test_deterministic_under_seed(self):
        a = SplitMix64(7)
        b = SplitMix64(7)
        seq_a = [poisson_sample(3.5, a) for _ in range(200)]
        seq_b = [poisson_sample(3.5, b) for _ in range(200)]
        assert seq_a == seq_b

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_invalid_mean(self, bad):
        with pytest.raises(ValueError):
            poisson_sample(bad, SplitMix64(0))


class TestMakeInstance:
    def test_nsfnet_full_universe(self):
        net = nsfnet()
        assert len(od_universe(net)) == 91
        inst = make_instance(net, 91, seed=3)
        assert len(inst.paths) == 91
        assert len(set(inst.od_pairs)) == 91

    def test_minimal_graph(self):
        net = Network([0, 1], [(0, 1, 1.0)])
        inst = make_instance(net, 1, seed=0)
        assert len(inst.paths) == 1
        assert inst.paths[0].edges == (0,)
        assert inst.means.shape == (1,)

    def test_k_too_large(self):
        net = Network([0, 1], [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            make_instance(net, 2, seed=0)

    def test_seed_reproducibility(self):
        net = nsfnet()
        a = make_instance(net, 5, seed=42)
        b = make_instance(net, 5, seed=42)
        assert a.od_pairs == b.od_pairs
        assert np.array_equal(a.means, b.means)
        c = make_instance(net, 5, seed=43)
        assert a.od_pairs != c.od_pairs or not np.array_equal(a.means, c.means)

    def test_mean_range_respected(self):
        net = nsfnet()
        inst = make_instance(net, 20, mean_range=(2.0, 3.0), seed=11)
        assert ((inst.means >= 2.0) & (inst.means <= 3.0)).all()


from conftest import example_instance


class TestMeasure:
    def test_shape_single_row(self, triangle):
        inst = example_instance(triangle)
        ms = measure(inst, 1)
        assert ms.samples.data.shape == (1, 3)

    def test_expected_flows(self, triangle):
        inst = example_instance(triangle)
        n = 100_000
        ms = measure(inst, n)
        y = ms.samples.data
        expected = np.array([2.0, 4.0, 2.0])
        se = np.sqrt(expected / n)
        assert (np.abs(y.mean(axis=0) - expected) <= 3 * se).all()

    def test_shared_path_covariance(self, triangle):
        inst = example_instance(triangle)
        n = 100_000
        y = measure(inst, n).samples.data
        centered = y - y.mean(axis=0)
        prod = centered[:, 0] * centered[:, 1]
        cov = prod.mean()
        se = prod.std() / math.sqrt(n)
        assert abs(cov - 1.0) <= 3 * se

    def test_disjoint_links_uncorrelated(self, triangle):
        inst = example_instance(triangle)
        n = 100_000
        y = measure(inst, n).samples.data
        centered = y - y.mean(axis=0)
        prod = centered[:, 0] * centered[:, 2]
        se = prod.std() / math.sqrt(n)
        assert abs(prod.mean()) <= 5 * se

    def test_marginals_poisson(self, triangle):
        # each observed flow is a sum of independent Poisson streams, so its
        # sample mean and variance must agree within CLT tolerances
        inst = example_instance(triangle)
        n = 100_000
        y = measure(inst, n).samples.data
        for i, lam in enumerate([2.0, 4.0, 2.0]):
            assert abs(y[:, i].mean() - lam) <= 5 * math.sqrt(lam / n)
            assert abs(y[:, i].var() - lam) <= 0.15 * lam

    def test_bit_for_bit_reproducibility(self, triangle):
        inst = example_instance(triangle)
        a = measure(inst, 500)
        b = measure(inst, 500)
        assert np.array_equal(a.samples.data, b.samples.data)
        c = measure(inst, 500, rng=SplitMix64(derive_stream(1, 2, 3)))
        assert not np.array_equal(a.samples.data, c.samples.data)

    def test_partial_observation(self, triangle):
        inst = example_instance(triangle)
        partial = Instance(
            network=inst.network,
            od_pairs=inst.od_pairs,
            paths=inst.paths,
            means=inst.means,
            plan=ObservationPlan((1, 2)),
            seed=inst.seed,
        )
        ms = measure(partial, 100)
        assert ms.samples.data.shape == (100, 2)
        assert ms.observed == (1, 2)


class TestCsvRoundTrip:
    def test_write_read(self, triangle, tmp_path):
        inst = example_instance(triangle)
        ms = measure(inst, 50)
        path = tmp_path / "m.csv"
        write_csv(ms, str(path))
        samples, observed = read_csv(str(path))
        assert observed == (0, 1, 2)
        assert np.array_equal(samples.data, ms.samples.data)

    def test_rewrites_identical(self, triangle, tmp_path):
        inst = example_instance(triangle)
        ms = measure(inst, 50)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(ms, str(p1))
        write_csv(ms, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("flow_1,flow_2\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(str(p))
