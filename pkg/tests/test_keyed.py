import numpy as np
import pytest
from scipy import stats

from latticewalk.keyed import KeyedStream, Tag, derive_seed, hash_words, mix64

from conftest import ALPHA


class TestKeyedStream(object):

    def test_scalar_and_vector_paths_agree(self):
        stream = KeyedStream(7, Tag.PSI)
        counters = np.array([-5, -1, 0, 1, 2, 1 << 40], dtype=np.int64)
        vector = stream.uniforms(counters)
        for counter, value in zip(counters, vector):
            assert stream.uniform(int(counter)) == value

    def test_uniforms_with_leading_counters(self):
        stream = KeyedStream(3, Tag.HORIZONTAL)
        vector = stream.uniforms(np.arange(5), 4, 2)
        assert list(vector) == [stream.uniform(4, 2, j) for j in range(5)]

    def test_uniforms_nd_broadcasts(self):
        stream = KeyedStream(3, Tag.HORIZONTAL)
        levels = np.array([-2, 0, 9])[:, None]
        visits = np.array([1, 2])[None, :]
        grid = stream.uniforms_nd(levels, visits, 0)
        assert grid.shape == (3, 2)
        assert grid[2, 1] == stream.uniform(9, 2, 0)
        assert grid[0, 0] == stream.uniform(-2, 1, 0)

    def test_values_in_unit_interval(self):
        values = KeyedStream(1, Tag.RHO).uniforms(np.arange(-1000, 1000))
        assert values.min() >= 0.0
        assert values.max() < 1.0

    def test_order_independent(self):
        stream = KeyedStream(99, Tag.LAMBDA)
        forward = [stream.uniform(y) for y in range(10)]
        backward = [stream.uniform(y) for y in reversed(range(10))]
        assert forward == backward[::-1]

    def test_child_extends_path(self):
        stream = KeyedStream(5, Tag.REPLICA)
        assert stream.child(3).uniform(1) == KeyedStream(5, Tag.REPLICA, 3).uniform(1)

    def test_tags_separate_streams(self):
        counters = np.arange(100)
        psi = KeyedStream(5, Tag.PSI).uniforms(counters)
        rho = KeyedStream(5, Tag.RHO).uniforms(counters)
        assert not np.array_equal(psi, rho)

    def test_generator_reproducible(self):
        first = KeyedStream(11, Tag.STEP).generator().integers(0, 3, size=50)
        second = KeyedStream(11, Tag.STEP).generator().integers(0, 3, size=50)
        np.testing.assert_array_equal(first, second)

    def test_uniformity(self):
        values = KeyedStream(2024, Tag.PSI).uniforms(np.arange(10 ** 5))
        assert stats.kstest(values, "uniform").pvalue > ALPHA


class TestSeeds(object):

    def test_derive_seed_deterministic(self):
        assert derive_seed(1, Tag.ENV, 4) == derive_seed(1, Tag.ENV, 4)

    @pytest.mark.parametrize("keys", [(Tag.ENV, 5), (Tag.WALK, 4), (Tag.ENV,)])
    def test_derive_seed_depends_on_keys(self, keys):
        assert derive_seed(1, *keys) != derive_seed(1, Tag.ENV, 4)

    def test_hash_fits_64_bits(self):
        assert 0 <= hash_words(-1, 1 << 70, 3) < 1 << 64
        assert 0 <= mix64(-12345) < 1 << 64
