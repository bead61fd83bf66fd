import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wlcomp.augmented import (AllocationMatrix, extract, extract_complement, from_augmented,
                              full_allocation, is_strictly_linear, make_allocation, to_augmented,
                              underline)
from wlcomp.errors import ConfigurationError, ShapeError


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestConversion:
    @pytest.mark.parametrize("v, expected", [
        ([1 + 2j], [1, 2]),
        ([1j, 1], [0, 1, 1, 0]),
    ])
    def test_examples(self, v, expected):
        np.testing.assert_array_equal(to_augmented(np.array(v)), expected)

    def test_round_trip(self, rng):
        v = crandn(rng, 37)
        np.testing.assert_array_equal(from_augmented(to_augmented(v)), v)

    def test_odd_length(self):
        with pytest.raises(ShapeError):
            from_augmented(np.zeros(5))

    def test_stacked_rows(self, rng):
        v = crandn(rng, 3, 4)
        np.testing.assert_array_equal(from_augmented(to_augmented(v)), v)


class TestUnderline:
    def test_identity(self):
        np.testing.assert_array_equal(underline(np.eye(3)), np.eye(6))

    def test_j(self):
        np.testing.assert_array_equal(underline(np.array([[1j]])), [[0, -1], [1, 0]])

    def test_homomorphism(self, rng):
        a, b = crandn(rng, 4, 4), crandn(rng, 4, 4)
        np.testing.assert_allclose(underline(a @ b), underline(a) @ underline(b), atol=1e-12)
        np.testing.assert_allclose(underline(a + b), underline(a) + underline(b), atol=1e-12)
        np.testing.assert_allclose(underline(np.linalg.inv(a)), np.linalg.inv(underline(a)), atol=1e-10)

    def test_acts_like_complex_product(self, rng):
        m, v = crandn(rng, 5, 5), crandn(rng, 5)
        np.testing.assert_allclose(to_augmented(m @ v), underline(m) @ to_augmented(v), atol=1e-12)

    def test_block_structure(self, rng):
        assert is_strictly_linear(underline(crandn(rng, 3, 3)))
        assert not is_strictly_linear(np.kron([[1.8, 0.1], [0.13, 0.8]], np.eye(3)))

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            underline(np.zeros((2, 3)))


class TestAllocation:
    def test_preamble(self):
        a = make_allocation("preamble", 500, 50)
        np.testing.assert_array_equal(a.indices, np.arange(50))

    def test_periodic(self):
        a = make_allocation("periodic", 500, 50)
        np.testing.assert_array_equal(a.indices, np.arange(0, 500, 10))

    def test_periodic_not_divisible(self):
        a = make_allocation("periodic", 10, 3)
        np.testing.assert_array_equal(a.indices, [0, 3, 7])

    def test_full(self):
        a = make_allocation("preamble", 5, 5)
        np.testing.assert_array_equal(a.dense(), np.eye(5))
        assert a.complement_indices.size == 0

    def test_mixed(self):
        a = make_allocation("mixed", 100, 10)
        np.testing.assert_array_equal(a.indices[:5], np.arange(5))
        np.testing.assert_array_equal(a.indices[5:], [5, 24, 43, 62, 81])
        a = make_allocation("mixed", 100, 10, preamble_fraction=0.2)
        # 2 preamble pilots, then 2 + round(k * 98 / 8)
        np.testing.assert_array_equal(a.indices, [0, 1, 2, 14, 26, 39, 51, 63, 76, 88])

    @pytest.mark.parametrize("n, n_p", [(5, 6), (5, 0)])
    def test_bad_counts(self, n, n_p):
        with pytest.raises(ConfigurationError):
            make_allocation("preamble", n, n_p)

    def test_bad_strategy(self):
        with pytest.raises(ConfigurationError):
            make_allocation("random", 10, 2)

    def test_invalid_indices(self):
        with pytest.raises(ConfigurationError):
            AllocationMatrix((0, 0), 4)
        with pytest.raises(ConfigurationError):
            AllocationMatrix((4,), 4)

    def test_indices_sorted(self):
        assert AllocationMatrix((3, 1), 4).pilot_indices == (1, 3)

    def test_truncated(self):
        a = make_allocation("preamble", 100, 10)
        assert a.truncated(20).n == 20
        with pytest.raises(ConfigurationError):
            make_allocation("periodic", 100, 10).truncated(50)


class TestExtract:
    def test_preamble_example(self):
        v = np.array(["r0", "r1", "r2", "r3", "i0", "i1", "i2", "i3"], dtype=object)
        out = extract(make_allocation("preamble", 4, 2), v)
        assert out.tolist() == ["r0", "r1", "i0", "i1"]

    def test_full_is_identity(self, rng):
        v = rng.standard_normal(12)
        np.testing.assert_array_equal(extract(full_allocation(6), v), v)

    @given(st.integers(1, 30).flatmap(lambda n: st.tuples(
        st.just(n), st.sets(st.integers(0, n - 1), min_size=1, max_size=n))))
    def test_matches_dense_and_partitions(self, case):
        n, idx = case
        a = AllocationMatrix(tuple(idx), n)
        v = np.arange(2 * n, dtype=float)
        np.testing.assert_array_equal(extract(a, v), np.kron(np.eye(2), a.dense()) @ v)
        both = np.concatenate([extract(a, v), extract_complement(a, v)])
        np.testing.assert_array_equal(np.sort(both), v)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            extract(make_allocation("preamble", 4, 2), np.zeros(6))
