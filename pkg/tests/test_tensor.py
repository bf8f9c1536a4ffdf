import numpy as np
import pytest

from fusiscan.tensor import (
    Rng,
    ShapeError,
    Tensor,
    argmax,
    matmul,
    rng_shuffle,
    splitmix64,
    tensor_from,
    tensor_new,
)


class TestTensorNew:
    def test_zero_fill(self):
        t = tensor_new([2, 3], 0.0)
        assert t.dims == (2, 3)
        assert t.data.tolist() == [0.0] * 6

    def test_singleton(self):
        assert tensor_new([1], 7.5).tolist() == [7.5]

    def test_zero_dim_rejected(self):
        with pytest.raises(ShapeError):
            tensor_new([2, 0])

    def test_negative_dim_rejected(self):
        with pytest.raises(ShapeError):
            tensor_new([-1, 3])

    def test_empty_dims_rejected(self):
        with pytest.raises(ShapeError):
            tensor_new([])


class TestMatmul:
    def test_identity(self):
        eye = tensor_from(np.eye(2))
        b = tensor_from([[3, 4], [5, 6]])
        assert matmul(eye, b).tolist() == [[3.0, 4.0], [5.0, 6.0]]

    def test_zero_matrix(self):
        a = tensor_from([[1, 2], [3, 4]])
        z = tensor_new([2, 1], 0.0)
        assert matmul(a, z).tolist() == [[0.0], [0.0]]

    def test_known_product(self):
        # expanded by hand: [1*5+2*7, 1*6+2*8; 3*5+4*7, 3*6+4*8]
        a = tensor_from([[1, 2], [3, 4]])
        b = tensor_from([[5, 6], [7, 8]])
        assert matmul(a, b).tolist() == [[19.0, 22.0], [43.0, 50.0]]

    def test_identity_exact_both_sides(self):
        rng = Rng(5)
        a = Tensor(rng.normal_array((4, 4), 0, 2))
        eye = tensor_from(np.eye(4))
        assert np.array_equal(matmul(a, eye).array, a.array)
        assert np.array_equal(matmul(eye, a).array, a.array)

    def test_dim_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(tensor_new([2, 3]), tensor_new([2, 3]))

    def test_non_2d_rejected(self):
        with pytest.raises(ShapeError):
            matmul(tensor_new([2, 3, 4]), tensor_new([4, 2]))


class TestArgmax:
    def test_basic(self):
        assert argmax(tensor_from([0.1, 0.8, 0.1])) == 1

    def test_tie_goes_low(self):
        assert argmax(tensor_from([0.5, 0.5])) == 0

    def test_negative_values(self):
        assert argmax(tensor_from([-3, -1, -2])) == 1

    def test_non_1d_rejected(self):
        with pytest.raises(ShapeError):
            argmax(tensor_new([2, 2]))


class TestElementwise:
    def test_add_sub_mul(self):
        a = tensor_from([1, 2, 3])
        b = tensor_from([4, 5, 6])
        assert (a + b).tolist() == [5.0, 7.0, 9.0]
        assert (b - a).tolist() == [3.0, 3.0, 3.0]
        assert (a * b).tolist() == [4.0, 10.0, 18.0]

    def test_scalar_multiply(self):
        assert tensor_from([1, 2]).scale(2.5).tolist() == [2.5, 5.0]

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            tensor_from([1, 2]) + tensor_from([1, 2, 3])

    def test_reduce(self):
        t = tensor_from([[1, 2], [3, 4]])
        assert t.reduce_sum() == 10.0
        assert t.reduce_mean() == 2.5


class TestReshapeSlice:
    def test_roundtrip_property(self):
        rng = Rng(9)
        for dims, alt in [((2, 3), (3, 2)), ((4,), (2, 2)), ((2, 3, 4), (4, 6))]:
            t = Tensor(rng.normal_array(dims))
            back = t.reshape(alt).reshape(dims)
            assert np.array_equal(back.array, t.array)

    def test_reshape_must_preserve_count(self):
        with pytest.raises(ShapeError):
            tensor_new([2, 3]).reshape([7])

    def test_slice_dim(self):
        t = tensor_from([[1, 2, 3], [4, 5, 6]])
        assert t.slice_dim(1, 1, 3).tolist() == [[2.0, 3.0], [5.0, 6.0]]
        assert t.slice_dim(0, 0, 1).tolist() == [[1.0, 2.0, 3.0]]

    def test_slice_bounds(self):
        with pytest.raises(ShapeError):
            tensor_from([1, 2, 3]).slice_dim(0, 2, 5)


class TestRng:
    def test_equal_seeds_equal_streams(self):
        a, b = Rng(1234), Rng(1234)
        assert [a.next_u64() for _ in range(1000)] == [b.next_u64() for _ in range(1000)]

    def test_block_matches_scalar(self):
        a, b = Rng(77), Rng(77)
        block = b.next_u64_block(257)
        assert [a.next_u64() for _ in range(257)] == [int(v) for v in block]
        # streams stay aligned afterwards
        assert a.next_u64() == b.next_u64()

    def test_uniform_range(self):
        rng = Rng(3)
        draws = [rng.uniform(2.0, 5.0) for _ in range(500)]
        assert all(2.0 <= d < 5.0 for d in draws)

    def test_normal_array_matches_scalar(self):
        a, b = Rng(8), Rng(8)
        arr = a.normal_array((6,), 1.0, 2.0)
        scalars = np.array([b.normal(1.0, 2.0) for _ in range(6)], dtype=np.float32)
        assert np.array_equal(arr, scalars)

    def test_normal_moments(self):
        draws = Rng(15).normal_array((20000,), 0.0, 1.0)
        assert abs(float(draws.mean())) < 0.03
        assert abs(float(draws.std()) - 1.0) < 0.03

    def test_shuffle_trivial(self):
        assert Rng(1).shuffle(1) == [0]
        assert Rng(1).shuffle(0) == []

    def test_shuffle_deterministic(self):
        assert Rng(42).shuffle(5) == Rng(42).shuffle(5)

    def test_shuffle_is_bijection(self):
        for seed in (0, 1, 99):
            perm = rng_shuffle(Rng(seed), 100)
            assert sorted(perm) == list(range(100))

    def test_child_streams_differ_and_are_stable(self):
        parent = Rng(5)
        c1, c2 = parent.child(1), parent.child(2)
        assert c1.next_u64() != c2.next_u64()
        assert Rng(5).child(1).next_u64() == Rng(5).child(1).next_u64()

    def test_splitmix64_reference_values(self):
        # published test vector for seed 1234567: first three outputs
        r = Rng(1234567)
        assert [r.next_u64() for _ in range(3)] == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
        ]
