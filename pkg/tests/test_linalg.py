import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tvpf.errors import DimensionMismatch, SingularJacobian
from tvpf.linalg import LUFactor, solve_linear


class TestSolveLinear:
    def test_identity(self):
        rhs = np.array([1.0, -2.0, 3.5])
        np.testing.assert_array_equal(solve_linear(np.eye(3), rhs), rhs)

    def test_diagonal(self):
        np.testing.assert_allclose(solve_linear(np.diag([2.0, 4.0]), [2.0, 8.0]), [1.0, 2.0])

    def test_multiply_back_50(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((50, 50)) + 50 * np.eye(50)
        b = rng.standard_normal(50)
        v = solve_linear(a, b)
        assert np.abs(a @ v - b).max() <= 1e-10

    def test_needs_pivoting(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(solve_linear(a, [3.0, 4.0]), [4.0, 3.0])

    def test_singular(self):
        with pytest.raises(SingularJacobian):
            solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_linear(np.eye(3), np.ones(2))
        with pytest.raises(DimensionMismatch):
            LUFactor(np.ones((2, 3)))

    @given(arrays(float, (6, 6), elements=st.floats(-1, 1)), arrays(float, 6, elements=st.floats(-10, 10)))
    def test_random_dominant(self, a, b):
        a = a + 8 * np.eye(6)
        np.testing.assert_allclose(a @ solve_linear(a, b), b, atol=1e-10)

    def test_inverse(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((12, 12)) + 5 * np.eye(12)
        np.testing.assert_allclose(LUFactor(a).inverse() @ a, np.eye(12), atol=1e-12)

    def test_factor_reuse(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((10, 10)) + 4 * np.eye(10)
        lu = LUFactor(a)
        for _ in range(3):
            b = rng.standard_normal(10)
            np.testing.assert_allclose(lu.solve(b), np.linalg.solve(a, b), rtol=1e-10)
