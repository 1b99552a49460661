import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_orthogonal, table_row, triangular_metrics
from ledger_obata.catalog import standard_einstein_matrix, standard_matrix
from ledger_obata.errors import DegenerateMetricError, DomainError
from ledger_obata.isometry import t_matrix
from ledger_obata.metric_core import (
    RatioCoordinates,
    TriangularMetric,
    block_diag,
    canonicalize_many,
    cholesky_canonical,
    from_ratio_coords,
    inverse,
    matrix_from_json,
    scale,
    to_ratio_coords,
    volume,
)

S = math.sqrt


class TestTriangularMetric:
    def test_rejects_upper_entries(self):
        with pytest.raises(DomainError):
            TriangularMetric([[1.0, 0.5], [0.0, 1.0]])

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_rejects_nonpositive_diagonal(self, d):
        with pytest.raises(DomainError):
            TriangularMetric([[1.0, 0.0], [0.3, d]])

    def test_rejects_non_square_and_nan(self):
        with pytest.raises(DomainError):
            TriangularMetric(np.ones((2, 3)))
        with pytest.raises(DomainError):
            TriangularMetric([[float("nan")]])

    def test_matrix_is_read_only(self):
        a = TriangularMetric(np.eye(2))
        with pytest.raises(ValueError):
            a.matrix[0, 0] = 5.0

    def test_json_round_trip(self):
        a = table_row(17)
        assert matrix_from_json(a.tolist()).allclose(a, atol=0.0)


class TestRatioCoordinates:
    def test_row6(self):
        a = from_ratio_coords(RatioCoordinates([1, 1, 1], [1, 1, 1]))
        np.testing.assert_array_equal(a.matrix, [[1, 0, 0], [1, 1, 0], [1, 1, 1]])

    def test_zero_ratios_give_identity(self):
        np.testing.assert_array_equal(from_ratio_coords(RatioCoordinates([1, 1], [0])).matrix, np.eye(2))

    def test_row17_entries(self):
        c = RatioCoordinates([2 * S(2) / 3, 1, 2 / S(3)], [1 / (2 * S(2)), S(6) / 4, 1 / S(3)])
        a = from_ratio_coords(c).matrix
        assert a[1, 0] == pytest.approx(1 / 3, abs=1e-15)
        assert a[2, 0] == pytest.approx(1 / S(3), abs=1e-15)
        assert a[2, 1] == pytest.approx(1 / S(3), abs=1e-15)

    def test_to_ratio_examples(self):
        c = to_ratio_coords(np.eye(2))
        np.testing.assert_array_equal(c.x, [1, 1])
        np.testing.assert_array_equal(c.u, [0])
        assert to_ratio_coords([[1, 0], [1, 1]]).u[0] == 1.0
        c10 = to_ratio_coords(table_row(10))
        np.testing.assert_allclose(c10.x, [1 / S(3), S(1.5), S(2)], rtol=1e-15)
        np.testing.assert_allclose(c10.u, [1 / S(2), S(1.5), 1 / S(3)], rtol=1e-15)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            RatioCoordinates([1.0, 0.0], [0.0])
        with pytest.raises(DomainError):
            RatioCoordinates([1.0, 1.0], [0.0, 1.0])

    @given(triangular_metrics())
    def test_round_trip(self, a):
        back = from_ratio_coords(to_ratio_coords(a))
        np.testing.assert_allclose(back.matrix, a.matrix, rtol=1e-14, atol=1e-15)

    @given(st.integers(1, 5), st.data())
    def test_coordinate_round_trip(self, n, data):
        x = data.draw(st.lists(st.floats(0.1, 5), min_size=n, max_size=n))
        u = data.draw(st.lists(st.floats(-3, 3), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
        c = to_ratio_coords(from_ratio_coords(RatioCoordinates(x, u)))
        np.testing.assert_allclose(c.x, x, rtol=1e-15)
        np.testing.assert_allclose(c.u, u, rtol=1e-14, atol=1e-15)


class TestVolumeInverse:
    def test_volume_examples(self):
        assert volume(np.eye(4)) == 1.0
        for n in range(1, 8):
            assert volume(standard_matrix(n)) == pytest.approx(S(n + 1), rel=1e-13)
        assert volume(table_row(17)) == pytest.approx(4 * S(6) / 9, rel=1e-14)

    def test_inverse_identity(self):
        np.testing.assert_array_equal(inverse(np.eye(3)), np.eye(3))

    def test_inverse_n2_symbolic(self):
        x, y, u = 1.7, 0.6, -1.3
        b = inverse([[x, 0], [u * x, y]])
        np.testing.assert_allclose(b, [[1 / x, 0], [-u / y, 1 / y]], rtol=1e-15)

    def test_inverse_n3_third_row(self):
        a = table_row(22).matrix
        b = inverse(a)
        a11, a21, a22, a31, a32, a33 = a[0, 0], a[1, 0], a[1, 1], a[2, 0], a[2, 1], a[2, 2]
        assert b[2, 0] == pytest.approx((a32 * a21 - a31 * a22) / (a11 * a22 * a33), rel=1e-13)
        assert b[2, 1] == pytest.approx(-a32 / (a22 * a33), rel=1e-13)
        for i in range(3):
            assert b[i, i] == pytest.approx(1 / a[i, i], rel=1e-15)
        for i in range(1, 3):
            assert b[i, i - 1] == pytest.approx(-a[i, i - 1] / (a[i - 1, i - 1] * a[i, i]), rel=1e-13)

    @given(triangular_metrics(diag=(0.5, 2.0), off=1.0))
    def test_inverse_property(self, a):
        if np.linalg.cond(a.matrix) > 1e6:
            return
        b = inverse(a)
        assert np.allclose(np.triu(b, 1), 0.0)
        np.testing.assert_allclose(b @ a.matrix, np.eye(a.n), atol=1e-12)


class TestCanonical:
    def test_swap_matrix_gives_identity(self):
        np.testing.assert_allclose(cholesky_canonical([[0, 1], [1, 0]]).matrix, np.eye(2), atol=1e-15)

    def test_row9_under_random_rotation(self):
        rng = np.random.default_rng(9)
        a = table_row(9)
        got = cholesky_canonical(random_orthogonal(rng, 3) @ a.matrix)
        assert got.allclose(a, atol=1e-12)

    def test_n2_identity(self):
        m = np.diag([1.0, -1.0]) @ np.array([[1.0, 0.0], [1.0, 1.0]]) @ t_matrix(2, 2)
        np.testing.assert_allclose(cholesky_canonical(m).matrix, np.eye(2), atol=1e-15)

    def test_triangular_input_is_returned(self):
        a = table_row(21)
        np.testing.assert_array_equal(cholesky_canonical(a.matrix).matrix, a.matrix)

    def test_singular_rejected(self):
        with pytest.raises(DegenerateMetricError):
            cholesky_canonical([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(DegenerateMetricError):
            cholesky_canonical([[1.0, 1.0], [1.0, 1.0 + 1e-13]])

    def test_gram_invariant(self):
        # left-orthogonal classes share M^T M
        rng = np.random.default_rng(3)
        m = rng.normal(size=(4, 4))
        l = cholesky_canonical(m).matrix
        np.testing.assert_allclose(l.T @ l, m.T @ m, rtol=1e-12, atol=1e-12)

    @given(triangular_metrics(diag=(0.5, 2.0), off=1.5), st.integers(0, 2**32 - 1))
    def test_left_orthogonal_invariance(self, a, seed):
        q = random_orthogonal(np.random.default_rng(seed), a.n)
        assert cholesky_canonical(q @ a.matrix).allclose(a, atol=1e-10)

    def test_stack_matches_single(self):
        rng = np.random.default_rng(5)
        ms = rng.normal(size=(6, 3, 3))
        got = canonicalize_many(ms)
        for m, g in zip(ms, got):
            np.testing.assert_allclose(g, cholesky_canonical(m).matrix, atol=1e-13)


class TestBlocksAndScale:
    def test_block_examples(self):
        np.testing.assert_array_equal(block_diag([[2.0]], [[2.0]]).matrix, np.diag([2.0, 2.0]))
        a1 = standard_einstein_matrix(1)
        np.testing.assert_allclose(block_diag(a1, a1, a1).matrix, np.diag([2.0, 2.0, 2.0]), rtol=1e-15)
        b = block_diag(a1, standard_einstein_matrix(2)).matrix
        a2 = S(6 / 5) * np.array([[S(3), 0], [1, 2]])
        assert b[0, 0] == pytest.approx(2.0)
        np.testing.assert_allclose(b[1:, 1:], a2, rtol=1e-14)
        assert np.all(b[1:, 0] == 0.0)

    @given(triangular_metrics(max_n=3), triangular_metrics(max_n=3))
    def test_volume_multiplies(self, a, b):
        assert volume(block_diag(a, b)) == pytest.approx(volume(a) * volume(b), rel=1e-12)

    def test_scale_examples(self):
        assert scale(np.eye(1), 2.0).allclose(standard_einstein_matrix(1), atol=1e-15)
        a = table_row(12)
        assert scale(a, 1.0).allclose(a, atol=0.0)
        assert scale(standard_einstein_matrix(3), 0.5).allclose(table_row(17), atol=1e-14)

    @pytest.mark.parametrize("c", [0.0, -2.0])
    def test_scale_domain(self, c):
        with pytest.raises(DomainError):
            scale(np.eye(2), c)
