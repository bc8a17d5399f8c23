import unittest

import numpy as np
import scipy.linalg

from main.Numerics import (cholesky, hermitize, leading_generalized_eigvec, min_eigvec, min_eigvecs,
                           orthonormal_columns, phase_normalize)
from main.SimulationErrors import DimensionMismatch, NonFinite, NotPositiveDefinite


def random_pencil(rng, size):
    """
    Draw a random Hermitian PSD Q and Hermitian PD F.
    """
    a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    b = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    q_matrix = a @ a.conj().T
    f_matrix = b @ b.conj().T + 0.1 * np.eye(size)
    return hermitize(q_matrix), hermitize(f_matrix)


class TestNumerics(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_leading_eigvec_matches_full_decomposition(self):
        # Random pencils of sizes 2 to 6 against scipy's generalized solver.
        for trial in range(1000):
            size = 2 + trial % 5
            q_matrix, f_matrix = random_pencil(self.rng, size)
            pair = leading_generalized_eigvec(q_matrix, f_matrix)
            expected = scipy.linalg.eigh(q_matrix, f_matrix, eigvals_only=True)[-1]
            self.assertAlmostEqual(pair.get_value() / expected, 1.0, delta=1e-9)

            u = pair.get_vector()
            residual = np.linalg.solve(f_matrix, q_matrix @ u) - pair.get_value() * u
            self.assertLessEqual(np.linalg.norm(residual), 1e-8 * (1 + pair.get_value()))

    def test_leading_eigvec_is_unit_and_phase_normalized(self):
        q_matrix, f_matrix = random_pencil(self.rng, 4)
        u = leading_generalized_eigvec(q_matrix, f_matrix).get_vector()
        self.assertAlmostEqual(np.linalg.norm(u), 1.0, delta=1e-12)
        pivot = u[np.argmax(np.abs(u))]
        self.assertAlmostEqual(pivot.imag, 0.0, delta=1e-12)
        self.assertGreaterEqual(pivot.real, 0.0)

    def test_leading_eigvec_maximizes_quotient(self):
        q_matrix, f_matrix = random_pencil(self.rng, 3)
        pair = leading_generalized_eigvec(q_matrix, f_matrix)
        for _ in range(1000):
            x = self.rng.standard_normal(3) + 1j * self.rng.standard_normal(3)
            x /= np.linalg.norm(x)
            quotient = np.real(np.vdot(x, q_matrix @ x)) / np.real(np.vdot(x, f_matrix @ x))
            self.assertLessEqual(quotient, pair.get_value() + 1e-9)

    def test_leading_eigvec_scaling(self):
        q_matrix, f_matrix = random_pencil(self.rng, 4)
        pair = leading_generalized_eigvec(q_matrix, f_matrix)
        for scale in (1e-3, 0.5, 7.0, 1e4):
            scaled = leading_generalized_eigvec(scale * q_matrix, f_matrix)
            np.testing.assert_allclose(scaled.get_vector(), pair.get_vector(), atol=1e-9)
            self.assertAlmostEqual(scaled.get_value() / (scale * pair.get_value()), 1.0, delta=1e-9)

    def test_rank_one_pencil(self):
        # Q = h h^H and F = I give u = h / |h| and lambda = |h|^2.
        h = np.array([3.0, 4.0j])
        pair = leading_generalized_eigvec(np.outer(h, h.conj()), np.eye(2))
        self.assertAlmostEqual(pair.get_value(), 25.0, delta=1e-12)
        self.assertAlmostEqual(abs(np.vdot(pair.get_vector(), h)), 5.0, delta=1e-12)

    def test_tie_picks_canonical_vector(self):
        pair = leading_generalized_eigvec(np.eye(3), np.eye(3))
        np.testing.assert_allclose(pair.get_vector(), [1, 0, 0], atol=1e-12)
        self.assertAlmostEqual(pair.get_value(), 1.0, delta=1e-12)

        pair = leading_generalized_eigvec(np.diag([1.0, 2.0, 2.0]), np.eye(3))
        np.testing.assert_allclose(pair.get_vector(), [0, 1, 0], atol=1e-12)

    def test_indefinite_denominator(self):
        with self.assertRaises(NotPositiveDefinite):
            leading_generalized_eigvec(np.eye(2), np.diag([1.0, -1.0]))
        with self.assertRaises(NotPositiveDefinite):
            cholesky(np.zeros((2, 2)))

    def test_bad_inputs(self):
        with self.assertRaises(DimensionMismatch):
            leading_generalized_eigvec(np.eye(2), np.eye(3))
        with self.assertRaises(DimensionMismatch):
            leading_generalized_eigvec(np.ones((2, 3)), np.eye(2))
        with self.assertRaises(DimensionMismatch):
            leading_generalized_eigvec(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2))
        with self.assertRaises(NonFinite):
            leading_generalized_eigvec(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.eye(2))

    def test_cholesky_factor(self):
        _, f_matrix = random_pencil(self.rng, 4)
        lower = cholesky(f_matrix)
        np.testing.assert_allclose(lower @ lower.conj().T, f_matrix, atol=1e-10)
        self.assertTrue(np.allclose(np.triu(lower, 1), 0))

    def test_min_eigvec(self):
        pair = min_eigvec(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(pair.get_vector(), [0, 1, 0], atol=1e-12)
        self.assertAlmostEqual(pair.get_value(), 1.0, delta=1e-12)

        # A zero matrix ties everywhere.
        pair = min_eigvec(np.zeros((2, 2)))
        np.testing.assert_allclose(pair.get_vector(), [1, 0], atol=1e-12)

    def test_min_eigvecs(self):
        q_matrix, _ = random_pencil(self.rng, 5)
        columns = min_eigvecs(q_matrix, 2)
        self.assertEqual(columns.shape, (5, 2))
        np.testing.assert_allclose(columns.conj().T @ columns, np.eye(2), atol=1e-10)
        values = np.linalg.eigvalsh(q_matrix)
        self.assertAlmostEqual(np.real(np.vdot(columns[:, 0], q_matrix @ columns[:, 0])), values[0], delta=1e-9)
        with self.assertRaises(DimensionMismatch):
            min_eigvecs(q_matrix, 6)

    def test_min_eigvecs_tie_ignores_basis(self):
        # Rank 2 on C^4: the null space is two dimensional.
        span = orthonormal_columns(self.rng, 4, 2)
        first = hermitize(span @ np.diag([1.0, 2.0]) @ span.conj().T)
        rotation = orthonormal_columns(self.rng, 2, 2)
        second = hermitize(span @ rotation @ np.diag([5.0, 0.5]) @ rotation.conj().T @ span.conj().T)
        columns = min_eigvecs(first, 2)
        np.testing.assert_allclose(min_eigvecs(second, 2), columns, atol=1e-9)
        np.testing.assert_allclose(min_eigvecs(3.0 * first, 2), columns, atol=1e-9)

        # The first column is the normalized projection of e_1 on the null space.
        projector = np.eye(4) - span @ span.conj().T
        expected = phase_normalize(projector[:, 0] / np.linalg.norm(projector[:, 0]))
        np.testing.assert_allclose(columns[:, 0], expected, atol=1e-9)
        np.testing.assert_allclose(columns.conj().T @ columns, np.eye(2), atol=1e-10)
        np.testing.assert_allclose(first @ columns, np.zeros((4, 2)), atol=1e-10)

    def test_min_eigvecs_single_column_matches_min_eigvec(self):
        matrix = np.diag([2.0, 0.0, 0.0])
        np.testing.assert_allclose(min_eigvecs(matrix, 1)[:, 0], min_eigvec(matrix).get_vector(), atol=1e-12)
        np.testing.assert_allclose(min_eigvecs(matrix, 2), [[0, 0], [1, 0], [0, 1]], atol=1e-12)

    def test_vector_is_read_only(self):
        pair = min_eigvec(np.eye(2))
        with self.assertRaises(ValueError):
            pair.get_vector()[0] = 2.0

    def test_phase_normalize(self):
        rotated = phase_normalize(np.array([0.5, 1j]))
        np.testing.assert_allclose(rotated, [-0.5j, 1.0], atol=1e-15)
        np.testing.assert_array_equal(phase_normalize(np.zeros(2, dtype=complex)), np.zeros(2))

    def test_orthonormal_columns(self):
        matrix = orthonormal_columns(self.rng, 4, 2)
        self.assertEqual(matrix.shape, (4, 2))
        np.testing.assert_allclose(matrix.conj().T @ matrix, np.eye(2), atol=1e-12)

    def test_orthonormal_columns_is_reproducible(self):
        first = orthonormal_columns(np.random.default_rng(3), 3, 3)
        second = orthonormal_columns(np.random.default_rng(3), 3, 3)
        np.testing.assert_array_equal(first, second)

    def test_orthonormal_columns_too_many(self):
        with self.assertRaises(DimensionMismatch):
            orthonormal_columns(self.rng, 2, 3)


if __name__ == '__main__':
    unittest.main()
