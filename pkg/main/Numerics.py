import numpy as np
from scipy.linalg import solve_triangular

from main.SimulationErrors import DimensionMismatch, NonFinite, NotPositiveDefinite

# Relative tolerance of the Hermitian check.
HERMITIAN_TOLERANCE = 1e-10
# Eigenvalues closer than this (relative to the spectrum scale) are ties.
TIE_TOLERANCE = 1e-10
# A projection shorter than this does not select a tie-break direction.
PROJECTION_FLOOR = 1e-6


class EigPair:
    """
    The EigPair class holds one eigenvector together with its eigenvalue.

    The vector is unit norm and phase normalized: its entry of largest
    modulus is real and non-negative.
    """

    def __init__(self, vector, value):
        """
        Constructor for the EigPair class.

        :param vector: The unit-norm, phase-normalized complex eigenvector.
        :param value: The real eigenvalue.
        """
        self._vector = np.array(vector, dtype=complex)
        self._vector.flags.writeable = False
        self._value = float(value)

    def get_vector(self):
        """
        Get the eigenvector.

        :return: A read-only 1D complex array.
        """
        return self._vector

    def get_value(self):
        """
        Get the eigenvalue.

        :return: The eigenvalue as a float.
        """
        return self._value


def hermitize(matrix):
    """
    Return the Hermitian part of a square matrix, removing the round-off
    asymmetry left behind by products such as A B B^H A^H.

    :param matrix: A square complex matrix.
    :return: (matrix + matrix^H) / 2
    """
    return (matrix + matrix.conj().T) / 2


def phase_normalize(vector):
    """
    Rotate a vector so that its entry of largest modulus is real and
    non-negative. The first such entry wins when several share the modulus.

    :param vector: A complex vector.
    :return: The rotated vector.
    """
    idx = int(np.argmax(np.abs(vector)))
    pivot = vector[idx]
    if abs(pivot) == 0.0:
        return vector
    return vector * (np.conj(pivot) / abs(pivot))


def _as_square(matrix, name):
    """
    Convert the input to a finite, square complex matrix.

    :param matrix: The candidate matrix.
    :param name: The name used in error messages.
    :return: The matrix as a complex numpy array.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NonFinite(f"{name} contains NaN or Inf entries")
    return matrix


def _check_hermitian(matrix, name):
    """
    Make sure a matrix is Hermitian within the relative tolerance.

    :param matrix: The square matrix to check.
    :param name: The name used in error messages.
    """
    scale = 1.0 + np.linalg.norm(matrix, 'fro')
    if np.linalg.norm(matrix - matrix.conj().T, 'fro') > HERMITIAN_TOLERANCE * scale:
        raise DimensionMismatch(f"{name} is not Hermitian")


def _canonical_from_projector(projector):
    """
    Pick a deterministic unit vector from the range of an orthogonal projector.

    The unit coordinate vectors e_1, e_2, ... are projected in order and the
    first projection that does not vanish is returned.

    :param projector: An n x n Hermitian projector of rank at least one.
    :return: A unit vector in its range.
    """
    for row in range(projector.shape[0]):
        projection = projector[:, row]
        norm = np.linalg.norm(projection)
        if norm > PROJECTION_FLOOR:
            return projection / norm
    # Unreachable for a non-zero projector.
    raise NonFinite("projector has no usable direction")


def _canonical_in_subspace(basis):
    """
    Pick a deterministic unit vector from the span of an orthonormal basis.
    Any basis of the same subspace gives the same vector.

    :param basis: An n x m matrix with orthonormal columns.
    :return: A unit vector in the span of the basis.
    """
    return _canonical_from_projector(basis @ basis.conj().T)


def _canonical_columns(basis, count):
    """
    Pick `count` deterministic orthonormal vectors from the span of a basis.
    Each pick is removed from the projector before the next one.

    :param basis: An n x m matrix with orthonormal columns, m >= count.
    :param count: Number of vectors wanted.
    :return: A list of unit vectors.
    """
    projector = basis @ basis.conj().T
    columns = []
    for _ in range(count):
        vector = _canonical_from_projector(projector)
        columns.append(vector)
        projector = hermitize(projector - np.outer(vector, vector.conj()))
    return columns


def _select_extreme(values, vectors, largest):
    """
    Select the eigenvector of the largest (or smallest) eigenvalue of an
    ascending spectrum, resolving ties with _canonical_in_subspace.

    :param values: Ascending eigenvalues.
    :param vectors: Matching orthonormal eigenvectors as columns.
    :param largest: True for the maximum, False for the minimum.
    :return: (eigenvalue, unit eigenvector)
    """
    target = values[-1] if largest else values[0]
    tolerance = TIE_TOLERANCE * (1.0 + np.max(np.abs(values)))
    tied = np.abs(values - target) <= tolerance
    if np.count_nonzero(tied) == 1:
        return target, vectors[:, -1 if largest else 0]
    return target, _canonical_in_subspace(vectors[:, tied])


def cholesky(f_matrix):
    """
    Factor a Hermitian positive definite matrix as F = L L^H.

    :param f_matrix: A square Hermitian matrix.
    :return: The lower-triangular factor L.
    :raises NotPositiveDefinite: If F is not positive definite.
    """
    f_matrix = _as_square(f_matrix, "F")
    _check_hermitian(f_matrix, "F")
    try:
        return np.linalg.cholesky(hermitize(f_matrix))
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"F is not positive definite ({e})") from e


def leading_generalized_eigvec(q_matrix, f_matrix):
    """
    Compute the leading generalized eigenvector of the pencil (Q, F), that
    is the maximizer of the generalized Rayleigh quotient u^H Q u / u^H F u.

    The problem is whitened with the Cholesky factor of F, solved as a
    standard Hermitian eigenproblem of L^-1 Q L^-H, and mapped back. F^-1 is
    never formed.

    :param q_matrix: Hermitian positive semi-definite numerator matrix.
    :param f_matrix: Hermitian positive definite denominator matrix.
    :return: An EigPair with the unit, phase-normalized vector and the
             largest generalized eigenvalue.
    """
    q_matrix = _as_square(q_matrix, "Q")
    f_matrix = _as_square(f_matrix, "F")
    if q_matrix.shape != f_matrix.shape:
        raise DimensionMismatch(f"Q has shape {q_matrix.shape} but F has shape {f_matrix.shape}")
    _check_hermitian(q_matrix, "Q")
    lower = cholesky(f_matrix)

    # C = L^-1 Q L^-H, built from two triangular solves.
    left = solve_triangular(lower, hermitize(q_matrix), lower=True)
    whitened = hermitize(solve_triangular(lower, left.conj().T, lower=True))
    values, vectors = np.linalg.eigh(whitened)

    target = values[-1]
    tolerance = TIE_TOLERANCE * (1.0 + np.max(np.abs(values)))
    tied = np.abs(values - target) <= tolerance
    mapped = solve_triangular(lower.conj().T, vectors[:, tied], lower=False)
    if mapped.shape[1] == 1:
        vector = mapped[:, 0]
    else:
        basis, _ = np.linalg.qr(mapped)
        vector = _canonical_in_subspace(basis)

    vector = phase_normalize(vector / np.linalg.norm(vector))
    return EigPair(vector, target)


def min_eigvec(s_matrix):
    """
    Compute the eigenvector of the smallest eigenvalue of a Hermitian matrix.

    :param s_matrix: A Hermitian positive semi-definite matrix.
    :return: An EigPair with the unit, phase-normalized vector.
    """
    s_matrix = _as_square(s_matrix, "S")
    _check_hermitian(s_matrix, "S")
    values, vectors = np.linalg.eigh(hermitize(s_matrix))
    value, vector = _select_extreme(values, vectors, largest=False)
    return EigPair(phase_normalize(vector / np.linalg.norm(vector)), value)


def min_eigvecs(s_matrix, count):
    """
    Compute orthonormal eigenvectors of the `count` smallest eigenvalues.

    The ascending spectrum is walked cluster by cluster. A cluster of tied
    eigenvalues contributes _canonical_columns of its eigenspace, so the
    result does not depend on the basis LAPACK returns. Every column is
    phase normalized.

    :param s_matrix: A Hermitian positive semi-definite matrix.
    :param count: Number of columns wanted.
    :return: An n x count matrix with orthonormal columns.
    """
    s_matrix = _as_square(s_matrix, "S")
    size = s_matrix.shape[0]
    if count < 1 or count > size:
        raise DimensionMismatch(f"cannot take {count} eigenvectors of a {size}x{size} matrix")
    _check_hermitian(s_matrix, "S")
    values, vectors = np.linalg.eigh(hermitize(s_matrix))
    tolerance = TIE_TOLERANCE * (1.0 + np.max(np.abs(values)))

    columns = []
    start = 0
    while len(columns) < count:
        end = start + 1
        while end < size and values[end] - values[start] <= tolerance:
            end += 1
        if end - start == 1:
            columns.append(vectors[:, start])
        else:
            columns.extend(_canonical_columns(vectors[:, start:end], min(end - start, count - len(columns))))
        start = end
    return np.column_stack([phase_normalize(column) for column in columns])


def orthonormal_columns(rng, rows, cols):
    """
    Draw a random matrix with orthonormal columns.

    A complex Gaussian matrix is QR-factored and the phases of R's diagonal
    are folded into Q, so the result is deterministic for a given generator
    state.

    :param rng: A numpy Generator.
    :param rows: Number of rows.
    :param cols: Number of columns, at most rows.
    :return: A rows x cols complex matrix with A^H A = I.
    """
    if rows < 1 or cols < 1:
        raise DimensionMismatch(f"dimensions must be positive, got {rows}x{cols}")
    if cols > rows:
        raise DimensionMismatch(f"cannot fit {cols} orthonormal columns in {rows} rows")
    gaussian = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q_factor, r_factor = np.linalg.qr(gaussian)
    diagonal = np.diag(r_factor)
    phases = np.where(np.abs(diagonal) > 0, diagonal / np.abs(diagonal), 1.0)
    return q_factor * phases
