import math

import numpy as np
import pytest
from hypothesis import given, settings

from iso_lab import linalg
from iso_lab.errors import ConvergenceError, InvalidInputError, SizeCapError, ZeroColumnError
from iso_lab.linalg import (
    Matrix,
    check_symmetric,
    format_matrix,
    gram_normalized,
    hs_norm,
    operator_norm,
    parse_matrix,
    principal_submatrix,
    rayleigh_extremes,
    sym_eigs,
)
from iso_lab.types import SubsetMask
from tests.strategies import symmetric_matrices


def test_matrix_rejects_bad_shapes_and_values():
    with pytest.raises(InvalidInputError):
        Matrix(np.zeros((2, 2, 2)))
    with pytest.raises(SizeCapError):
        Matrix(np.zeros((65, 1)))
    with pytest.raises(InvalidInputError, match=r"\(0, 1\)"):
        Matrix(np.array([[1.0, np.nan]]))


def test_matrix_is_read_only(identity3):
    with pytest.raises(ValueError):
        identity3.entries[0, 0] = 2.0


def test_columns_block(doubling4):
    block = doubling4.columns(SubsetMask.from_indices([1, 3], 4))
    np.testing.assert_array_equal(block.entries, [[0, 0], [1, 0], [0, 1], [0, 0]])
    assert doubling4.columns(SubsetMask.empty(4)).cols == 0


def test_sym_eigs_two_by_two():
    spectrum = sym_eigs(Matrix.from_rows([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(spectrum.eigenvalues, [1.0, 3.0], atol=1e-14)
    assert spectrum.residual <= 1e-12 * (1 + math.sqrt(10))


def test_sym_eigs_diagonal_needs_no_sweep():
    spectrum = sym_eigs(Matrix(np.diag([3.0, -1.0, 2.0])))
    np.testing.assert_array_equal(spectrum.eigenvalues, [-1.0, 2.0, 3.0])
    assert spectrum.residual == 0.0


def test_sym_eigs_three_by_three_closed_form():
    # tridiagonal (2, -1) matrix: eigenvalues 2 - 2 cos(k pi / 4)
    a = Matrix.from_rows([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]])
    expected = [2.0 - 2.0 * math.cos(k * math.pi / 4.0) for k in (1, 2, 3)]
    np.testing.assert_allclose(sym_eigs(a).eigenvalues, expected, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(symmetric_matrices())
def test_sym_eigs_matches_lapack(a):
    spectrum = sym_eigs(a)
    scale = 1.0 + hs_norm(a)
    np.testing.assert_allclose(spectrum.eigenvalues, np.linalg.eigvalsh(a.entries), atol=1e-9 * scale)
    v = spectrum.eigenvectors
    np.testing.assert_allclose(a.entries @ v, v * spectrum.eigenvalues, atol=1e-9 * scale)
    np.testing.assert_allclose(v.T @ v, np.eye(a.rows), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(symmetric_matrices(min_side=2))
def test_principal_submatrix_eigenvalues_interlace(a):
    n = a.rows
    full = sym_eigs(a).eigenvalues
    sub = sym_eigs(principal_submatrix(a, SubsetMask.full(n).difference(SubsetMask.from_indices([n - 1], n))))
    tol = 1e-9 * (1.0 + hs_norm(a))
    for k, mu in enumerate(sub.eigenvalues):
        assert full[k] - tol <= mu <= full[k + 1] + tol


def test_sym_eigs_reports_non_convergence(monkeypatch):
    monkeypatch.setattr(linalg, "JACOBI_MAX_SWEEPS", 0)
    with pytest.raises(ConvergenceError):
        sym_eigs(Matrix.from_rows([[1.0, 0.5], [0.5, 1.0]]))


def test_check_symmetric_names_the_entry_pair():
    with pytest.raises(InvalidInputError, match=r"\(1, 2\).*\(2, 1\)|\(2, 1\).*\(1, 2\)"):
        check_symmetric(Matrix.from_rows([[1, 0, 0], [0, 1, 0.5], [0, 0.25, 1]]))
    with pytest.raises(InvalidInputError, match="square"):
        check_symmetric(Matrix(np.zeros((2, 3))))


def test_operator_norm(doubling4, identity3):
    assert operator_norm(doubling4) == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert operator_norm(identity3) == pytest.approx(1.0, abs=1e-12)
    assert operator_norm(Matrix(np.zeros((0, 0)))) == 0.0
    wide = Matrix(np.array([[3.0, 0.0, 4.0]]))
    assert operator_norm(wide) == pytest.approx(5.0, abs=1e-12)


def test_hs_norm(identity3):
    assert hs_norm(identity3) == pytest.approx(math.sqrt(3.0))


def test_gram_normalized(pair_correlation3):
    gram = gram_normalized(pair_correlation3(0.6), SubsetMask.from_indices([0, 1], 3))
    np.testing.assert_allclose(gram.entries, [[1.0, 0.6], [0.6, 1.0]], atol=1e-15)


def test_gram_normalized_zero_column():
    T = Matrix.from_rows([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ZeroColumnError) as excinfo:
        gram_normalized(T, SubsetMask.full(3))
    assert excinfo.value.index == 1


def test_principal_submatrix_orders_indices():
    a = Matrix(np.arange(16, dtype=float).reshape(4, 4))
    sub = principal_submatrix(a, SubsetMask.from_indices([3, 1], 4))
    np.testing.assert_array_equal(sub.entries, [[5.0, 7.0], [13.0, 15.0]])
    assert principal_submatrix(a, SubsetMask.empty(4)).rows == 0


def test_parse_matrix():
    a = parse_matrix("2 3\n1 0 -2.5\n0.5 1e-3 4\n")
    np.testing.assert_array_equal(a.entries, [[1.0, 0.0, -2.5], [0.5, 1e-3, 4.0]])
    assert parse_matrix(format_matrix(a)) == a


@pytest.mark.parametrize(
    "text, error",
    [
        ("", InvalidInputError),
        ("2 x\n1 2\n", InvalidInputError),
        ("0 2\n", InvalidInputError),
        ("2 2\n1 2\n", InvalidInputError),
        ("2 2\n1 2\n3\n", InvalidInputError),
        ("2 2\n1 nan\n0 1\n", InvalidInputError),
        ("1 2\ninf 1\n", InvalidInputError),
        ("1 1\nabc\n", InvalidInputError),
        ("65 65\n", SizeCapError),
    ],
)
def test_parse_matrix_rejects(text, error):
    with pytest.raises(error):
        parse_matrix(text)


def test_read_matrix_missing_file(tmp_path):
    with pytest.raises(InvalidInputError, match="not found"):
        linalg.read_matrix(tmp_path / "missing.txt")


def test_rayleigh_extremes_are_bounded_by_the_spectrum(gaussian_operators):
    rng = np.random.default_rng(3)
    for T in gaussian_operators(5, 3):
        sigma = SubsetMask.from_indices([0, 2, 3], 5)
        spectrum = sym_eigs(gram_normalized(T, sigma))
        low, high = rayleigh_extremes(T, sigma, rng.standard_normal((200, 3)))
        assert spectrum.minimum - 1e-12 <= low <= high <= spectrum.maximum + 1e-12


def test_sym_eigs_converges_on_every_gram_block(gaussian_operators):
    tol = linalg.JACOBI_TOL
    for T in gaussian_operators(8, 10, seed=21):
        for bits in range(1, 1 << 8):
            gram = gram_normalized(T, SubsetMask(bits, 8))
            spectrum = sym_eigs(gram)
            assert spectrum.residual <= tol * (1.0 + hs_norm(gram))
            np.testing.assert_allclose(spectrum.eigenvalues, np.linalg.eigvalsh(gram.entries), atol=1e-10)


def test_sym_eigs_on_a_well_separated_unit_diagonal_matrix():
    q, _ = np.linalg.qr(np.random.default_rng(5).standard_normal((5, 5)))
    a = q @ np.diag([0.12, 0.5, 0.9, 1.16, 2.32]) @ q.T
    d = np.sqrt(np.diag(a))
    gram = Matrix(a / np.outer(d, d))
    np.testing.assert_allclose(sym_eigs(gram).eigenvalues, np.linalg.eigvalsh(gram.entries), atol=1e-12)


def test_sym_eigs_matches_the_characteristic_cubic():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        a = rng.uniform(-1.0, 1.0, (3, 3))
        a = 0.5 * (a + a.T)
        roots = np.sort(np.real(np.roots(np.poly(a))))
        np.testing.assert_allclose(sym_eigs(Matrix(a)).eigenvalues, roots, atol=1e-8)


def test_rayleigh_quotients_stay_inside_the_gram_spectrum_at_n8(gaussian_operators):
    rng = np.random.default_rng(13)
    sigma = SubsetMask.full(8)
    for T in gaussian_operators(8, 5, seed=2):
        spectrum = sym_eigs(gram_normalized(T, sigma))
        low, high = rayleigh_extremes(T, sigma, rng.standard_normal((1000, 8)))
        assert spectrum.minimum - 1e-12 <= low <= high <= spectrum.maximum + 1e-12
        # the extremal eigenvectors (rescaled by column norms) attain the bounds
        norms = T.column_norms()
        bottom, top = spectrum.extremal_vectors()
        low_at, high_at = rayleigh_extremes(T, sigma, [bottom / norms, top / norms])
        assert low_at == pytest.approx(spectrum.minimum, abs=1e-10)
        assert high_at == pytest.approx(spectrum.maximum, abs=1e-10)
