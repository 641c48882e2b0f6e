"""Dense linear algebra for small symmetric spectral problems.

Everything here works on :class:`Matrix`, an immutable wrapper around a
float64 numpy array of at most 64 x 64 entries. Eigenvalues come from a
cyclic Jacobi solver so results are deterministic and do not depend on the
LAPACK build.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from iso_lab.constants import (
    JACOBI_MAX_SWEEPS,
    JACOBI_TOL,
    MAX_MATRIX_DIM,
    SYMMETRY_TOL,
    ZERO_COLUMN_TOL,
)
from iso_lab.errors import ConvergenceError, InvalidInputError, SizeCapError, ZeroColumnError
from iso_lab.types import SubsetMask


@dataclass(frozen=True, eq=False)
class Matrix:
    """Real dense matrix; column i is T e_i in the canonical basis."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        data = np.array(self.entries, dtype=float, copy=True)
        if data.ndim != 2:
            raise InvalidInputError(f"Matrix must be two-dimensional, got shape {data.shape}.")
        if data.shape[0] > MAX_MATRIX_DIM or data.shape[1] > MAX_MATRIX_DIM:
            raise SizeCapError(
                f"Matrix shape {data.shape} exceeds the {MAX_MATRIX_DIM} x {MAX_MATRIX_DIM} cap."
            )
        if not np.all(np.isfinite(data)):
            row, col = np.argwhere(~np.isfinite(data))[0]
            raise InvalidInputError(f"Matrix entry ({row}, {col}) is not finite.")
        data.setflags(write=False)
        object.__setattr__(self, "entries", data)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "Matrix":
        return cls(np.array(rows, dtype=float))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls(np.eye(n))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def column(self, index: int) -> np.ndarray:
        return self.entries[:, index]

    def column_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.entries ** 2, axis=0))

    def columns(self, sigma: SubsetMask) -> "Matrix":
        """T Q_sigma restricted to its nonzero block: the columns indexed by sigma."""
        if sigma.n != self.cols:
            raise InvalidInputError(f"Subset over {sigma.n} indices does not match {self.cols} columns.")
        return Matrix(self.entries[:, list(sigma.indices())].reshape(self.rows, len(sigma)))

    def scaled(self, factor: float) -> "Matrix":
        return Matrix(self.entries * factor)

    def to_list(self) -> list:
        return self.entries.tolist()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Matrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.entries.shape, self.entries.tobytes()))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues sorted ascending, matching unit eigenvectors as columns, and the final off-diagonal norm."""

    eigenvalues: np.ndarray
    residual: float
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def minimum(self) -> float:
        return float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0

    @property
    def maximum(self) -> float:
        return float(self.eigenvalues[-1]) if self.eigenvalues.size else 0.0

    def extremal_vectors(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.eigenvectors[:, 0], self.eigenvectors[:, -1]


def check_symmetric(A: Matrix, tol: float = SYMMETRY_TOL) -> None:
    if not A.is_square:
        raise InvalidInputError(f"Matrix must be square, got {A.rows} x {A.cols}.")
    deviation = np.abs(A.entries - A.entries.T)
    if deviation.size and deviation.max() > tol:
        i, j = np.unravel_index(np.argmax(deviation), deviation.shape)
        raise InvalidInputError(
            f"Matrix is not symmetric: entries ({i}, {j}) = {A.entries[i, j]!r} "
            f"and ({j}, {i}) = {A.entries[j, i]!r} differ."
        )


def _off_diagonal_norm(a: np.ndarray) -> float:
    # Summed entrywise; sum(a**2) - sum(diag**2) cancels down to ~sqrt(ulp) * ||a||.
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def sym_eigs(A: Matrix) -> Spectrum:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit every pair (p, q), p < q, in row order and annihilate the
    (p, q) entry. Iteration stops once the off-diagonal Frobenius norm is at
    most ``JACOBI_TOL * (1 + ||A||_HS)``.

    Raises:
        InvalidInputError: non-square or asymmetric input.
        ConvergenceError: tolerance not reached within ``JACOBI_MAX_SWEEPS``.
    """
    check_symmetric(A)
    n = A.rows
    a = 0.5 * (A.entries + A.entries.T)
    v = np.eye(n)
    tol = JACOBI_TOL * (1.0 + hs_norm(A))
    off = _off_diagonal_norm(a)
    sweeps = 0
    while off > tol:
        if sweeps == JACOBI_MAX_SWEEPS:
            raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off = {off:.3e}).")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
                row_p = a[p, :].copy()
                a[p, :] = c * row_p - s * a[q, :]
                a[q, :] = s * row_p + c * a[q, :]
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                v[:, p] = c * vec_p - s * v[:, q]
                v[:, q] = s * vec_p + c * v[:, q]
        sweeps += 1
        off = _off_diagonal_norm(a)
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return Spectrum(eigenvalues=eigenvalues[order], residual=off, eigenvectors=v[:, order])


def operator_norm(A: Matrix) -> float:
    """Spectral norm sqrt(lambda_max(A^T A)); the empty matrix has norm 0."""
    if A.rows == 0 or A.cols == 0:
        return 0.0
    # The smaller Gram matrix has the same nonzero spectrum.
    gram = A.entries.T @ A.entries if A.cols <= A.rows else A.entries @ A.entries.T
    spectrum = sym_eigs(Matrix(0.5 * (gram + gram.T)))
    return math.sqrt(max(spectrum.maximum, 0.0))


def hs_norm(A: Matrix) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return math.sqrt(float(np.sum(A.entries ** 2)))


def gram_normalized(T: Matrix, sigma: SubsetMask) -> Matrix:
    """Gram matrix of the normalized columns T e_i / ||T e_i||, i in sigma.

    Raises:
        ZeroColumnError: a column inside sigma is zero.
    """
    block = T.columns(sigma).entries
    norms = np.sqrt(np.sum(block ** 2, axis=0))
    for position, index in enumerate(sigma.indices()):
        if norms[position] <= ZERO_COLUMN_TOL:
            raise ZeroColumnError(index)
    unit = block / norms
    gram = unit.T @ unit
    gram = 0.5 * (gram + gram.T)
    np.fill_diagonal(gram, 1.0)
    return Matrix(gram)


def principal_submatrix(A: Matrix, sigma: SubsetMask) -> Matrix:
    """Q_sigma A Q_sigma restricted to sigma x sigma, indices in ascending order."""
    if not A.is_square:
        raise InvalidInputError(f"Principal submatrix needs a square matrix, got {A.rows} x {A.cols}.")
    if sigma.n != A.rows:
        raise InvalidInputError(f"Subset over {sigma.n} indices does not match a {A.rows} x {A.rows} matrix.")
    idx = list(sigma.indices())
    return Matrix(A.entries[np.ix_(idx, idx)].reshape(len(idx), len(idx)))


def parse_matrix(text: str) -> Matrix:
    """Parses the text format: ``rows cols`` on the first line, then one row per line."""
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if not lines:
        raise InvalidInputError("Matrix text is empty.")
    try:
        rows, cols = (int(token) for token in lines[0])
    except ValueError:
        raise InvalidInputError(f"Matrix header must be 'rows cols', got {' '.join(lines[0])!r}.")
    if rows <= 0 or cols <= 0:
        raise InvalidInputError(f"Matrix dimensions must be positive, got {rows} x {cols}.")
    if rows > MAX_MATRIX_DIM or cols > MAX_MATRIX_DIM:
        raise SizeCapError(f"Matrix shape ({rows}, {cols}) exceeds the {MAX_MATRIX_DIM} x {MAX_MATRIX_DIM} cap.")
    body = lines[1:]
    if len(body) != rows:
        raise InvalidInputError(f"Expected {rows} matrix rows, found {len(body)}.")
    data = np.empty((rows, cols))
    for r, tokens in enumerate(body):
        if len(tokens) != cols:
            raise InvalidInputError(f"Row {r} has {len(tokens)} entries, expected {cols}.")
        for c, token in enumerate(tokens):
            try:
                value = float(token)
            except ValueError:
                raise InvalidInputError(f"Entry ({r}, {c}) = {token!r} is not a number.")
            if not math.isfinite(value):
                raise InvalidInputError(f"Entry ({r}, {c}) = {token!r} is not finite.")
            data[r, c] = value
    return Matrix(data)


def read_matrix(path: Union[str, Path]) -> Matrix:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        logging.error(f"Matrix file {path} not found.")
        raise InvalidInputError(f"Matrix file {path} not found.")
    return parse_matrix(text)


def format_matrix(A: Matrix) -> str:
    lines = [f"{A.rows} {A.cols}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in A.entries]
    return "\n".join(lines) + "\n"


def rayleigh_extremes(T: Matrix, sigma: SubsetMask, coefficients: Optional[Iterable[np.ndarray]] = None
                      ) -> Tuple[float, float]:
    """Min and max of ||sum a_i T e_i||^2 / sum a_i^2 ||T e_i||^2 over the given coefficient vectors.

    Zero columns inside sigma are ignored. Used to cross-check the spectral membership test.
    """
    block = T.columns(sigma).entries
    norms = np.sqrt(np.sum(block ** 2, axis=0))
    keep = norms > ZERO_COLUMN_TOL
    block, norms = block[:, keep], norms[keep]
    if block.shape[1] == 0:
        return 1.0, 1.0
    coeffs = np.atleast_2d(np.array(list(coefficients), dtype=float))[:, keep]
    numerators = np.sum((coeffs @ block.T) ** 2, axis=1)
    denominators = np.sum((coeffs * norms) ** 2, axis=1)
    quotients = numerators[denominators > 0] / denominators[denominators > 0]
    return float(quotients.min()), float(quotients.max())
