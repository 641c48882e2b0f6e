import numpy as np
import pytest

from iso_lab.linalg import Matrix, format_matrix
from iso_lab.testbed import EnsembleSpec, doubling_matrix, generate
from iso_lab.types import EnsembleKind


@pytest.fixture
def identity3() -> Matrix:
    return Matrix.identity(3)


@pytest.fixture
def doubling4() -> Matrix:
    """Columns e0, e1, e1, e2: indices 1 and 2 collide."""
    return Matrix(doubling_matrix(4))


@pytest.fixture
def normalized_doubling4(doubling4) -> Matrix:
    return doubling4.scaled(1.0 / np.sqrt(2.0))


@pytest.fixture
def pair_correlation3():
    def make(rho: float) -> Matrix:
        return generate(EnsembleSpec(EnsembleKind.PAIR_CORRELATION, 3, param=rho))[0]

    return make


@pytest.fixture
def gaussian_operators():
    def make(n: int, count: int, seed: int = 0):
        return generate(EnsembleSpec(EnsembleKind.GAUSSIAN_NORMALIZED, n, seed=seed, count=count))

    return make


@pytest.fixture
def matrix_file(tmp_path):
    """Writes rows in the matrix text format and returns the path."""

    def write(rows, name: str = "matrix.txt") -> str:
        path = tmp_path / name
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        path.write_text(format_matrix(Matrix(rows)))
        return str(path)

    return write
