import math

import numpy as np
import pytest

from iso_lab import testbed
from iso_lab.errors import InvalidSpecError, NoCertificateError
from iso_lab.testbed import (
    CONSTANT_COLUMNS,
    REPORT_COLUMNS,
    EnsembleSpec,
    doubling_colliding_pairs,
    doubling_matrix,
    doubling_rate,
    estimate_constants,
    gaussian,
    generate,
    random_subset_rate,
)
from iso_lab.types import EnsembleKind


def test_doubling_matrix_columns():
    np.testing.assert_array_equal(
        doubling_matrix(4), [[1, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, 1], [0, 0, 0, 0]]
    )


@pytest.mark.parametrize("n, pairs", [(1, []), (2, []), (3, [(1, 2)]), (4, [(1, 2)]), (6, [(1, 2), (3, 4)])])
def test_colliding_pairs(n, pairs):
    assert doubling_colliding_pairs(n) == pairs


def test_doubling_rate():
    assert doubling_rate(4) == 0.75
    assert doubling_rate(8) == pytest.approx(0.75 ** 3)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=EnsembleKind.IDENTITY, n=0),
        dict(kind=EnsembleKind.IDENTITY, n=65),
        dict(kind=EnsembleKind.IDENTITY, n=3, count=0),
        dict(kind=EnsembleKind.IDENTITY, n=3, seed=-1),
        dict(kind=EnsembleKind.PAIR_CORRELATION, n=3),
        dict(kind=EnsembleKind.PAIR_CORRELATION, n=3, param=1.0),
        dict(kind=EnsembleKind.PAIR_CORRELATION, n=1, param=0.5),
        dict(kind=EnsembleKind.UNIFORM_CORRELATION, n=4, param=-0.5),
        dict(kind=EnsembleKind.RANK_DEFICIENT, n=4, param=4),
        dict(kind=EnsembleKind.RANK_DEFICIENT, n=4, param=1.5),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpecError):
        EnsembleSpec(**kwargs)


def test_random_ensembles_are_reproducible():
    spec = EnsembleSpec(EnsembleKind.GAUSSIAN_NORMALIZED, 5, seed=7, count=3)
    first, second = generate(spec), generate(spec)
    assert first == second
    assert first[2] == generate(EnsembleSpec(EnsembleKind.GAUSSIAN_NORMALIZED, 5, seed=9))[0]
    assert first[0] != first[1]


def test_gaussian_moments():
    values = gaussian(np.random.Generator(np.random.PCG64(0)), (200, 101))
    assert values.shape == (200, 101)
    assert abs(values.mean()) < 0.02
    assert abs(values.std() - 1.0) < 0.02


@pytest.mark.parametrize(
    "spec",
    [
        EnsembleSpec(EnsembleKind.GAUSSIAN_NORMALIZED, 6, seed=3),
        EnsembleSpec(EnsembleKind.RANK_DEFICIENT, 6, seed=3, param=2),
        EnsembleSpec(EnsembleKind.PAIR_CORRELATION, 6, param=-0.4),
        EnsembleSpec(EnsembleKind.UNIFORM_CORRELATION, 6, param=0.3),
    ],
)
def test_generated_columns_are_unit_vectors(spec):
    T = generate(spec)[0]
    np.testing.assert_allclose(T.column_norms(), 1.0, atol=1e-12)


def test_rank_deficient_rank():
    T = generate(EnsembleSpec(EnsembleKind.RANK_DEFICIENT, 8, seed=1, param=3))[0]
    assert np.linalg.matrix_rank(T.entries) == 3


def test_uniform_correlation_gram():
    T = generate(EnsembleSpec(EnsembleKind.UNIFORM_CORRELATION, 4, param=0.25))[0]
    expected = 0.75 * np.eye(4) + 0.25 * np.ones((4, 4))
    np.testing.assert_allclose(T.entries.T @ T.entries, expected, atol=1e-12)


def test_pair_correlation_gram():
    T = generate(EnsembleSpec(EnsembleKind.PAIR_CORRELATION, 4, param=0.6))[0]
    gram = T.entries.T @ T.entries
    assert gram[0, 1] == pytest.approx(0.6)
    np.testing.assert_allclose(gram[2:, 2:], np.eye(2))


@pytest.mark.parametrize("n", [4, 6, 8])
def test_random_subset_rate_on_doubling(n):
    estimate = random_subset_rate(EnsembleSpec(EnsembleKind.DOUBLING, n), 0.5, trials=4000, seed=2)
    assert estimate.exact == pytest.approx(doubling_rate(n))
    assert estimate.analytic == pytest.approx(doubling_rate(n))
    assert abs(estimate.estimate - estimate.exact) <= 5 * math.sqrt(estimate.exact * (1 - estimate.exact) / 4000)


def test_random_subset_rate_is_seeded():
    spec = EnsembleSpec(EnsembleKind.DOUBLING, 6)
    assert random_subset_rate(spec, 0.5, 500, 3) == random_subset_rate(spec, 0.5, 500, 3)


def test_random_subset_rate_rejects_other_ensembles():
    with pytest.raises(InvalidSpecError):
        random_subset_rate(EnsembleSpec(EnsembleKind.IDENTITY, 4), 0.5, 100, 0)
    with pytest.raises(InvalidSpecError):
        random_subset_rate(EnsembleSpec(EnsembleKind.DOUBLING, 4), 0.5, 0, 0)


def test_estimate_on_forced_fixtures():
    specs = [EnsembleSpec(EnsembleKind.IDENTITY, 3), EnsembleSpec(EnsembleKind.DOUBLING, 4)]
    report = estimate_constants(specs, [0.5], [2.0])
    rows = report.rows
    assert list(rows.columns) == REPORT_COLUMNS
    identity, doubling = rows.iloc[0], rows.iloc[1]
    assert identity["status"] == "ok" and doubling["status"] == "ok"
    assert identity["c_eq2"] == pytest.approx(4.0)
    assert identity["c_eq4"] == pytest.approx(4.0)
    assert identity["c_eq6"] == pytest.approx(4.0)
    assert math.isnan(identity["c_eq9"])
    assert doubling["c_eq2"] == pytest.approx(2.0)
    assert doubling["c_eq4"] == pytest.approx(6.0)
    assert doubling["c_eq6"] == pytest.approx(6.0)
    assert doubling["c_eq9"] == pytest.approx(2.0)


def test_estimate_constants_are_positive_on_gaussian_samples():
    spec = EnsembleSpec(EnsembleKind.GAUSSIAN_NORMALIZED, 6, seed=0, count=4)
    report = estimate_constants([spec], [0.2, 0.5, 0.8], [2.0])
    assert (report.rows["status"] == "ok").all()
    assert (report.rows["c_eq2"] > 0).all()
    summary = report.summary()
    assert list(summary["epsilon"]) == [0.2, 0.5, 0.8]
    assert "c_eq2_min" in summary.columns and "c_eq2_median" in summary.columns


def test_estimate_csv_is_byte_identical():
    spec = EnsembleSpec(EnsembleKind.GAUSSIAN_NORMALIZED, 5, seed=4, count=2)
    first = estimate_constants([spec], [0.5], [1.5, 2.0]).to_csv()
    second = estimate_constants([spec], [0.5], [1.5, 2.0]).to_csv()
    assert first == second
    assert first.splitlines()[0] == ",".join(REPORT_COLUMNS)
    assert len(first.splitlines()) == 1 + 4


def test_estimate_keeps_failed_rows(monkeypatch):
    def broken(*args, **kwargs):
        raise NoCertificateError("no certificate")

    monkeypatch.setattr(testbed, "isomorphism_witness", broken)
    report = estimate_constants([EnsembleSpec(EnsembleKind.IDENTITY, 3)], [0.5], [2.0])
    row = report.rows.iloc[0]
    assert row["status"] == "failed:NoCertificateError"
    assert all(math.isnan(row[name]) for name in CONSTANT_COLUMNS)


def test_plot_data_tsv():
    report = estimate_constants([EnsembleSpec(EnsembleKind.DOUBLING, 4)], [0.3, 0.5], [2.0])
    lines = report.to_tsv().splitlines()
    assert lines[0].split("\t") == ["ensemble", "epsilon"] + CONSTANT_COLUMNS
    assert len(lines) == 3
