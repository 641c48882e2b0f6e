"""Deterministic operator ensembles and the empirical constants sweep.

Random ensembles draw from numpy's PCG64 bit generator seeded with
``seed + sample_index``; Gaussian entries come from the Box-Muller
transform of PCG64 doubles, so a (spec, seed) pair pins every matrix
independently of numpy's normal-sampling algorithm.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from iso_lab.constants import BOUNDARY_TOL, ENUMERATION_CAP, MAX_MATRIX_DIM
from iso_lab.errors import InvalidSpecError, IsoLabError
from iso_lab.linalg import Matrix
from iso_lab.prooftrace import normalize_operator, run_pipeline
from iso_lab.select import IndexMeasure, bound_reports, select_exhaustive
from iso_lab.structure import isomorphism_checker, isomorphism_family
from iso_lab.types import EnsembleKind, SubsetMask
from iso_lab.witness import isomorphism_witness, marginal_bound_report, suppression_witness

REPORT_COLUMNS = ["ensemble", "n", "epsilon", "C", "seed", "c_eq2", "c_eq4", "c_eq6", "c_eq9", "status"]
CONSTANT_COLUMNS = ["c_eq2", "c_eq4", "c_eq6", "c_eq9"]


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    n: int
    seed: int = 0
    count: int = 1
    param: Optional[float] = None  # rho for the correlation kinds, r for rank_deficient

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_MATRIX_DIM:
            raise InvalidSpecError(f"Ensemble dimension must lie in [1, {MAX_MATRIX_DIM}], got {self.n}.")
        if self.count < 1:
            raise InvalidSpecError(f"Sample count must be positive, got {self.count}.")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpecError(f"Seed must be a 64-bit unsigned integer, got {self.seed}.")
        if self.kind in (EnsembleKind.PAIR_CORRELATION, EnsembleKind.UNIFORM_CORRELATION):
            if self.param is None or not abs(self.param) < 1.0:
                raise InvalidSpecError(f"{self.kind.value} needs |rho| < 1, got {self.param}.")
            if self.kind is EnsembleKind.PAIR_CORRELATION and self.n < 2:
                raise InvalidSpecError("pair_correlation needs n >= 2.")
            if self.kind is EnsembleKind.UNIFORM_CORRELATION and self.n > 1 and self.param <= -1.0 / (self.n - 1):
                raise InvalidSpecError(f"uniform_correlation needs rho > -1/(n-1), got {self.param}.")
        if self.kind is EnsembleKind.RANK_DEFICIENT:
            if self.param is None or int(self.param) != self.param or not 1 <= self.param < self.n:
                raise InvalidSpecError(f"rank_deficient needs an integer rank 1 <= r < n, got {self.param}.")

    @property
    def label(self) -> str:
        if self.param is None:
            return self.kind.value
        param = int(self.param) if self.kind is EnsembleKind.RANK_DEFICIENT else self.param
        return f"{self.kind.value}({param})"

    def sample_seeds(self) -> List[int]:
        return [(self.seed + k) % 2 ** 64 for k in range(self.count)]


def _uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    # (0, 1]: keeps log() finite in Box-Muller.
    return 1.0 - rng.random(size)


def gaussian(rng: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
    """Standard normal entries by the Box-Muller transform of uniform doubles."""
    size = shape[0] * shape[1]
    pairs = (size + 1) // 2
    u1, u2 = _uniforms(rng, pairs), _uniforms(rng, pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    values = np.concatenate([radius * np.cos(2.0 * math.pi * u2), radius * np.sin(2.0 * math.pi * u2)])
    return values[:size].reshape(shape)


def _unit_columns(a: np.ndarray) -> np.ndarray:
    return a / np.sqrt(np.sum(a ** 2, axis=0))


def doubling_matrix(n: int) -> np.ndarray:
    """Column j (zero-based) is e_{(j+1)//2}: e_1, e_2, e_2, e_3, e_3, ... in one-based terms."""
    a = np.zeros((n, n))
    for j in range(n):
        a[(j + 1) // 2, j] = 1.0
    return a


def doubling_colliding_pairs(n: int) -> List[Tuple[int, int]]:
    """Index pairs sharing a column of the doubling operator: (1, 2), (3, 4), ... below n."""
    return [(j, j + 1) for j in range(1, n - 1, 2)]


def _sample(spec: EnsembleSpec, seed: int) -> Matrix:
    n = spec.n
    if spec.kind is EnsembleKind.IDENTITY:
        return Matrix(np.eye(n))
    if spec.kind is EnsembleKind.DOUBLING:
        return Matrix(doubling_matrix(n))
    if spec.kind is EnsembleKind.PAIR_CORRELATION:
        rho = spec.param
        a = np.eye(n)
        a[:2, 1] = [rho, math.sqrt(1.0 - rho * rho)]
        return Matrix(a)
    if spec.kind is EnsembleKind.UNIFORM_CORRELATION:
        rho = spec.param
        gram = (1.0 - rho) * np.eye(n) + rho * np.ones((n, n))
        # Columns of L^T have Gram matrix L L^T.
        return Matrix(np.linalg.cholesky(gram).T)
    rng = np.random.Generator(np.random.PCG64(seed))
    if spec.kind is EnsembleKind.GAUSSIAN_NORMALIZED:
        return Matrix(_unit_columns(gaussian(rng, (n, n))))
    if spec.kind is EnsembleKind.RANK_DEFICIENT:
        r = int(spec.param)
        return Matrix(_unit_columns(gaussian(rng, (n, r)) @ gaussian(rng, (r, n))))
    raise InvalidSpecError(f"Unknown ensemble kind {spec.kind}.")


def generate(spec: EnsembleSpec) -> List[Matrix]:
    """``spec.count`` matrices; sample k of a random kind uses seed ``spec.seed + k``."""
    return [_sample(spec, seed) for seed in spec.sample_seeds()]


@dataclass(frozen=True)
class RateEstimate:
    estimate: float
    stderr: float
    trials: int
    exact: Optional[float]
    analytic: float

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "trials": self.trials,
            "exact": self.exact,
            "analytic": self.analytic,
        }


def doubling_rate(n: int) -> float:
    """(3/4)^k for k colliding pairs: a uniform subset must avoid each pair."""
    return 0.75 ** len(doubling_colliding_pairs(n))


def random_subset_rate(spec: EnsembleSpec, epsilon: float, trials: int, seed: int,
                       tol: float = BOUNDARY_TOL) -> RateEstimate:
    """Monte-Carlo probability that a uniform random subset is a set of eps-isomorphism."""
    if spec.kind is not EnsembleKind.DOUBLING:
        raise InvalidSpecError(f"random_subset_rate is defined for the doubling ensemble, got {spec.kind.value}.")
    if trials < 1:
        raise InvalidSpecError(f"trials must be positive, got {trials}.")
    T = generate(spec)[0]
    n = T.cols
    rng = np.random.Generator(np.random.PCG64(seed))
    if n <= ENUMERATION_CAP:
        family = isomorphism_family(T, epsilon, tol)
        exact = family.member_count / 2 ** n
        is_member = family.__contains__
    else:
        exact = None
        is_member = isomorphism_checker(T, epsilon, tol)
    draws = rng.random((trials, n)) < 0.5
    hits = 0
    for row in draws:
        if is_member(SubsetMask.from_indices(np.flatnonzero(row).tolist(), n)):
            hits += 1
    estimate = hits / trials
    stderr = math.sqrt(max(estimate * (1.0 - estimate), 0.0) / trials)
    logging.info(f"Random subset rate for doubling n={n}: {estimate:.4f} +- {stderr:.4f} (exact {exact}).")
    return RateEstimate(estimate, stderr, trials, exact, doubling_rate(n))


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Per-sample empirical constants, one row per (ensemble sample, eps, C)."""

    rows: pd.DataFrame

    def to_csv(self) -> str:
        return self.rows.to_csv(index=False, float_format="%.12g", lineterminator="\n")

    def summary(self) -> pd.DataFrame:
        """min and median of every constant per (ensemble, n, eps, C) over the successful samples."""
        ok = self.rows[self.rows["status"] == "ok"]
        grouped = ok.groupby(["ensemble", "n", "epsilon", "C"], sort=True)[CONSTANT_COLUMNS]
        summary = grouped.agg(["min", "median"])
        summary.columns = [f"{name}_{stat}" for name, stat in summary.columns]
        return summary.reset_index()

    def plot_data(self) -> pd.DataFrame:
        """Median of every constant per (ensemble, eps), over samples and C values."""
        ok = self.rows[self.rows["status"] == "ok"]
        return ok.groupby(["ensemble", "epsilon"], sort=True)[CONSTANT_COLUMNS].median().reset_index()

    def to_tsv(self) -> str:
        return self.plot_data().to_csv(sep="\t", index=False, float_format="%.12g", lineterminator="\n")


def _constants_row(T: Matrix, epsilon: float, c_bound: float, tol: float) -> dict:
    row = {}
    witness = isomorphism_witness(T, epsilon, tol)
    row["c_eq2"] = marginal_bound_report(witness, epsilon)["empirical_c"]
    normalized, _ = normalize_operator(T)
    mu = IndexMeasure.counting(T.cols)
    selection = select_exhaustive(normalized, epsilon, mu, tol)
    reports = bound_reports(normalized, epsilon, mu, selection, tol)
    row["c_eq4"] = reports["eq4"]["ratio"]
    row["c_eq6"] = reports["eq6"]["ratio"]
    trace = run_pipeline(T, epsilon, mu, c_bound, tol)
    row["c_eq9"] = None
    if trace.s_norm:
        delta = epsilon / trace.s_norm
        row["c_eq9"] = marginal_bound_report(suppression_witness(trace.s_matrix, delta, tol), delta)["empirical_c"]
    row["status"] = "trace-failed" if trace.failed else "ok"
    return row


def estimate_constants(specs: Sequence[EnsembleSpec], epsilons: Iterable[float], c_values: Iterable[float],
                       tol: float = BOUNDARY_TOL) -> EstimateReport:
    """Runs witness, exhaustive selection and the proof trace on every sample and grid point.

    A row whose computation raises is kept with status ``failed:<ErrorName>``.
    """
    epsilons, c_values = list(epsilons), list(c_values)
    records = []
    for spec in specs:
        for seed, T in zip(spec.sample_seeds(), generate(spec)):
            for epsilon in epsilons:
                for c_bound in c_values:
                    record = {"ensemble": spec.label, "n": spec.n, "epsilon": epsilon, "C": c_bound, "seed": seed}
                    try:
                        record.update(_constants_row(T, epsilon, c_bound, tol))
                    except IsoLabError as e:
                        logging.error(f"Estimate row {spec.label} seed={seed} eps={epsilon} C={c_bound} failed: {e}")
                        record.update({name: None for name in CONSTANT_COLUMNS})
                        record["status"] = f"failed:{type(e).__name__}"
                    records.append(record)
    rows = pd.DataFrame.from_records(records, columns=REPORT_COLUMNS)
    rows[CONSTANT_COLUMNS] = rows[CONSTANT_COLUMNS].astype(float)
    logging.info(f"Estimated constants over {len(rows)} rows ({int((rows['status'] == 'ok').sum())} ok).")
    return EstimateReport(rows)
