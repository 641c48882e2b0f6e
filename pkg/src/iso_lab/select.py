"""Large sets of isomorphism measured by an arbitrary index measure mu."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from iso_lab.constants import (
    BOUNDARY_TOL,
    ENUMERATION_CAP,
    NORM_ONE_TOL,
    PROBABILITY_TOL,
    UNIT_COLUMN_TOL,
    ZERO_COLUMN_TOL,
)
from iso_lab.errors import DegenerateInputError, InvalidInputError, InvalidParameterError, SizeCapError
from iso_lab.linalg import Matrix, gram_normalized, hs_norm, operator_norm, sym_eigs
from iso_lab.structure import IsoFamily, isomorphism_checker, isomorphism_family
from iso_lab.types import MeasureKind, SelectionMethod, SubsetMask


@dataclass(frozen=True, eq=False)
class IndexMeasure:
    """Nonnegative weight mu_i per basis index."""

    weights: np.ndarray
    kind: MeasureKind = MeasureKind.GENERAL

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidParameterError("Measure weights must be finite and nonnegative.")
        if self.kind is MeasureKind.PROBABILITY and abs(w.sum() - 1.0) > PROBABILITY_TOL:
            raise InvalidParameterError(f"Probability weights sum to {w.sum()!r}, not 1.")
        if self.kind is MeasureKind.COUNTING and not np.all(w == 1.0):
            raise InvalidParameterError("Counting measure must have unit weights.")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def counting(cls, n: int) -> "IndexMeasure":
        return cls(np.ones(n), MeasureKind.COUNTING)

    @classmethod
    def probability(cls, weights: Sequence[float]) -> "IndexMeasure":
        w = np.asarray(weights, dtype=float)
        if w.sum() <= 0:
            raise DegenerateInputError("Cannot normalize a zero measure to a probability.")
        return cls(w / w.sum(), MeasureKind.PROBABILITY)

    @property
    def n(self) -> int:
        return self.weights.size

    def value(self, sigma: SubsetMask) -> float:
        return float(sum(self.weights[i] for i in sigma))

    def scaled(self, factor: float) -> "IndexMeasure":
        kind = MeasureKind.GENERAL if factor != 1.0 else self.kind
        return IndexMeasure(self.weights * factor, kind)

    def restricted(self, positions: Sequence[int]) -> "IndexMeasure":
        return IndexMeasure(self.weights[list(positions)], MeasureKind.GENERAL)


@dataclass(frozen=True)
class SelectionResult:
    chosen: SubsetMask
    mu_value: float
    bound_rhs: float
    empirical_c: Optional[float]
    method: SelectionMethod
    reports: Dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "chosen": self.chosen.to_list(),
            "mu_value": self.mu_value,
            "bound_rhs": self.bound_rhs,
            "empirical_c": self.empirical_c,
            "reports": self.reports,
        }


def _check_measure(T: Matrix, mu: IndexMeasure) -> None:
    if mu.n != T.cols:
        raise InvalidInputError(f"Measure has {mu.n} weights but the operator has {T.cols} columns.")


def _check_norm_one(T: Matrix) -> None:
    norm = operator_norm(T)
    if norm > 1.0 + NORM_ONE_TOL:
        raise InvalidParameterError(f"Operator norm {norm:.6g} exceeds 1; normalize the operator first.")


def bound_rhs(T: Matrix, epsilon: float, mu: IndexMeasure) -> float:
    """eps^2 * sum_i mu_i ||T e_i||^2."""
    return float(epsilon ** 2 * np.dot(mu.weights, T.column_norms() ** 2))


def selection_result(T: Matrix, epsilon: float, mu: IndexMeasure, chosen: SubsetMask,
            method: SelectionMethod) -> SelectionResult:
    value = mu.value(chosen)
    rhs = bound_rhs(T, epsilon, mu)
    return SelectionResult(
        chosen=chosen,
        mu_value=value,
        bound_rhs=rhs,
        empirical_c=value / rhs if rhs > 0 else None,
        method=method,
    )


def best_maximal_set(family: IsoFamily, mu: IndexMeasure) -> SubsetMask:
    """Maximal set of largest mu-measure; ties go to the lexicographically smallest set."""
    best, best_value = None, 0.0
    for sigma in family.maximal_sets:  # already in lexicographic order
        value = mu.value(sigma)
        if best is None or value > best_value + PROBABILITY_TOL * max(1.0, abs(best_value)):
            best, best_value = sigma, value
    return best


def select_exhaustive(T: Matrix, epsilon: float, mu: IndexMeasure, tol: float = BOUNDARY_TOL,
                      family: Optional[IsoFamily] = None) -> SelectionResult:
    """Set of eps-isomorphism maximizing mu over the enumerated structure.

    Raises:
        SizeCapError: more than 2^24 subsets.
        InvalidParameterError: ||T|| > 1.
    """
    if T.cols > ENUMERATION_CAP:
        raise SizeCapError(f"Exhaustive selection needs n <= {ENUMERATION_CAP}, got {T.cols}.")
    _check_measure(T, mu)
    _check_norm_one(T)
    family = family if family is not None else isomorphism_family(T, epsilon, tol)
    chosen = best_maximal_set(family, mu)
    return selection_result(T, epsilon, mu, chosen, SelectionMethod.EXHAUSTIVE)


def select_greedy(T: Matrix, epsilon: float, mu: IndexMeasure, tol: float = BOUNDARY_TOL) -> SelectionResult:
    """Greedy maximal set: indices by decreasing mu_i (ties: lowest index), kept when membership survives.

    One pass suffices: an index rejected against a set is rejected against
    every superset of it, by downward closure.
    """
    _check_measure(T, mu)
    _check_norm_one(T)
    check = isomorphism_checker(T, epsilon, tol)
    chosen = SubsetMask.empty(T.cols)
    for i in sorted(range(T.cols), key=lambda i: (-mu.weights[i], i)):
        candidate = chosen.with_index(i)
        if check(candidate):
            chosen = candidate
    return selection_result(T, epsilon, mu, chosen, SelectionMethod.GREEDY)


def mu_to_lambda(mu: IndexMeasure, T: Matrix) -> IndexMeasure:
    """lambda_i = mu_i ||T e_i||^2 / sum_j mu_j ||T e_j||^2."""
    _check_measure(T, mu)
    weighted = mu.weights * T.column_norms() ** 2
    total = weighted.sum()
    if total <= 0:
        raise DegenerateInputError("sum_i mu_i ||T e_i||^2 vanishes; lambda is undefined.")
    return IndexMeasure(weighted / total, MeasureKind.PROBABILITY)


def lambda_to_mu(lam: IndexMeasure, T: Matrix) -> IndexMeasure:
    """mu_i = lambda_i ||T e_i||^-2 (and 0 where lambda_i = 0)."""
    _check_measure(T, lam)
    squared = T.column_norms() ** 2
    mu = np.zeros(lam.n)
    for i in range(lam.n):
        if lam.weights[i] > 0:
            if squared[i] <= ZERO_COLUMN_TOL ** 2:
                raise DegenerateInputError(f"lambda_{i} > 0 on the zero column {i}.")
            mu[i] = lam.weights[i] / squared[i]
    return IndexMeasure(mu, MeasureKind.GENERAL)


def has_unit_columns(T: Matrix) -> bool:
    return bool(np.all(np.abs(T.column_norms() - 1.0) <= UNIT_COLUMN_TOL))


def _not_applicable(reason: str) -> dict:
    return {"applicable": False, "ratio": None, "reason": reason}


def bound_reports(T: Matrix, epsilon: float, mu: IndexMeasure, result: SelectionResult,
                  tol: float = BOUNDARY_TOL) -> Dict[str, dict]:
    """Ratios of the selected set against the lower bounds it is supposed to beat.

    eq4/eq6 are norm-one statements and are evaluated on T / ||T||; the
    set-of-isomorphism property is scale invariant. thm14/cor15 are stated for
    unit-column T and use ||T|| as given.
    """
    _check_measure(T, mu)
    norm = operator_norm(T)
    if norm == 0.0:
        reason = "zero operator"
        return {key: _not_applicable(reason) for key in ("eq4", "eq6", "thm14", "cor15")}
    reports: Dict[str, dict] = {}
    sigma = result.chosen
    rhs = bound_rhs(T, epsilon, mu) / norm ** 2
    reports["eq4"] = (
        {"applicable": True, "ratio": mu.value(sigma) / rhs, "bound_rhs": rhs}
        if rhs > 0 else _not_applicable("sum_i mu_i ||T e_i||^2 = 0")
    )
    hs = hs_norm(T) / norm
    if mu.kind is MeasureKind.COUNTING:
        reports["eq6"] = {"applicable": True, "ratio": len(sigma) / (epsilon ** 2 * hs ** 2), "hs_norm": hs}
    else:
        reports["eq6"] = _not_applicable("measure is not counting")

    if has_unit_columns(T):
        spectrum = sym_eigs(gram_normalized(T, sigma)) if len(sigma) else None
        lowest = float(np.sqrt(max(spectrum.minimum, 0.0))) if spectrum else 1.0
        highest = float(np.sqrt(max(spectrum.maximum, 0.0))) if spectrum else 1.0
        reports["cor15"] = {
            "applicable": True,
            "ratio": mu.value(sigma) * norm ** 2 / epsilon ** 2,
            "holds": bool(lowest >= 1.0 - epsilon - tol and highest <= 1.0 + epsilon + tol),
            "singular_range": [lowest, highest],
        }
        if mu.kind is MeasureKind.COUNTING:
            reports["thm14"] = {"applicable": True, "ratio": len(sigma) * norm ** 2 / T.cols}
        else:
            reports["thm14"] = _not_applicable("measure is not counting")
    else:
        reports["cor15"] = _not_applicable("columns are not unit vectors")
        reports["thm14"] = _not_applicable("columns are not unit vectors")
    return reports


def with_reports(T: Matrix, epsilon: float, mu: IndexMeasure, result: SelectionResult,
                 tol: float = BOUNDARY_TOL) -> SelectionResult:
    reports = bound_reports(T, epsilon, mu, result, tol)
    logging.info(f"Selected {result.chosen} by {result.method.value}: mu = {result.mu_value:.6g}, "
                 f"eq4 ratio = {reports['eq4']['ratio']}.")
    return SelectionResult(result.chosen, result.mu_value, result.bound_rhs, result.empirical_c,
                           result.method, reports)
