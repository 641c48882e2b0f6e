"""Executable trace of the two-step selection: norm suppression, then restricted invertibility.

Pipeline: scale T to norm one, normalize its columns (T1), pick a large
sigma1 on which ||T1 Q_sigma1|| <= C, form the zero-diagonal S = T2^T T2 - I
on sigma1, and pick a large sigma2 inside sigma1 with
||Q_sigma2 S Q_sigma2|| <= delta ||S||, delta = eps / ||S||. Every
inequality used along the way is re-evaluated and stored in the ledger;
the final set is re-checked against the original operator independently.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from iso_lab.constants import BOUNDARY_TOL, DEFAULT_C, ENUMERATION_CAP, NORM_ONE_TOL, ZERO_DIAGONAL_TOL
from iso_lab.errors import (
    DegenerateInputError,
    DiagonalViolationError,
    InternalInvariantError,
    InvalidParameterError,
    SizeCapError,
    TraceFailedError,
)
from iso_lab.linalg import Matrix, operator_norm, principal_submatrix, sym_eigs
from iso_lab.select import IndexMeasure, best_maximal_set
from iso_lab.structure import (
    check_isomorphism,
    norm_bound_checker,
    norm_bound_family,
    suppression_family,
    zero_columns,
)
from iso_lab.types import SubsetMask


@dataclass(frozen=True)
class LedgerCheck:
    label: str
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return {"label": self.label, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


@dataclass(frozen=True)
class StepResult:
    chosen: SubsetMask
    mu_value: float
    ratio: Optional[float]  # mu(chosen) / sum_i mu_i w_i
    exhaustive: bool


@dataclass(eq=False)
class ProofTrace:
    operator: Matrix
    epsilon: float
    c_bound: float
    scale: float = 1.0
    free_indices: Optional[SubsetMask] = None
    sigma1: Optional[SubsetMask] = None
    szarek_ratio: Optional[float] = None
    t2_norm: Optional[float] = None
    s_matrix: Optional[Matrix] = None
    s_norm: Optional[float] = None
    delta: Optional[float] = None
    sigma2: Optional[SubsetMask] = None
    mu_value: Optional[float] = None
    eq4_ratio: Optional[float] = None
    short_circuited: bool = False
    checks: List[LedgerCheck] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(not check.passed for check in self.checks)

    def record(self, label: str, lhs: float, rhs: float, passed: bool) -> None:
        check = LedgerCheck(label, float(lhs), float(rhs), bool(passed))
        self.checks.append(check)
        if not check.passed:
            logging.error(f"Ledger check {label} failed: lhs = {lhs!r}, rhs = {rhs!r}.")

    def raise_if_failed(self) -> "ProofTrace":
        if self.failed:
            raise TraceFailedError(self)
        return self

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "C": self.c_bound,
            "scale": self.scale,
            "free_indices": self.free_indices.to_list() if self.free_indices is not None else [],
            "sigma1": self.sigma1.to_list() if self.sigma1 is not None else None,
            "szarek_ratio": self.szarek_ratio,
            "T2_norm": self.t2_norm,
            "S": self.s_matrix.to_list() if self.s_matrix is not None else None,
            "S_norm": self.s_norm,
            "delta": self.delta,
            "sigma2": self.sigma2.to_list() if self.sigma2 is not None else None,
            "mu_value": self.mu_value,
            "eq4_ratio": self.eq4_ratio,
            "short_circuited": self.short_circuited,
            "failed": self.failed,
            "checks": [check.to_dict() for check in self.checks],
        }


def normalize_operator(T: Matrix) -> Tuple[Matrix, float]:
    """T / ||T|| and the applied scale; operators already of norm one are returned unchanged.

    Raises:
        DegenerateInputError: T = 0.
    """
    norm = operator_norm(T)
    if norm == 0.0:
        raise DegenerateInputError("Cannot normalize the zero operator.")
    if abs(norm - 1.0) <= NORM_ONE_TOL:
        return T, 1.0
    scale = 1.0 / norm
    logging.warning(f"Operator norm is {norm:.6g}; rescaling by {scale:.6g} to norm one.")
    return T.scaled(scale), scale


def normalize_columns(T: Matrix) -> Tuple[Matrix, SubsetMask]:
    """T1 e_i = T e_i / ||T e_i||; zero columns are carried through unchanged and returned as a flag set."""
    zeros = zero_columns(T)
    norms = T.column_norms()
    divisors = np.where([i in zeros for i in range(T.cols)], 1.0, norms)
    if zeros.bits:
        logging.warning(f"Zero columns {zeros} are left unnormalized.")
    return Matrix(T.entries / divisors), zeros


def _best_step(family, mu: IndexMeasure, weights: Optional[np.ndarray], exhaustive: bool) -> StepResult:
    chosen = best_maximal_set(family, mu)
    return _step(chosen, mu, weights, exhaustive)


def _step(chosen: SubsetMask, mu: IndexMeasure, weights: Optional[np.ndarray], exhaustive: bool) -> StepResult:
    value = mu.value(chosen)
    total = float(np.dot(mu.weights, weights)) if weights is not None else 0.0
    return StepResult(chosen, value, value / total if total > 0 else None, exhaustive)


def szarek_step(T1: Matrix, mu: IndexMeasure, c_bound: float, weights: Optional[np.ndarray] = None,
                candidates: Optional[SubsetMask] = None, tol: float = BOUNDARY_TOL) -> StepResult:
    """Largest mu(sigma) subject to ||T1 Q_sigma|| <= C.

    Exhaustive over the norm-bounded family for at most 24 candidates,
    greedy (decreasing mu_i, lowest index first) above that. ``weights``
    are the w_i = ||T e_i||^2 of the norm-one operator the ratio is measured
    against; they default to the column norms of T1.
    """
    if not c_bound > 1.0:
        raise InvalidParameterError(f"C must exceed 1, got {c_bound}.")
    n = T1.cols
    if candidates is None:
        candidates = zero_columns(T1).complement()
    weights = weights if weights is not None else T1.column_norms() ** 2
    if len(candidates) <= ENUMERATION_CAP:
        family = norm_bound_family(T1, c_bound, candidates, tol)
        step = _best_step(family, mu, weights, exhaustive=True)
    else:
        check = norm_bound_checker(T1, c_bound, tol)
        chosen = SubsetMask.empty(n)
        for i in sorted(candidates, key=lambda i: (-mu.weights[i], i)):
            if check(chosen.with_index(i)):
                chosen = chosen.with_index(i)
        step = _step(chosen, mu, weights, exhaustive=False)
    if len(candidates) and not len(step.chosen):
        raise InternalInvariantError("No admissible nonempty set although singletons have norm 1 < C.")
    return step


def diagonal_residual(T2: Matrix) -> float:
    """max_i |<(T2^T T2 - I) e_i, e_i>| = max_i | ||T2 e_i||^2 - 1 |."""
    if T2.cols == 0:
        return 0.0
    return float(np.abs(np.sum(T2.entries ** 2, axis=0) - 1.0).max())


def build_zero_diag(T2: Matrix) -> Matrix:
    """S = T2^T T2 - I over the columns of T2, diagonal cleared after the check.

    Raises:
        DiagonalViolationError: a column of T2 is not a unit vector.
    """
    gram = T2.entries.T @ T2.entries
    s = 0.5 * (gram + gram.T) - np.eye(T2.cols)
    diagonal = np.abs(np.diag(s))
    if diagonal.size and diagonal.max() > ZERO_DIAGONAL_TOL:
        index = int(np.argmax(diagonal))
        raise DiagonalViolationError(index, float(s[index, index]))
    np.fill_diagonal(s, 0.0)
    return Matrix(s)


def bt_step(S: Matrix, delta: float, mu: IndexMeasure, tol: float = BOUNDARY_TOL) -> StepResult:
    """Largest mu(sigma') over the suppression family of S at level delta.

    Raises:
        SizeCapError: S larger than the enumeration cap.
    """
    if S.rows > ENUMERATION_CAP:
        raise SizeCapError(f"Suppression step needs at most {ENUMERATION_CAP} indices, got {S.rows}.")
    family = suppression_family(S, delta, tol)
    return _best_step(family, mu, None, exhaustive=True)


def run_pipeline(T: Matrix, epsilon: float, mu: IndexMeasure, c_bound: float = DEFAULT_C,
                 tol: float = BOUNDARY_TOL) -> ProofTrace:
    """Runs the full selection and returns the trace; failures are recorded, never hidden."""
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}.")
    if not c_bound > 1.0:
        raise InvalidParameterError(f"C must exceed 1, got {c_bound}.")
    if mu.n != T.cols:
        raise InvalidParameterError(f"Measure has {mu.n} weights but the operator has {T.cols} columns.")
    trace = ProofTrace(operator=T, epsilon=epsilon, c_bound=c_bound)

    normalized, trace.scale = normalize_operator(T)
    weights = normalized.column_norms() ** 2
    t1, zeros = normalize_columns(normalized)
    trace.free_indices = zeros
    n = T.cols

    step1 = szarek_step(t1, mu, c_bound, weights, zeros.complement(), tol)
    sigma1 = step1.chosen
    trace.sigma1, trace.szarek_ratio = sigma1, step1.ratio
    trace.record("eq7", step1.ratio if step1.ratio is not None else 0.0, 0.0,
                 step1.ratio is None or step1.ratio > 0.0)

    t2 = t1.columns(sigma1)
    trace.t2_norm = operator_norm(t2)
    trace.record("eq10", trace.t2_norm, c_bound, trace.t2_norm <= c_bound + tol)

    residual = diagonal_residual(t2)
    trace.record("eq11", residual, ZERO_DIAGONAL_TOL, residual <= ZERO_DIAGONAL_TOL)
    if residual > ZERO_DIAGONAL_TOL:
        logging.error(f"Columns of T2 are not unit vectors (residual {residual:.3e}); stopping the trace.")
        return trace
    s = build_zero_diag(t2)
    trace.s_matrix = s
    trace.s_norm = operator_norm(s)
    trace.record("eq11-norm", trace.s_norm, trace.t2_norm ** 2 + 1.0, trace.s_norm <= trace.t2_norm ** 2 + 1.0 + tol)

    positions = sigma1.indices()
    if trace.s_norm <= epsilon:
        # |<S f, f>| <= ||S|| <= eps for unit f in span(sigma1) already.
        trace.short_circuited = True
        local = SubsetMask.full(len(positions))
        logging.info(f"||S|| = {trace.s_norm:.6g} <= eps; keeping sigma1 = {sigma1}.")
    else:
        trace.delta = epsilon / trace.s_norm
        lower = epsilon / (c_bound ** 2 + 1.0)
        trace.record("eq12", trace.delta, lower, trace.delta >= lower - tol)
        step2 = bt_step(s, trace.delta, mu.restricted(positions), tol)
        local = step2.chosen
        trace.record("delta-identity", trace.delta * trace.s_norm, epsilon,
                     abs(trace.delta * trace.s_norm - epsilon) <= 1e-12)

    block = principal_submatrix(s, local)
    quadratic = 0.0
    if block.rows:
        spectrum = sym_eigs(block)
        lowest, highest = spectrum.extremal_vectors()
        quadratic = max(abs(float(f @ block.entries @ f)) for f in (lowest, highest))
    trace.record("suppression", quadratic, epsilon, quadratic <= epsilon + tol)

    sigma2 = local.lift(positions, n).union(zeros)
    trace.sigma2 = sigma2
    trace.record("subset-chain", len(sigma2.difference(sigma1.union(zeros))), 0.0,
                 sigma2.issubset(sigma1.union(zeros)))
    final = check_isomorphism(T, epsilon, sigma2, tol)
    trace.record("final-eq1", 1.0 if final else 0.0, 1.0, final)

    trace.mu_value = mu.value(sigma2)
    rhs = epsilon ** 2 * float(np.dot(mu.weights, weights))
    trace.eq4_ratio = trace.mu_value / rhs if rhs > 0 else None
    trace.record("eq4", trace.eq4_ratio if trace.eq4_ratio is not None else 0.0, 0.0,
                 trace.eq4_ratio is None or trace.eq4_ratio > 0.0)

    if trace.failed:
        logging.error(f"Proof trace failed for eps = {epsilon}, C = {c_bound}.")
    else:
        logging.info(f"Proof trace passed: sigma1 = {sigma1}, sigma2 = {sigma2}, mu = {trace.mu_value:.6g}.")
    return trace
