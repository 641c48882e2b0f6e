"""Witness measures on downward-closed families.

The marginal game has one row per index i with w_i > 0 and one column per
maximal set sigma of the family, with payoff chi_sigma(i) / w_i. A mixed
column strategy nu maximizing min_i nu{sigma : i in sigma} / w_i is the
witness measure; the optimal row strategy lambda is the minimax certificate
(no family member collects more than t* of lambda-weighted payoff).
Restricting the columns to maximal sets loses nothing because the payoff is
monotone in sigma.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from iso_lab.constants import (
    BOUNDARY_TOL,
    CERTIFICATE_GAP_TOL,
    MWU_ITERATIONS,
    PIVOT_TOL,
    SIMPLEX_COLUMN_CAP,
    SIMPLEX_PIVOT_CAP,
    ZERO_COLUMN_TOL,
)
from iso_lab.errors import DegenerateInputError, InternalInvariantError, InvalidInputError, NoCertificateError
from iso_lab.linalg import Matrix
from iso_lab.structure import IsoFamily, isomorphism_family, suppression_family
from iso_lab.types import FamilyKind, SolverKind, SubsetMask


@dataclass(frozen=True, eq=False)
class MarginalGame:
    family: IsoFamily
    weights: np.ndarray
    active_rows: Tuple[int, ...]

    @property
    def columns(self) -> Tuple[SubsetMask, ...]:
        return self.family.maximal_sets

    def payoff(self) -> np.ndarray:
        """Payoff matrix over active rows x maximal sets."""
        payoff = np.zeros((len(self.active_rows), len(self.columns)))
        for c, sigma in enumerate(self.columns):
            for r, i in enumerate(self.active_rows):
                if i in sigma:
                    payoff[r, c] = 1.0 / self.weights[i]
        return payoff


@dataclass(frozen=True, eq=False)
class WitnessMeasure:
    """Probability measure on the family with its certified marginal floor and dual certificate."""

    support: Tuple[Tuple[SubsetMask, float], ...]
    floor: float
    dual_lambda: np.ndarray  # length n, zero off the active rows
    gap: float
    weights: np.ndarray
    active_rows: Tuple[int, ...]
    solver: SolverKind = SolverKind.SIMPLEX
    kind: FamilyKind = FamilyKind.ISOMORPHISM
    parameter: float = float("nan")

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def certified(self) -> bool:
        return self.gap <= CERTIFICATE_GAP_TOL

    def marginals(self) -> np.ndarray:
        """nu{sigma : i in sigma} for every index i."""
        marginals = np.zeros(self.n)
        for sigma, probability in self.support:
            for i in sigma:
                marginals[i] += probability
        return marginals

    def to_dict(self) -> dict:
        report = marginal_bound_report(self)
        return {
            "floor": self.floor,
            "gap": self.gap,
            "solver": self.solver.value,
            "kind": self.kind.value,
            "epsilon_or_delta": self.parameter,
            "support": [{"set": sigma.to_list(), "prob": p} for sigma, p in self.support],
            "dual_lambda": self.dual_lambda.tolist(),
            "marginals": report["marginals"],
            "ratios": report["ratios"],
            "empirical_c": report["empirical_c"],
        }


def column_weights(T: Matrix) -> np.ndarray:
    """w_i = ||T e_i||^2."""
    return T.column_norms() ** 2


def build_game(family: IsoFamily, weights: Sequence[float]) -> MarginalGame:
    """Marginal game over the maximal sets of ``family``; rows with zero weight are inactive.

    Raises:
        InvalidInputError: weights of the wrong length or negative.
        DegenerateInputError: every weight is zero.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (family.n,):
        raise InvalidInputError(f"Expected {family.n} weights, got shape {w.shape}.")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidInputError("Game weights must be finite and nonnegative.")
    active = tuple(i for i in range(family.n) if w[i] > ZERO_COLUMN_TOL ** 2)
    if not active:
        raise DegenerateInputError("All game weights are zero; the witness game is empty.")
    w = w.copy()
    w.setflags(write=False)
    return MarginalGame(family=family, weights=w, active_rows=active)


def _dual_simplex(payoff: np.ndarray, max_pivots: int = SIMPLEX_PIVOT_CAP) -> Tuple[np.ndarray, np.ndarray]:
    """Solves min 1.x s.t. P x >= 1, x >= 0 and returns (x, u) with u the optimal duals.

    The tableau starts from the all-surplus basis, which is dual feasible
    because every cost is 1; the dual simplex then restores primal
    feasibility. Bland's rule (smallest infeasible basic variable leaves,
    smallest index wins ratio ties) prevents cycling.
    """
    m, k = payoff.shape
    # Columns: x_0..x_{k-1}, surplus s_0..s_{m-1}, rhs.
    tableau = np.zeros((m, k + m + 1))
    tableau[:, :k] = -payoff
    tableau[:, k:k + m] = np.eye(m)
    tableau[:, -1] = -1.0
    costs = np.concatenate([np.ones(k), np.zeros(m + 1)])
    basis = list(range(k, k + m))

    for _ in range(max_pivots):
        infeasible = [r for r in range(m) if tableau[r, -1] < -PIVOT_TOL]
        if not infeasible:
            break
        row = min(infeasible, key=lambda r: basis[r])
        entries = tableau[row, :-1]
        candidates = [j for j in range(k + m) if entries[j] < -PIVOT_TOL]
        if not candidates:
            raise InternalInvariantError("Marginal game LP is infeasible: some index is covered by no set.")
        ratios = [costs[j] / -entries[j] for j in candidates]
        best = min(ratios)
        col = next(j for j, ratio in zip(candidates, ratios) if ratio <= best + PIVOT_TOL * max(1.0, best))
        tableau[row] /= tableau[row, col]
        for r in range(m):
            if r != row and tableau[r, col] != 0.0:
                tableau[r] -= tableau[r, col] * tableau[row]
        costs -= costs[col] * tableau[row]
        basis[row] = col
    else:
        x, u = _read_solution(tableau, costs, basis, k, m)
        raise NoCertificateError(f"Simplex hit the pivot cap of {max_pivots}.", primal=x, dual=u)
    return _read_solution(tableau, costs, basis, k, m)


def _read_solution(tableau, costs, basis, k, m) -> Tuple[np.ndarray, np.ndarray]:
    x = np.zeros(k)
    for r, var in enumerate(basis):
        if var < k:
            x[var] = max(tableau[r, -1], 0.0)
    u = np.maximum(costs[k:k + m], 0.0)
    return x, u


def _mwu(payoff: np.ndarray, iterations: int = MWU_ITERATIONS) -> Tuple[np.ndarray, np.ndarray]:
    """Average-iterate multiplicative weights for the zero-sum game max_nu min_lambda lambda.P.nu.

    Returns (nu, lambda) as probability vectors.
    """
    m, k = payoff.shape
    scale = payoff.max()
    a = payoff / scale
    rate = math.sqrt(math.log(max(m, k, 2)) / iterations)
    row = np.ones(m) / m  # minimizer
    col = np.ones(k) / k  # maximizer
    row_sum, col_sum = np.zeros(m), np.zeros(k)
    for _ in range(iterations):
        row_payoff = a @ col
        col_payoff = row @ a
        row = row * np.exp(-rate * row_payoff)
        col = col * np.exp(rate * col_payoff)
        row /= row.sum()
        col /= col.sum()
        row_sum += row
        col_sum += col
    return col_sum / col_sum.sum(), row_sum / row_sum.sum()


def marginal_floor(support: Sequence[Tuple[SubsetMask, float]], weights: np.ndarray,
                   active_rows: Sequence[int]) -> float:
    """min over active rows of nu{sigma : i in sigma} / w_i, computed from the support alone."""
    marginals = np.zeros(len(weights))
    for sigma, probability in support:
        for i in sigma:
            marginals[i] += probability
    return float(min(marginals[i] / weights[i] for i in active_rows))


def dual_value(family: IsoFamily, dual_lambda: np.ndarray, weights: np.ndarray) -> float:
    """max over maximal sets of sum_{i in sigma} lambda_i / w_i; equals the max over all members."""
    best = 0.0
    for sigma in family.maximal_sets:
        best = max(best, sum(dual_lambda[i] / weights[i] for i in sigma if dual_lambda[i] > 0))
    return best


def solve_game(game: MarginalGame, column_cap: int = SIMPLEX_COLUMN_CAP) -> WitnessMeasure:
    """Optimal witness measure and its minimax certificate.

    Raises:
        NoCertificateError: the simplex solution fails its duality-gap certificate.
    """
    payoff = game.payoff()
    m, k = payoff.shape
    if k > column_cap:
        logging.warning(f"{k} maximal sets exceed the simplex cap {column_cap}; using multiplicative weights.")
        nu, lam = _mwu(payoff)
        solver = SolverKind.MWU
    else:
        x, u = _dual_simplex(payoff)
        if x.sum() <= 0 or u.sum() <= 0:
            raise NoCertificateError("Simplex returned an empty solution.", primal=x, dual=u)
        nu, lam = x / x.sum(), u / u.sum()
        solver = SolverKind.SIMPLEX

    support = tuple((sigma, float(p)) for sigma, p in zip(game.columns, nu) if p > 0.0)
    total = sum(p for _, p in support)
    support = tuple((sigma, p / total) for sigma, p in support)
    dual_lambda = np.zeros(game.family.n)
    dual_lambda[list(game.active_rows)] = lam
    floor = marginal_floor(support, game.weights, game.active_rows)
    upper = dual_value(game.family, dual_lambda, game.weights)
    gap = max(upper - floor, 0.0)
    if upper < floor - BOUNDARY_TOL:
        raise InternalInvariantError(f"Weak duality violated: dual {upper} below primal {floor}.")
    measure = WitnessMeasure(
        support=support,
        floor=floor,
        dual_lambda=dual_lambda,
        gap=gap,
        weights=game.weights,
        active_rows=game.active_rows,
        solver=solver,
        kind=game.family.kind,
        parameter=game.family.parameter,
    )
    if solver is SolverKind.SIMPLEX and not measure.certified:
        raise NoCertificateError(f"Duality gap {gap:.3e} exceeds {CERTIFICATE_GAP_TOL}.",
                                 primal=support, dual=dual_lambda, gap=gap)
    if not measure.certified:
        logging.warning(f"Witness measure from {solver.value} carries duality gap {gap:.3e}.")
    logging.info(f"Solved marginal game ({m} rows, {k} columns): floor {floor:.12g}, gap {gap:.3e}.")
    return measure


def marginal_bound_report(measure: WitnessMeasure, parameter: Optional[float] = None) -> Dict[str, object]:
    """Per-index marginals, ratios against the witness bound and their minimum.

    Isomorphism games compare nu{sigma ni i} with eps^2 ||T e_i||^2; suppression
    games compare it with delta^2. Indices with zero weight are vacuous and
    reported with ratio None.
    """
    parameter = measure.parameter if parameter is None else parameter
    marginals = measure.marginals()
    ratios: List[Optional[float]] = []
    for i in range(measure.n):
        if i not in measure.active_rows:
            ratios.append(None)
        elif measure.kind is FamilyKind.SUPPRESSION:
            ratios.append(float(marginals[i] / parameter ** 2))
        else:
            ratios.append(float(marginals[i] / (parameter ** 2 * measure.weights[i])))
    finite = [r for r in ratios if r is not None]
    return {
        "marginals": marginals.tolist(),
        "ratios": ratios,
        "empirical_c": min(finite) if finite else None,
        "vacuous": [i for i, r in enumerate(ratios) if r is None],
        "certified": measure.certified,
    }


def isomorphism_witness(T: Matrix, epsilon: float, tol: float = BOUNDARY_TOL) -> WitnessMeasure:
    """Witness measure on Sigma(T, eps) with weights ||T e_i||^2."""
    family = isomorphism_family(T, epsilon, tol)
    return solve_game(build_game(family, column_weights(T)))


def suppression_witness(S: Matrix, delta: float, tol: float = BOUNDARY_TOL) -> WitnessMeasure:
    """Witness measure on Sigma'(S, delta) with unit weights."""
    family = suppression_family(S, delta, tol)
    return solve_game(build_game(family, np.ones(S.rows)))


def witness_bound_report(T: Matrix, epsilon: float, measure: WitnessMeasure) -> Dict[str, object]:
    """Report for a witness on Sigma(T, eps); logs a warning for an uncertified measure."""
    if measure.weights.shape != (T.cols,) or not np.allclose(measure.weights, column_weights(T)):
        raise InvalidInputError("Witness measure was not computed for this operator.")
    if not measure.certified:
        logging.warning(f"Reporting on an uncertified witness measure (gap {measure.gap:.3e}).")
    return marginal_bound_report(measure, epsilon)


def expected_measure(measure: WitnessMeasure, mu: Sequence[float]) -> float:
    """The nu-average of mu(sigma), i.e. sum_i mu_i nu{sigma ni i}."""
    return float(sum(p * sum(mu[i] for i in sigma) for sigma, p in measure.support))
