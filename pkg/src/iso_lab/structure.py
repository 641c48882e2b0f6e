"""Isomorphism and suppression structures as downward-closed set families.

A set sigma is a set of epsilon-isomorphism of T when the Gram matrix of the
normalized columns {T e_i / ||T e_i||, i in sigma} has its spectrum inside
[1 - eps, 1 + eps]. A set is in the suppression structure of a zero-diagonal
symmetric S when ||Q_sigma S Q_sigma|| <= delta ||S||. Both properties are
inherited by subsets, so a family is stored as the antichain of its maximal
members.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from iso_lab.constants import (
    BOUNDARY_TOL,
    DOWNWARD_CLOSURE_SAMPLES,
    ENUMERATION_CAP,
    ZERO_COLUMN_TOL,
    ZERO_DIAGONAL_TOL,
)
from iso_lab.errors import (
    DiagonalViolationError,
    InternalInvariantError,
    InvalidInputError,
    InvalidParameterError,
    SizeCapError,
)
from iso_lab.linalg import Matrix, Spectrum, check_symmetric, gram_normalized, operator_norm, principal_submatrix, sym_eigs
from iso_lab.types import FamilyKind, SubsetMask

Checker = Callable[[SubsetMask], bool]


def _validate_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}.")


def zero_columns(T: Matrix) -> SubsetMask:
    """Indices whose column vanishes; they belong to every set of isomorphism."""
    norms = T.column_norms()
    return SubsetMask.from_indices((i for i in range(T.cols) if norms[i] <= ZERO_COLUMN_TOL), T.cols)


def gram_spectrum(T: Matrix, sigma: SubsetMask) -> Spectrum:
    """Spectrum of the normalized Gram matrix of sigma with zero columns stripped."""
    return sym_eigs(gram_normalized(T, sigma.difference(zero_columns(T))))


def isomorphism_checker(T: Matrix, epsilon: float, tol: float = BOUNDARY_TOL) -> Checker:
    """Membership predicate for Sigma(T, eps); the zero-column set is computed once."""
    _validate_epsilon(epsilon)
    free = zero_columns(T)
    lower, upper = 1.0 - epsilon - tol, 1.0 + epsilon + tol

    def check(sigma: SubsetMask) -> bool:
        active = sigma.difference(free)
        if len(active) <= 1:
            return True
        spectrum = sym_eigs(gram_normalized(T, active))
        return spectrum.minimum >= lower and spectrum.maximum <= upper

    return check


def one_sided_checker(T: Matrix, epsilon: float, upper: bool, tol: float = BOUNDARY_TOL) -> Checker:
    """Only the upper (or only the lower) half of the equivalence; still downward closed."""
    _validate_epsilon(epsilon)
    free = zero_columns(T)

    def check(sigma: SubsetMask) -> bool:
        active = sigma.difference(free)
        if len(active) <= 1:
            return True
        spectrum = sym_eigs(gram_normalized(T, active))
        if upper:
            return spectrum.maximum <= 1.0 + epsilon + tol
        return spectrum.minimum >= 1.0 - epsilon - tol

    return check


def check_isomorphism(T: Matrix, epsilon: float, sigma: SubsetMask, tol: float = BOUNDARY_TOL) -> bool:
    """True iff sigma is a set of epsilon-isomorphism of T (boundary inclusive up to tol)."""
    return isomorphism_checker(T, epsilon, tol)(sigma)


def check_upper_bound(T: Matrix, epsilon: float, sigma: SubsetMask, tol: float = BOUNDARY_TOL) -> bool:
    return one_sided_checker(T, epsilon, upper=True, tol=tol)(sigma)


def check_lower_bound(T: Matrix, epsilon: float, sigma: SubsetMask, tol: float = BOUNDARY_TOL) -> bool:
    return one_sided_checker(T, epsilon, upper=False, tol=tol)(sigma)


def check_zero_diagonal(S: Matrix) -> None:
    diagonal = np.abs(np.diag(S.entries))
    if diagonal.size and diagonal.max() > ZERO_DIAGONAL_TOL:
        index = int(np.argmax(diagonal))
        raise DiagonalViolationError(index, float(S.entries[index, index]))


def suppression_checker(S: Matrix, delta: float, tol: float = BOUNDARY_TOL) -> Checker:
    """Membership predicate for Sigma'(S, delta) with ||S|| computed once."""
    if not delta > 0.0:
        raise InvalidParameterError(f"delta must be positive, got {delta}.")
    check_symmetric(S)
    check_zero_diagonal(S)
    bound = delta * operator_norm(S) + tol
    if bound <= tol:
        return lambda sigma: True

    def check(sigma: SubsetMask) -> bool:
        if len(sigma) <= 1:
            return True
        return operator_norm(principal_submatrix(S, sigma)) <= bound

    return check


def check_suppression(S: Matrix, delta: float, sigma: SubsetMask, tol: float = BOUNDARY_TOL) -> bool:
    """True iff ||Q_sigma S Q_sigma|| <= delta ||S|| + tol; always true when S = 0."""
    return suppression_checker(S, delta, tol)(sigma)


def norm_bound_checker(T: Matrix, bound: float, tol: float = BOUNDARY_TOL) -> Checker:
    """Predicate ||T Q_sigma|| <= bound + tol."""

    def check(sigma: SubsetMask) -> bool:
        return operator_norm(T.columns(sigma)) <= bound + tol

    return check


@dataclass(frozen=True)
class IsoFamily:
    """Downward-closed family stored as its antichain of maximal sets (sorted lexicographically).

    For isomorphism families the free (zero-column) indices are contained in
    every maximal set and are also listed separately in ``free_indices``.
    """

    n: int
    kind: FamilyKind
    parameter: float
    maximal_sets: Tuple[SubsetMask, ...]
    free_indices: SubsetMask
    member_count: int

    def __contains__(self, sigma: SubsetMask) -> bool:
        return membership_query(self, sigma)

    def members(self) -> Iterator[SubsetMask]:
        """All member sets, each once, in increasing bit order."""
        seen = set()
        for maximal in self.maximal_sets:
            sub = maximal.bits
            while True:
                if sub not in seen:
                    seen.add(sub)
                sub = (sub - 1) & maximal.bits
                if sub == maximal.bits:
                    break
        for bits in sorted(seen):
            yield SubsetMask(bits, self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kind": self.kind.value,
            "epsilon_or_delta": self.parameter,
            "maximal_sets": [m.to_list() for m in self.maximal_sets],
            "free_indices": self.free_indices.to_list(),
            "member_count": self.member_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IsoFamily":
        n = int(data["n"])
        maximal = tuple(SubsetMask.from_indices(m, n) for m in data["maximal_sets"])
        return cls(
            n=n,
            kind=FamilyKind(data["kind"]),
            parameter=float(data["epsilon_or_delta"]),
            maximal_sets=tuple(sorted(maximal, key=SubsetMask.sort_key)),
            free_indices=SubsetMask.from_indices(data.get("free_indices", []), n),
            member_count=int(data.get("member_count", 0)),
        )


def enumerate_family(
    checker: Checker,
    n: int,
    kind: FamilyKind = FamilyKind.ISOMORPHISM,
    parameter: float = float("nan"),
    free: Optional[SubsetMask] = None,
    verify_samples: int = DOWNWARD_CLOSURE_SAMPLES,
) -> IsoFamily:
    """Exact antichain of maximal members of a downward-closed family.

    Depth-first search over the subset lattice of the non-free indices,
    adding indices in increasing order; a set failing the checker prunes all
    of its supersets. A member is maximal when no one-element extension is a
    member. Free indices are added to every maximal set afterwards.

    Raises:
        SizeCapError: n above the enumeration cap.
        InternalInvariantError: the sampled downward-closure check failed.
    """
    if n > ENUMERATION_CAP:
        raise SizeCapError(f"Cannot enumerate subsets of {n} indices (cap {ENUMERATION_CAP}).")
    free = free if free is not None else SubsetMask.empty(n)
    candidates = free.complement().indices()
    verdicts: Dict[int, bool] = {}

    def is_member(bits: int) -> bool:
        if bits not in verdicts:
            verdicts[bits] = checker(SubsetMask(bits, n))
        return verdicts[bits]

    maximal_bits: List[int] = []
    member_count = 0
    # Explicit stack of (bits, position of the next candidate to try).
    stack = [(0, 0)]
    while stack:
        bits, start = stack.pop()
        member_count += 1
        children = []
        for position in range(start, len(candidates)):
            child = bits | 1 << candidates[position]
            if is_member(child):
                children.append((child, position + 1))
        extendable = bool(children) or any(
            is_member(bits | 1 << i) for i in candidates[:start] if not bits >> i & 1
        )
        if not extendable:
            maximal_bits.append(bits | free.bits)
        stack.extend(reversed(children))

    maximal = tuple(sorted((SubsetMask(b, n) for b in maximal_bits), key=SubsetMask.sort_key))
    family = IsoFamily(
        n=n,
        kind=kind,
        parameter=parameter,
        maximal_sets=maximal,
        free_indices=free,
        member_count=member_count << len(free),
    )
    if verify_samples:
        _assert_downward_closed(checker, family, verify_samples)
    logging.info(
        f"Enumerated {kind.value} family over n={n}: {len(maximal)} maximal sets, "
        f"{family.member_count} members."
    )
    return family


def _assert_downward_closed(checker: Checker, family: IsoFamily, samples: int) -> None:
    """Spot-checks random subsets of maximal sets against the checker."""
    rng = np.random.default_rng(family.n)
    for _ in range(samples):
        maximal = family.maximal_sets[rng.integers(len(family.maximal_sets))]
        indices = maximal.difference(family.free_indices).indices()
        keep = rng.random(len(indices)) < 0.5
        subset = SubsetMask.from_indices((i for i, k in zip(indices, keep) if k), family.n)
        if not checker(subset):
            raise InternalInvariantError(f"Membership predicate is not downward closed: {subset} fails.")


def membership_query(family: IsoFamily, sigma: SubsetMask) -> bool:
    """True iff sigma is contained in some maximal set of the family."""
    if sigma.n != family.n:
        raise InvalidInputError(f"Subset over {sigma.n} indices queried against a family over {family.n}.")
    return any(sigma.issubset(maximal) for maximal in family.maximal_sets)


def isomorphism_family(T: Matrix, epsilon: float, tol: float = BOUNDARY_TOL) -> IsoFamily:
    """Sigma(T, eps) with zero columns as free indices."""
    checker = isomorphism_checker(T, epsilon, tol)
    return enumerate_family(checker, T.cols, FamilyKind.ISOMORPHISM, epsilon, free=zero_columns(T))


def one_sided_family(T: Matrix, epsilon: float, upper: bool, tol: float = BOUNDARY_TOL) -> IsoFamily:
    kind = FamilyKind.UPPER_BOUND if upper else FamilyKind.LOWER_BOUND
    checker = one_sided_checker(T, epsilon, upper, tol)
    return enumerate_family(checker, T.cols, kind, epsilon, free=zero_columns(T))


def suppression_family(S: Matrix, delta: float, tol: float = BOUNDARY_TOL) -> IsoFamily:
    """Sigma'(S, delta) for a zero-diagonal symmetric S."""
    checker = suppression_checker(S, delta, tol)
    return enumerate_family(checker, S.rows, FamilyKind.SUPPRESSION, delta)


def norm_bound_family(T: Matrix, bound: float, candidates: Optional[SubsetMask] = None,
                      tol: float = BOUNDARY_TOL) -> IsoFamily:
    """{sigma within candidates : ||T Q_sigma|| <= bound}; indices outside candidates never enter."""
    n = T.cols
    checker = norm_bound_checker(T, bound, tol)
    positions = (candidates if candidates is not None else SubsetMask.full(n)).indices()
    inner = enumerate_family(
        lambda sigma: checker(sigma.lift(positions, n)), len(positions), FamilyKind.NORM_BOUND, bound
    )
    return IsoFamily(
        n=n,
        kind=FamilyKind.NORM_BOUND,
        parameter=bound,
        maximal_sets=tuple(sorted((m.lift(positions, n) for m in inner.maximal_sets), key=SubsetMask.sort_key)),
        free_indices=SubsetMask.empty(n),
        member_count=inner.member_count,
    )
