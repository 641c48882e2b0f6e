from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Tuple

from iso_lab.errors import InvalidInputError


class Command(Enum):
    """Defines the commands supported by the CLI."""

    CHECK = "check"
    ENUMERATE = "enumerate"
    WITNESS = "witness"
    SELECT = "select"
    TRACE = "trace"
    ESTIMATE = "estimate"
    RATE = "rate"


class FamilyKind(Enum):
    ISOMORPHISM = "isomorphism"
    SUPPRESSION = "suppression"
    NORM_BOUND = "norm_bound"  # {sigma : ||T Q_sigma|| <= C}
    UPPER_BOUND = "upper_bound"  # only the upper half of the equivalence
    LOWER_BOUND = "lower_bound"  # only the lower half


class MeasureKind(Enum):
    COUNTING = "counting"
    PROBABILITY = "probability"
    GENERAL = "general"


class SelectionMethod(Enum):
    EXHAUSTIVE = "exhaustive"
    GREEDY = "greedy"
    PIPELINE = "pipeline"


class SolverKind(Enum):
    SIMPLEX = "simplex"
    MWU = "mwu"  # multiplicative weights, used above the simplex column cap


class EnsembleKind(Enum):
    IDENTITY = "identity"
    DOUBLING = "doubling"
    PAIR_CORRELATION = "pair_correlation"
    UNIFORM_CORRELATION = "uniform_correlation"
    GAUSSIAN_NORMALIZED = "gaussian_normalized"
    RANK_DEFICIENT = "rank_deficient"


class OutputFormat(Enum):
    JSON = "json"
    CSV = "csv"
    TSV = "tsv"


@dataclass(frozen=True)
class SubsetMask:
    """A subset of the basis indices 0..n-1 stored as an integer bit-set."""

    bits: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InvalidInputError(f"Ambient dimension must be nonnegative, got {self.n}.")
        if self.bits < 0 or self.bits >> self.n:
            raise InvalidInputError(f"Subset bits {self.bits:#x} exceed the ambient dimension {self.n}.")

    @classmethod
    def from_indices(cls, indices: Iterable[int], n: int) -> "SubsetMask":
        bits = 0
        for i in indices:
            if not 0 <= i < n:
                raise InvalidInputError(f"Index {i} out of range for dimension {n}.")
            bits |= 1 << i
        return cls(bits, n)

    @classmethod
    def empty(cls, n: int) -> "SubsetMask":
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> "SubsetMask":
        return cls((1 << n) - 1, n)

    @classmethod
    def parse(cls, text: str, n: int) -> "SubsetMask":
        """Parses comma-separated zero-based indices, e.g. ``"0,2,3"``; an empty string is the empty set."""
        text = text.strip()
        if not text:
            return cls.empty(n)
        try:
            indices = [int(token) for token in text.split(",") if token.strip()]
        except ValueError:
            raise InvalidInputError(f"Cannot parse subset '{text}'; expected comma-separated indices.")
        return cls.from_indices(indices, n)

    def indices(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.bits >> i & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __contains__(self, index: int) -> bool:
        return 0 <= index < self.n and bool(self.bits >> index & 1)

    def _same_dimension(self, other: "SubsetMask") -> None:
        if self.n != other.n:
            raise InvalidInputError(f"Subsets live in different dimensions ({self.n} vs {other.n}).")

    def issubset(self, other: "SubsetMask") -> bool:
        self._same_dimension(other)
        return self.bits & ~other.bits == 0

    def union(self, other: "SubsetMask") -> "SubsetMask":
        self._same_dimension(other)
        return SubsetMask(self.bits | other.bits, self.n)

    def difference(self, other: "SubsetMask") -> "SubsetMask":
        self._same_dimension(other)
        return SubsetMask(self.bits & ~other.bits, self.n)

    def complement(self) -> "SubsetMask":
        return SubsetMask(((1 << self.n) - 1) & ~self.bits, self.n)

    def with_index(self, index: int) -> "SubsetMask":
        if not 0 <= index < self.n:
            raise InvalidInputError(f"Index {index} out of range for dimension {self.n}.")
        return SubsetMask(self.bits | 1 << index, self.n)

    def lift(self, positions: Tuple[int, ...], n: int) -> "SubsetMask":
        """Maps a subset of ``range(len(positions))`` to the subset of ``range(n)`` it indexes."""
        return SubsetMask.from_indices((positions[i] for i in self.indices()), n)

    def sort_key(self) -> Tuple[int, ...]:
        return self.indices()

    def to_list(self) -> list:
        return list(self.indices())

    def __str__(self) -> str:
        return "{" + ",".join(str(i) for i in self.indices()) + "}"
