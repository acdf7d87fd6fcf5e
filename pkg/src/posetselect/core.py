"""Graded-poset contract, discovery accounting, and valuation checks.

A model class is organized as a graded poset with a least element.  A
similarity valuation ``rho`` measures how much of one model is contained
in another; discovery accounting (true/false discoveries) and the
telescoping path decomposition are defined on top of it.  Everything in
this module is exact integer/rational arithmetic on immutable values.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, NamedTuple, Sequence


class FamilyMismatchError(ValueError):
    """An element does not belong to this poset family instance."""


class NoJoinError(ValueError):
    """The poset family does not possess joins."""


class PathError(ValueError):
    """A path certificate is malformed (broken chaining or bad start)."""


class SizeCapError(ValueError):
    """An enumeration or construction exceeds its hard size cap."""


class CoveringPair(NamedTuple):
    lower: Any
    upper: Any


class GradedPoset(ABC):
    """Contract for a graded model poset with a similarity valuation.

    Concrete families implement rank/covers/rho plus a definitional
    ``precedes`` that does not go through ``rho`` (so brute-force checks
    of the closed forms stay independent).
    """

    name: str = "poset"
    has_join: bool = False

    @property
    @abstractmethod
    def least(self) -> Any:
        """The least element (global null model)."""

    @abstractmethod
    def rank(self, x: Any) -> int:
        ...

    @abstractmethod
    def upward_covers(self, x: Any) -> list[Any]:
        """All elements covering ``x``, in canonical order."""

    @abstractmethod
    def rho(self, x: Any, y: Any) -> int:
        """Similarity valuation (closed form for this family)."""

    @abstractmethod
    def precedes(self, x: Any, y: Any) -> bool:
        """Definitional containment x <= y (independent of ``rho``)."""

    @abstractmethod
    def sort_key(self, x: Any) -> Any:
        """Canonical encoding used for equality-of-order and tie-breaks."""

    @abstractmethod
    def check_member(self, x: Any) -> None:
        """Raise FamilyMismatchError if ``x`` has foreign parameters."""

    def cover_normalizer(self, pair: CoveringPair) -> int:
        """max_z rho(upper, z) - rho(lower, z); 1 for most families."""
        return 1

    def join(self, elements: Sequence[Any]) -> Any:
        raise NoJoinError(f"{self.name} poset does not possess joins")

    def max_rank(self) -> int | None:
        """Largest rank in the poset, or None if not known in closed form."""
        return None


@dataclass(frozen=True)
class DiscoveryReport:
    true_discovery: int
    false_discovery: int
    fdp: Fraction

    def __post_init__(self) -> None:
        if self.true_discovery < 0 or self.false_discovery < 0:
            raise ValueError("discovery counts must be nonnegative")
        if not 0 <= self.fdp <= 1:
            raise ValueError("fdp must lie in [0, 1]")


def discovery_report(poset: GradedPoset, estimate: Any, truth: Any) -> DiscoveryReport:
    """True/false discoveries of ``estimate`` against ``truth``.

    TD = rho(estimate, truth); FD = rank(estimate) - TD.  FDP is FD/rank
    with the rank-0 case defined as 0 (no discoveries means no false
    discovery proportion).
    """
    poset.check_member(estimate)
    poset.check_member(truth)
    td = poset.rho(estimate, truth)
    r = poset.rank(estimate)
    fd = r - td
    fdp = Fraction(fd, r) if r > 0 else Fraction(0)
    return DiscoveryReport(true_discovery=td, false_discovery=fd, fdp=fdp)


@dataclass(frozen=True)
class PathCertificate:
    """A path of covering pairs from the least element.

    Each step's upper element equals the next step's lower element; the
    number of steps equals the rank of the final element.
    """

    steps: tuple[CoveringPair, ...]

    @property
    def final(self) -> Any:
        if not self.steps:
            raise PathError("empty path has no final element")
        return self.steps[-1].upper

    def elements(self) -> list[Any]:
        if not self.steps:
            return []
        return [self.steps[0].lower] + [s.upper for s in self.steps]


def validate_path(poset: GradedPoset, path: PathCertificate) -> None:
    """Raise PathError unless the path starts at least and chains covers."""
    if not path.steps:
        return
    if poset.sort_key(path.steps[0].lower) != poset.sort_key(poset.least):
        raise PathError("path must start at the least element")
    prev_upper = None
    for step in path.steps:
        if prev_upper is not None and poset.sort_key(step.lower) != poset.sort_key(prev_upper):
            raise PathError("broken path chaining")
        if poset.rank(step.upper) != poset.rank(step.lower) + 1:
            raise PathError("step is not a covering pair (rank gap != 1)")
        prev_upper = step.upper


def telescoping_decompose(poset: GradedPoset, path: PathCertificate, truth: Any) -> list[int]:
    """Per-step false-discovery increments along a path.

    Step i contributes 1 - [rho(x_i, truth) - rho(x_{i-1}, truth)]; the
    increments sum exactly to the false discovery of the final element.
    """
    validate_path(poset, path)
    poset.check_member(truth)
    increments = []
    for step in path.steps:
        gain = poset.rho(step.upper, truth) - poset.rho(step.lower, truth)
        increments.append(1 - gain)
    return increments


@dataclass(frozen=True)
class AxiomViolation:
    axiom: str
    x: Any
    y: Any
    detail: str


@dataclass(frozen=True)
class AxiomReport:
    n_elements: int
    n_pairs_checked: int
    violations: tuple[AxiomViolation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_valuation_axioms(
    poset: GradedPoset,
    elements: Sequence[Any],
    rho: Callable[[Any, Any], int] | None = None,
) -> AxiomReport:
    """Exhaustively check the three valuation axioms plus symmetry.

    (i) 0 <= rho(x,y) <= min(rank x, rank y); (ii) monotone in the first
    argument under the order; (iii) rho(x,y) = rank(x) iff x precedes y.
    ``rho`` may be overridden to test a corrupted valuation.
    """
    rho_fn = rho if rho is not None else poset.rho
    elems = list(elements)
    ranks = [poset.rank(x) for x in elems]
    n = len(elems)
    values = [[rho_fn(elems[i], elems[j]) for j in range(n)] for i in range(n)]
    below = [[poset.precedes(elems[i], elems[j]) for j in range(n)] for i in range(n)]
    violations: list[AxiomViolation] = []
    pairs = 0
    for i in range(n):
        for j in range(n):
            pairs += 1
            v = values[i][j]
            if values[j][i] != v:
                violations.append(AxiomViolation("symmetry", elems[i], elems[j], f"{v} != {values[j][i]}"))
            if not 0 <= v <= min(ranks[i], ranks[j]):
                violations.append(
                    AxiomViolation("i", elems[i], elems[j], f"rho={v} outside [0, min ranks]")
                )
            if (v == ranks[i]) != below[i][j]:
                violations.append(
                    AxiomViolation("iii", elems[i], elems[j], f"rho={v}, rank={ranks[i]}, precedes={below[i][j]}")
                )
    # monotonicity: x <= z implies rho(x, y) <= rho(z, y)
    for i in range(n):
        for k in range(n):
            if not below[i][k]:
                continue
            for j in range(n):
                if values[i][j] > values[k][j]:
                    violations.append(
                        AxiomViolation("ii", elems[i], elems[j], f"rho decreases along {i}<={k}")
                    )
    return AxiomReport(n_elements=n, n_pairs_checked=pairs, violations=tuple(violations))


def meet_valuation_bruteforce(poset: GradedPoset, x: Any, y: Any, universe: Sequence[Any]) -> int:
    """max rank(z) over z in ``universe`` with z <= x and z <= y.

    Reference oracle for every closed-form meet valuation; ``universe``
    must be the complete element set of a small instance.
    """
    if not universe:
        raise ValueError("universe must be nonempty")
    best = -1
    for z in universe:
        if poset.precedes(z, x) and poset.precedes(z, y):
            r = poset.rank(z)
            if r > best:
                best = r
    if best < 0:
        raise ValueError("no common lower bound found; universe lacks the least element")
    return best


@dataclass(frozen=True)
class MinimalCoveringSet:
    """Rank-stratified minimal covering pairs with both count variants.

    ``counts_paper`` carries the literature counting-formula values where
    one exists; enumerated distinct-pair counts are authoritative for
    bound arithmetic (the ordered/unordered and endpoint double-counts
    differ for the partition and causal families).  Large families may
    skip materializing the pairs and carry ``counts_known`` instead
    (closed forms verified against enumeration on small instances).
    """

    family: str
    pairs_by_rank: dict[int, tuple[CoveringPair, ...]]
    counts_paper: dict[int, int] = field(default_factory=dict)
    counts_known: dict[int, int] | None = None

    @property
    def counts_enumerated(self) -> dict[int, int]:
        if not self.pairs_by_rank and self.counts_known is not None:
            return dict(self.counts_known)
        return {k: len(v) for k, v in self.pairs_by_rank.items()}

    def counts(self, basis: str = "enumerated") -> dict[int, int]:
        if basis == "enumerated":
            return self.counts_enumerated
        if basis == "paper":
            return dict(self.counts_paper) if self.counts_paper else self.counts_enumerated
        raise ValueError(f"unknown count basis {basis!r}")

    @property
    def all_pairs(self) -> list[CoveringPair]:
        return [p for k in sorted(self.pairs_by_rank) for p in self.pairs_by_rank[k]]

    @property
    def size(self) -> int:
        return sum(len(v) for v in self.pairs_by_rank.values())
