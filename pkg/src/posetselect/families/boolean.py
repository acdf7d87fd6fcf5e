"""Variable-selection poset: subsets of {0..p-1} ordered by inclusion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..core import CoveringPair, FamilyMismatchError, GradedPoset, MinimalCoveringSet


@dataclass(frozen=True)
class VariableSubset:
    p: int
    members: frozenset[int]

    def __post_init__(self) -> None:
        if any(not 0 <= i < self.p for i in self.members):
            raise ValueError("members out of range")

    def key(self) -> tuple:
        return (self.p, tuple(sorted(self.members)))


def subset(p: int, members: Iterable[int] = ()) -> VariableSubset:
    return VariableSubset(p, frozenset(members))


class BooleanPoset(GradedPoset):
    name = "boolean"
    has_join = True

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("p must be positive")
        self.p = p

    @property
    def least(self) -> VariableSubset:
        return subset(self.p)

    def check_member(self, x: VariableSubset) -> None:
        if not isinstance(x, VariableSubset) or x.p != self.p:
            raise FamilyMismatchError(f"expected VariableSubset with p={self.p}")

    def rank(self, x: VariableSubset) -> int:
        return len(x.members)

    def precedes(self, x: VariableSubset, y: VariableSubset) -> bool:
        return x.members <= y.members

    def rho(self, x: VariableSubset, y: VariableSubset) -> int:
        return len(x.members & y.members)

    def upward_covers(self, x: VariableSubset) -> list[VariableSubset]:
        return [
            VariableSubset(self.p, x.members | {i})
            for i in range(self.p)
            if i not in x.members
        ]

    def sort_key(self, x: VariableSubset) -> tuple:
        return x.key()

    def join(self, elements: Sequence[VariableSubset]) -> VariableSubset:
        members: frozenset[int] = frozenset()
        for x in elements:
            self.check_member(x)
            members |= x.members
        return VariableSubset(self.p, members)

    def max_rank(self) -> int:
        return self.p

    def minimal_covering_pairs(self) -> MinimalCoveringSet:
        # one representative per variable, all at rank 1
        pairs = tuple(
            CoveringPair(self.least, subset(self.p, [i])) for i in range(self.p)
        )
        return MinimalCoveringSet(
            family=self.name,
            pairs_by_rank={1: pairs},
            counts_paper={1: self.p},
        )
