"""Partition posets over {0..p-1}: refinement order and its reverse.

The refinement order (clustering) has the all-singletons partition as
its least element and merges blocks as rank grows.  The reverse order
(multisample testing) starts from the single-block partition and splits
blocks.  Both are lattices; similarity is the rank of the meet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from ..core import (
    CoveringPair,
    FamilyMismatchError,
    GradedPoset,
    MinimalCoveringSet,
    SizeCapError,
)

# splitting a block enumerates 2^(size-1)-1 bipartitions; fail loudly past this
DEFAULT_SPLIT_CAP = 12


@dataclass(frozen=True)
class Partition:
    """A set partition of {0..p-1}; blocks sorted internally and by minimum."""

    p: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for block in self.blocks:
            if not block:
                raise ValueError("empty block")
            if tuple(sorted(block)) != block:
                raise ValueError("blocks must be internally sorted")
            seen.update(block)
        if seen != set(range(self.p)):
            raise ValueError("blocks must exactly cover the ground set")
        if tuple(sorted(self.blocks, key=lambda b: b[0])) != self.blocks:
            raise ValueError("blocks must be sorted by minimum element")

    def key(self) -> tuple:
        return (self.p, self.blocks)

    def labels(self) -> tuple[int, ...]:
        """Element -> block index map."""
        lab = [0] * self.p
        for idx, block in enumerate(self.blocks):
            for e in block:
                lab[e] = idx
        return tuple(lab)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)


def partition_from_blocks(p: int, blocks: Iterable[Iterable[int]]) -> Partition:
    canon = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))
    return Partition(p, canon)


def partition_from_labels(p: int, labels: Sequence[int]) -> Partition:
    groups: dict[int, list[int]] = {}
    for e, lab in enumerate(labels):
        groups.setdefault(lab, []).append(e)
    return partition_from_blocks(p, groups.values())


def singletons(p: int) -> Partition:
    return partition_from_blocks(p, ([i] for i in range(p)))


def one_block(p: int) -> Partition:
    return partition_from_blocks(p, [range(p)])


def common_refinement(x: Partition, y: Partition) -> Partition:
    """Coarsest partition refining both (pairwise block intersections)."""
    lx, ly = x.labels(), y.labels()
    return partition_from_labels(x.p, [(lx[i], ly[i]) for i in range(x.p)])  # type: ignore[arg-type]


def common_coarsening(x: Partition, y: Partition) -> Partition:
    """Finest partition coarsening both (union-find over shared blocks)."""
    parent = list(range(x.p))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for part in (x, y):
        for block in part.blocks:
            for e in block[1:]:
                union(block[0], e)
    return partition_from_labels(x.p, [find(i) for i in range(x.p)])


def refines(x: Partition, y: Partition) -> bool:
    """True iff every block of x lies inside a block of y."""
    ly = y.labels()
    return all(len({ly[e] for e in block}) == 1 for block in x.blocks)


def _rho_refinement(x: Partition, y: Partition) -> int:
    lx, ly = x.labels(), y.labels()
    return x.p - len({(lx[i], ly[i]) for i in range(x.p)})


class PartitionPoset(GradedPoset):
    """Refinement order: least = singletons, covers merge two blocks."""

    name = "clustering"
    has_join = True

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("p must be positive")
        self.p = p

    @property
    def least(self) -> Partition:
        return singletons(self.p)

    def check_member(self, x: Partition) -> None:
        if not isinstance(x, Partition) or x.p != self.p:
            raise FamilyMismatchError(f"expected Partition with p={self.p}")

    def rank(self, x: Partition) -> int:
        return self.p - x.n_blocks

    def precedes(self, x: Partition, y: Partition) -> bool:
        return refines(x, y)

    def rho(self, x: Partition, y: Partition) -> int:
        return _rho_refinement(x, y)

    def upward_covers(self, x: Partition) -> list[Partition]:
        covers = []
        for i, j in combinations(range(x.n_blocks), 2):
            merged = [b for k, b in enumerate(x.blocks) if k not in (i, j)]
            merged.append(tuple(sorted(x.blocks[i] + x.blocks[j])))
            covers.append(partition_from_blocks(self.p, merged))
        return sorted(covers, key=self.sort_key)

    def cover_normalizer(self, pair: CoveringPair) -> int:
        merged_blocks = set(pair.lower.blocks) - set(pair.upper.blocks)
        if len(merged_blocks) != 2:
            raise ValueError("not a merge covering pair")
        g1, g2 = merged_blocks
        return min(len(g1), len(g2))

    def sort_key(self, x: Partition) -> tuple:
        return x.key()

    def join(self, elements: Sequence[Partition]) -> Partition:
        out = self.least
        for x in elements:
            self.check_member(x)
            out = common_coarsening(out, x)
        return out

    def max_rank(self) -> int:
        return self.p - 1

    def minimal_covering_pairs(
        self, counts_only: bool = False, max_members: int = 200_000
    ) -> MinimalCoveringSet:
        """One pair per unordered split {G1,G2}: merge against a singleton rest.

        The literature counting formula counts ordered (G1,G2) splits and is
        recorded separately; it is exactly twice the enumerated count.
        ``counts_only`` skips materializing the pairs (bound arithmetic
        needs only the stratum counts).
        """
        enum_counts = {
            k: math.comb(self.p, k + 1) * (2**k - 1) for k in range(1, self.p)
        }
        paper_counts = {
            k: math.comb(self.p, k + 1) * (2 ** (k + 1) - 2) for k in range(1, self.p)
        }
        if counts_only:
            return MinimalCoveringSet(
                family=self.name,
                pairs_by_rank={},
                counts_paper=paper_counts,
                counts_known=enum_counts,
            )
        total = sum(enum_counts.values())
        if total > max_members:
            raise SizeCapError(f"minimal set would have {total} pairs (cap {max_members})")
        pairs_by_rank: dict[int, list[CoveringPair]] = {}
        counts_paper: dict[int, int] = {}
        for k in range(1, self.p):
            counts_paper[k] = paper_counts[k]
            stratum: list[CoveringPair] = []
            for merged in combinations(range(self.p), k + 1):
                rest = [e for e in range(self.p) if e not in merged]
                # unordered bipartitions of the merged set: pin the first element to G1
                others = merged[1:]
                for r in range(len(others) + 1):
                    for extra in combinations(others, r):
                        g1 = (merged[0],) + extra
                        g2 = tuple(e for e in merged if e not in g1)
                        if not g2:
                            continue
                        lower = partition_from_blocks(
                            self.p, [g1, g2] + [[e] for e in rest]
                        )
                        upper = partition_from_blocks(
                            self.p, [merged] + [[e] for e in rest]
                        )
                        stratum.append(CoveringPair(lower, upper))
            stratum.sort(key=lambda pr: (self.sort_key(pr.upper), self.sort_key(pr.lower)))
            pairs_by_rank[k] = stratum
        return MinimalCoveringSet(
            family=self.name,
            pairs_by_rank={k: tuple(v) for k, v in pairs_by_rank.items()},
            counts_paper=counts_paper,
        )


class ReversePartitionPoset(GradedPoset):
    """Coarsening order: least = one block, covers split a block in two."""

    name = "multisample"
    has_join = True

    def __init__(self, p: int, split_cap: int = DEFAULT_SPLIT_CAP):
        if p < 1:
            raise ValueError("p must be positive")
        self.p = p
        self.split_cap = split_cap

    @property
    def least(self) -> Partition:
        return one_block(self.p)

    def check_member(self, x: Partition) -> None:
        if not isinstance(x, Partition) or x.p != self.p:
            raise FamilyMismatchError(f"expected Partition with p={self.p}")

    def rank(self, x: Partition) -> int:
        return x.n_blocks - 1

    def precedes(self, x: Partition, y: Partition) -> bool:
        # x below y in the coarsening order means y refines x
        return refines(y, x)

    def rho(self, x: Partition, y: Partition) -> int:
        # rank of the meet (finest common coarsening); the -1 keeps axiom
        # (iii): rho(x, x) must equal rank(x) = #blocks - 1
        return common_coarsening(x, y).n_blocks - 1

    def upward_covers(self, x: Partition) -> list[Partition]:
        covers = []
        for idx, block in enumerate(x.blocks):
            if len(block) > self.split_cap:
                raise SizeCapError(
                    f"block of size {len(block)} exceeds split cap {self.split_cap}"
                )
            if len(block) < 2:
                continue
            rest = [b for k, b in enumerate(x.blocks) if k != idx]
            others = block[1:]
            for r in range(len(others)):
                for extra in combinations(others, r):
                    g1 = (block[0],) + extra
                    g2 = tuple(e for e in block if e not in g1)
                    covers.append(partition_from_blocks(self.p, rest + [g1, g2]))
        return sorted(covers, key=self.sort_key)

    def sort_key(self, x: Partition) -> tuple:
        return x.key()

    def join(self, elements: Sequence[Partition]) -> Partition:
        out = self.least
        for x in elements:
            self.check_member(x)
            out = common_refinement(out, x)
        return out

    def max_rank(self) -> int:
        return self.p - 1
