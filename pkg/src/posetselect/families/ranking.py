"""Ranking posets: strict partial orders and total rankings (weak order).

Relation pairs are directed as (lower, upper): the pair (a, b) records
that item b outranks item a relative to the null state.  For total
rankings this matches the inversion-set convention: pair (i, j) with
null position i < j is inverted exactly when item j overtakes item i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key
from itertools import combinations, permutations
from typing import Iterable, Sequence

from ..core import CoveringPair, FamilyMismatchError, GradedPoset, MinimalCoveringSet


# ---------------------------------------------------------------------------
# total rankings


def _pair_bit(i: int, j: int, p: int) -> int:
    return i * p + j


def inversion_pairs_of_order(order: Sequence[int]) -> frozenset[tuple[int, int]]:
    """Inverted null-index pairs (i, j), i < j, of a rank-ordered listing."""
    p = len(order)
    pos = [0] * p
    for r, idx in enumerate(order):
        pos[idx] = r
    return frozenset(
        (i, j) for i in range(p) for j in range(i + 1, p) if pos[i] > pos[j]
    )


@dataclass(frozen=True)
class TotalRanking:
    """A total ranking as the list of null indices in rank order (best first).

    ``items[k]`` is the label of the item with null rank k+1; ``order[r]``
    is the null index of the item ranked r+1.  The inversion set relative
    to the null ranking is cached at construction, both as pairs and as a
    bitmask for fast intersection counting.
    """

    items: tuple
    order: tuple[int, ...]
    inversions: frozenset[tuple[int, int]] = field(
        init=False, compare=False, repr=False
    )
    inv_bits: int = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        p = len(self.items)
        if sorted(self.order) != list(range(p)):
            raise ValueError("order must be a permutation of null indices")
        inv = inversion_pairs_of_order(self.order)
        bits = 0
        for i, j in inv:
            bits |= 1 << _pair_bit(i, j, p)
        object.__setattr__(self, "inversions", inv)
        object.__setattr__(self, "inv_bits", bits)

    @property
    def p(self) -> int:
        return len(self.items)

    def key(self) -> tuple:
        return (self.items, self.order)

    def ranked_labels(self) -> tuple:
        return tuple(self.items[i] for i in self.order)


def _is_inversion_set(pairs: frozenset[tuple[int, int]], p: int) -> bool:
    # a set of (i<j) pairs is an inversion set iff it and its complement
    # are both transitive over consecutive index triples
    for i, j, k in combinations(range(p), 3):
        ij, jk, ik = (i, j) in pairs, (j, k) in pairs, (i, k) in pairs
        if ij and jk and not ik:
            return False
        if ik and not (ij or jk):
            return False
    return True


def ranking_from_inversions(
    items: tuple, pairs: frozenset[tuple[int, int]]
) -> TotalRanking:
    p = len(items)
    if not _is_inversion_set(pairs, p):
        raise ValueError("pair set is not the inversion set of any total ranking")

    def before(a: int, b: int) -> int:
        if a == b:
            return 0
        if a < b:
            return 1 if (a, b) in pairs else -1
        return -1 if (b, a) in pairs else 1

    order = tuple(sorted(range(p), key=cmp_to_key(before)))
    out = TotalRanking(items, order)
    if out.inversions != pairs:
        raise ValueError("pair set does not round-trip to a ranking")
    return out


def _transitive_closure_pairs(
    pairs: set[tuple[int, int]], p: int
) -> frozenset[tuple[int, int]]:
    closed = set(pairs)
    changed = True
    while changed:
        changed = False
        for i, j in list(closed):
            for k in range(j + 1, p):
                if (j, k) in closed and (i, k) not in closed:
                    closed.add((i, k))
                    changed = True
    return frozenset(closed)


class TotalRankingPoset(GradedPoset):
    """Weak order on total rankings: inclusion of inversion sets."""

    name = "total-ranking"
    has_join = True

    def __init__(self, items: Sequence | int):
        if isinstance(items, int):
            items = tuple(range(items))
        self.items = tuple(items)
        if len(set(self.items)) != len(self.items):
            raise ValueError("duplicate item labels")
        self.p = len(self.items)

    @property
    def least(self) -> TotalRanking:
        return TotalRanking(self.items, tuple(range(self.p)))

    def check_member(self, x: TotalRanking) -> None:
        if not isinstance(x, TotalRanking) or x.items != self.items:
            raise FamilyMismatchError("expected TotalRanking over the same items")

    def rank(self, x: TotalRanking) -> int:
        return len(x.inversions)

    def precedes(self, x: TotalRanking, y: TotalRanking) -> bool:
        return x.inv_bits & y.inv_bits == x.inv_bits

    def rho(self, x: TotalRanking, y: TotalRanking) -> int:
        return (x.inv_bits & y.inv_bits).bit_count()

    def upward_covers(self, x: TotalRanking) -> list[TotalRanking]:
        covers = []
        order = x.order
        for r in range(self.p - 1):
            if order[r] < order[r + 1]:
                swapped = (
                    order[:r] + (order[r + 1], order[r]) + order[r + 2 :]
                )
                covers.append(TotalRanking(self.items, swapped))
        return sorted(covers, key=self.sort_key)

    def added_pair(self, pair: CoveringPair) -> tuple[int, int]:
        """The single inversion (i, j) a covering step introduces."""
        diff = pair.upper.inversions - pair.lower.inversions
        if len(diff) != 1 or not pair.lower.inversions <= pair.upper.inversions:
            raise ValueError("not a covering pair of the weak order")
        return next(iter(diff))

    def sort_key(self, x: TotalRanking) -> tuple:
        return x.order

    def join(self, elements: Sequence[TotalRanking]) -> TotalRanking:
        pairs: set[tuple[int, int]] = set()
        for x in elements:
            self.check_member(x)
            pairs |= x.inversions
        closed = _transitive_closure_pairs(pairs, self.p)
        return ranking_from_inversions(self.items, closed)

    def max_rank(self) -> int:
        return self.p * (self.p - 1) // 2

    def minimal_covering_pairs(self) -> MinimalCoveringSet:
        """One pair per (i, j): move item j to position i versus just after i.

        The upper element has inversion set {(t, j): i <= t < j} of size
        j - i, so strata are indexed by the null-position gap and the
        stratum at rank k has p - k members.
        """
        pairs_by_rank: dict[int, list[CoveringPair]] = {}
        for i in range(self.p):
            for j in range(i + 1, self.p):
                k = j - i
                prefix = tuple(range(i))
                mid = tuple(range(i, j))
                suffix = tuple(range(j + 1, self.p))
                upper = TotalRanking(self.items, prefix + (j,) + mid + suffix)
                lower = TotalRanking(
                    self.items, prefix + (i, j) + tuple(range(i + 1, j)) + suffix
                )
                pairs_by_rank.setdefault(k, []).append(CoveringPair(lower, upper))
        return MinimalCoveringSet(
            family=self.name,
            pairs_by_rank={k: tuple(v) for k, v in sorted(pairs_by_rank.items())},
            counts_paper={k: self.p - k for k in range(1, self.p)},
        )

    def all_rankings(self) -> list[TotalRanking]:
        return [TotalRanking(self.items, perm) for perm in permutations(range(self.p))]


# ---------------------------------------------------------------------------
# partial rankings


@dataclass(frozen=True)
class PartialRanking:
    """A strict partial order; pair (a, b) records that b outranks a."""

    items: tuple
    relation: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        p = len(self.items)
        for a, b in self.relation:
            if a == b:
                raise ValueError("relation must be irreflexive")
            if not (0 <= a < p and 0 <= b < p):
                raise ValueError("relation indices out of range")
            if (b, a) in self.relation:
                raise ValueError("relation must be asymmetric")
        if not _is_transitive(self.relation):
            raise ValueError("relation must be transitive")

    @property
    def p(self) -> int:
        return len(self.items)

    def key(self) -> tuple:
        return (self.items, tuple(sorted(self.relation)))


def _is_transitive(rel: frozenset[tuple[int, int]]) -> bool:
    succ: dict[int, set[int]] = {}
    for a, b in rel:
        succ.setdefault(a, set()).add(b)
    for a, b in rel:
        for c in succ.get(b, ()):
            if (a, c) not in rel:
                return False
    return True


class PartialRankingPoset(GradedPoset):
    """Strict partial orders on a fixed item set, ordered by inclusion."""

    name = "partial-ranking"
    has_join = False

    def __init__(self, items: Sequence | int):
        if isinstance(items, int):
            items = tuple(range(items))
        self.items = tuple(items)
        if len(set(self.items)) != len(self.items):
            raise ValueError("duplicate item labels")
        self.p = len(self.items)

    @property
    def least(self) -> PartialRanking:
        return PartialRanking(self.items, frozenset())

    def check_member(self, x: PartialRanking) -> None:
        if not isinstance(x, PartialRanking) or x.items != self.items:
            raise FamilyMismatchError("expected PartialRanking over the same items")

    def rank(self, x: PartialRanking) -> int:
        return len(x.relation)

    def precedes(self, x: PartialRanking, y: PartialRanking) -> bool:
        return x.relation <= y.relation

    def rho(self, x: PartialRanking, y: PartialRanking) -> int:
        return len(x.relation & y.relation)

    def upward_covers(self, x: PartialRanking) -> list[PartialRanking]:
        covers = []
        for a in range(self.p):
            for b in range(self.p):
                if a == b or (a, b) in x.relation or (b, a) in x.relation:
                    continue
                rel = x.relation | {(a, b)}
                if _is_transitive(rel):
                    covers.append(PartialRanking(self.items, rel))
        return sorted(covers, key=self.sort_key)

    def added_pair(self, pair: CoveringPair) -> tuple[int, int]:
        diff = pair.upper.relation - pair.lower.relation
        if len(diff) != 1 or not pair.lower.relation <= pair.upper.relation:
            raise ValueError("not a covering pair of the partial-ranking poset")
        return next(iter(diff))

    def sort_key(self, x: PartialRanking) -> tuple:
        return tuple(sorted(x.relation))

    def max_rank(self) -> int:
        return self.p * (self.p - 1) // 2

    def minimal_covering_pairs(self) -> MinimalCoveringSet:
        # single-pair relations against the empty relation; all at rank 1
        stratum = tuple(
            CoveringPair(self.least, PartialRanking(self.items, frozenset([(a, b)])))
            for a in range(self.p)
            for b in range(self.p)
            if a != b
        )
        return MinimalCoveringSet(
            family=self.name,
            pairs_by_rank={1: stratum},
            counts_paper={1: self.p * (self.p - 1)},
        )
