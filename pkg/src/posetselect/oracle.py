"""Brute-force ground truth for small instances.

Full enumeration of every family, definitional checks of minimal
covering sets, exact maximization for cover normalizers, and Monte Carlo
false-discovery estimation.  Everything here is deliberately simple and
definitional; closed forms elsewhere are tested against these outputs.
Hard caps are module constants and exceeding one raises, never truncates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .core import (
    CoveringPair,
    GradedPoset,
    MinimalCoveringSet,
    PathCertificate,
    SizeCapError,
    discovery_report,
)
from .families.boolean import BooleanPoset, VariableSubset
from .families.changepoint import ChangepointPoset, ChangepointVector
from .families.cpdag import (
    Cpdag,
    CpdagPoset,
    Dag,
    RestrictedCpdagPoset,
    dag_to_cpdag,
    is_star_forest,
)
from .families.partition import (
    Partition,
    PartitionPoset,
    ReversePartitionPoset,
    partition_from_labels,
)
from .families.ranking import (
    PartialRanking,
    PartialRankingPoset,
    TotalRanking,
    TotalRankingPoset,
)

CAP_SUBSETS_P = 5
CAP_PARTITION_P = 5
CAP_PERMUTATION_P = 5
CAP_PARTIAL_ORDER_P = 4
CAP_CPDAG_P = 4
CAP_CHANGEPOINT_CELLS = 100_000


@dataclass
class EnumeratedUniverse:
    poset: GradedPoset
    elements: tuple
    index: dict
    below: np.ndarray  # below[i, j] == True iff elements[i] <= elements[j]

    @property
    def size(self) -> int:
        return len(self.elements)

    def ranks(self) -> np.ndarray:
        return np.array([self.poset.rank(x) for x in self.elements])

    def covers_of(self, x: Any) -> list:
        """Covers read off the enumerated order relation (definitional)."""
        i = self.index[self.poset.sort_key(x)]
        r = self.poset.rank(x)
        out = []
        for j, y in enumerate(self.elements):
            if j != i and self.below[i, j] and self.poset.rank(y) == r + 1:
                out.append(y)
        return out

    def covering_pairs(self) -> list[CoveringPair]:
        ranks = self.ranks()
        pairs = []
        for i, x in enumerate(self.elements):
            for j, y in enumerate(self.elements):
                if self.below[i, j] and ranks[j] == ranks[i] + 1:
                    pairs.append(CoveringPair(x, y))
        return pairs

    def meet_rho_matrix(self) -> np.ndarray:
        """rho_meet for all pairs by exhaustive maximization."""
        ranks = self.ranks()
        n = self.size
        out = np.zeros((n, n), dtype=np.int64)
        order = np.argsort(-ranks)
        below = self.below
        for a in range(n):
            cols = below[:, a]
            for b in range(n):
                both = cols & below[:, b]
                for z in order:
                    if both[z]:
                        out[a, b] = ranks[z]
                        break
        return out


def _all_set_partitions(p: int) -> list[Partition]:
    parts: list[Partition] = []

    def grow(e: int, labels: list[int], n_used: int) -> None:
        if e == p:
            parts.append(partition_from_labels(p, labels))
            return
        for lab in range(n_used + 1):
            labels.append(lab)
            grow(e + 1, labels, max(n_used, lab + 1))
            labels.pop()

    grow(0, [], 0)
    return parts


def all_dags(p: int) -> list[Dag]:
    pairs = list(combinations(range(p), 2))
    out = []
    for states in product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (u, v), s in zip(pairs, states):
            if s == 1:
                edges.append((u, v))
            elif s == 2:
                edges.append((v, u))
        try:
            out.append(Dag(p, frozenset(edges)))
        except ValueError:
            continue
    return out


def all_cpdags(p: int) -> list[Cpdag]:
    seen: dict[tuple, Cpdag] = {}
    for g in all_dags(p):
        c = dag_to_cpdag(g)
        seen.setdefault(c.key(), c)
    return sorted(seen.values(), key=lambda c: c.key())


def enumerate_universe(poset: GradedPoset) -> EnumeratedUniverse:
    """Exact, duplicate-free enumeration with the full order relation."""
    if isinstance(poset, BooleanPoset):
        if poset.p > CAP_SUBSETS_P:
            raise SizeCapError(f"subset enumeration capped at p={CAP_SUBSETS_P}")
        elements: Sequence[Any] = [
            VariableSubset(poset.p, frozenset(c))
            for r in range(poset.p + 1)
            for c in combinations(range(poset.p), r)
        ]
    elif isinstance(poset, (PartitionPoset, ReversePartitionPoset)):
        if poset.p > CAP_PARTITION_P:
            raise SizeCapError(f"partition enumeration capped at p={CAP_PARTITION_P}")
        elements = _all_set_partitions(poset.p)
    elif isinstance(poset, ChangepointPoset):
        cells = poset.p * (poset.horizon + 1) ** poset.p
        if cells > CAP_CHANGEPOINT_CELLS:
            raise SizeCapError(
                f"changepoint enumeration capped at {CAP_CHANGEPOINT_CELLS} cells"
            )
        elements = [
            ChangepointVector(poset.p, poset.horizon, times)
            for times in product(range(poset.horizon + 1), repeat=poset.p)
        ]
    elif isinstance(poset, TotalRankingPoset):
        if poset.p > CAP_PERMUTATION_P:
            raise SizeCapError(f"permutation enumeration capped at p={CAP_PERMUTATION_P}")
        elements = poset.all_rankings()
    elif isinstance(poset, PartialRankingPoset):
        if poset.p > CAP_PARTIAL_ORDER_P:
            raise SizeCapError(
                f"partial-order enumeration capped at |S|={CAP_PARTIAL_ORDER_P}"
            )
        ordered = [(a, b) for a in range(poset.p) for b in range(poset.p) if a != b]
        elements = []
        for mask in range(1 << len(ordered)):
            rel = frozenset(e for k, e in enumerate(ordered) if mask >> k & 1)
            try:
                elements.append(PartialRanking(poset.items, rel))
            except ValueError:
                continue
    elif isinstance(poset, RestrictedCpdagPoset):
        if poset.p > CAP_CPDAG_P:
            raise SizeCapError(f"CPDAG enumeration capped at p={CAP_CPDAG_P}")
        elements = [c for c in all_cpdags(poset.p) if is_star_forest(c)]
    elif isinstance(poset, CpdagPoset):
        if poset.p > CAP_CPDAG_P:
            raise SizeCapError(f"CPDAG enumeration capped at p={CAP_CPDAG_P}")
        elements = all_cpdags(poset.p)
    else:
        raise ValueError(f"no enumerator for poset family {poset.name!r}")
    elements = tuple(sorted(elements, key=poset.sort_key))
    n = len(elements)
    below = np.zeros((n, n), dtype=bool)
    for i, x in enumerate(elements):
        for j, y in enumerate(elements):
            below[i, j] = poset.precedes(x, y)
    index = {poset.sort_key(x): i for i, x in enumerate(elements)}
    return EnumeratedUniverse(poset=poset, elements=elements, index=index, below=below)


def bruteforce_cover_normalizer(universe: EnumeratedUniverse, pair: CoveringPair) -> int:
    """Exact max of rho(upper, z) - rho(lower, z) over the whole universe."""
    poset = universe.poset
    return max(
        poset.rho(pair.upper, z) - poset.rho(pair.lower, z) for z in universe.elements
    )


def increment_profile(
    poset: GradedPoset, pair: CoveringPair, universe: Iterable[Any]
) -> tuple[int, ...]:
    return tuple(
        poset.rho(pair.upper, z) - poset.rho(pair.lower, z) for z in universe
    )


@dataclass
class MinimalSetReport:
    bullet1_violations: tuple[CoveringPair, ...]
    bullet2_collisions: tuple[tuple[CoveringPair, CoveringPair], ...]
    counts_enumerated: dict[int, int]
    counts_paper: dict[int, int]

    @property
    def passed(self) -> bool:
        return not self.bullet1_violations and not self.bullet2_collisions


def verify_minimal_set(
    universe: EnumeratedUniverse,
    candidate: MinimalCoveringSet,
    covering_pairs: Sequence[CoveringPair] | None = None,
) -> MinimalSetReport:
    """Check both defining properties of a minimal covering set.

    Bullet 1: every covering pair of the universe has a member with an
    identical increment profile and no larger upper rank.  Bullet 2:
    distinct members are separated by some element.  ``covering_pairs``
    narrows the test to a sub-collection (the causal family restricts to
    star-forest pairs).
    """
    poset = universe.poset
    elements = universe.elements
    members = candidate.all_pairs
    member_profiles = [increment_profile(poset, m, elements) for m in members]
    member_rank = [poset.rank(m.upper) for m in members]
    profile_to_min_rank: dict[tuple, int] = {}
    for prof, r in zip(member_profiles, member_rank):
        profile_to_min_rank[prof] = min(r, profile_to_min_rank.get(prof, r))

    pairs = (
        list(covering_pairs) if covering_pairs is not None else universe.covering_pairs()
    )
    bullet1 = []
    for pair in pairs:
        prof = increment_profile(poset, pair, elements)
        r = profile_to_min_rank.get(prof)
        if r is None or r > poset.rank(pair.upper):
            bullet1.append(pair)

    bullet2 = []
    seen: dict[tuple, CoveringPair] = {}
    for m, prof in zip(members, member_profiles):
        if prof in seen:
            bullet2.append((seen[prof], m))
        else:
            seen[prof] = m
    return MinimalSetReport(
        bullet1_violations=tuple(bullet1),
        bullet2_collisions=tuple(bullet2),
        counts_enumerated=candidate.counts_enumerated,
        counts_paper=dict(candidate.counts_paper),
    )


def brute_force_minimal_set(universe: EnumeratedUniverse) -> MinimalCoveringSet:
    """Minimal covering set by profile grouping (fallback construction)."""
    poset = universe.poset
    groups: dict[tuple, CoveringPair] = {}
    for pair in universe.covering_pairs():
        prof = increment_profile(poset, pair, universe.elements)
        cur = groups.get(prof)
        if cur is None or (
            poset.rank(pair.upper),
            poset.sort_key(pair.upper),
            poset.sort_key(pair.lower),
        ) < (
            poset.rank(cur.upper),
            poset.sort_key(cur.upper),
            poset.sort_key(cur.lower),
        ):
            groups[prof] = pair
    by_rank: dict[int, list[CoveringPair]] = {}
    for pair in groups.values():
        by_rank.setdefault(poset.rank(pair.upper), []).append(pair)
    for v in by_rank.values():
        v.sort(key=lambda pr: (poset.sort_key(pr.upper), poset.sort_key(pr.lower)))
    return MinimalCoveringSet(
        family=poset.name,
        pairs_by_rank={k: tuple(v) for k, v in sorted(by_rank.items())},
    )


def random_path(
    poset: GradedPoset, rng: np.random.Generator, max_steps: int
) -> PathCertificate:
    """A uniformly random cover walk from the least element."""
    steps = []
    x = poset.least
    length = int(rng.integers(0, max_steps + 1))
    for _ in range(length):
        covers = poset.upward_covers(x)
        if not covers:
            break
        y = covers[int(rng.integers(len(covers)))]
        steps.append(CoveringPair(x, y))
        x = y
    return PathCertificate(steps=tuple(steps))


@dataclass
class MonteCarloFd:
    trials: int
    mean_fd: float
    stderr_fd: float
    p_fd_positive: float
    stderr_p: float
    mean_td: float


def monte_carlo_fd(
    run_trial: Callable[[np.random.Generator], tuple[Any, Any]],
    poset: GradedPoset,
    trials: int,
    seed: int,
) -> MonteCarloFd:
    """Run independent trials of (estimate, truth) and tally exact FD.

    ``run_trial`` receives a per-trial generator and returns the selected
    model and the truth; discovery accounting is exact via rho.
    """
    fds = np.zeros(trials)
    tds = np.zeros(trials)
    seqs = np.random.SeedSequence(seed).spawn(trials)
    for t in range(trials):
        rng = np.random.default_rng(seqs[t])
        estimate, truth = run_trial(rng)
        report = discovery_report(poset, estimate, truth)
        fds[t] = report.false_discovery
        tds[t] = report.true_discovery
    positive = fds > 0
    phat = positive.mean() if trials else 0.0
    return MonteCarloFd(
        trials=trials,
        mean_fd=float(fds.mean()) if trials else 0.0,
        stderr_fd=float(fds.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        p_fd_positive=float(phat),
        stderr_p=float(math.sqrt(phat * (1 - phat) / trials)) if trials else 0.0,
        mean_td=float(tds.mean()) if trials else 0.0,
    )
