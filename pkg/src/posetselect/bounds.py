"""Computable expected-false-discovery bounds and base-estimator tuning.

The practitioner bound sums q_k^2 / (|S_k| (1 - 2 alpha)) over nonempty
strata of a minimal covering set, with q_k the average normalized
similarity-increment mass of the subsample estimates over stratum k.
q_k has closed-form shortcuts per family (exactly equal to the
definitional double sum; the equality is fixed in tests).  The oracle
bound is its simulation-only ancestor with a known truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .core import CoveringPair, GradedPoset, MinimalCoveringSet
from .families.boolean import BooleanPoset
from .families.cpdag import (
    Cpdag,
    RestrictedCpdagPoset,
    Star,
    profile_of,
)
from .families.partition import Partition, PartitionPoset
from .families.ranking import PartialRankingPoset, TotalRankingPoset
from .selection import SubsampleBags


@dataclass(frozen=True)
class RankStratum:
    rank: int
    q: float
    count_enumerated: int
    count_paper: int


@dataclass(frozen=True)
class FdBoundReport:
    """Per-rank q estimates, stratum counts, and the summed bound value.

    q values are always computed over the enumerated distinct covering
    pairs; ``count_basis`` only switches which count enters the
    denominator.
    """

    alpha: float
    strata: tuple[RankStratum, ...]
    count_basis: str = "enumerated"

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 0.5:
            raise ValueError("the expected-FD bound needs alpha in (0, 1/2)")

    @property
    def bound(self) -> float:
        total = 0.0
        for s in self.strata:
            count = s.count_enumerated if self.count_basis == "enumerated" else s.count_paper
            if count > 0:
                total += s.q * s.q / (count * (1 - 2 * self.alpha))
        return total

    def to_rows(self) -> list[dict]:
        rows = [
            {
                "rank": s.rank,
                "q_k": s.q,
                "count_enumerated": s.count_enumerated,
                "count_paper": s.count_paper,
                "bound": self.bound,
            }
            for s in self.strata
        ]
        return rows


def refined_bound(
    q_by_rank: dict[int, float | Fraction],
    counts_by_rank: dict[int, int],
    alpha: float,
) -> float:
    """Sum of q_k^2 / (|S_k| (1 - 2 alpha)) over nonempty strata."""
    if not 0 < alpha < 0.5:
        raise ValueError("the expected-FD bound needs alpha in (0, 1/2)")
    total = 0.0
    for k, q in q_by_rank.items():
        count = counts_by_rank.get(k, 0)
        if count > 0:
            total += float(q) * float(q) / (count * (1 - 2 * alpha))
        elif q:
            raise ValueError(f"nonzero q at rank {k} but empty stratum")
    return total


def make_bound_report(
    q_by_rank: dict[int, float | Fraction],
    minimal_set: MinimalCoveringSet,
    alpha: float,
    count_basis: str = "enumerated",
) -> FdBoundReport:
    enum = minimal_set.counts_enumerated
    paper = minimal_set.counts_paper or enum
    ranks = sorted(set(q_by_rank) | set(enum))
    strata = tuple(
        RankStratum(
            rank=k,
            q=float(q_by_rank.get(k, 0)),
            count_enumerated=enum.get(k, 0),
            count_paper=paper.get(k, enum.get(k, 0)),
        )
        for k in ranks
    )
    return FdBoundReport(alpha=alpha, strata=strata, count_basis=count_basis)


# ---------------------------------------------------------------------------
# q_k estimation


def estimate_qk(
    poset: GradedPoset,
    estimates: Sequence[Any],
    minimal_set: MinimalCoveringSet | None = None,
    method: str = "auto",
    max_rank: int | None = None,
) -> dict[int, Fraction]:
    """Average normalized increment mass per rank stratum, exact rationals.

    ``auto`` picks the family shortcut when one exists and otherwise
    falls back to the definitional double sum over ``minimal_set``.
    """
    if method == "definitional":
        if minimal_set is None:
            raise ValueError("definitional q_k needs the minimal covering set")
        return _qk_definitional(poset, estimates, minimal_set)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if isinstance(poset, TotalRankingPoset):
        return _qk_total_ranking(poset, estimates)
    if isinstance(poset, PartialRankingPoset):
        return _qk_partial_ranking(poset, estimates)
    if isinstance(poset, BooleanPoset):
        return _qk_boolean(poset, estimates)
    if isinstance(poset, PartitionPoset):
        return _qk_clustering(poset, estimates)
    if isinstance(poset, RestrictedCpdagPoset):
        return _qk_causal(poset, estimates, max_rank)
    if minimal_set is None:
        raise ValueError(f"no q_k shortcut for {poset.name}; pass the minimal set")
    return _qk_definitional(poset, estimates, minimal_set)


def _qk_definitional(
    poset: GradedPoset, estimates: Sequence[Any], minimal_set: MinimalCoveringSet
) -> dict[int, Fraction]:
    B = len(estimates)
    out: dict[int, Fraction] = {}
    for k, pairs in minimal_set.pairs_by_rank.items():
        total = Fraction(0)
        for pair in pairs:
            c = poset.cover_normalizer(pair)
            for est in estimates:
                f = poset.rho(pair.upper, est) - poset.rho(pair.lower, est)
                total += Fraction(f, c)
        out[k] = total / B
    return out


def _qk_total_ranking(poset: TotalRankingPoset, estimates: Sequence[Any]) -> dict[int, Fraction]:
    # stratum k's pairs add one inversion at null-position gap k, so q_k
    # counts bag-estimate inversions at that gap
    counts = {k: 0 for k in range(1, poset.p)}
    for est in estimates:
        poset.check_member(est)
        for i, j in est.inversions:
            counts[j - i] += 1
    B = len(estimates)
    return {k: Fraction(c, B) for k, c in counts.items()}


def _qk_partial_ranking(poset: PartialRankingPoset, estimates: Sequence[Any]) -> dict[int, Fraction]:
    total = 0
    for est in estimates:
        poset.check_member(est)
        total += len(est.relation)
    return {1: Fraction(total, len(estimates))}


def _qk_boolean(poset: BooleanPoset, estimates: Sequence[Any]) -> dict[int, Fraction]:
    total = 0
    for est in estimates:
        poset.check_member(est)
        total += len(est.members)
    return {1: Fraction(total, len(estimates))}


_straddle_tables: dict[int, dict[int, dict[int, Fraction]]] = {}


def _clustering_straddle_table(p: int) -> dict[int, dict[int, Fraction]]:
    """h[k][b]: straddle mass a size-b block contributes to stratum k.

    Counts unordered disjoint splits {G1, G2} with |G1|+|G2| = k+1 that a
    fixed b-element block intersects on both sides, weighted by
    1/min(|G1|,|G2|); the count depends only on b.
    """
    table = _straddle_tables.get(p)
    if table is not None:
        return table
    def comb0(n: int, r: int) -> int:
        return math.comb(n, r) if 0 <= r <= n else 0

    table = {}
    for k in range(1, p):
        per_b: dict[int, Fraction] = {}
        for b in range(1, p + 1):
            total = Fraction(0)
            for s in range(1, k + 1):
                t = k + 1 - s
                ordered = 0
                for i in range(1, min(s, b) + 1):
                    for j in range(1, min(t, b - i) + 1):
                        ordered += (
                            comb0(b, i)
                            * comb0(p - b, s - i)
                            * comb0(b - i, j)
                            * comb0(p - b - (s - i), t - j)
                        )
                total += Fraction(ordered, 2 * min(s, t))
            per_b[b] = total
        table[k] = per_b
    _straddle_tables[p] = table
    return table


def _qk_clustering(poset: PartitionPoset, estimates: Sequence[Any]) -> dict[int, Fraction]:
    table = _clustering_straddle_table(poset.p)
    out = {k: Fraction(0) for k in range(1, poset.p)}
    for est in estimates:
        poset.check_member(est)
        for block in est.blocks:
            b = len(block)
            for k in range(1, poset.p):
                out[k] += table[k][b]
    B = len(estimates)
    return {k: v / B for k, v in out.items()}


def _qk_causal(
    poset: RestrictedCpdagPoset, estimates: Sequence[Any], max_rank: int | None
) -> dict[int, Fraction]:
    """Sum star-pair increments via per-center tables of the estimate.

    A removed leaf outside the estimate's skeleton contributes nothing,
    so the sum over stratum k collapses to per-center sums over subsets
    of the estimate's neighborhoods, weighted by closed-form counts of
    the invisible leaf/orientation completions.
    """
    p = poset.p
    top = max_rank if max_rank is not None else p - 1
    totals = {k: Fraction(0) for k in range(1, top + 1)}
    B = len(estimates)
    for est in estimates:
        if not isinstance(est, Cpdag) or est.p != p:
            raise ValueError("estimates must be CPDAGs on the same nodes")
        totals[1] += est.n_edges
        if top < 2:
            continue
        prof = profile_of(est)
        for center in range(p):
            nbrs = sorted(est.neighbors(center))
            d = len(nbrs)
            if d == 0:
                continue
            outside = p - 1 - d
            from itertools import combinations as _comb

            for a in range(1, d + 1):
                for avail in _comb(nbrs, a):
                    avail_set = frozenset(avail)
                    keys: list[frozenset[int] | None] = [None]
                    keys += [
                        frozenset(j)
                        for r in range(2, a + 1)
                        for j in _comb(avail, r)
                    ]
                    for key in keys:
                        best_v = prof.best_substar(Star(center, avail_set, key))
                        gross = 0
                        for m in avail:
                            rest = avail_set - {m}
                            if key is None:
                                ukey = None
                            else:
                                kept = key - {m}
                                ukey = kept if len(kept) >= 2 else None
                            best_u = (
                                prof.best_substar(Star(center, rest, ukey))
                                if rest
                                else 0
                            )
                            gross += best_v - best_u
                        if not gross:
                            continue
                        for k in range(max(2, a), top + 1):
                            extra = k - a
                            if extra > outside:
                                continue
                            placements = math.comb(outside, extra)
                            if key is None:
                                # completions acting undirected on avail:
                                # the undirected star, colliders fully
                                # outside, and single-projection colliders
                                orient = (
                                    1
                                    + _sum_comb_at_least(extra, 2)
                                    + a * _sum_comb_at_least(extra, 1)
                                )
                            else:
                                orient = 2**extra
                            totals[k] += gross * placements * orient
    return {k: Fraction(v, B) for k, v in totals.items()}


def _sum_comb_at_least(n: int, lo: int) -> int:
    return sum(math.comb(n, x) for x in range(lo, n + 1))


# ---------------------------------------------------------------------------
# theorem bounds and tuning


def null_pairs(
    poset: GradedPoset, pairs: Iterable[CoveringPair], truth: Any
) -> list[CoveringPair]:
    """Covering pairs adding no discovery relative to the truth."""
    return [
        pair
        for pair in pairs
        if poset.rho(pair.upper, truth) == poset.rho(pair.lower, truth)
    ]


def oracle_bound_thm1(
    poset: GradedPoset,
    minimal_set: MinimalCoveringSet,
    truth: Any,
    sub_estimates: Sequence[Any],
    alpha: float,
) -> float:
    """Oracle expected-FD bound: squared mean increments over null pairs.

    Simulation-only: needs the truth and a Monte Carlo sample of the
    subsample estimator.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("the expected-FD bound needs alpha in (0, 1/2)")
    total = 0.0
    n = len(sub_estimates)
    for pair in null_pairs(poset, minimal_set.all_pairs, truth):
        c = poset.cover_normalizer(pair)
        mean_f = (
            sum(
                poset.rho(pair.upper, est) - poset.rho(pair.lower, est)
                for est in sub_estimates
            )
            / n
        )
        total += mean_f * mean_f / ((1 - 2 * alpha) * c * c)
    return total


@dataclass(frozen=True)
class TuneResult:
    knob: Any
    report: FdBoundReport
    estimates: tuple[Any, ...]
    scanned: tuple[tuple[Any, float], ...]  # (knob, bound) in scan order


def tune_to_bound(
    poset: GradedPoset,
    knob_grid: Sequence[Any],
    estimates_for: Callable[[Any], Sequence[Any]],
    target: float,
    alpha: float,
    minimal_set: MinimalCoveringSet | None = None,
    count_basis: str = "enumerated",
    max_rank: int | None = None,
) -> TuneResult:
    """Scan knobs from most to least conservative; keep the most complex
    setting whose bound stays at or below the target.

    Falls back to the most conservative setting when nothing qualifies.
    ``estimates_for(knob)`` returns the per-bag estimates at that knob
    (typically by refitting the base estimator on the same bags).
    """
    if not len(knob_grid):
        raise ValueError("empty knob grid")
    if minimal_set is None:
        raise ValueError("a minimal covering set is required for the bound")
    chosen = None
    fallback = None
    scanned = []
    for knob in knob_grid:
        estimates = tuple(estimates_for(knob))
        q = estimate_qk(poset, estimates, minimal_set, max_rank=max_rank)
        report = make_bound_report(q, minimal_set, alpha, count_basis)
        scanned.append((knob, report.bound))
        if fallback is None:
            fallback = (knob, report, estimates)
        if report.bound <= target:
            chosen = (knob, report, estimates)
    knob, report, estimates = chosen if chosen is not None else fallback
    return TuneResult(knob=knob, report=report, estimates=estimates, scanned=tuple(scanned))


def assumption_check_total_ranking(
    poset: TotalRankingPoset, truth: Any, sub_estimates: Sequence[Any]
) -> list[dict]:
    """Both sides of the better-than-random-guessing condition per stratum.

    Reported, not enforced: with an unknown truth it is unverifiable, and
    in simulation a violation explains rather than invalidates a bound
    exceedance.
    """
    poset.check_member(truth)
    p = poset.p
    rows = []
    n = len(sub_estimates)
    for k in range(1, p):
        null_p, alt_p = [], []
        for i in range(p - k):
            j = i + k
            freq = sum((i, j) in est.inversions for est in sub_estimates) / n
            (alt_p if (i, j) in truth.inversions else null_p).append(freq)
        if not null_p or not alt_p:
            continue
        null_mean = sum(null_p) / len(null_p)
        alt_mean = sum(alt_p) / len(alt_p)
        rows.append(
            {
                "rank": k,
                "null_mean": null_mean,
                "alt_mean": alt_mean,
                "holds": null_mean <= alt_mean,
                "null_probs": tuple(null_p),
            }
        )
    return rows
