"""Base estimators applied to subsample bags.

Rankings come from a Bradley-Terry fit followed by greedy path
extraction with a complexity threshold; partitions from seeded k-means
(optionally silhouette-selected k); CPDAGs from a penalized-likelihood
hill-climb over DAGs.  All estimators are deterministic given their
inputs and seed and emit canonical poset elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .families.cpdag import Cpdag, Dag, dag_to_cpdag
from .families.partition import Partition, partition_from_labels
from .families.ranking import (
    PartialRanking,
    PartialRankingPoset,
    TotalRanking,
    TotalRankingPoset,
)
from .selection import DegenerateDataError

BT_TOL = 1e-8
BT_MAX_ITER = 20_000


@dataclass(frozen=True)
class ComparisonData:
    """Pairwise win counts; wins[i, j] is how often i beat j."""

    p: int
    wins: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.wins)
        if w.shape != (self.p, self.p):
            raise ValueError("wins must be a p x p matrix")
        if (w < 0).any() or np.diag(w).any():
            raise ValueError("wins must be nonnegative with zero diagonal")

    @classmethod
    def from_triples(cls, p: int, triples: Iterable[tuple[int, int, int, int]]) -> "ComparisonData":
        wins = np.zeros((p, p), dtype=np.int64)
        for i, j, wij, wji in triples:
            wins[i, j] += wij
            wins[j, i] += wji
        return cls(p, wins)


@dataclass(frozen=True)
class BtWeights:
    """Positive Bradley-Terry strengths, normalized to sum to p."""

    weights: np.ndarray
    iterations: int
    converged: bool
    log_likelihood: float

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if (w <= 0).any():
            raise ValueError("weights must be positive")
        if abs(w.sum() - len(w)) > 1e-6:
            raise ValueError("weights must be normalized to sum to p")


def _bt_loglik(wins: np.ndarray, w: np.ndarray) -> float:
    # sum over ordered pairs of wins_ij * log(w_i / (w_i + w_j))
    p = len(w)
    logw = np.log(w)
    denom = np.log(w[:, None] + w[None, :] + np.eye(p))
    mask = ~np.eye(p, dtype=bool)
    return float((wins * (logw[:, None] - denom))[mask].sum())


def bradley_terry_mle(
    data: ComparisonData,
    epsilon: float = 0.01,
    tol: float = BT_TOL,
    max_iter: int = BT_MAX_ITER,
) -> BtWeights:
    """Minorize-maximize fixed point of the Bradley-Terry likelihood.

    ``epsilon`` pseudo-counts on every ordered pair guarantee a maximizer
    even on disconnected comparison graphs.  The (smoothed) likelihood is
    asserted nondecreasing across iterations.
    """
    p = data.p
    if p < 2:
        raise ValueError("need at least two items")
    wins = data.wins.astype(float) + epsilon * (1 - np.eye(p))
    games = wins + wins.T
    total_wins = wins.sum(axis=1)
    if (total_wins <= 0).any():
        raise DegenerateDataError("an item has no wins and no smoothing")
    w = np.ones(p)
    last = _bt_loglik(wins, w)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        denom = (games / (w[:, None] + w[None, :] + np.eye(p))).sum(axis=1)
        w_new = total_wins / denom
        w_new *= p / w_new.sum()
        cur = _bt_loglik(wins, w_new)
        assert cur >= last - 1e-9 * max(1.0, abs(last)), "MM step decreased likelihood"
        delta = np.abs(w_new - w).max() / w.max()
        w = w_new
        last = cur
        if delta < tol:
            converged = True
            break
    return BtWeights(weights=w, iterations=it, converged=converged, log_likelihood=last)


# ---------------------------------------------------------------------------
# greedy ranking paths


def _total_ranking_trajectory(
    weights: np.ndarray, poset: TotalRankingPoset
) -> tuple[list[tuple[int, ...]], list[float]]:
    """Greedy cover walk by largest weight gap; the threshold only truncates.

    Returns the visited orders after each step and the step values.
    """
    p = poset.p
    order = list(range(p))
    orders: list[tuple[int, ...]] = []
    values: list[float] = []
    while True:
        best_val = -math.inf
        best_r = -1
        for r in range(p - 1):
            i, j = order[r], order[r + 1]
            if i < j:  # swap would add inversion (i, j)
                val = weights[j] - weights[i]
                if val > best_val:
                    best_val = val
                    best_r = r
        if best_r < 0 or best_val <= 0:
            break
        order[best_r], order[best_r + 1] = order[best_r + 1], order[best_r]
        orders.append(tuple(order))
        values.append(best_val)
    return orders, values


def _partial_ranking_trajectory(
    weights: np.ndarray, poset: PartialRankingPoset
) -> tuple[list[frozenset], list[float]]:
    p = poset.p
    rel: set[tuple[int, int]] = set()
    rels: list[frozenset] = []
    values: list[float] = []
    while True:
        best_val = -math.inf
        best_pair = None
        for a in range(p):
            for b in range(p):
                if a == b or (a, b) in rel or (b, a) in rel:
                    continue
                val = weights[b] - weights[a]
                if val <= best_val:
                    continue
                candidate = rel | {(a, b)}
                if _transitive(candidate):
                    best_val = val
                    best_pair = (a, b)
        if best_pair is None or best_val <= 0:
            break
        rel.add(best_pair)
        rels.append(frozenset(rel))
        values.append(best_val)
    return rels, values


def _transitive(rel: set[tuple[int, int]]) -> bool:
    succ: dict[int, set[int]] = {}
    for a, b in rel:
        succ.setdefault(a, set()).add(b)
    for a, b in rel:
        for c in succ.get(b, ()):
            if (a, c) not in rel:
                return False
    return True


class RankingPathEstimator:
    """Caches the full greedy trajectory; the threshold truncates it.

    The greedy step choice never depends on the threshold, so one
    trajectory serves the whole knob grid.
    """

    def __init__(self, weights: BtWeights | np.ndarray, poset: TotalRankingPoset | PartialRankingPoset):
        w = weights.weights if isinstance(weights, BtWeights) else np.asarray(weights, dtype=float)
        if len(w) != poset.p:
            raise ValueError("one weight per item required")
        self.poset = poset
        if isinstance(poset, TotalRankingPoset):
            self._states, self._values = _total_ranking_trajectory(w, poset)
        else:
            self._states, self._values = _partial_ranking_trajectory(w, poset)

    def estimate(self, lam: float):
        if lam < 0:
            raise ValueError("the threshold must be nonnegative")
        depth = 0
        for val in self._values:
            if val > lam:
                depth += 1
            else:
                break
        if isinstance(self.poset, TotalRankingPoset):
            if depth == 0:
                return self.poset.least
            return TotalRanking(self.poset.items, self._states[depth - 1])
        if depth == 0:
            return self.poset.least
        return PartialRanking(self.poset.items, self._states[depth - 1])


def ranking_path_estimate(
    weights: BtWeights | np.ndarray,
    poset: TotalRankingPoset | PartialRankingPoset,
    lam: float,
):
    """Greedy path estimate: add the largest-gap comparison while > lam."""
    return RankingPathEstimator(weights, poset).estimate(lam)


# ---------------------------------------------------------------------------
# k-means and silhouette


def _kmeans_once(
    data: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 200
) -> tuple[np.ndarray, float]:
    m = data.shape[0]
    # k-means++ seeding
    centers = np.empty((k, data.shape[1]))
    first = int(rng.integers(m))
    centers[0] = data[first]
    d2 = ((data - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = data[int(rng.integers(m))]
        else:
            centers[c] = data[int(rng.choice(m, p=d2 / total))]
        d2 = np.minimum(d2, ((data - centers[c]) ** 2).sum(axis=1))
    assign: np.ndarray | None = None
    obj = math.inf
    for _ in range(max_iter):
        dists = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dists.argmin(axis=1)
        # keep every cluster nonempty: steal the farthest point
        stole = False
        for c in range(k):
            if not (new_assign == c).any():
                far = dists[np.arange(m), new_assign].argmax()
                new_assign[far] = c
                stole = True
        new_obj = float(dists[np.arange(m), new_assign].sum())
        if not stole:
            assert new_obj <= obj + 1e-9, "k-means objective increased"
        if assign is not None and (new_assign == assign).all():
            break
        assign = new_assign
        obj = new_obj
        for c in range(k):
            centers[c] = data[assign == c].mean(axis=0)
    return assign, obj


def kmeans_estimate(data: np.ndarray, k: int, seed: int, restarts: int = 5) -> Partition:
    """Seeded k-means++ with Lloyd iterations; best of ``restarts`` runs."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be 2-D (points x features)")
    m = data.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"k must lie in 1..{m}")
    best: tuple[float, np.ndarray] | None = None
    for seq in np.random.SeedSequence(seed).spawn(restarts):
        assign, obj = _kmeans_once(data, k, np.random.default_rng(seq))
        if best is None or obj < best[0] - 1e-12:
            best = (obj, assign)
    return partition_from_labels(m, best[1].tolist())


def silhouette_select_k(data: np.ndarray, grid: Sequence[int], seed: int) -> int:
    """The grid k maximizing mean silhouette width; ties go to smaller k."""
    data = np.asarray(data, dtype=float)
    m = data.shape[0]
    grid = sorted(set(grid))
    if not grid:
        raise ValueError("empty k grid")
    if len(grid) == 1:
        return grid[0]
    if any(not 2 <= k <= m - 1 for k in grid):
        raise ValueError("k grid must lie within 2..m-1")
    dist = np.sqrt(((data[:, None, :] - data[None, :, :]) ** 2).sum(axis=2))
    if not dist.any():
        raise DegenerateDataError("all pairwise distances are zero")
    best_k, best_s = None, -math.inf
    for k in grid:
        labels = np.array(kmeans_estimate(data, k, seed).labels())
        scores = np.zeros(m)
        for i in range(m):
            same = labels == labels[i]
            if same.sum() <= 1:
                continue  # silhouette of a singleton is 0
            a = dist[i, same].sum() / (same.sum() - 1)
            b = min(
                dist[i, labels == c].mean() for c in range(k) if c != labels[i]
            )
            scores[i] = (b - a) / max(a, b)
        s = float(scores.mean())
        if s > best_s + 1e-12:
            best_k, best_s = k, s
    return best_k


# ---------------------------------------------------------------------------
# penalized-likelihood DAG search


class _GaussianDagScore:
    """Decomposable Gaussian score with per-(node, parents) caching."""

    def __init__(self, data: np.ndarray, penalty_mult: float):
        data = np.asarray(data, dtype=float)
        n, d = data.shape
        if n <= d:
            raise ValueError("need more observations than variables")
        centered = data - data.mean(axis=0)
        self.S = centered.T @ centered
        self.n = n
        self.d = d
        if np.linalg.matrix_rank(self.S) < d:
            raise DegenerateDataError("singular covariance")
        self.penalty = penalty_mult * math.log(n) / 2.0
        self._cache: dict[tuple, float] = {}

    def node_loglik(self, node: int, parents: tuple[int, ...]) -> float:
        key = (node, parents)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if parents:
            idx = list(parents)
            spp = self.S[np.ix_(idx, idx)]
            spn = self.S[idx, node]
            resid = self.S[node, node] - spn @ np.linalg.solve(spp, spn)
        else:
            resid = self.S[node, node]
        var = max(resid / self.n, 1e-12)
        val = -0.5 * self.n * (math.log(2 * math.pi * var) + 1)
        self._cache[key] = val
        return val

    def total(self, parents_of: list[tuple[int, ...]]) -> float:
        ll = sum(self.node_loglik(i, ps) for i, ps in enumerate(parents_of))
        edges = sum(len(ps) for ps in parents_of)
        return ll - self.penalty * edges


class _DagSearch:
    def __init__(self, score: _GaussianDagScore):
        self.score = score
        self.d = score.d
        self.parents: list[set[int]] = [set() for _ in range(self.d)]

    def node_ll(self, i: int) -> float:
        return self.score.node_loglik(i, tuple(sorted(self.parents[i])))

    def total(self) -> float:
        edges = sum(len(p) for p in self.parents)
        return sum(self.node_ll(i) for i in range(self.d)) - self.score.penalty * edges

    def reaches(self, src: int, dst: int, skip: tuple[int, int] | None = None) -> bool:
        seen = {src}
        stack = [src]
        while stack:
            x = stack.pop()
            if x == dst:
                return True
            for y in range(self.d):
                if x in self.parents[y] and (x, y) != skip and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def best_move(self) -> tuple[float, tuple] | None:
        score, parents = self.score, self.parents
        best_gain, best_move = 1e-9, None
        for u in range(self.d):
            for v in range(self.d):
                if u == v:
                    continue
                if u in parents[v]:
                    old = self.node_ll(v)
                    parents[v].discard(u)
                    gain = (
                        score.node_loglik(v, tuple(sorted(parents[v])))
                        - old
                        + score.penalty
                    )
                    parents[v].add(u)
                    if gain > best_gain:
                        best_gain, best_move = gain, ("del", u, v)
                    if not self.reaches(u, v, skip=(u, v)):
                        old_u = self.node_ll(u)
                        parents[v].discard(u)
                        parents[u].add(v)
                        gain = (
                            score.node_loglik(v, tuple(sorted(parents[v])))
                            + score.node_loglik(u, tuple(sorted(parents[u])))
                            - old
                            - old_u
                        )
                        parents[u].discard(v)
                        parents[v].add(u)
                        if gain > best_gain:
                            best_gain, best_move = gain, ("rev", u, v)
                elif v not in parents[u] and not self.reaches(v, u):
                    old = self.node_ll(v)
                    parents[v].add(u)
                    gain = (
                        score.node_loglik(v, tuple(sorted(parents[v])))
                        - old
                        - score.penalty
                    )
                    parents[v].discard(u)
                    if gain > best_gain:
                        best_gain, best_move = gain, ("add", u, v)
        return (best_gain, best_move) if best_move is not None else None

    def apply(self, move: tuple) -> None:
        op, u, v = move
        if op == "add":
            self.parents[v].add(u)
        elif op == "del":
            self.parents[v].discard(u)
        else:
            self.parents[v].discard(u)
            self.parents[u].add(v)

    def descend(self) -> None:
        while True:
            found = self.best_move()
            if found is None:
                return
            self.apply(found[1])

    def covered_edges(self) -> list[tuple[int, int]]:
        # u -> v is covered when parents(v) = parents(u) + {u}; reversing
        # it stays inside the equivalence class (likelihood unchanged)
        out = []
        for v in range(self.d):
            for u in sorted(self.parents[v]):
                if self.parents[v] - {u} == self.parents[u]:
                    out.append((u, v))
        return out

    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((u, v) for v in range(self.d) for u in self.parents[v])


def bic_hillclimb_cpdag(data: np.ndarray, penalty_mult: float = 1.0, seed: int = 0) -> Cpdag:
    """Greedy best-improvement DAG search, returned as its CPDAG.

    Moves add, delete, or reverse one edge; the score is the Gaussian
    log-likelihood minus penalty_mult * (log n / 2) per edge.  Local
    optima caused by an early arbitrary orientation are escaped by
    flipping covered edges (staying in the equivalence class) and
    re-descending while the score strictly improves.  Deterministic
    (canonical move order); the seed is accepted for interface
    uniformity.
    """
    score = _GaussianDagScore(data, penalty_mult)
    search = _DagSearch(score)
    search.descend()
    current = search.total()
    for _ in range(100):
        improved = False
        for u, v in search.covered_edges():
            saved = [set(p) for p in search.parents]
            search.apply(("rev", u, v))
            search.descend()
            candidate = search.total()
            if candidate > current + 1e-9:
                current = candidate
                improved = True
                break
            search.parents = saved
        if not improved:
            break
    dag = Dag(score.d, search.edges())
    empty_ll = sum(score.node_loglik(i, ()) for i in range(score.d))
    assert current >= empty_ll - 1e-6
    return dag_to_cpdag(dag)
