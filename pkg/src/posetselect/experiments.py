"""Synthetic designs and end-to-end trial runners.

Three designs: pairwise-comparison total ranking, Gaussian variable
clustering, and linear-SEM causal structure.  Each trial draws data,
tunes the base estimator so the expected-false-discovery bound meets the
design target, runs the stability selection, and scores it against the
known truth; the matching non-subsampled baseline runs on the same draw.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .bounds import TuneResult, estimate_qk, make_bound_report, tune_to_bound
from .core import GradedPoset, discovery_report
from .estimators import (
    ComparisonData,
    RankingPathEstimator,
    _GaussianDagScore,
    bic_hillclimb_cpdag,
    bradley_terry_mle,
    kmeans_estimate,
    silhouette_select_k,
)
from .families.cpdag import Cpdag, Dag, RestrictedCpdagPoset, dag_to_cpdag
from .families.partition import Partition, PartitionPoset, partition_from_blocks
from .families.ranking import TotalRanking, TotalRankingPoset
from .selection import SelectionConfig, StablePsi, greedy_select, make_complementary_bags

DEFAULT_B = 100
DEFAULT_ALPHA = 0.3

RANKING_LAMBDA_GRID = (
    0.5, 0.3, 0.2, 0.12, 0.08, 0.05, 0.03, 0.02, 0.012, 0.008, 0.005, 0.002, 0.0,
)
CAUSAL_MULT_GRID = (6.0, 4.0, 3.0, 2.0, 1.5, 1.0)


@dataclass(frozen=True)
class RankingDesign:
    p: int = 30
    n: int = 300
    tau: float = 0.97
    swaps: tuple[tuple[int, int], ...] = ((0, 2), (7, 9), (14, 16), (19, 21), (24, 26))
    target: float = 3.0

    def __post_init__(self) -> None:
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if any(not 0 <= a < self.p and 0 <= b < self.p for a, b in self.swaps):
            raise ValueError("swap indices out of range")

    @classmethod
    def desk(cls) -> "RankingDesign":
        full = cls()
        swaps = tuple((a, b) for a, b in full.swaps if a < 15 and b < 15)
        return cls(p=15, n=300, tau=0.97, swaps=swaps)

    def setting(self) -> str:
        return f"p={self.p},tau={self.tau},n={self.n}"


@dataclass(frozen=True)
class ClusteringDesign:
    p: int = 20
    big_blocks: tuple[int, ...] = (5, 5)
    d: float = 3.0
    n: int = 90
    noise_sd: float = 0.5  # covariance I/4
    target: float = 3.0

    def __post_init__(self) -> None:
        if sum(self.big_blocks) > self.p:
            raise ValueError("blocks exceed the variable count")

    @classmethod
    def desk(cls) -> "ClusteringDesign":
        return cls(p=12, big_blocks=(4, 4), d=3.0, n=90)

    def truth_partition(self) -> Partition:
        blocks = []
        start = 0
        for size in self.big_blocks:
            blocks.append(range(start, start + size))
            start += size
        blocks.extend([i] for i in range(start, self.p))
        return partition_from_blocks(self.p, blocks)

    def setting(self) -> str:
        return f"p={self.p},d={self.d},n={self.n}"


@dataclass(frozen=True)
class CausalDesign:
    p: int = 10
    edge_prob: float = 0.13
    coef_range: tuple[float, float] = (0.5, 0.7)
    noise_var: float = 0.25
    n: int = 1400
    target: float = 2.0

    def __post_init__(self) -> None:
        if not 0 <= self.edge_prob < 1:
            raise ValueError("edge probability must lie in [0, 1)")

    @classmethod
    def desk(cls) -> "CausalDesign":
        return cls(p=8, edge_prob=0.13, n=1400)

    def setting(self) -> str:
        return f"p={self.p},v={self.edge_prob},n={self.n}"


# ---------------------------------------------------------------------------
# generators


def pair_index(p: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(p) for j in range(i + 1, p)]


def ranking_truth(design: RankingDesign) -> tuple[np.ndarray, TotalRanking]:
    w = design.tau ** np.arange(design.p)
    for a, b in design.swaps:
        w[a], w[b] = w[b], w[a]
    order = tuple(int(i) for i in np.argsort(-w, kind="stable"))
    return w, TotalRanking(tuple(range(design.p)), order)


def gen_ranking_data(
    design: RankingDesign, rng: np.random.Generator
) -> tuple[np.ndarray, TotalRanking]:
    """Game outcomes per round and pair (1 = lower-index item won)."""
    w, truth = ranking_truth(design)
    pairs = pair_index(design.p)
    probs = np.array([w[i] / (w[i] + w[j]) for i, j in pairs])
    outcomes = (rng.random((design.n, len(pairs))) < probs).astype(np.uint8)
    return outcomes, truth


def comparisons_from_outcomes(
    p: int, outcomes: np.ndarray, rows: np.ndarray | None = None
) -> ComparisonData:
    data = outcomes if rows is None else outcomes[rows]
    won = data.sum(axis=0)
    total = data.shape[0]
    wins = np.zeros((p, p), dtype=np.int64)
    for idx, (i, j) in enumerate(pair_index(p)):
        wins[i, j] = won[idx]
        wins[j, i] = total - won[idx]
    return ComparisonData(p, wins)


def gen_clustering_data(
    design: ClusteringDesign, rng: np.random.Generator
) -> tuple[np.ndarray, Partition]:
    """n x p x 2 draws; variables in cluster i have mean (i/d, 0)."""
    truth = design.truth_partition()
    means = np.zeros((design.p, 2))
    for idx, block in enumerate(truth.blocks, start=1):
        for var in block:
            means[var, 0] = idx / design.d
    data = rng.normal(0.0, design.noise_sd, size=(design.n, design.p, 2)) + means
    return data, truth


def gen_causal_data(
    design: CausalDesign, rng: np.random.Generator
) -> tuple[np.ndarray, Cpdag, Dag]:
    """Linear-SEM sample, the true CPDAG, and the generating DAG."""
    order = rng.permutation(design.p)
    edges = []
    coefs = {}
    for hi in range(design.p):
        for lo in range(hi + 1, design.p):
            if rng.random() < design.edge_prob:
                u, v = int(order[hi]), int(order[lo])
                edges.append((u, v))
                coefs[(u, v)] = rng.uniform(*design.coef_range)
    X = np.zeros((design.n, design.p))
    sd = math.sqrt(design.noise_var)
    for node_pos in range(design.p):
        node = int(order[node_pos])
        X[:, node] = rng.normal(0.0, sd, design.n)
        for (u, v), c in coefs.items():
            if v == node:
                X[:, node] += c * X[:, u]
    dag = Dag(design.p, frozenset(edges))
    return X, dag_to_cpdag(dag), dag


# ---------------------------------------------------------------------------
# per-trial pipelines


@dataclass(frozen=True)
class TrialResult:
    design: str
    setting: str
    trial: int
    method: str
    rank: int
    fd: int
    td: int
    bound: float | None
    knob: Any
    runtime_ms: float

    def __post_init__(self) -> None:
        if self.fd + self.td != self.rank:
            raise ValueError("fd + td must equal the estimate's rank")


def _result(design, setting, trial, method, poset, estimate, truth, bound, knob, t0):
    rep = discovery_report(poset, estimate, truth)
    return TrialResult(
        design=design,
        setting=setting,
        trial=trial,
        method=method,
        rank=poset.rank(estimate),
        fd=rep.false_discovery,
        td=rep.true_discovery,
        bound=bound,
        knob=knob,
        runtime_ms=(time.perf_counter() - t0) * 1000,
    )


def ranking_trial(
    design: RankingDesign,
    seed: int,
    trial: int = 0,
    B: int = DEFAULT_B,
    alpha: float = DEFAULT_ALPHA,
    lam_grid: Sequence[float] = RANKING_LAMBDA_GRID,
    methods: Sequence[str] = ("stable", "baseline"),
) -> list[TrialResult]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    outcomes, truth = gen_ranking_data(design, rng)
    poset = TotalRankingPoset(design.p)
    minimal = poset.minimal_covering_pairs()
    results = []
    if "stable" in methods:
        t0 = time.perf_counter()
        bags = make_complementary_bags(design.n, B, rng)
        paths = [
            RankingPathEstimator(
                bradley_terry_mle(comparisons_from_outcomes(design.p, outcomes, bag)),
                poset,
            )
            for bag in bags
        ]
        tuned = tune_to_bound(
            poset,
            lam_grid,
            lambda lam: [path.estimate(lam) for path in paths],
            target=design.target,
            alpha=alpha,
            minimal_set=minimal,
        )
        psi = StablePsi(poset, tuned.estimates)
        trace = greedy_select(poset, psi, SelectionConfig(alpha=alpha, B=B, seed=seed))
        results.append(
            _result("ranking", design.setting(), trial, "stable", poset,
                    trace.final, truth, tuned.report.bound, tuned.knob, t0)
        )
    if "baseline" in methods:
        t0 = time.perf_counter()
        full_fit = bradley_terry_mle(comparisons_from_outcomes(design.p, outcomes))
        estimate = RankingPathEstimator(full_fit, poset).estimate(0.0)
        results.append(
            _result("ranking", design.setting(), trial, "baseline", poset,
                    estimate, truth, None, 0.0, t0)
        )
    return results


def clustering_trial(
    design: ClusteringDesign,
    seed: int,
    trial: int = 0,
    B: int = DEFAULT_B,
    alpha: float = DEFAULT_ALPHA,
    methods: Sequence[str] = ("stable", "baseline"),
) -> list[TrialResult]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    data, truth = gen_clustering_data(design, rng)
    poset = PartitionPoset(design.p)
    minimal = poset.minimal_covering_pairs(counts_only=True)
    k_grid = list(range(design.p, 0, -1))  # k = p (all singletons) is null
    results = []
    if "stable" in methods:
        t0 = time.perf_counter()
        bags = make_complementary_bags(design.n, B, rng)
        bag_means = [data[bag].mean(axis=0) for bag in bags]
        bag_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence([seed, trial, 7]).spawn(B)]
        cache: dict[tuple[int, int], Partition] = {}

        def estimates_for(k: int) -> list[Partition]:
            out = []
            for b in range(B):
                key = (b, k)
                if key not in cache:
                    cache[key] = kmeans_estimate(bag_means[b], k, bag_seeds[b])
                out.append(cache[key])
            return out

        tuned = tune_to_bound(
            poset, k_grid, estimates_for, target=design.target,
            alpha=alpha, minimal_set=minimal,
        )
        psi = StablePsi(poset, tuned.estimates)
        trace = greedy_select(poset, psi, SelectionConfig(alpha=alpha, B=B, seed=seed))
        results.append(
            _result("clustering", design.setting(), trial, "stable", poset,
                    trace.final, truth, tuned.report.bound, tuned.knob, t0)
        )
    if "baseline" in methods:
        t0 = time.perf_counter()
        means = data.mean(axis=0)
        k = silhouette_select_k(means, range(2, design.p), seed)
        estimate = kmeans_estimate(means, k, seed)
        results.append(
            _result("clustering", design.setting(), trial, "baseline", poset,
                    estimate, truth, None, k, t0)
        )
    return results


def _holdout_multiplier(X: np.ndarray, grid: Sequence[float], rng: np.random.Generator) -> float:
    """Penalty picked by 70/30 holdout log-likelihood of the fitted SEM."""
    n = X.shape[0]
    perm = rng.permutation(n)
    cut = int(0.7 * n)
    train, valid = X[perm[:cut]], X[perm[cut:]]
    best_mult, best_ll = grid[0], -math.inf
    for mult in grid:
        c = bic_hillclimb_cpdag(train, mult, 0)
        dag = _some_extension(c)
        ll = _sem_holdout_loglik(train, valid, dag)
        if ll > best_ll + 1e-9:
            best_mult, best_ll = mult, ll
    return best_mult


def _some_extension(c: Cpdag) -> Dag:
    from .families.cpdag import consistent_extensions

    return consistent_extensions(c, cap=64)[0]


def _sem_holdout_loglik(train: np.ndarray, valid: np.ndarray, dag: Dag) -> float:
    p = train.shape[1]
    mu = train.mean(axis=0)
    tr = train - mu
    va = valid - mu
    parents: dict[int, list[int]] = {i: [] for i in range(p)}
    for u, v in dag.edges:
        parents[v].append(u)
    total = 0.0
    for node in range(p):
        ps = sorted(parents[node])
        if ps:
            coef, *_ = np.linalg.lstsq(tr[:, ps], tr[:, node], rcond=None)
            resid_tr = tr[:, node] - tr[:, ps] @ coef
            resid_va = va[:, node] - va[:, ps] @ coef
        else:
            resid_tr = tr[:, node]
            resid_va = va[:, node]
        var = max(float(resid_tr.var()), 1e-9)
        total += -0.5 * (
            len(valid) * math.log(2 * math.pi * var) + float((resid_va**2).sum()) / var
        )
    return total


def causal_trial(
    design: CausalDesign,
    seed: int,
    trial: int = 0,
    B: int = DEFAULT_B,
    alpha: float = DEFAULT_ALPHA,
    mult_grid: Sequence[float] = CAUSAL_MULT_GRID,
    methods: Sequence[str] = ("stable", "baseline"),
) -> list[TrialResult]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    X, truth, _ = gen_causal_data(design, rng)
    poset = RestrictedCpdagPoset(design.p)
    minimal = poset.minimal_covering_pairs(counts_only=True)
    results = []
    if "stable" in methods:
        t0 = time.perf_counter()
        bags = make_complementary_bags(design.n, B, rng)
        cache: dict[tuple[int, float], Cpdag] = {}

        def estimates_for(mult: float) -> list[Cpdag]:
            out = []
            for b, bag in enumerate(bags):
                key = (b, mult)
                if key not in cache:
                    cache[key] = bic_hillclimb_cpdag(X[bag], mult, 0)
                out.append(cache[key])
            return out

        tuned = tune_to_bound(
            poset, mult_grid, estimates_for, target=design.target,
            alpha=alpha, minimal_set=minimal, max_rank=design.p - 1,
        )
        psi = StablePsi(poset, tuned.estimates)
        trace = greedy_select(poset, psi, SelectionConfig(alpha=alpha, B=B, seed=seed))
        results.append(
            _result("causal", design.setting(), trial, "stable", poset,
                    trace.final, truth, tuned.report.bound, tuned.knob, t0)
        )
    if "baseline" in methods:
        t0 = time.perf_counter()
        mult = _holdout_multiplier(X, mult_grid, rng)
        estimate = bic_hillclimb_cpdag(X, mult, 0)
        # the baseline estimate is an arbitrary CPDAG, outside the
        # star-forest restriction; score it in the unrestricted family
        from .families.cpdag import CpdagPoset

        full = CpdagPoset(design.p)
        results.append(
            _result("causal", design.setting(), trial, "baseline", full,
                    estimate, truth, None, mult, t0)
        )
    return results


# ---------------------------------------------------------------------------
# trial batches and result tables


def run_trials(
    design: RankingDesign | ClusteringDesign | CausalDesign,
    trials: int,
    seed: int = 0,
    methods: Sequence[str] = ("stable", "baseline"),
    **kwargs,
) -> tuple[list[TrialResult], dict]:
    if isinstance(design, RankingDesign):
        trial_fn = ranking_trial
    elif isinstance(design, ClusteringDesign):
        trial_fn = clustering_trial
    elif isinstance(design, CausalDesign):
        trial_fn = causal_trial
    else:
        raise ValueError(f"unknown design {design!r}")
    rows: list[TrialResult] = []
    for t in range(trials):
        rows.extend(trial_fn(design, seed, trial=t, methods=methods, **kwargs))
    return rows, summarize(rows)


def summarize(rows: Sequence[TrialResult]) -> dict:
    out: dict = {}
    for method in sorted({r.method for r in rows}):
        fds = [r.fd for r in rows if r.method == method]
        tds = [r.td for r in rows if r.method == method]
        bounds = [r.bound for r in rows if r.method == method and r.bound is not None]
        n = len(fds)
        mean_fd = sum(fds) / n
        var = sum((x - mean_fd) ** 2 for x in fds) / (n - 1) if n > 1 else 0.0
        out[method] = {
            "trials": n,
            "mean_fd": mean_fd,
            "stderr_fd": math.sqrt(var / n) if n > 1 else 0.0,
            "mean_td": sum(tds) / n,
            "mean_bound": sum(bounds) / len(bounds) if bounds else None,
        }
    return out


RESULT_COLUMNS = (
    "design", "setting", "trial", "method", "rank", "fd", "td", "bound", "knob", "runtime_ms",
)


def write_results_csv(rows: Sequence[TrialResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow([
                r.design, r.setting, r.trial, r.method, r.rank, r.fd, r.td,
                "" if r.bound is None else f"{r.bound:.6g}", r.knob, f"{r.runtime_ms:.3f}",
            ])


def write_summary_csv(summary: dict, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "trials", "mean_fd", "stderr_fd", "mean_td", "mean_bound"])
        for method, stats in sorted(summary.items()):
            writer.writerow([
                method, stats["trials"], f"{stats['mean_fd']:.6g}",
                f"{stats['stderr_fd']:.6g}", f"{stats['mean_td']:.6g}",
                "" if stats["mean_bound"] is None else f"{stats['mean_bound']:.6g}",
            ])


def write_results_json(rows: Sequence[TrialResult], summary: dict, path: str | Path) -> None:
    payload = {
        "results": [
            {c: getattr(r, c if c != "trial" else "trial") for c in RESULT_COLUMNS}
            for r in rows
        ],
        "summary": summary,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
