"""Greedy sequential model selection with stability or testing criteria.

The greedy loop grows a path from the least element, at each step taking
the cover with the smallest step criterion and stopping once the best
criterion exceeds the threshold.  The stability criterion measures the
fraction of subsample estimates that fail to support the step; the
testing criterion is a p-value for the step adding no discovery.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .core import CoveringPair, GradedPoset, NoJoinError, PathCertificate


class DegenerateDataError(ValueError):
    """Sample statistics cannot support the requested test."""


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float
    B: int = 100
    seed: int = 0
    step_cap: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.B <= 0 or self.B % 2:
            raise ValueError("B must be a positive even integer")


def make_complementary_bags(n: int, B: int, seed: int | np.random.Generator) -> list[np.ndarray]:
    """B index bags as B/2 random partitions of {0..n-1} into two halves.

    Bags 2l and 2l+1 are disjoint and cover the data; for odd n their
    sizes are floor(n/2) and ceil(n/2).  Deterministic given the seed.
    """
    if B <= 0 or B % 2:
        raise ValueError("B must be a positive even integer")
    if n < 2:
        raise ValueError("need at least two observations to split")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bags = []
    half = n // 2
    for _ in range(B // 2):
        perm = rng.permutation(n)
        bags.append(np.sort(perm[:half]))
        bags.append(np.sort(perm[half:]))
    return bags


@dataclass(frozen=True)
class SubsampleBags:
    """Complementary subsample index bags plus per-bag base estimates."""

    bags: tuple[np.ndarray, ...]
    estimates: tuple[Any, ...]

    def __post_init__(self) -> None:
        if len(self.bags) != len(self.estimates):
            raise ValueError("one estimate per bag required")

    @property
    def B(self) -> int:
        return len(self.bags)

    @classmethod
    def build(
        cls,
        n: int,
        B: int,
        seed: int,
        fit: Callable[[np.ndarray], Any],
        threads: int = 1,
    ) -> "SubsampleBags":
        bags = make_complementary_bags(n, B, seed)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                estimates = tuple(pool.map(fit, bags))
        else:
            estimates = tuple(fit(bag) for bag in bags)
        return cls(bags=tuple(bags), estimates=estimates)

    def refit(self, fit: Callable[[np.ndarray], Any], threads: int = 1) -> "SubsampleBags":
        """Same bags, new base estimator (used by the tuning loop)."""
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                estimates = tuple(pool.map(fit, self.bags))
        else:
            estimates = tuple(fit(bag) for bag in self.bags)
        return SubsampleBags(bags=self.bags, estimates=estimates)


def psi_stable(poset: GradedPoset, pair: CoveringPair, estimates: Sequence[Any]) -> float:
    """1 - average normalized similarity increment over the bag estimates."""
    c = poset.cover_normalizer(pair)
    total = 0
    for est in estimates:
        f = poset.rho(pair.upper, est) - poset.rho(pair.lower, est)
        assert 0 <= f <= c, f"increment {f} outside [0, {c}]"
        total += Fraction(f, c)
    value = 1 - Fraction(total, len(estimates))
    assert 0 <= value <= 1
    return float(value)


class StablePsi:
    """Stability criterion with per-element caching of rho against bags.

    The greedy loop evaluates every candidate cover against every bag
    estimate; rho(x, estimate) vectors are cached so the current lower
    element is scored once per step.
    """

    def __init__(self, poset: GradedPoset, estimates: Sequence[Any]):
        self.poset = poset
        self.estimates = tuple(estimates)
        self._rho_cache: dict[Any, tuple[int, ...]] = {}

    def rho_vector(self, x: Any) -> tuple[int, ...]:
        key = self.poset.sort_key(x)
        vec = self._rho_cache.get(key)
        if vec is None:
            vec = tuple(self.poset.rho(x, est) for est in self.estimates)
            self._rho_cache[key] = vec
        return vec

    def __call__(self, pair: CoveringPair) -> float:
        c = self.poset.cover_normalizer(pair)
        lo = self.rho_vector(pair.lower)
        hi = self.rho_vector(pair.upper)
        total = 0
        for f_lo, f_hi in zip(lo, hi):
            f = f_hi - f_lo
            assert 0 <= f <= c, f"increment {f} outside [0, {c}]"
            total += f
        value = 1 - total / (c * len(self.estimates))
        assert -1e-12 <= value <= 1 + 1e-12
        return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class SelectionStep:
    pair: CoveringPair
    psi: float
    n_candidates: int


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple[SelectionStep, ...]
    final: Any
    stop_reason: str  # threshold-exceeded | no-covers | step-cap

    def path(self) -> PathCertificate:
        return PathCertificate(steps=tuple(s.pair for s in self.steps))

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def greedy_select(
    poset: GradedPoset,
    psi: Callable[[CoveringPair], float],
    config: SelectionConfig,
) -> SelectionTrace:
    """Grow a path from the least element, minimizing psi at each step.

    Ties in the argmin break by the canonical encoding of the cover.
    Stops when the best psi exceeds alpha, no covers exist, or the step
    cap is hit (recorded in the stop reason, not raised).
    """
    u = poset.least
    steps: list[SelectionStep] = []
    cap = config.step_cap
    if cap is None:
        cap = poset.max_rank()
    while True:
        if cap is not None and len(steps) >= cap:
            return SelectionTrace(tuple(steps), u, "step-cap")
        covers = poset.upward_covers(u)
        if not covers:
            return SelectionTrace(tuple(steps), u, "no-covers")
        best_pair = None
        best_val = math.inf
        for v in sorted(covers, key=poset.sort_key):
            pair = CoveringPair(u, v)
            val = psi(pair)
            if val < best_val:
                best_val = val
                best_pair = pair
        if best_val > config.alpha:
            return SelectionTrace(tuple(steps), u, "threshold-exceeded")
        steps.append(SelectionStep(best_pair, best_val, len(covers)))
        u = best_pair.upper


def gaussian_mean_pvalue(
    mean_low: float,
    var_low: float,
    n_low: int,
    mean_high: float,
    var_high: float,
    n_high: int,
) -> float:
    """One-sided z-test p-value that the 'high' group outranks the 'low' one.

    Small values support promoting the high group above the low group,
    i.e. adding that ordered pair as a discovery.
    """
    if n_low < 2 or n_high < 2:
        raise DegenerateDataError("need at least two observations per group")
    se2 = var_low / n_low + var_high / n_high
    if se2 <= 0:
        raise DegenerateDataError("zero pooled variance")
    z = (mean_high - mean_low) / math.sqrt(se2)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


class TestPsi:
    """Testing criterion over a per-pair p-value provider with caching.

    The provider maps a covering pair's canonical added comparison to a
    p-value; equal-profile covering pairs share one cached value.
    """

    def __init__(
        self,
        provider: Callable[[CoveringPair], float],
        representative: Callable[[CoveringPair], Any] | None = None,
    ):
        self.provider = provider
        self.representative = representative
        self._cache: dict[Any, float] = {}

    def __call__(self, pair: CoveringPair) -> float:
        if self.representative is None:
            return float(self.provider(pair))
        key = self.representative(pair)
        val = self._cache.get(key)
        if val is None:
            val = float(self.provider(pair))
            self._cache[key] = val
        return val


def join_combine(poset: GradedPoset, results: Sequence[Any]) -> Any:
    """Join of selection results (traces or elements); needs a join family."""
    if not poset.has_join:
        raise NoJoinError(f"{poset.name} poset does not possess joins")
    elements = [r.final if isinstance(r, SelectionTrace) else r for r in results]
    if not elements:
        raise ValueError("nothing to combine")
    return poset.join(elements)
