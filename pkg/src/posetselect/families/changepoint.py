"""Multiple-changepoint poset: time vectors in {0..T}^p, reverse product order.

An entry of T means "no change"; earlier change times give higher rank.
x precedes y iff x_j >= y_j for all coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..core import CoveringPair, FamilyMismatchError, GradedPoset, MinimalCoveringSet


@dataclass(frozen=True)
class ChangepointVector:
    p: int
    horizon: int
    times: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.times) != self.p:
            raise ValueError("times length must equal p")
        if any(not 0 <= t <= self.horizon for t in self.times):
            raise ValueError("times out of range")

    def key(self) -> tuple:
        return (self.p, self.horizon, self.times)


class ChangepointPoset(GradedPoset):
    name = "changepoint"
    has_join = True

    def __init__(self, p: int, horizon: int):
        if p < 1 or horizon < 1:
            raise ValueError("p and horizon must be positive")
        self.p = p
        self.horizon = horizon

    @property
    def least(self) -> ChangepointVector:
        return ChangepointVector(self.p, self.horizon, (self.horizon,) * self.p)

    def check_member(self, x: ChangepointVector) -> None:
        if (
            not isinstance(x, ChangepointVector)
            or x.p != self.p
            or x.horizon != self.horizon
        ):
            raise FamilyMismatchError(
                f"expected ChangepointVector with p={self.p}, horizon={self.horizon}"
            )

    def rank(self, x: ChangepointVector) -> int:
        return self.p * self.horizon - sum(x.times)

    def precedes(self, x: ChangepointVector, y: ChangepointVector) -> bool:
        return all(a >= b for a, b in zip(x.times, y.times))

    def rho(self, x: ChangepointVector, y: ChangepointVector) -> int:
        return self.p * self.horizon - sum(
            max(a, b) for a, b in zip(x.times, y.times)
        )

    def upward_covers(self, x: ChangepointVector) -> list[ChangepointVector]:
        covers = []
        for i, t in enumerate(x.times):
            if t > 0:
                times = x.times[:i] + (t - 1,) + x.times[i + 1 :]
                covers.append(ChangepointVector(self.p, self.horizon, times))
        return covers

    def sort_key(self, x: ChangepointVector) -> tuple:
        return x.key()

    def join(self, elements: Sequence[ChangepointVector]) -> ChangepointVector:
        times = [self.horizon] * self.p
        for x in elements:
            self.check_member(x)
            times = [min(a, b) for a, b in zip(times, x.times)]
        return ChangepointVector(self.p, self.horizon, tuple(times))

    def max_rank(self) -> int:
        return self.p * self.horizon

    def minimal_covering_pairs(self) -> MinimalCoveringSet:
        """One pair per (coordinate, time step), all other coordinates at T.

        Decrementing coordinate i from t to t-1 yields increment profile
        I[z_i <= t-1], so (i, t) determines the profile; the smallest-rank
        representative has every other coordinate equal to T.
        """
        pairs_by_rank: dict[int, tuple[CoveringPair, ...]] = {}
        T = self.horizon
        for k in range(1, T + 1):
            t = T + 1 - k
            stratum = []
            for i in range(self.p):
                base = [T] * self.p
                base[i] = t
                lower = ChangepointVector(self.p, T, tuple(base))
                base[i] = t - 1
                upper = ChangepointVector(self.p, T, tuple(base))
                stratum.append(CoveringPair(lower, upper))
            pairs_by_rank[k] = tuple(stratum)
        return MinimalCoveringSet(
            family=self.name,
            pairs_by_rank=pairs_by_rank,
            counts_paper={k: self.p for k in range(1, T + 1)},
        )
