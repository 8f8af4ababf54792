from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import make_rng


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignment: np.ndarray      # fold index per row

    @property
    def n(self) -> int:
        return len(self.assignment)

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.k).tolist()


def make_folds(n: int, k: int = 5, seed: int = 0) -> FoldPlan:
    """Seeded shuffle, then round-robin fold assignment."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    order = make_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % k
    return FoldPlan(k, seed, assignment)
