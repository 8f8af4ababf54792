"""Pearson correlation, Student's t-test and the feature-analysis tables."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..corpus import DIMENSIONS, Dataset
from ..features import FeatureMatrix
from ..numerics import make_rng, student_t_two_sided_p

UNDEFINED = math.nan


def is_undefined(value) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value))


def pearson(a, b) -> float:
    """Pearson's r; NaN (undefined) when either vector is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if len(a) < 2:
        raise ValueError("pearson needs at least 2 points")
    if np.all(a == a[0]) or np.all(b == b[0]):
        return UNDEFINED
    da = a - a.mean()
    db = b - b.mean()
    r = float(da @ db / math.sqrt(float(da @ da) * float(db @ db)))
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int

    def to_json(self) -> dict:
        return {"t": self.t, "p": self.p, "df": self.df, "mean_a": self.mean_a, "mean_b": self.mean_b,
                "n_a": self.n_a, "n_b": self.n_b}


def student_ttest(a, b) -> TTestResult:
    """Two-sample pooled-variance t-test, two-sided."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError(f"each group needs at least 2 members, got {na} and {nb}")
    ma, mb = float(a.mean()), float(b.mean())
    df = na + nb - 2
    pooled = (float(((a - ma) ** 2).sum()) + float(((b - mb) ** 2).sum())) / df
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    diff = ma - mb
    if se == 0.0:
        t = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    else:
        t = diff / se
    return TTestResult(t, student_t_two_sided_p(t, df), df, ma, mb, na, nb)


GROUPINGS = {
    "gender": (lambda r: r.profile.gender == "male", "male", "female"),
    "first_tier_vs_rest": (lambda r: r.profile.living_place == "first_tier", "first_tier", "rest"),
}


def group_ttest(dataset: Dataset, grouping: str, dimension: str) -> TTestResult:
    """t-test of ``dimension`` between the two groups of ``grouping`` (group a listed first)."""
    if grouping not in GROUPINGS:
        raise ValueError(f"unknown grouping {grouping!r}; expected one of {sorted(GROUPINGS)}")
    in_a = GROUPINGS[grouping][0]
    a = [r.labels[dimension] for r in dataset.records if in_a(r)]
    b = [r.labels[dimension] for r in dataset.records if not in_a(r)]
    if not a or not b:
        raise ValueError(f"grouping {grouping!r} leaves an empty group")
    return student_ttest(a, b)


def label_table(dataset: Dataset) -> np.ndarray:
    """n x 8 integer label matrix in canonical dimension order."""
    return np.array([r.labels.as_tuple() for r in dataset.records], dtype=float).reshape(len(dataset), len(DIMENSIONS))


def feature_correlations(matrix: FeatureMatrix, labels) -> dict:
    """``{feature: {dimension: r}}``; NaN marks constant features."""
    labels = np.asarray(labels, dtype=float)
    if labels.shape != (matrix.values.shape[0], len(DIMENSIONS)):
        raise ValueError(f"labels shape {labels.shape} does not align with {matrix.values.shape[0]} feature rows")
    return {
        name: {d: pearson(matrix.values[:, j], labels[:, k]) for k, d in enumerate(DIMENSIONS)}
        for j, name in enumerate(matrix.columns)
    }


def age_correlations(dataset: Dataset) -> dict:
    ages = np.array([r.profile.age for r in dataset.records], dtype=float)
    table = label_table(dataset)
    return {d: pearson(ages, table[:, k]) for k, d in enumerate(DIMENSIONS)}


def random_guess(n: int, label_range, seed: int = 0) -> np.ndarray:
    """Uniform random guesses over the declared label range, the no-information baseline."""
    lo, hi = label_range
    if lo > hi:
        raise ValueError(f"empty label range {label_range}")
    return make_rng(seed, 0x9E55).uniform(lo, hi, size=n)


def random_guess_gamma(labels, label_range, seed: int = 0) -> float:
    y = np.asarray(labels, dtype=float)
    return pearson(random_guess(len(y), label_range, seed), y)
