"""The dimension x feature set x algorithm grid and its two renderings."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..corpus import ABBREVIATIONS, DIMENSIONS, Dataset
from ..features import FAMILIES, FeatureMatrix, WindowSpec, build_matrix, family_label, parse_families, FeatureRegistry
from ..folds import make_folds
from ..lexicon import Lexicon
from ..regressors import ALGORITHMS, Hyperparameters
from .crossval import EvalResult, cross_validate_matrix

DEFAULT_COMBOS = ("D", "B", "L", "D+B", "D+L", "B+L", "D+B+L")
BASELINE = "D"
REPORT_SCHEMA = 1
ALGORITHM_LABELS = {"stepwise": "Stepwise", "lasso": "LASSO", "mars": "MARS", "svr": "SVR"}


@dataclass(frozen=True)
class SweepReport:
    dimensions: tuple
    combos: tuple
    algorithms: tuple
    cells: tuple                  # EvalResult, ordered by (combo, algorithm, dimension)
    seed: int
    folds: int
    n_users: int
    hyperparameters: dict
    window: dict

    def cell(self, dimension: str, combo: str, algorithm: str) -> EvalResult:
        for c in self.cells:
            if (c.dimension, c.families, c.algorithm) == (dimension, combo, algorithm):
                return c
        raise KeyError((dimension, combo, algorithm))

    def best(self) -> dict:
        """Best cell per dimension: highest pooled gamma, then fewer features, then algorithm order."""
        out = {}
        for d in self.dimensions:
            cands = [c for c in self.cells if c.dimension == d and not c.degenerate]
            if not cands:
                out[d] = None
                continue
            out[d] = min(cands, key=lambda c: (-c.gamma_pooled, c.mean_selected, ALGORITHMS.index(c.algorithm)))
        return out

    def to_json(self) -> dict:
        best = self.best()
        return {
            "schema": REPORT_SCHEMA,
            "seed": self.seed,
            "folds": self.folds,
            "n_users": self.n_users,
            "dimensions": list(self.dimensions),
            "combos": list(self.combos),
            "baseline": BASELINE,
            "algorithms": list(self.algorithms),
            "hyperparameters": self.hyperparameters,
            "window": self.window,
            "best": {d: None if c is None else {"families": c.families, "algorithm": c.algorithm,
                                                "gamma_pooled": c.gamma_pooled}
                     for d, c in best.items()},
            "cells": [c.to_json() for c in self.cells],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "SweepReport":
        return cls(
            dimensions=tuple(obj["dimensions"]),
            combos=tuple(obj["combos"]),
            algorithms=tuple(obj["algorithms"]),
            cells=tuple(EvalResult.from_json(c) for c in obj["cells"]),
            seed=obj["seed"],
            folds=obj["folds"],
            n_users=obj["n_users"],
            hyperparameters=obj["hyperparameters"],
            window=obj["window"],
        )

    @classmethod
    def loads(cls, text: str) -> "SweepReport":
        return cls.from_json(json.loads(text))


def _fmt(g: float) -> str:
    return "n/a" if math.isnan(g) else f"{g:.3f}"


def render_text(report: SweepReport) -> str:
    """Plain-text grid: dimensions as columns, feature set x algorithm as rows."""
    dims = report.dimensions
    head = ["Feature Set", "Algorithm", *(ABBREVIATIONS[d] for d in dims)]
    rows = []
    ordered = [c for c in report.combos if c != BASELINE] + [c for c in report.combos if c == BASELINE]
    for combo in ordered:
        label = "Feature Set Baseline" if combo == BASELINE else combo
        for k, algo in enumerate(report.algorithms):
            rows.append([label if k == 0 else "", ALGORITHM_LABELS[algo],
                         *(_fmt(report.cell(d, combo, algo).gamma_pooled) for d in dims)])
    best = report.best()
    rows.append(["Best Sensing Result", "", *(_fmt(math.nan if best[d] is None else best[d].gamma_pooled)
                                              for d in dims)])
    widths = [max(len(r[i]) for r in [head, *rows]) for i in range(len(head))]

    def line(cells):
        left = f"{cells[0]:<{widths[0]}}  {cells[1]:<{widths[1]}}"
        return (left + "".join(f"  {c:>{w}}" for c, w in zip(cells[2:], widths[2:]))).rstrip()

    rule = "-" * len(line(head))
    out = [f"gamma: Pearson correlation of pooled {report.folds}-fold predictions with questionnaire scores "
           f"(n={report.n_users}, seed={report.seed})", rule, line(head), rule]
    for i, r in enumerate(rows):
        if r[0] and i > 0 or r[0] == "Best Sensing Result":
            out.append(rule)
        out.append(line(r))
    out.append(rule)
    for d in dims:
        b = best[d]
        src = "all cells degenerate" if b is None else f"{b.families} / {ALGORITHM_LABELS[b.algorithm]}"
        out.append(f"best {ABBREVIATIONS[d]:<5} {src}")
    return "\n".join(out) + "\n"


def _run_cell(args):
    matrix, y, algorithm, hp, plan, dimension = args
    return cross_validate_matrix(matrix, y, algorithm, hp, plan, dimension)


def run_sweep(dataset: Dataset, combos=DEFAULT_COMBOS, algorithms=ALGORITHMS, hp: Hyperparameters | None = None,
              window: WindowSpec = WindowSpec(), lexicon: Lexicon | None = None, seed: int = 0, folds: int = 5,
              dimensions=DIMENSIONS, jobs: int = 1) -> SweepReport:
    combos = tuple(family_label(c) for c in combos)
    if not combos:
        raise ValueError("at least one feature-set combination is required")
    algorithms = tuple(algorithms)
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise ValueError(f"unknown algorithms {unknown}")
    hp = hp or Hyperparameters()
    union = parse_families({f for c in combos for f in parse_families(c)})
    full = build_matrix(dataset, union, window, lexicon)
    registry = FeatureRegistry.for_lexicon(lexicon)
    plan = make_folds(len(dataset), folds, seed)
    tasks, keys = [], []
    for combo in combos:
        sub: FeatureMatrix = full.select_families(parse_families(combo), registry)
        for algo in algorithms:
            for d in dimensions:
                tasks.append((sub, dataset.label_column(d), algo, hp, plan, d))
                keys.append((combo, algo, d))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        results = [_run_cell(t) for t in tasks]
    return SweepReport(
        dimensions=tuple(dimensions),
        combos=combos,
        algorithms=algorithms,
        cells=tuple(results),
        seed=seed,
        folds=folds,
        n_users=len(dataset),
        hyperparameters=hp.to_json(),
        window=window.to_json(),
    )


__all__ = ["BASELINE", "DEFAULT_COMBOS", "FAMILIES", "SweepReport", "render_text", "run_sweep"]
