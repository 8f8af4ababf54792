"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are also
collected into an "acceptance criteria" section of the terminal summary.
"""
import hashlib
import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import criterion
from oracles import orthonormal_design, soft_threshold, svr_dual_reference, svr_kkt_violation
from swbsense.cli import main
from swbsense.corpus import DIMENSIONS
from swbsense.evaluation import (cross_validate_matrix, fit_fold, make_folds, pearson, random_guess_gamma,
                                 student_ttest)
from swbsense.features import FeatureRegistry, build_matrix
from swbsense.lexicon import build_lexicon, load_demo_lexicon
from swbsense.numerics import make_rng
from swbsense.regressors import (ALGORITHMS, LassoParams, RegressionProblem, StepwiseParams, SvrParams, fit_lasso,
                                 fit_mars, fit_stepwise, predict)
from swbsense.regressors.svr import kernel_matrix, solve_dual
from swbsense.synth import demo_config, generate_corpus

pytestmark = pytest.mark.slow


def _problem(X, y):
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    return RegressionProblem(X, np.asarray(y, dtype=float), tuple(f"x{j}" for j in range(X.shape[1])))


@pytest.fixture(scope="module")
def lexicon():
    return load_demo_lexicon()


@pytest.fixture(scope="module")
def demo_corpora(lexicon):
    """Ten bundled-config corpora at full size with their D+B+L matrices."""
    out = []
    for seed in range(10):
        ds = generate_corpus(demo_config(), seed=seed)
        out.append((ds, build_matrix(ds, "D,B,L", lexicon=lexicon)))
    return out


@pytest.fixture(scope="module")
def stepwise_gammas(demo_corpora):
    """Pooled stepwise gamma per (seed, dimension) for D+B+L and for D alone."""
    registry = FeatureRegistry.for_lexicon(load_demo_lexicon())
    full = np.empty((len(demo_corpora), len(DIMENSIONS)))
    demo = np.empty_like(full)
    for s, (ds, m) in enumerate(demo_corpora):
        plan = make_folds(len(ds), 5, s)
        d_only = m.select_families(("D",), registry)
        for k, d in enumerate(DIMENSIONS):
            y = ds.label_column(d)
            full[s, k] = cross_validate_matrix(m, y, "stepwise", plan=plan).gamma_pooled
            demo[s, k] = cross_validate_matrix(d_only, y, "stepwise", plan=plan).gamma_pooled
    return full, demo


# 1 ------------------------------------------------------------------------------

def _direct(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b)) / n
    va = sum((x - ma) ** 2 for x in a) / n
    vb = sum((y - mb) ** 2 for y in b) / n
    return cov / math.sqrt(va * vb)


def test_criterion_01_pearson_oracle():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        a = rng.normal(size=50) * rng.uniform(0.1, 10) + rng.uniform(-5, 5)
        b = 0.3 * a + rng.normal(size=50)
        worst = max(worst, abs(pearson(a, b) - _direct(a.tolist(), b.tolist())))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    criterion(1, "pearson oracle", ok, f"max |diff| {worst:.2e} over 1000 pairs, {elapsed:.2f}s")
    assert ok


# 2 ------------------------------------------------------------------------------

def _permuted_guess_in_band(ds, seed):
    d = DIMENSIONS[seed % len(DIMENSIONS)]
    y = make_rng(seed, 7).permutation(ds.label_column(d))
    return abs(random_guess_gamma(y, ds.metadata.label_ranges[d], seed=seed)) <= 0.05


def test_criterion_02_random_guess_band(demo_corpora):
    ds, m = demo_corpora[0]
    t0 = time.perf_counter()
    inside = sum(_permuted_guess_in_band(ds, seed) for seed in range(200))
    elapsed = time.perf_counter() - t0
    # long-run rate; the exact null probability at n=1785 is 0.965
    long_run = np.mean([_permuted_guess_in_band(ds, seed) for seed in range(5000)])
    # the learned pipeline on permuted labels, for reference only (see README)
    plan = make_folds(len(ds), 5, 0)
    piped = np.array([cross_validate_matrix(m, make_rng(seed, 7).permutation(ds.label_column(
        DIMENSIONS[seed % len(DIMENSIONS)])), "stepwise", plan=plan).gamma_pooled for seed in range(200)])
    defined = piped[~np.isnan(piped)]
    ok = inside >= 190 and elapsed < 120
    criterion(2, "random-guess band", ok,
              f"uniform guess in [-0.05, 0.05] for {inside}/200 seeds ({elapsed:.1f}s), {long_run:.3f} over 5000; "
              f"diagnostic stepwise D+B+L: {np.sum(np.abs(defined) <= 0.05)}/200 in band, "
              f"{len(piped) - len(defined)} undefined, mean {defined.mean():+.3f}")
    assert ok


# 3 ------------------------------------------------------------------------------

def test_criterion_03_convergent_validity_band(stepwise_gammas):
    full, _ = stepwise_gammas
    in_band = bool(np.all((full >= 0.39) & (full <= 0.68)))
    dev = np.nanmax(np.abs(full - np.nanmean(full, axis=0)))
    ok = in_band and dev <= 0.05
    criterion(3, "convergent-validity band", ok,
              f"stepwise D+B+L gamma in [{np.nanmin(full):.3f}, {np.nanmax(full):.3f}] over 10 seeds x 8 "
              f"dimensions, largest deviation from the dimension mean {dev:.3f}")
    assert ok


# 4 ------------------------------------------------------------------------------

def test_criterion_04_baseline_ordering(stepwise_gammas):
    full, demo = stepwise_gammas
    first_full, first_demo = full[0], demo[0]
    ordered = bool(np.all(first_demo < first_full))
    weak = bool(np.all(first_demo <= 0.3))
    ordered_all = int(np.sum(demo < full))
    ok = ordered and weak
    criterion(4, "baseline ordering", ok,
              f"seed 0: D-only max {np.nanmax(first_demo):.3f} vs D+B+L min {np.nanmin(first_full):.3f}; "
              f"D < D+B+L in {ordered_all}/80 seed x dimension pairs, D-only max over seeds {np.nanmax(demo):.3f}")
    assert ok


# 5 ------------------------------------------------------------------------------

def test_criterion_05_lasso_soft_threshold():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        n, p = int(rng.integers(30, 200)), int(rng.integers(2, 20))
        X = orthonormal_design(rng, n, p)
        y = X @ rng.normal(0, 2, size=p) + rng.normal(size=n) + 3.0
        ols = X.T @ (y - y.mean()) / n
        lam = rng.uniform(0, 1.2) * np.max(np.abs(ols))
        m = fit_lasso(_problem(X, y), LassoParams(lambda_=lam))
        got = np.zeros(p)
        for name, c in zip(m.features, m.params["coefficients"]):
            got[int(name[1:])] = c
        worst = max(worst, float(np.max(np.abs(got - soft_threshold(ols, lam)))))
    ok = worst < 1e-6
    criterion(5, "lasso closed form", ok, f"max coefficient error {worst:.2e} over 100 orthonormal designs")
    assert ok


# 6 ------------------------------------------------------------------------------

def _planted_support(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(500, 20))
    y = X[:, [1, 4, 9]].sum(axis=1) + 0.1 * rng.normal(size=500)
    return _problem(X, y)


def test_criterion_06_stepwise_support_recovery():
    truth = {"x1", "x4", "x9"}
    # entry threshold Bonferroni-adjusted for the 20 candidates (see README)
    strict = StepwiseParams(alpha_enter=0.05 / 20, alpha_remove=0.005)
    hits = sum(set(fit_stepwise(_planted_support(s), strict).features) == truth for s in range(100))
    default = sum(set(fit_stepwise(_planted_support(s)).features) == truth for s in range(100))
    superset = sum(truth <= set(fit_stepwise(_planted_support(s)).features) for s in range(100))
    ok = hits >= 95
    criterion(6, "stepwise support recovery", ok,
              f"exact support {hits}/100 at alpha 0.0025/0.005; diagnostic at default 0.05/0.10: "
              f"exact {default}/100, superset {superset}/100")
    assert ok


# 7 ------------------------------------------------------------------------------

def test_criterion_07_mars_hinge_recovery():
    good, gcv_ok = 0, 0
    for seed in range(50):
        rng = np.random.default_rng(700 + seed)
        x = rng.uniform(0, 1, 200)
        y = np.maximum(0, x - 0.5) + 0.03 * rng.normal(size=200)
        m = fit_mars(_problem(x, y))
        pred = predict(m, x[:, None], ["x0"])
        r2 = 1 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2)
        near = any(abs(k - 0.5) <= 0.05 for _, k, _ in m.params["basis"])
        good += r2 >= 0.95 and near
        gcv_ok += m.metadata["gcv"] <= m.metadata["unpruned_gcv"]
    ok = good >= 48 and gcv_ok == 50
    criterion(7, "mars hinge recovery", ok, f"R2 and knot ok in {good}/50 seeds, pruned GCV <= unpruned in {gcv_ok}/50")
    assert ok


# 8 ------------------------------------------------------------------------------

def test_criterion_08_svr_oracle_and_kkt():
    gap = 0.0
    for seed in range(5):
        rng = np.random.default_rng(800 + seed)
        X = rng.uniform(size=(30, 3))
        y = np.sin(3 * X[:, 0]) + X[:, 1] + 0.1 * rng.normal(size=30)
        K = kernel_matrix(X, X, "rbf", 1 / 3)
        _, _, obj, _, _ = solve_dual(K, y, 1.0, 0.1, tol=1e-6)
        gap = max(gap, abs(obj - svr_dual_reference(K, y, 1.0, 0.1)[1]))
    passed, worst = 0, 0.0
    for seed in range(50):
        rng = np.random.default_rng(850 + seed)
        n, p = int(rng.integers(20, 80)), int(rng.integers(1, 6))
        kernel = ("rbf", "linear")[seed % 2]
        hp = SvrParams(kernel=kernel, C=float(rng.choice([0.5, 1.0, 5.0])), epsilon=float(rng.choice([0.05, 0.1, 0.3])))
        X = rng.normal(size=(n, p))
        y = X @ rng.normal(size=p) + np.sin(X[:, 0]) + 0.3 * rng.normal(size=n)
        K = kernel_matrix(X, X, kernel, 1.0 / p)
        beta, b, _, _, conv = solve_dual(K, y, hp.C, hp.epsilon, hp.tol)
        v = svr_kkt_violation(K, y, beta, b, hp.C, hp.epsilon)
        worst = max(worst, v)
        passed += conv and v <= hp.tol and np.all(np.abs(beta) <= hp.C + 1e-12) and abs(beta.sum()) < 1e-9
    ok = gap < 1e-4 and passed == 50
    criterion(8, "svr oracle", ok, f"dual objective gap {gap:.2e} on 5 problems of 30 rows; KKT audit "
              f"{passed}/50 (worst violation {worst:.1e})")
    assert ok


# 9 ------------------------------------------------------------------------------

def test_criterion_09_leakage(lexicon):
    ds = generate_corpus(demo_config(n_users=120), seed=9)
    m = build_matrix(ds, "D,B,L", lexicon=lexicon)
    rng = np.random.default_rng(9)
    same = 0
    for trial in range(20):
        algo = ALGORITHMS[trial % len(ALGORITHMS)]
        d = DIMENSIONS[trial % len(DIMENSIONS)]
        y = np.array(ds.label_column(d), dtype=float)
        plan = make_folds(len(y), 5, trial)
        fold = int(rng.integers(5))
        base, _ = fit_fold(m, y, plan, fold, algo)
        test = plan.test_rows(fold)
        rows = test if trial % 2 else rng.choice(test, size=1)
        X2, y2 = m.values.copy(), y.copy()
        X2[rows] = X2[rows] * rng.uniform(-50, 50, size=(len(rows), X2.shape[1])) + 1e3
        y2[rows] = rng.uniform(-1e3, 1e3, size=len(rows))
        pert, _ = fit_fold(replace(m, values=X2), y2, plan, fold, algo)
        same += pert.dumps() == base.dumps()
    ok = same == 20
    criterion(9, "leakage", ok, f"serialized models identical in {same}/20 perturbation trials")
    assert ok


# 10 -----------------------------------------------------------------------------

def test_criterion_10_grid_shape_and_determinism(tmp_path):
    data = tmp_path / "c.jsonl"
    assert main(["generate", "--n", "200", "--seed", "10", "--out", str(data)]) == 0
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["sweep", "--dataset", str(data), "--lexicon", "demo", "--seed", "10",
                     "--out-dir", str(out)]) == 0
        runs.append(out)
    cells = len(json.loads((runs[0] / "report.json").read_text(encoding="utf-8"))["cells"])
    assert main(["report", str(runs[0] / "report.json"), "--out", str(tmp_path / "again.txt")]) == 0
    rerender = (tmp_path / "again.txt").read_bytes() == (runs[0] / "report.txt").read_bytes()
    h = [hashlib.sha256((r / "report.json").read_bytes()).hexdigest() for r in runs]
    ok = cells == 224 and rerender and h[0] == h[1]
    criterion(10, "grid shape", ok, f"{cells} cells; re-render identical: {rerender}; "
              f"rerun hashes equal: {h[0] == h[1]}")
    assert ok


# 11 -----------------------------------------------------------------------------

def test_criterion_11_feature_counts(lexicon):
    ds = generate_corpus(demo_config(n_users=5), seed=11)
    big = build_lexicon([(i, f"cat{i}") for i in range(1, 89)], {f"w{i}": [i] for i in range(1, 89)})
    counts = {f: build_matrix(ds, f, lexicon=lexicon).shape[1] for f in ("D", "B", "L")}
    k88 = build_matrix(ds, "L", lexicon=big).shape[1]
    total = build_matrix(ds, "D,B,L", lexicon=big).shape[1]
    ok = counts == {"D": 3, "B": 26, "L": lexicon.size} and k88 == 88 and total == 117
    criterion(11, "feature counts", ok, f"D={counts['D']} B={counts['B']} L={counts['L']} (K={lexicon.size}); "
              f"88-category lexicon: L={k88}, D+B+L={total}")
    assert ok


# 12 -----------------------------------------------------------------------------

def test_criterion_12_ttest_calibration():
    rng = np.random.default_rng(12)
    worst_p = max(student_ttest(rng.normal(1.0, 1.0, 200), rng.normal(0.0, 1.0, 200)).p for _ in range(100))
    null_rate = np.mean([student_ttest(rng.normal(size=200), rng.normal(size=200)).p < 0.05 for _ in range(1000)])
    ok = worst_p < 0.005 and 0.03 <= null_rate <= 0.08
    criterion(12, "t-test calibration", ok, f"largest p with a 1-sd effect {worst_p:.1e} over 100 draws; "
              f"null rejection rate at 0.05: {null_rate:.3f}")
    assert ok
