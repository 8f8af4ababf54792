import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from oracles import normal_equations, orthonormal_design, soft_threshold, svr_dual_reference, svr_kkt_violation
from swbsense.numerics import RankDeficientError
from swbsense.regressors import (Hyperparameters, LassoParams, MarsParams, ModelError, RegressionProblem,
                                 StepwiseParams, SvrParams, TrainedModel, fit_lasso, fit_mars, fit_model, fit_ols,
                                 fit_stepwise, fit_svr, predict)
from swbsense.regressors.lasso import coordinate_descent, lambda_max
from swbsense.regressors.mars import candidate_knots, effective_parameters, gcv, hinge, span_parameters
from swbsense.regressors.svr import dual_objective, kernel_matrix, solve_dual

GOLDEN = Path(__file__).parent / "golden"


def problem(X, y, names=None):
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    return RegressionProblem(X, y, names or [f"x{j}" for j in range(X.shape[1])])


# -- OLS ----------------------------------------------------------------------

def test_ols_exact_line():
    x = np.linspace(0, 1, 20)
    fit = fit_ols(problem(x, 2 * x + 1))
    assert abs(fit.coefficients[0] - 2) < 1e-10 and abs(fit.intercept - 1) < 1e-10
    assert fit.df_resid == 18 and fit.rss < 1e-20


def test_ols_orthogonal_target():
    x = np.array([-2.0, -1, 0, 1, 2])
    y = np.array([1.0, -2, 2, -2, 1])       # centered and orthogonal to x
    assert abs(fit_ols(problem(x, y)).coefficients[0]) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_ols_matches_normal_equations(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(50, 5)), rng.normal(size=50)
    fit = fit_ols(problem(X, y))
    ref = normal_equations(X, y)
    pred = fit.intercept + X @ fit.coefficients
    assert np.allclose(pred, ref[0] + X @ ref[1:], atol=1e-8)


def test_ols_rank_deficiency_names_columns():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 2))
    X = np.column_stack([X, X[:, 0] - X[:, 1]])
    with pytest.raises(RankDeficientError, match="'c'"):
        fit_ols(problem(X, rng.normal(size=30), ["a", "b", "c"]))
    # a constant column duplicates the intercept
    with pytest.raises(RankDeficientError, match="'x0'"):
        fit_ols(problem(np.ones(10), np.arange(10.0)))


# -- stepwise -----------------------------------------------------------------

STRICT = StepwiseParams(alpha_enter=0.05 / 20, alpha_remove=0.005)


def _planted(seed, n=500, p=20, support=(1, 4, 9), sigma=0.1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X[:, list(support)].sum(axis=1) + sigma * rng.normal(size=n)
    return problem(X, y)


def test_stepwise_single_strong_column():
    rng = np.random.default_rng(1)
    x = rng.normal(size=100)
    m = fit_stepwise(problem(x, 3 * x + rng.normal(size=100)))
    assert m.features == ("x0",)


def test_stepwise_recovers_planted_support():
    hits = sum(set(fit_stepwise(_planted(s), STRICT).features) == {"x1", "x4", "x9"} for s in range(100))
    assert hits >= 95


def test_stepwise_null_selects_little():
    # 5 candidate columns, default alphas
    small = 0
    for s in range(100):
        rng = np.random.default_rng(1000 + s)
        small += len(fit_stepwise(problem(rng.normal(size=(200, 5)), rng.normal(size=200))).features) <= 1
    assert small >= 90


def test_stepwise_noiseless_training_predictions():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 6))
    y = 1.5 * X[:, 0] - 2 * X[:, 3] + 4
    pr = problem(X, y)
    m = fit_stepwise(pr)
    assert np.allclose(predict(m, pr.X, pr.columns), y, atol=1e-8)


def test_stepwise_skips_collinear_candidates():
    rng = np.random.default_rng(3)
    x = rng.normal(size=80)
    X = np.column_stack([x, 2 * x, rng.normal(size=80)])
    m = fit_stepwise(problem(X, x + 0.1 * rng.normal(size=80)))
    assert len({"x0", "x1"} & set(m.features)) == 1


def test_stepwise_entry_uses_partial_f():
    # first step: F for the best single column equals the textbook (r^2 (n-2)) / (1 - r^2)
    rng = np.random.default_rng(4)
    X = rng.normal(size=(120, 3))
    y = X[:, 2] + rng.normal(size=120)
    m = fit_stepwise(problem(X, y))
    add, name, pval = m.metadata["history"][0]
    r = np.corrcoef(X[:, 2], y)[0, 1]
    F = r * r * 118 / (1 - r * r)
    assert (add, name) == ("add", "x2")
    assert abs(pval - stats.f.sf(F, 1, 118)) < 1e-12


# -- LASSO --------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_lasso_soft_threshold_on_orthonormal_design(seed):
    rng = np.random.default_rng(seed)
    n, p = 100, 8
    X = orthonormal_design(rng, n, p)
    y = X @ rng.normal(scale=0.5, size=p) + rng.normal(size=n)
    lam = rng.uniform(0.01, 0.4)
    m = fit_lasso(problem(X, y), LassoParams(lambda_=lam, tol=1e-12))
    ols = X.T @ (y - y.mean()) / n
    beta = np.array(m.metadata["standardized_coefficients"])
    assert np.max(np.abs(beta - soft_threshold(ols, lam))) < 1e-6


def test_lasso_lambda_max_zeroes_everything():
    rng = np.random.default_rng(5)
    X, y = rng.normal(size=(80, 6)), rng.normal(size=80)
    m = fit_lasso(problem(X, y), LassoParams(lambda_=lambda_max(X, y)))
    assert m.features == () and m.params["coefficients"] == []
    assert abs(m.params["intercept"] - y.mean()) < 1e-12


def test_lasso_objective_never_increases():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(60, 10))
    X = (X - X.mean(0)) / X.std(0)
    y = X[:, 0] - X[:, 1] + rng.normal(size=60)
    beta, sweeps, ok, trace = coordinate_descent(X, y - y.mean(), 0.05, tol=1e-10, trace=True)
    assert ok and sweeps == len(trace)
    assert np.all(np.diff(trace) <= 1e-12)


def test_lasso_planted_support():
    # cv-chosen lambda screens: the true support is always kept, extra columns only get tiny weights
    for s in range(30):
        rng = np.random.default_rng(200 + s)
        X = rng.normal(size=(300, 40))
        y = 2 * X[:, 3] - 1.5 * X[:, 17] + X[:, 30] + 0.3 * rng.normal(size=300)
        m = fit_lasso(problem(X, y), seed=s)
        coef = dict(zip(m.features, m.params["coefficients"]))
        assert {"x3", "x17", "x30"} <= set(coef)
        assert coef["x3"] > 1.5 and coef["x17"] < -1.0 and coef["x30"] > 0.5
        assert max((abs(v) for k, v in coef.items() if k not in ("x3", "x17", "x30")), default=0) < 0.1


@pytest.mark.xfail(strict=True, reason="cv-minimum lambda keeps ~11 columns (median) here; README explains")
def test_lasso_planted_support_is_small():
    good = 0
    for s in range(30):
        rng = np.random.default_rng(200 + s)
        X = rng.normal(size=(300, 40))
        y = 2 * X[:, 3] - 1.5 * X[:, 17] + X[:, 30] + 0.1 * rng.normal(size=300)
        sel = set(fit_lasso(problem(X, y), seed=s).features)
        good += {"x3", "x17", "x30"} <= sel and len(sel) <= 8
    assert good >= 27


def test_lasso_nonconvergence_flag():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(50, 10))
    m = fit_lasso(problem(X, X[:, 0] + rng.normal(size=50)), LassoParams(lambda_=1e-4, max_iter=1, tol=1e-14))
    assert m.converged is False


def test_lasso_coefficients_in_original_scale():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(200, 3)) * [1.0, 10.0, 0.1] + [0, 5, -2]
    y = 2 * X[:, 0] + 0.3 * X[:, 1] - 4 * X[:, 2] + 1
    m = fit_lasso(problem(X, y), LassoParams(lambda_=1e-9, tol=1e-14))
    assert np.allclose(m.params["coefficients"], [2, 0.3, -4], atol=1e-5)
    assert abs(m.params["intercept"] - 1) < 1e-4


# -- MARS ---------------------------------------------------------------------

def test_hinge_and_gcv_formulas():
    assert np.array_equal(hinge([0.2, 0.5, 0.9], 0.5, 1), [0, 0, 0.4])
    assert np.allclose(hinge([0.2, 0.5, 0.9], 0.5, -1), [0.3, 0, 0])
    assert effective_parameters(5, 3.0) == 5 + 3 * 4
    assert gcv(10.0, 100, 5, 3.0) == pytest.approx(10.0 / (100 * (1 - 17 / 100) ** 2))
    assert gcv(10.0, 10, 5, 3.0) == float("inf")


def test_candidate_knots_respect_spans():
    x = np.arange(100.0)
    minspan, endspan = span_parameters(100, 1, 0.05)
    knots = candidate_knots(x, minspan, endspan)
    assert knots.min() >= endspan - 1 and knots.max() <= 99 - endspan + 1
    assert np.all(np.isin(knots, x))


@pytest.mark.parametrize("seed", range(10))
def test_mars_hinge_recovery(seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, 400)
    y = np.maximum(0, x - 0.5) + 0.01 * rng.normal(size=400)
    m = fit_mars(problem(x, y))
    pred = predict(m, x[:, None], ["x0"])
    r2 = 1 - ((y - pred) ** 2).sum() / ((y - y.mean()) ** 2).sum()
    knots = [k for _, k, _ in m.params["basis"]]
    assert r2 >= 0.95
    assert any(abs(k - 0.5) <= 0.05 for k in knots)
    assert m.metadata["gcv"] <= m.metadata["unpruned_gcv"]


def test_mars_constant_target_is_intercept_only():
    rng = np.random.default_rng(9)
    m = fit_mars(problem(rng.normal(size=(50, 3)), np.full(50, 7.0)))
    assert m.params["basis"] == [] and m.features == ()
    assert m.params["coefficients"] == pytest.approx([7.0])


def test_mars_forward_rss_non_increasing():
    rng = np.random.default_rng(10)
    X = rng.uniform(size=(150, 4))
    y = np.sin(4 * X[:, 0]) + np.abs(X[:, 1] - 0.3) + 0.1 * rng.normal(size=150)
    m = fit_mars(problem(X, y))
    rss = m.metadata["forward_rss"]
    assert all(b <= a + 1e-9 for a, b in zip(rss, rss[1:]))
    assert len(m.metadata["forward_basis"]) <= MarsParams().max_basis - 1


def test_mars_prediction_continuous_at_knots():
    rng = np.random.default_rng(11)
    x = rng.uniform(size=300)
    m = fit_mars(problem(x, np.abs(x - 0.4) + 0.01 * rng.normal(size=300)))
    for _, k, _ in m.params["basis"]:
        left, mid, right = predict(m, np.array([[k - 1e-9], [k], [k + 1e-9]]), ["x0"])
        assert abs(left - mid) < 1e-6 and abs(right - mid) < 1e-6


# -- SVR ----------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_svr_dual_matches_projected_gradient(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(30, 3))
    y = np.sin(3 * X[:, 0]) + X[:, 1] + 0.1 * rng.normal(size=30)
    K = kernel_matrix(X, X, "rbf", 1 / 3)
    beta, b, obj, _, ok = solve_dual(K, y, 1.0, 0.1, tol=1e-6)
    ref_beta, ref_obj = svr_dual_reference(K, y, 1.0, 0.1)
    assert ok
    assert abs(dual_objective(K, y, beta, 0.1) - ref_obj) < 1e-4
    assert abs(obj - dual_objective(K, y, beta, 0.1)) < 1e-9


@pytest.mark.parametrize("kernel", ["rbf", "linear"])
def test_svr_kkt_audit(kernel):
    for s in range(10):
        rng = np.random.default_rng(50 + s)
        X = rng.normal(size=(40, 4))
        y = X @ rng.normal(size=4) + 0.5 * rng.normal(size=40)
        hp = SvrParams(kernel=kernel, C=1.0, epsilon=0.1)
        K = kernel_matrix(X, X, kernel, 0.25)
        beta, b, _, _, ok = solve_dual(K, y, hp.C, hp.epsilon, hp.tol)
        assert ok
        assert np.all(np.abs(beta) <= hp.C + 1e-12)
        assert abs(beta.sum()) < 1e-9
        assert svr_kkt_violation(K, y, beta, b, hp.C, hp.epsilon) <= hp.tol


def test_svr_linear_tube():
    rng = np.random.default_rng(12)
    X = rng.uniform(-1, 1, size=(60, 2))
    y = 0.8 * X[:, 0] - 0.5 * X[:, 1] + 0.2
    m = fit_svr(problem(X, y), SvrParams(kernel="linear", C=100.0, epsilon=0.1, tol=1e-6))
    assert np.all(np.abs(y - predict(m, X, ["x0", "x1"])) <= 0.1 + 1e-6)


def test_svr_keeps_only_support_vectors():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(80, 3))
    y = X[:, 0] + 0.05 * rng.normal(size=80)
    m = fit_svr(problem(X, y))
    idx = m.metadata["support_indices"]
    assert len(idx) == len(m.params["dual_coef"]) < 80
    assert all(c != 0 for c in m.params["dual_coef"])
    assert m.params["gamma"] == pytest.approx(1 / 3)


def test_svr_iteration_cap_flag():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(50, 3))
    m = fit_svr(problem(X, X[:, 0] + rng.normal(size=50)), SvrParams(max_iter=2))
    assert m.converged is False


# -- shared behavior ------------------------------------------------------------

@pytest.mark.parametrize("algo", ["stepwise", "lasso", "mars", "svr"])
def test_predict_duplicated_rows_and_missing_columns(algo):
    rng = np.random.default_rng(15)
    X = rng.uniform(size=(60, 3))
    pr = problem(X, X[:, 0] * 3 + np.maximum(0, X[:, 1] - 0.5) + 0.05 * rng.normal(size=60))
    m = fit_model(algo, pr)
    rows = np.vstack([X[:5], X[:5]])
    p = predict(m, rows, pr.columns)
    assert np.array_equal(p[:5], p[5:])
    if m.features:
        keep = [c for c in pr.columns if c != m.features[0]]
        with pytest.raises(ModelError, match="missing"):
            predict(m, X[:, [pr.columns.index(c) for c in keep]], keep)


@pytest.mark.parametrize("algo", ["stepwise", "lasso", "mars", "svr"])
def test_model_json_round_trip(algo):
    rng = np.random.default_rng(16)
    X = rng.uniform(size=(50, 4))
    pr = problem(X, X[:, 0] - X[:, 2] + 0.1 * rng.normal(size=50))
    m = fit_model(algo, pr, seed=3)
    text = m.dumps()
    json.loads(text)        # strict JSON
    back = TrainedModel.loads(text)
    assert back == m
    assert np.array_equal(predict(back, X, pr.columns), predict(m, X, pr.columns))


@pytest.mark.parametrize("algo", ["stepwise", "lasso", "mars", "svr"])
def test_golden_models(algo):
    # fixed problem; the committed file pins the serialized model byte for byte
    rng = np.random.default_rng(2024)
    X = rng.uniform(size=(40, 4))
    y = 2 * X[:, 0] - X[:, 1] + np.maximum(0, X[:, 2] - 0.5) + 0.05 * rng.normal(size=40)
    m = fit_model(algo, problem(X, y, ["a", "b", "c", "d"]), seed=1)
    golden = (GOLDEN / f"model_{algo}.json").read_text(encoding="utf-8")
    got = TrainedModel.loads(m.dumps())
    ref = TrainedModel.loads(golden)
    assert got.algorithm == ref.algorithm and got.features == ref.features
    assert np.allclose(predict(got, X, ["a", "b", "c", "d"]), predict(ref, X, ["a", "b", "c", "d"]),
                       rtol=0, atol=1e-9)


def test_hyperparameter_overrides_and_validation():
    hp = Hyperparameters().with_overrides({"svr.C": "10", "lasso.cv_folds": "3", "svr.gamma": "none"})
    assert hp.svr.C == 10.0 and hp.lasso.cv_folds == 3 and hp.svr.gamma is None
    assert Hyperparameters.from_json(hp.to_json()) == hp
    with pytest.raises(ValueError):
        Hyperparameters().with_overrides({"svr.kernel": "poly"})
    with pytest.raises(ValueError):
        Hyperparameters().with_overrides({"mars.knots": 3})
    with pytest.raises(ValueError):
        Hyperparameters().with_overrides({"stepwise.alpha_enter": 0.2})


def test_problem_validation():
    with pytest.raises(ModelError):
        RegressionProblem(np.ones((3, 2)), np.ones(2), ["a", "b"])
    with pytest.raises(ModelError):
        RegressionProblem(np.array([[np.nan], [1.0]]), np.ones(2), ["a"])
    with pytest.raises(ModelError):
        fit_model("forest", problem(np.ones((3, 1)), np.ones(3)))
