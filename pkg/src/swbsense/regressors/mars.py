"""Additive (degree-1) MARS: greedy forward pass of mirrored hinge pairs,
backward pruning by generalized cross-validation."""
from __future__ import annotations

import math

import numpy as np

from ..numerics import solve_least_squares
from .base import MarsParams, RegressionProblem, TrainedModel

_DEGENERATE = 1e-10


def hinge(x, knot, sign):
    """``max(0, x - knot)`` for sign +1, ``max(0, knot - x)`` for sign -1."""
    return np.maximum(0.0, sign * (np.asarray(x, dtype=float) - knot))


def mars_basis_matrix(X, basis, columns=None) -> np.ndarray:
    """Intercept column followed by one column per ``(feature, knot, sign)`` term.

    ``basis`` refers to features by name when ``columns`` is given, else by index.
    """
    X = np.asarray(X, dtype=float)
    lookup = {c: i for i, c in enumerate(columns)} if columns is not None else None
    cols = [np.ones(X.shape[0])]
    for feat, knot, sign in basis:
        j = lookup[feat] if lookup is not None else int(feat)
        cols.append(hinge(X[:, j], knot, sign))
    return np.column_stack(cols)


def span_parameters(n: int, p: int, alpha: float) -> tuple[int, int]:
    """Friedman's (minspan, endspan) observation counts between candidate knots."""
    endspan = int(math.ceil(3.0 - math.log2(alpha / p)))
    minspan = int(max(1, round(-math.log2(-math.log(1.0 - alpha) / (n * p)) / 2.5)))
    return minspan, endspan


def candidate_knots(x: np.ndarray, minspan: int, endspan: int) -> np.ndarray:
    xs = np.sort(x)
    n = len(xs)
    if n <= 2 * endspan:
        idx = np.arange(n)
    else:
        idx = np.arange(endspan, n - endspan, minspan)
    return np.unique(xs[idx])


def effective_parameters(n_basis: int, penalty: float) -> float:
    return n_basis + penalty * (n_basis - 1)


def gcv(rss: float, n: int, n_basis: int, penalty: float) -> float:
    c = effective_parameters(n_basis, penalty)
    if c >= n:
        return math.inf
    return rss / (n * (1.0 - c / n) ** 2)


def _add_column(Q: np.ndarray, col: np.ndarray) -> np.ndarray:
    v = col - Q @ (Q.T @ col)
    v = v - Q @ (Q.T @ v)
    return np.column_stack([Q, v / np.linalg.norm(v)])


def forward_pass(X, y, hp: MarsParams):
    """Returns (basis terms as (column index, knot, sign), RSS after each accepted step)."""
    n, p = X.shape
    minspan, endspan = span_parameters(n, p, hp.span_alpha)
    knots = [candidate_knots(X[:, j], minspan, endspan) for j in range(p)]
    Q = np.ones((n, 1)) / math.sqrt(n)
    r = y - Q @ (Q.T @ y)
    rss = float(r @ r)
    tss = rss
    history = [rss]
    basis: list[tuple[int, float, int]] = []
    while len(basis) + 1 < hp.max_basis and rss > 1e-12 * max(tss, 1e-300):
        room = hp.max_basis - 1 - len(basis)
        best = (0.0, None)
        for j in range(p):
            t = knots[j]
            if t.size == 0:
                continue
            d = X[:, j][:, None] - t[None, :]
            cols = (np.maximum(d, 0.0), np.maximum(-d, 0.0))
            perp, g, c = [], [], []
            for H in cols:
                P = H - Q @ (Q.T @ H)
                perp.append(P)
                g.append(np.einsum("ij,ij->j", P, P))
                c.append(r @ H)
            raw = [np.einsum("ij,ij->j", H, H) for H in cols]
            ok1 = g[0] > _DEGENERATE * np.maximum(raw[0], 1e-300)
            ok2 = g[1] > _DEGENERATE * np.maximum(raw[1], 1e-300)
            red1 = np.where(ok1, c[0] ** 2 / np.where(ok1, g[0], 1.0), 0.0)
            red2 = np.where(ok2, c[1] ** 2 / np.where(ok2, g[1], 1.0), 0.0)
            g12 = np.einsum("ij,ij->j", perp[0], perp[1])
            det = g[0] * g[1] - g12 ** 2
            pair_ok = ok1 & ok2 & (det > _DEGENERATE * np.maximum(g[0] * g[1], 1e-300)) & (room >= 2)
            safe = np.where(pair_ok, det, 1.0)
            red_pair = np.where(pair_ok, (g[1] * c[0] ** 2 - 2 * g12 * c[0] * c[1] + g[0] * c[1] ** 2) / safe, 0.0)
            for red, kind in ((red_pair, "pair"), (red1, "pos"), (red2, "neg")):
                k = int(np.argmax(red))
                if red[k] > best[0] * (1 + 1e-12) + 1e-300:
                    best = (float(red[k]), (j, float(t[k]), kind))
        if best[1] is None or best[0] <= 1e-12 * max(tss, 1e-300):
            break
        j, knot, kind = best[1]
        signs = {"pair": (1, -1), "pos": (1,), "neg": (-1,)}[kind]
        for s in signs:
            col = hinge(X[:, j], knot, s)
            v = col - Q @ (Q.T @ col)
            if v @ v <= _DEGENERATE * (col @ col):
                continue
            Q = _add_column(Q, col)
            basis.append((j, knot, s))
        r = y - Q @ (Q.T @ y)
        rss = float(r @ r)
        history.append(rss)
    return basis, history


def _rss(B: np.ndarray, y: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    r = y - B @ coef
    return float(r @ r)


def backward_pass(X, y, basis, penalty):
    """Drop terms one at a time (smallest RSS increase first) and keep the GCV-best subset."""
    n = X.shape[0]
    full = mars_basis_matrix(X, basis)
    current = list(range(len(basis)))
    rss_full = _rss(full, y)
    best_gcv = gcv(rss_full, n, len(current) + 1, penalty)
    best_set = list(current)
    unpruned_gcv = best_gcv
    while current:
        trials = []
        for idx in current:
            keep = [0] + [k + 1 for k in current if k != idx]
            trials.append((_rss(full[:, keep], y), idx))
        rss, drop = min(trials, key=lambda t: (t[0], t[1]))
        current.remove(drop)
        score = gcv(rss, n, len(current) + 1, penalty)
        if score <= best_gcv:
            best_gcv, best_set = score, list(current)
    return best_set, best_gcv, unpruned_gcv


def _finite(v: float):
    # GCV is infinite once the effective parameter count reaches n; JSON has no inf
    return v if math.isfinite(v) else None


def fit_mars(problem: RegressionProblem, hp: MarsParams = MarsParams(), seed: int = 0) -> TrainedModel:
    X, y = problem.X, problem.y
    n = problem.n
    basis, history = forward_pass(X, y, hp)
    kept, best_gcv, unpruned_gcv = backward_pass(X, y, basis, hp.penalty)
    terms = [basis[k] for k in sorted(kept)]
    B = mars_basis_matrix(X, terms)
    coef = solve_least_squares(B, y)
    resid = y - B @ coef
    used = sorted({j for j, _, _ in terms})
    features = tuple(problem.columns[j] for j in used)
    named = [[problem.columns[j], knot, sign] for j, knot, sign in terms]
    return TrainedModel(
        algorithm="mars",
        features=features,
        params={"basis": named, "coefficients": coef.tolist()},
        metadata={
            "input_columns": list(problem.columns),
            "hyperparameters": {"max_basis": hp.max_basis, "penalty": hp.penalty, "span_alpha": hp.span_alpha},
            "forward_basis": [[problem.columns[j], knot, sign] for j, knot, sign in basis],
            "forward_rss": history,
            "gcv": _finite(best_gcv),
            "unpruned_gcv": _finite(unpruned_gcv),
            "rss": float(resid @ resid),
            "n": n,
            "converged": True,
        },
    )
