from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

ALGORITHMS = ("stepwise", "lasso", "mars", "svr")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class StepwiseParams:
    alpha_enter: float = 0.05
    alpha_remove: float = 0.10


@dataclass(frozen=True)
class LassoParams:
    n_lambdas: int = 100
    lambda_ratio: float = 1e-3
    tol: float = 1e-6
    max_iter: int = 10000
    cv_folds: int = 5
    lambda_: float | None = None   # fixed penalty; skips the inner CV when set


@dataclass(frozen=True)
class MarsParams:
    max_basis: int = 21
    penalty: float = 3.0
    span_alpha: float = 0.05       # Friedman's minspan/endspan significance level


@dataclass(frozen=True)
class SvrParams:
    C: float = 1.0
    epsilon: float = 0.1
    kernel: str = "rbf"
    gamma: float | None = None     # None -> 1 / n_features
    tol: float = 1e-3
    max_iter: int = 1_000_000


@dataclass(frozen=True)
class Hyperparameters:
    stepwise: StepwiseParams = field(default_factory=StepwiseParams)
    lasso: LassoParams = field(default_factory=LassoParams)
    mars: MarsParams = field(default_factory=MarsParams)
    svr: SvrParams = field(default_factory=SvrParams)

    def __post_init__(self):
        s, l, m, v = self.stepwise, self.lasso, self.mars, self.svr
        checks = [
            (0 < s.alpha_enter < 1 and 0 < s.alpha_remove < 1, "stepwise alphas must lie in (0, 1)"),
            (s.alpha_enter <= s.alpha_remove, "stepwise alpha_enter must not exceed alpha_remove"),
            (l.n_lambdas >= 1 and 0 < l.lambda_ratio < 1, "lasso path needs n_lambdas >= 1 and ratio in (0, 1)"),
            (l.tol > 0 and l.max_iter > 0 and l.cv_folds >= 2, "lasso tol/max_iter/cv_folds out of range"),
            (l.lambda_ is None or l.lambda_ >= 0, "lasso lambda_ must be non-negative"),
            (m.max_basis >= 1 and m.penalty >= 0 and 0 < m.span_alpha < 1, "mars parameters out of range"),
            (v.C > 0 and v.epsilon >= 0 and v.tol > 0 and v.max_iter > 0, "svr parameters out of range"),
            (v.kernel in ("linear", "rbf"), f"unknown svr kernel {v.kernel!r}"),
            (v.gamma is None or v.gamma > 0, "svr gamma must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "Hyperparameters":
        return cls().with_overrides({f"{algo}.{k}": v for algo, sub in obj.items() for k, v in sub.items()})

    def with_overrides(self, overrides: dict) -> "Hyperparameters":
        """Apply ``{"svr.C": 10, "lasso.cv_folds": 3}``-style overrides."""
        groups = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, value in overrides.items():
            algo, _, name = key.partition(".")
            if algo not in groups:
                raise ValueError(f"unknown hyperparameter group {algo!r}")
            known = {f.name: f for f in fields(groups[algo])}
            if name not in known:
                raise ValueError(f"unknown hyperparameter {key!r}")
            groups[algo] = replace(groups[algo], **{name: _coerce(value, getattr(groups[algo], name))})
        return Hyperparameters(**groups)


def _coerce(value, current):
    if not isinstance(value, str):
        return value
    if value.lower() in ("none", "null"):
        return None
    if isinstance(current, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float) or current is None:
        try:
            return float(value)
        except ValueError:
            return value
    return value


@dataclass(frozen=True)
class RegressionProblem:
    X: np.ndarray
    y: np.ndarray
    columns: tuple

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ModelError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise ModelError(f"need n >= 2 rows and p >= 1 columns, got {X.shape}")
        if len(self.columns) != X.shape[1]:
            raise ModelError("column names do not match X")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ModelError("non-finite values in regression problem")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class TrainedModel:
    algorithm: str
    features: tuple            # selected features, the only columns predict() reads
    params: dict
    metadata: dict

    def to_json(self) -> dict:
        return {"algorithm": self.algorithm, "features": list(self.features),
                "params": self.params, "metadata": self.metadata}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, obj: dict) -> "TrainedModel":
        if obj.get("algorithm") not in ALGORITHMS:
            raise ModelError(f"unknown algorithm {obj.get('algorithm')!r}")
        return cls(obj["algorithm"], tuple(obj["features"]), obj["params"], obj["metadata"])

    @classmethod
    def loads(cls, text: str) -> "TrainedModel":
        return cls.from_json(json.loads(text))

    @property
    def converged(self) -> bool:
        return bool(self.metadata.get("converged", True))


def _design(model: TrainedModel, X, columns) -> np.ndarray:
    """Matrix whose columns are ``model.features`` in order."""
    if hasattr(X, "values") and hasattr(X, "columns"):
        X, columns = X.values, X.columns
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ModelError("predict expects a 2-D matrix")
    if columns is None:
        columns = model.metadata.get("input_columns")
        if columns is None or len(columns) != X.shape[1]:
            raise ModelError("column names are required to predict with this model")
    lookup = {c: i for i, c in enumerate(columns)}
    missing = [f for f in model.features if f not in lookup]
    if missing:
        raise ModelError(f"missing feature columns: {missing}")
    return X[:, [lookup[f] for f in model.features]]


def predict(model: TrainedModel, X, columns=None) -> np.ndarray:
    """Predictions for the rows of ``X`` (an array or a FeatureMatrix)."""
    Z = _design(model, X, columns)
    algo = model.algorithm
    if algo in ("stepwise", "lasso"):
        coef = np.asarray(model.params["coefficients"], dtype=float)
        return model.params["intercept"] + Z @ coef if coef.size else np.full(Z.shape[0], model.params["intercept"])
    if algo == "mars":
        from .mars import mars_basis_matrix
        B = mars_basis_matrix(Z, model.params["basis"], model.features)
        return B @ np.asarray(model.params["coefficients"], dtype=float)
    if algo == "svr":
        from .svr import kernel_matrix
        sv = np.asarray(model.params["support_vectors"], dtype=float).reshape(-1, Z.shape[1])
        dual = np.asarray(model.params["dual_coef"], dtype=float)
        if dual.size == 0:
            return np.full(Z.shape[0], model.params["bias"])
        K = kernel_matrix(Z, sv, model.params["kernel"], model.params["gamma"])
        return K @ dual + model.params["bias"]
    raise ModelError(f"unknown algorithm {algo!r}")
