"""Ordinary least squares with a plain-text model format, plus k-fold CV."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InsufficientData, RankDeficient, TooFewRows

# relative pivot size below which a design matrix is treated as singular
RANK_TOL = 1e-9


def fmt(x: float) -> str:
    """17 significant digits: enough for a bit-exact float round trip."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: tuple
    predictor_names: tuple
    r2: float = float("nan")
    mae: float = float("nan")

    def __post_init__(self):
        if len(self.coefficients) != len(self.predictor_names):
            raise ValueError("one coefficient per predictor name required")

    def coef(self, name: str) -> float:
        return self.coefficients[self.predictor_names.index(name)]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.intercept + X @ np.asarray(self.coefficients, dtype=float)

    def predict_one(self, values: Sequence[float]) -> float:
        total = self.intercept
        for c, v in zip(self.coefficients, values):
            total += c * v
        return total

    def to_text(self) -> str:
        lines = ["kind=linear", f"intercept={fmt(self.intercept)}"]
        lines += [f"{n}={fmt(c)}" for n, c in zip(self.predictor_names, self.coefficients)]
        lines += [f"r2={fmt(self.r2)}", f"mae={fmt(self.mae)}"]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LinearModel":
        items = parse_model_text(text)
        if items.pop("kind", "linear") != "linear":
            raise ValueError("not a linear model file")
        intercept = float(items.pop("intercept"))
        r2 = float(items.pop("r2", "nan"))
        mae = float(items.pop("mae", "nan"))
        names = tuple(items)
        return cls(intercept, tuple(float(items[n]) for n in names), names, r2, mae)


def parse_model_text(text: str) -> dict:
    items = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"malformed model line: {raw!r}")
        items[key.strip()] = value.strip()
    return items


def _design(X, n):
    return np.column_stack([np.ones(n), X]) if X.size else np.ones((n, 1))


def solve_ols(X, y):
    """Coefficient vector [intercept, b1, ..., bp] via column-scaled QR.

    Raises RankDeficient when the design (including the intercept) is
    numerically singular, InsufficientData when n < p + 1.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if n < p + 1:
        raise InsufficientData(f"{n} rows cannot determine {p + 1} parameters")
    A = _design(X, n)
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise RankDeficient("a predictor column is identically zero")
    q, r = np.linalg.qr(A / norms)
    diag = np.abs(np.diag(r))
    if diag.min() < RANK_TOL * diag.max():
        raise RankDeficient("predictors are collinear with each other or the intercept")
    beta = np.linalg.solve(r, q.T @ y) / norms
    return beta


def r2_score(y, pred) -> float:
    y = np.asarray(y, dtype=float)
    sst = float(np.sum((y - y.mean()) ** 2))
    sse = float(np.sum((y - pred) ** 2))
    if sst == 0.0:
        return 1.0 if sse == 0.0 else float("-inf")
    return 1.0 - sse / sst


def ols_fit(X, y, names: Sequence[str]) -> LinearModel:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    beta = solve_ols(X, y)
    model = LinearModel(float(beta[0]), tuple(float(b) for b in beta[1:]), tuple(names))
    pred = model.predict(X)
    y = np.asarray(y, dtype=float)
    return LinearModel(model.intercept, model.coefficients, model.predictor_names,
                       r2=r2_score(y, pred), mae=float(np.mean(np.abs(y - pred))))


def standardized_coefficients(model: LinearModel, X, y) -> dict:
    """|b_j| * sd(x_j) / sd(y): the effect of a one-sigma move in each predictor."""
    X = np.asarray(X, dtype=float)
    sy = float(np.std(y)) or 1.0
    sx = np.std(X, axis=0)
    return {n: abs(c) * s / sy for n, c, s in zip(model.predictor_names, model.coefficients, sx)}


def kfold_cv(X, y, k=10, seed=0, names=None):
    """Mean out-of-fold R^2 and MAE of an OLS fit.

    Rows are permuted once with a fixed seed and cut into ``k`` contiguous
    folds.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    n = len(y)
    if k < 2 or n < k:
        raise TooFewRows(f"cannot split {n} rows into {k} folds")
    names = names or [f"x{i}" for i in range(X.shape[1])]
    order = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(order, k)
    r2s, maes = [], []
    for fold in folds:
        train = np.setdiff1d(order, fold, assume_unique=True)
        model = ols_fit(X[train], y[train], names)
        pred = model.predict(X[fold])
        r2s.append(r2_score(y[fold], pred))
        maes.append(float(np.mean(np.abs(y[fold] - pred))))
    return float(np.mean(r2s)), float(np.mean(maes))
