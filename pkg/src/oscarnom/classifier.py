"""Class-weighted L2 logistic regression trained with limited-memory BFGS.

The objective is 0.5*||theta||^2 + C * sum_i w_i * ln(1 + exp(-s_i*(theta.x_i + b)))
with s_i = 2y_i - 1 and w_i the class weight of sample i; the bias is not
penalized. C scales the data term, so C=1.0 means what it does in the usual
reference implementations. Optimization starts at the origin and is fully
deterministic.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .errors import (Diverged, DimensionMismatch, EmptyClass, NonFiniteInput,
                     ValidationError)

WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9
MAX_LINE_SEARCH_TRIALS = 20
CURVATURE_EPS = 1e-10


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function, overflow-safe on both tails."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def compute_class_weights(labels: np.ndarray) -> tuple[float, float]:
    """Balanced weights w_c = N / (2 * N_c); returns (w_pos, w_neg)."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise EmptyClass("class weights need at least one sample per class")
    return n / (2.0 * n_pos), n / (2.0 * n_neg)


def loss_and_gradient(theta: np.ndarray, bias: float, X: np.ndarray,
                      y: np.ndarray, sample_weight: np.ndarray,
                      C: float) -> tuple[float, np.ndarray, float]:
    """Weighted logistic objective and its exact gradient.

    Log-loss terms are evaluated as logaddexp(0, -s*z), which never
    overflows in either tail.
    """
    theta = np.asarray(theta, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(sample_weight, dtype=np.float64)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(theta))
            and np.isfinite(bias)):
        raise NonFiniteInput("loss_and_gradient requires finite inputs")

    z = X @ theta + bias
    signs = 2.0 * y - 1.0
    losses = np.logaddexp(0.0, -signs * z)
    objective = 0.5 * float(theta @ theta) + C * float(w @ losses)

    residual = C * w * (sigmoid(z) - y)
    grad_theta = theta + X.T @ residual
    grad_bias = float(residual.sum())
    return objective, grad_theta, grad_bias


def _cubic_minimizer(a, fa, dfa, b, fb, dfb):
    """Minimizer of the cubic through (a, fa, dfa), (b, fb, dfb); None if
    degenerate."""
    d1 = dfa + dfb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - dfa * dfb
    if disc < 0.0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = dfb - dfa + 2.0 * d2
    if denom == 0.0:
        return None
    return b - (b - a) * (dfb + d2 - d1) / denom


def _zoom(fg, x, direction, f0, dphi0, a_lo, f_lo, dphi_lo, a_hi, f_hi,
          dphi_hi, max_iter=25):
    """Strong-Wolfe zoom stage with cubic interpolation and a bisection
    safeguard."""
    for _ in range(max_iter):
        lo, hi = (a_lo, a_hi) if a_lo < a_hi else (a_hi, a_lo)
        a_j = _cubic_minimizer(a_lo, f_lo, dphi_lo, a_hi, f_hi, dphi_hi)
        margin = 0.1 * (hi - lo)
        if a_j is None or not (lo + margin <= a_j <= hi - margin):
            a_j = 0.5 * (lo + hi)
        f_j, g_j = fg(x + a_j * direction)
        dphi_j = float(g_j @ direction)
        if f_j > f0 + WOLFE_C1 * a_j * dphi0 or f_j >= f_lo:
            a_hi, f_hi, dphi_hi = a_j, f_j, dphi_j
        else:
            if abs(dphi_j) <= -WOLFE_C2 * dphi0:
                return a_j, f_j, g_j
            if dphi_j * (a_hi - a_lo) >= 0.0:
                a_hi, f_hi, dphi_hi = a_lo, f_lo, dphi_lo
            a_lo, f_lo, dphi_lo = a_j, f_j, dphi_j
        if hi - lo < 1e-16:
            break
    return a_lo, f_lo, fg(x + a_lo * direction)[1]


class _AllTrialsNonFinite(Exception):
    """Every step the line search tried overflowed the objective."""


def _backtracking(fg, x, direction, f0, dphi0):
    """Armijo backtracking fallback when the Wolfe search fails."""
    alpha = 1.0
    saw_finite = False
    for _ in range(60):
        f_a, g_a = fg(x + alpha * direction)
        if np.isfinite(f_a):
            saw_finite = True
            if f_a <= f0 + WOLFE_C1 * alpha * dphi0:
                return alpha, f_a, g_a
        alpha *= 0.5
    if not saw_finite:
        raise _AllTrialsNonFinite
    return None


def _strong_wolfe(fg, x, direction, f0, grad0):
    """Line search satisfying the strong Wolfe conditions
    (c1=1e-4, c2=0.9), cubic interpolation, at most 20 trial steps."""
    dphi0 = float(grad0 @ direction)
    if dphi0 >= 0.0:
        return None
    a_prev, f_prev, dphi_prev = 0.0, f0, dphi0
    alpha = 1.0
    for trial in range(MAX_LINE_SEARCH_TRIALS):
        f_a, g_a = fg(x + alpha * direction)
        dphi_a = float(g_a @ direction)
        if not np.isfinite(f_a):
            return _backtracking(fg, x, direction, f0, dphi0)
        if f_a > f0 + WOLFE_C1 * alpha * dphi0 or (trial > 0 and f_a >= f_prev):
            return _zoom(fg, x, direction, f0, dphi0,
                         a_prev, f_prev, dphi_prev, alpha, f_a, dphi_a)
        if abs(dphi_a) <= -WOLFE_C2 * dphi0:
            return alpha, f_a, g_a
        if dphi_a >= 0.0:
            return _zoom(fg, x, direction, f0, dphi0,
                         alpha, f_a, dphi_a, a_prev, f_prev, dphi_prev)
        a_prev, f_prev, dphi_prev = alpha, f_a, dphi_a
        alpha *= 2.0
    return _backtracking(fg, x, direction, f0, dphi0)


class LbfgsResult:
    def __init__(self, x, objective, grad, n_iter, converged, history):
        self.x = x
        self.objective = objective
        self.grad = grad
        self.n_iter = n_iter
        self.converged = converged
        self.history = history


def lbfgs_minimize(fg, x0: np.ndarray, memory: int = 10, tol: float = 1e-4,
                   max_iter: int = 5000) -> LbfgsResult:
    """Two-loop-recursion L-BFGS with strong-Wolfe steps.

    Stops when the gradient sup-norm drops to ``tol`` or after
    ``max_iter`` accepted iterations. Raises Diverged (carrying the last
    finite iterate) if the objective leaves the finite range.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fg(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise Diverged("objective non-finite at the starting point",
                       theta=x[:-1], bias=float(x[-1]), iterations=0)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    history = [f]
    n_iter = 0
    converged = bool(np.max(np.abs(g)) <= tol)

    while not converged and n_iter < max_iter:
        direction = _lbfgs_direction(g, s_hist, y_hist, rho_hist)
        if float(direction @ g) >= 0.0:
            direction = -g
        try:
            step = _strong_wolfe(fg, x, direction, f, g)
        except _AllTrialsNonFinite:
            raise Diverged("objective non-finite along the descent direction",
                           theta=x[:-1], bias=float(x[-1]),
                           iterations=n_iter) from None
        if step is None:
            break
        alpha, f_new, g_new = step
        if not (np.isfinite(f_new) and np.all(np.isfinite(g_new))):
            raise Diverged("objective became non-finite during optimization",
                           theta=x[:-1], bias=float(x[-1]), iterations=n_iter)
        x_new = x + alpha * direction
        s_vec = x_new - x
        y_vec = g_new - g
        sy = float(s_vec @ y_vec)
        if sy > CURVATURE_EPS:
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        n_iter += 1
        converged = bool(np.max(np.abs(g)) <= tol)

    return LbfgsResult(x, f, g, n_iter, converged, history)


def _lbfgs_direction(grad, s_hist, y_hist, rho_hist):
    q = grad.copy()
    alphas = []
    for s, yv, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * yv
    if s_hist:
        gamma = float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
        q *= gamma
    for (s, yv, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        beta = rho * float(yv @ q)
        q += (a - beta) * s
    return -q


class WeightedLogisticRegression(BaseEstimator, ClassifierMixin):
    """Binary logistic regression with balanced class weights and a
    tunable decision threshold.

    Parameters mirror the usual conventions: ``C`` is the inverse
    regularization strength on the data term, ``tol`` the gradient
    sup-norm stopping tolerance, ``memory`` the number of curvature pairs
    kept by the optimizer. ``class_weight`` is "balanced" or None.

    After ``fit`` the weights are rounded to float32 so that a model
    serialized to disk predicts bit-identically to the in-memory one.
    """

    def __init__(self, C: float = 1.0, max_iter: int = 5000, tol: float = 1e-4,
                 class_weight: str | None = "balanced", memory: int = 10):
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.class_weight = class_weight
        self.memory = memory

    def fit(self, X, y, sample_weight=None):
        if self.C <= 0 or self.tol <= 0 or self.max_iter < 1:
            raise ValueError("need C > 0, tol > 0, max_iter >= 1")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or not np.all(np.isfinite(X)):
            raise NonFiniteInput("X must be a finite 2-D array")
        X, y = check_X_y(X, y, dtype=np.float64)
        y = y.astype(np.int64)
        if set(np.unique(y)) - {0, 1}:
            raise ValidationError("labels must be binary 0/1")
        if len(np.unique(y)) < 2:
            raise EmptyClass("training requires samples of both classes")

        if sample_weight is None:
            if self.class_weight == "balanced":
                w_pos, w_neg = compute_class_weights(y)
                sample_weight = np.where(y == 1, w_pos, w_neg)
            elif self.class_weight in (None, "none"):
                sample_weight = np.ones(y.shape[0])
            else:
                raise ValueError(f"unsupported class_weight {self.class_weight!r}")
        sample_weight = np.asarray(sample_weight, dtype=np.float64)

        yf = y.astype(np.float64)

        def fg(params):
            obj, g_theta, g_bias = loss_and_gradient(
                params[:-1], float(params[-1]), X, yf, sample_weight, self.C)
            return obj, np.concatenate([g_theta, [g_bias]])

        x0 = np.zeros(X.shape[1] + 1)
        result = lbfgs_minimize(fg, x0, memory=self.memory, tol=self.tol,
                                max_iter=self.max_iter)

        theta32 = result.x[:-1].astype(np.float32).astype(np.float64)
        bias32 = float(np.float32(result.x[-1]))
        self.classes_ = np.array([0, 1])
        self.coef_ = theta32.reshape(1, -1)
        self.intercept_ = np.array([bias32])
        self.n_iter_ = result.n_iter
        self.objective_ = result.objective
        self.objective_history_ = result.history
        self.converged_ = result.converged
        self.threshold_ = 0.5
        return self

    def _check_fitted_rows(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("estimator is not fitted")
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        if X.shape[1] != self.coef_.shape[1]:
            raise DimensionMismatch(
                f"feature rows have {X.shape[1]} columns, model expects "
                f"{self.coef_.shape[1]}")
        return X

    def decision_function(self, X) -> np.ndarray:
        X = self._check_fitted_rows(X)
        return X @ self.coef_[0] + self.intercept_[0]

    def predict_proba(self, X) -> np.ndarray:
        p = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        """Label 1 iff the positive probability is >= the decision
        threshold (ties go to the positive class)."""
        p = self.predict_proba(X)[:, 1]
        return (p >= self.threshold_).astype(np.int64)
