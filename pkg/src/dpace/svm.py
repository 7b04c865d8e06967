"""
Soft-margin RBF support vector machine trained by sequential minimal optimization.

The dual

    min_alpha  1/2 alpha' Q alpha - sum(alpha)
    s.t.       0 <= alpha_i <= C,   sum_i y_i alpha_i = 0,
    Q_ij = y_i y_j exp(-gamma |x_i - x_j|^2)

is solved two variables at a time with second-order working-set selection
(Fan, Chen and Lin, 2005).  Features are z-scored with training-set
statistics before the kernel is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_GAMMA = 1.0 / 8
DEFAULT_C = 10.0
TAU = 1e-12


class SvmError(RuntimeError):
    """The dual solver stopped before reaching its KKT tolerance."""


@dataclass
class ClassifierModel:
    gamma: float
    C: float
    support_vectors: np.ndarray  # normalized features, [n_sv, d]
    coef: np.ndarray  # alpha_i * y_i
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    alpha: Optional[np.ndarray] = None  # full dual vector (training only)
    labels: Optional[np.ndarray] = None

    @property
    def n_features(self) -> int:
        return len(self.mean)

    def normalize(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return (X - self.mean) / self.scale

    def decision_function(self, X) -> np.ndarray:
        Z = self.normalize(X)
        if len(self.coef) == 0:
            return np.full(len(Z), self.bias)
        K = rbf_kernel(Z, self.support_vectors, self.gamma)
        return K @ self.coef + self.bias

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) > 0, 1, -1)


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


def zscore_params(X):
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    # constant columns (e.g. never-raised flag bits) pass through unscaled
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def smo(K, y, C: float, tol: float = 1e-5, max_iter: Optional[int] = None):
    """Solve the SVM dual for a precomputed kernel; returns (alpha, rho).

    Stops when the maximal KKT violation m(alpha) - M(alpha) falls below
    ``tol``.  The decision function is sum_i alpha_i y_i K(x_i, x) - rho.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    Q = K * np.outer(y, y)
    diag = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    max_iter = max(10_000_000 // max(n, 1), 100 * n) if max_iter is None else max_iter
    for _ in range(max_iter):
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        score = -y * G
        if not up.any() or not low.any():
            break
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        g_max = s_up[i]
        g_min = np.min(np.where(low, score, np.inf))
        if g_max - g_min < tol:
            break
        b = g_max - score
        cand = low & (b > 0)
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, TAU)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] + 2.0 * Q[i, j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * Q[i, j], TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        G += Q[:, i] * (ni - ai) + Q[:, j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj
    else:
        raise SvmError("SMO did not converge")
    return alpha, _rho(alpha, y, G, C)


def _rho(alpha, y, G, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(yG[free]))
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    # rho lies between the bounds implied by the active sets
    ub = np.min(yG[up]) if up.any() else np.inf
    lb = np.max(yG[low]) if low.any() else -np.inf
    if not np.isfinite(ub):
        return float(lb)
    if not np.isfinite(lb):
        return float(ub)
    return float(0.5 * (ub + lb))


def train(features, labels, gamma: float = DEFAULT_GAMMA, C: float = DEFAULT_C, tol: float = 1e-5) -> ClassifierModel:
    """Fit an RBF SVM on rows of ``features`` with labels in {+1, -1}."""
    X = np.asarray([f.as_array() if hasattr(f, "as_array") else f for f in features], dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features and labels must have matching lengths")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be +1 or -1")
    if len(np.unique(y)) < 2:
        raise ValueError("training needs both classes")
    if not (gamma > 0 and C > 0):
        raise ValueError("gamma and C must be positive")
    mean, scale = zscore_params(X)
    Z = (X - mean) / scale
    K = rbf_kernel(Z, Z, gamma)
    alpha, rho = smo(K, y, C, tol)
    sv = alpha > 0
    return ClassifierModel(gamma, C, Z[sv], alpha[sv] * y[sv], -rho, mean, scale, alpha, y)


@dataclass
class Detection:
    label: str  # "fall" or "no-fall"
    decision: float
    t_start: float
    t_end: float
    target_id: int = 0
    trace_id: str = ""


@dataclass
class DetectionReport:
    detections: list = field(default_factory=list)

    def __len__(self):
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)

    def falls(self):
        return [d for d in self.detections if d.label == "fall"]


def detect(model: ClassifierModel, features: Sequence, trace_id: str = "") -> DetectionReport:
    """Label every feature vector; fall iff the decision value is positive."""
    features = list(features)
    if not features:
        return DetectionReport([])
    X = np.asarray([f.as_array() for f in features])
    if X.shape[1] != model.n_features:
        raise ValueError(f"feature dimension {X.shape[1]} does not match model ({model.n_features})")
    dec = model.decision_function(X)
    dets = [Detection("fall" if d > 0 else "no-fall", float(d), f.t_start, f.t_end, f.target_id, trace_id)
            for f, d in zip(features, dec)]
    return DetectionReport(dets)


def balanced_accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    rates = [np.mean(y_pred[y_true == c] == c) for c in (-1, 1) if np.any(y_true == c)]
    return float(np.mean(rates))


def cross_validate(X, y, gamma: float, C: float, folds: int = 5, groups=None, seed: int = 0) -> float:
    """Mean balanced accuracy over ``folds`` splits; rows sharing a group stay together."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    groups = np.arange(len(y)) if groups is None else np.asarray(groups)
    uniq = np.unique(groups)
    order = np.random.default_rng(seed).permutation(len(uniq))
    fold_of = {g: k % folds for k, g in zip(range(len(uniq)), uniq[order])}
    fold = np.array([fold_of[g] for g in groups])
    scores = []
    for k in range(folds):
        test = fold == k
        train_y = y[~test]
        if not test.any() or len(np.unique(train_y)) < 2:
            continue
        model = train(X[~test], train_y, gamma, C)
        scores.append(balanced_accuracy(y[test], model.predict(X[test])))
    return float(np.mean(scores)) if scores else float("nan")


def select_hyperparameters(X, y, gammas: Sequence[float], Cs: Sequence[float], folds: int = 5, groups=None,
                           seed: int = 0):
    """Grid search by cross-validation; ties go to the smaller gamma, then the smaller C.

    Returns (gamma, C, score_table) with score_table[(gamma, C)] = CV score.
    """
    table = {}
    best = None
    for g in sorted(gammas):
        for c in sorted(Cs):
            s = cross_validate(X, y, g, c, folds, groups, seed)
            table[(g, c)] = s
            if best is None or s > best[0] + 1e-12:
                best = (s, g, c)
    return best[1], best[2], table
