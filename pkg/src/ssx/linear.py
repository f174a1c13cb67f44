"""Multinomial logistic regression on fixed feature vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_softmax

from ssx.errors import ValidationError


@dataclass
class LinearClassifier:
    """Softmax regression with standardised inputs and an L2 penalty, fitted by L-BFGS."""

    l2: float = 1e-3
    W: np.ndarray | None = None
    b: np.ndarray | None = None
    mu: np.ndarray | None = None
    sd: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, num_classes: int | None = None) -> LinearClassifier:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(X) == 0:
            raise ValidationError("empty training set")
        C = int(num_classes or y.max() + 1)
        self.mu = X.mean(axis=0)
        self.sd = np.where(X.std(axis=0) > 0, X.std(axis=0), 1.0)
        Z = (X - self.mu) / self.sd
        n, d = Z.shape
        onehot = np.eye(C)[y]

        def objective(theta):
            W = theta[: d * C].reshape(d, C)
            b = theta[d * C :]
            logp = log_softmax(Z @ W + b, axis=1)
            loss = -np.sum(onehot * logp) / n + 0.5 * self.l2 * np.sum(W * W)
            g = (np.exp(logp) - onehot) / n
            return loss, np.concatenate([(Z.T @ g + self.l2 * W).ravel(), g.sum(axis=0)])

        res = minimize(objective, np.zeros(d * C + C), jac=True, method="L-BFGS-B")
        self.W = res.x[: d * C].reshape(d, C)
        self.b = res.x[d * C :]
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.W is None:
            raise ValidationError("classifier is not fitted")
        Z = (np.asarray(X, dtype=np.float64) - self.mu) / self.sd
        return np.argmax(Z @ self.W + self.b, axis=1)

    def accuracy(self, X: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean(self.predict(X) == np.asarray(y)))
