"""Logit and multinomial-logit node models trained by constant-rate gradient descent.

A binary target is represented by a single logit row, a target with c > 2
classes by one softmax row per class. Every model carries an intercept as its
last weight column, so the parameter count is ``rows * (n_features + 1)``.
Losses are summed (not averaged) negative log-likelihoods; gradient-descent
steps divide the summed batch gradient by the batch size so the step scale
does not depend on how the stream is batched.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, softmax

from .validation import as_feature_matrix, as_label_vector

# Probabilities are clamped here before any logarithm, which keeps the
# negative log-likelihood finite for arbitrarily saturated models.
PROB_FLOOR = 1e-15


def with_intercept(X: np.ndarray) -> np.ndarray:
    """Append a constant 1.0 column to a feature matrix."""
    return np.hstack([X, np.ones((X.shape[0], 1))])


class LinearNodeModel:
    """A logistic (c = 2) or multinomial-logit (c > 2) classifier.

    Parameters
    ----------
    n_features : int
        Number of input columns, excluding the intercept.
    n_classes : int
        Number of target classes, at least 2.
    learning_rate : float
        Constant step size for :meth:`sgd_step`. May be zero, in which case
        steps leave the weights unchanged.
    weights : ndarray, optional
        Initial weight matrix of shape ``(rows, n_features + 1)``. Defaults
        to exact zeros, which yields uniform predictions from the start and
        makes training runs reproducible without a seed.
    """

    def __init__(self, n_features: int, n_classes: int,
                 learning_rate: float = 0.05, weights=None):
        if n_features < 1:
            raise ValueError("n_features must be at least 1")
        if n_classes < 2:
            raise ValueError("n_classes must be at least 2")
        if learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        self.n_features = int(n_features)
        self.n_classes = int(n_classes)
        self.learning_rate = float(learning_rate)
        rows = 1 if self.n_classes == 2 else self.n_classes
        if weights is None:
            self.weights = np.zeros((rows, self.n_features + 1))
        else:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != (rows, self.n_features + 1):
                raise ValueError(
                    f"weights must have shape {(rows, self.n_features + 1)}, "
                    f"got {weights.shape}"
                )
            if not np.all(np.isfinite(weights)):
                raise ValueError("weights must be finite")
            self.weights = weights.copy()

    @property
    def n_weight_rows(self) -> int:
        return self.weights.shape[0]

    @property
    def parameter_count(self) -> int:
        return self.weights.size

    def copy(self) -> "LinearNodeModel":
        return LinearNodeModel(self.n_features, self.n_classes,
                               self.learning_rate, weights=self.weights)

    # ------------------------------------------------------------------
    # inference
    # ------------------------------------------------------------------

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities, one row per sample, each summing to 1.

        Stable for logits up to several hundred in magnitude; entries are
        clamped away from exact 0/1 and renormalized.
        """
        X = as_feature_matrix(X, self.n_features)
        scores = with_intercept(X) @ self.weights.T
        if self.n_classes == 2:
            p1 = expit(scores[:, 0])
            probs = np.column_stack([1.0 - p1, p1])
        else:
            probs = softmax(scores, axis=1)
        probs = np.clip(probs, PROB_FLOOR, None)
        probs /= probs.sum(axis=1, keepdims=True)
        return probs

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    # ------------------------------------------------------------------
    # loss and gradients
    # ------------------------------------------------------------------

    def per_sample_loss(self, X, y) -> np.ndarray:
        """Negative log-likelihood of each sample under the current weights."""
        X = as_feature_matrix(X, self.n_features)
        y = as_label_vector(y, self.n_classes, X.shape[0])
        probs = self.predict_proba(X)
        picked = probs[np.arange(X.shape[0]), y]
        return -np.log(np.clip(picked, PROB_FLOOR, 1.0))

    def nll_loss(self, X, y) -> float:
        """Summed negative log-likelihood of a batch."""
        return float(self.per_sample_loss(X, y).sum())

    def loss_and_gradient_rows(self, X, y):
        """Per-sample losses and per-sample gradient contributions.

        Returns ``(losses, rows)`` where ``losses`` has shape ``(n,)`` and
        ``rows`` has shape ``(n, n_weight_rows, n_features + 1)``. Summing
        ``rows`` over the first axis gives the batch gradient of
        :meth:`nll_loss` with respect to the weights.
        """
        X = as_feature_matrix(X, self.n_features)
        y = as_label_vector(y, self.n_classes, X.shape[0])
        n = X.shape[0]
        Xi = with_intercept(X)
        probs = self.predict_proba(X)
        losses = -np.log(np.clip(probs[np.arange(n), y], PROB_FLOOR, 1.0))
        if self.n_classes == 2:
            resid = (probs[:, 1] - y)[:, None]              # (n, 1)
        else:
            resid = probs.copy()
            resid[np.arange(n), y] -= 1.0                    # (n, c)
        rows = resid[:, :, None] * Xi[:, None, :]
        return losses, rows

    def nll_gradient(self, X, y) -> np.ndarray:
        """Exact gradient of :meth:`nll_loss`, summed over the batch."""
        _, rows = self.loss_and_gradient_rows(X, y)
        return rows.sum(axis=0)

    # ------------------------------------------------------------------
    # training
    # ------------------------------------------------------------------

    def apply_gradient(self, grad_sum: np.ndarray, count: int) -> None:
        """Take one descent step using an already-computed summed gradient."""
        if count < 1:
            raise ValueError("count must be at least 1")
        self.weights -= (self.learning_rate / count) * grad_sum

    def sgd_step(self, X, y) -> np.ndarray:
        """One mean-gradient descent step on a batch.

        Returns the summed (unscaled) batch gradient so callers can reuse it
        for accumulation without recomputing.
        """
        X = as_feature_matrix(X, self.n_features)
        if X.shape[0] < 1:
            raise ValueError("sgd_step requires a nonempty batch")
        grad = self.nll_gradient(X, y)
        self.apply_gradient(grad, X.shape[0])
        return grad

    def __repr__(self) -> str:
        return (f"LinearNodeModel(n_features={self.n_features}, "
                f"n_classes={self.n_classes}, lr={self.learning_rate})")


def warm_start_params(parent_weights: np.ndarray, grad_sum: np.ndarray,
                      count: int, learning_rate: float) -> np.ndarray:
    """Single-step child weights: ``parent - (lr / count) * grad_sum``.

    Pure function; neither argument is mutated. ``count`` is the number of
    observations behind ``grad_sum``.
    """
    if count < 1:
        raise ValueError("warm start requires at least one observation")
    parent_weights = np.asarray(parent_weights, dtype=np.float64)
    grad_sum = np.asarray(grad_sum, dtype=np.float64)
    if parent_weights.shape != grad_sum.shape:
        raise ValueError("parent weights and gradient shapes differ")
    return parent_weights - (learning_rate / count) * grad_sum
