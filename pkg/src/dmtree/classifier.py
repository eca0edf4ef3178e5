"""Scikit-learn style estimator wrappers around the tree and the plain model.

Both classifiers are stream learners: the input schema (feature and class
counts) is fixed at construction, the model exists from the first call, and
training happens through repeated ``partial_fit``. ``fit`` resets the model
and performs a single ``partial_fit``, which makes the classes usable in
pipelines but is not a substitute for streaming over batches.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .glm import LinearNodeModel
from .tree import DmtConfig, ModelTree
from .validation import as_feature_matrix, as_label_vector


class DynamicModelTreeClassifier(BaseEstimator, ClassifierMixin):
    """Incremental model-tree classifier for evolving data streams.

    The tree keeps a linear model at every node, scores split candidates by
    the reduction in accumulated negative log-likelihood, and gates every
    split, replacement and prune with an information-criterion threshold
    controlled by ``epsilon``. Adaptation to concept drift falls out of the
    same gain comparisons; no separate drift detector is involved.

    Parameters
    ----------
    n_features, n_classes : int
        Input schema; fixed for the lifetime of the estimator.
    learning_rate : float, default 0.05
        Constant step size of the per-node gradient descent.
    epsilon : float, default 1e-7
        Confidence level of the structural-change test. Smaller values make
        the tree more conservative.
    candidate_cap : int, optional
        Stored split candidates per node; defaults to ``3 * n_features``.
    replacement_fraction : float, default 0.5
        Fraction of stored candidates that newly observed candidates may
        displace per batch.
    max_depth : int, optional
        Depth bound; ``0`` keeps the tree at its root, which reduces it to
        a plain logistic model.
    categorical_features : sequence of int, optional
        Column indices split with equality tests instead of thresholds.
    """

    def __init__(self, n_features, n_classes, learning_rate=0.05,
                 epsilon=1e-7, candidate_cap=None, replacement_fraction=0.5,
                 max_depth=None, categorical_features=None):
        self.n_features = n_features
        self.n_classes = n_classes
        self.learning_rate = learning_rate
        self.epsilon = epsilon
        self.candidate_cap = candidate_cap
        self.replacement_fraction = replacement_fraction
        self.max_depth = max_depth
        self.categorical_features = categorical_features

    def _build_config(self) -> DmtConfig:
        return DmtConfig(
            n_features=self.n_features,
            n_classes=self.n_classes,
            learning_rate=self.learning_rate,
            epsilon=self.epsilon,
            candidate_cap=self.candidate_cap,
            replacement_fraction=self.replacement_fraction,
            max_depth=self.max_depth,
            categorical_features=tuple(self.categorical_features or ()),
        )

    @property
    def tree_(self) -> ModelTree:
        if not hasattr(self, "_tree"):
            self._tree = ModelTree(self._build_config())
            self.classes_ = np.arange(self.n_classes)
            self.n_features_in_ = self.n_features
        return self._tree

    def reset(self) -> "DynamicModelTreeClassifier":
        """Discard all learned state; hyperparameters are kept."""
        if hasattr(self, "_tree"):
            del self._tree
        return self

    def partial_fit(self, X, y, classes=None) -> "DynamicModelTreeClassifier":
        """Train on one batch. ``classes`` is accepted for API compatibility."""
        if classes is not None:
            classes = np.asarray(classes)
            if not np.array_equal(classes, np.arange(self.n_classes)):
                raise ValueError(
                    f"classes must equal arange(n_classes)={self.n_classes}")
        self.tree_.update(X, y)
        return self

    def fit(self, X, y) -> "DynamicModelTreeClassifier":
        """Reset, then perform a single batch update on ``(X, y)``."""
        self.reset()
        return self.partial_fit(X, y)

    def predict_proba(self, X) -> np.ndarray:
        return self.tree_.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return self.tree_.predict(X)

    def describe(self) -> dict:
        """Structure census of the current tree; see ``ModelTree.describe``."""
        return self.tree_.describe()

    @property
    def audit_log_(self):
        return self.tree_.audit_log


class LinearModelClassifier(BaseEstimator, ClassifierMixin):
    """Stand-alone logistic / multinomial-logit stream classifier.

    The exact same model that the tree trains at each node, exposed with the
    estimator API. A depth-0 tree and this classifier produce identical
    predictions when fed the same batches in the same order.
    """

    def __init__(self, n_features, n_classes, learning_rate=0.05):
        self.n_features = n_features
        self.n_classes = n_classes
        self.learning_rate = learning_rate

    @property
    def model_(self) -> LinearNodeModel:
        if not hasattr(self, "_model"):
            self._model = LinearNodeModel(self.n_features, self.n_classes,
                                          self.learning_rate)
            self.classes_ = np.arange(self.n_classes)
            self.n_features_in_ = self.n_features
        return self._model

    def reset(self) -> "LinearModelClassifier":
        if hasattr(self, "_model"):
            del self._model
        return self

    def partial_fit(self, X, y, classes=None) -> "LinearModelClassifier":
        X = as_feature_matrix(X, self.n_features)
        y = as_label_vector(y, self.n_classes, X.shape[0])
        self.model_.sgd_step(X, y)
        return self

    def fit(self, X, y) -> "LinearModelClassifier":
        self.reset()
        return self.partial_fit(X, y)

    def predict_proba(self, X) -> np.ndarray:
        return self.model_.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return self.model_.predict(X)

    def describe(self) -> dict:
        """Single-leaf census in the same schema as the tree's report."""
        model = self.model_
        return {
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "n_inner": 0,
            "n_leaves": 1,
            "n_nodes": 1,
            "depth": 0,
            "leaf_parameter_count": model.parameter_count,
            "nodes": [{
                "id": 0,
                "kind": "leaf",
                "weights": model.weights.tolist(),
                "stats": None,
                "test": None,
                "left": None,
                "right": None,
            }],
        }
