"""The incremental model tree: batch updates, structural changes, reporting.

Every node, inner or leaf, owns a linear model that keeps training on the
samples routed through it, plus accumulated loss/gradient/count statistics
and a bounded set of split candidates. An update pass walks each batch from
the root down, evaluating each node's batch at its pre-step weights (the
same evaluation feeds the statistics, the candidate bookkeeping and the
descent step), then applies structural changes bottom-up:

* a leaf splits when its best candidate's gain reaches the split threshold;
* an inner node is replaced by a fresh split, or pruned back to a leaf,
  when the corresponding gain reaches its threshold. If both pass, pruning
  wins ties on the gain, which keeps the smaller tree.

Structural decisions are recorded in an audit log of (gain, threshold)
pairs, and every prune-gain evaluation that passed its threshold is logged
with the action that followed, so the update-rule guarantees can be checked
after any run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import gains
from .candidates import BatchEval, candidate_gains, refresh_store
from .glm import LinearNodeModel
from .nodes import SplitTest, TreeNode
from .validation import as_feature_matrix, as_label_vector

# Relative slack for the parent-minus-left consistency check of candidate
# statistics.
DECOMPOSITION_RTOL = 1e-9

TREE_DUMP_FORMAT = "dmtree-v1"


class AuditError(RuntimeError):
    """An internal update-rule guarantee was violated."""


@dataclass(frozen=True)
class AuditEvent:
    """One applied structural change."""

    batch_index: int
    node_id: int
    action: str          # "split" | "replace" | "prune"
    gain: float
    threshold: float


@dataclass(frozen=True)
class PruneCheck:
    """One prune evaluation whose gain passed its threshold."""

    batch_index: int
    node_id: int
    gain: float
    threshold: float
    action: str          # the structural action taken in the same call


@dataclass
class DmtConfig:
    """Hyperparameters and input schema of a model tree.

    ``candidate_cap`` defaults to three times the number of features;
    ``max_depth=0`` restricts the tree to its root, which reduces it to a
    plain linear model. ``categorical_features`` lists the column indices
    that should be split with equality tests instead of thresholds.
    """

    n_features: int
    n_classes: int
    learning_rate: float = 0.05
    epsilon: float = 1e-7
    candidate_cap: int | None = None
    replacement_fraction: float = 0.5
    max_depth: int | None = None
    categorical_features: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError("n_features must be at least 1")
        if self.n_classes < 2:
            raise ValueError("n_classes must be at least 2")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.candidate_cap is None:
            self.candidate_cap = 3 * self.n_features
        if self.candidate_cap < 1:
            raise ValueError("candidate_cap must be at least 1")
        if not 0.0 <= self.replacement_fraction <= 1.0:
            raise ValueError("replacement_fraction must lie in [0, 1]")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")
        self.categorical_features = tuple(sorted(set(self.categorical_features)))
        for idx in self.categorical_features:
            if not 0 <= idx < self.n_features:
                raise ValueError(f"categorical feature index {idx} out of range")


class ModelTree:
    """A binary model tree trained incrementally on batches of a stream."""

    def __init__(self, config: DmtConfig):
        self.config = config
        self._node_counter = 0
        self.root = self._new_leaf(
            LinearNodeModel(config.n_features, config.n_classes,
                            config.learning_rate))
        self.batch_index = 0
        self.audit_log: list[AuditEvent] = []
        self.prune_checks: list[PruneCheck] = []
        self.decomposition_violations = 0

    # ------------------------------------------------------------------
    # construction helpers
    # ------------------------------------------------------------------

    def _new_leaf(self, model: LinearNodeModel) -> TreeNode:
        node = TreeNode(self._node_counter, model)
        self._node_counter += 1
        return node

    @property
    def leaf_parameter_count(self) -> int:
        return self.root.model.parameter_count

    # ------------------------------------------------------------------
    # training
    # ------------------------------------------------------------------

    def update(self, X, y) -> "ModelTree":
        """Process one batch: train the node models, then grow or shrink."""
        X = as_feature_matrix(X, self.config.n_features)
        y = as_label_vector(y, self.config.n_classes, X.shape[0])
        if X.shape[0] < 1:
            raise ValueError("update requires a nonempty batch")
        self.batch_index += 1
        self._update_node(self.root, X, y, depth=0)
        return self

    def _update_node(self, node: TreeNode, X, y, depth: int) -> None:
        losses, grad_rows = node.model.loss_and_gradient_rows(X, y)
        batch = BatchEval.from_model_output(X, losses, grad_rows)
        node.stats.add(batch.loss_sum, batch.grad_sum, batch.count)
        refresh_store(node, batch, self.config.candidate_cap,
                      self.config.replacement_fraction,
                      self.config.categorical_features,
                      self.config.learning_rate)
        self._check_decomposition(node)
        node.model.apply_gradient(batch.grad_sum, batch.count)

        if node.is_leaf:
            self._evaluate_leaf(node, depth)
            return

        mask = node.test.routes_left(X)
        if mask.any():
            self._update_node(node.left, X[mask], y[mask], depth + 1)
        if not mask.all():
            self._update_node(node.right, X[~mask], y[~mask], depth + 1)
        self._evaluate_inner(node)

    # ------------------------------------------------------------------
    # structural evaluation
    # ------------------------------------------------------------------

    def _best_candidate(self, node: TreeNode):
        """Highest-gain stored candidate.

        Returns ``(index, gain)``; ``index`` is ``None`` when no candidate is
        evaluable. Ties prefer the lowest feature index, then the lowest
        split value.
        """
        scores = candidate_gains(node, self.config.learning_rate)
        best_idx = None
        best_key = None
        for idx, score in enumerate(scores):
            if score == gains.NEG_INF:
                continue
            test = node.candidates[idx].test
            key = (-score, test.feature, test.value)
            if best_key is None or key < best_key:
                best_key = key
                best_idx = idx
        if best_idx is None:
            return None, gains.NEG_INF
        return best_idx, -best_key[0]

    def _check_decomposition(self, node: TreeNode) -> None:
        tol = DECOMPOSITION_RTOL * (1.0 + abs(node.stats.loss_sum))
        for cand in node.candidates:
            if (node.stats.count - cand.left.count < 0
                    or node.stats.loss_sum - cand.left.loss_sum < -tol):
                self.decomposition_violations += 1

    def _evaluate_leaf(self, node: TreeNode, depth: int) -> None:
        if (self.config.max_depth is not None
                and depth >= self.config.max_depth):
            return
        idx, gain = self._best_candidate(node)
        if idx is None:
            return
        k = node.model.parameter_count
        threshold = gains.gain_threshold(k, k, k, self.config.epsilon)
        if gain >= threshold:
            self.audit_log.append(AuditEvent(
                self.batch_index, node.node_id, "split", gain, threshold))
            self._install_split(node, node.candidates[idx].test)

    def _evaluate_inner(self, node: TreeNode) -> None:
        k = node.model.parameter_count
        leaves = list(node.iter_leaves())
        leaf_loss_total = sum(leaf.stats.loss_sum for leaf in leaves)
        k_leaves = sum(leaf.model.parameter_count for leaf in leaves)

        prune_g = gains.prune_gain(leaf_loss_total, node.stats.loss_sum)
        prune_thr = gains.prune_threshold(k, k_leaves, self.config.epsilon)
        prune_ok = prune_g >= prune_thr

        # The replacement gain of every candidate differs from its stored
        # split-form gain only by the common offset between the subtree's
        # leaf losses and this node's own loss.
        idx, cand_gain = self._best_candidate(node)
        replace_thr = gains.gain_threshold(k, k, k_leaves, self.config.epsilon)
        if idx is not None:
            replace_g = cand_gain - node.stats.loss_sum + leaf_loss_total
            replace_ok = replace_g >= replace_thr
        else:
            replace_g = gains.NEG_INF
            replace_ok = False

        action = "none"
        if prune_ok and (not replace_ok or prune_g >= replace_g):
            action = "prune"
            self.audit_log.append(AuditEvent(
                self.batch_index, node.node_id, "prune", prune_g, prune_thr))
            self._install_prune(node)
        elif replace_ok:
            action = "replace"
            self.audit_log.append(AuditEvent(
                self.batch_index, node.node_id, "replace", replace_g,
                replace_thr))
            self._install_split(node, node.candidates[idx].test)
        if prune_ok:
            self.prune_checks.append(PruneCheck(
                self.batch_index, node.node_id, prune_g, prune_thr, action))

    def _install_split(self, node: TreeNode, test: SplitTest) -> None:
        """Turn ``node`` into an inner node with two warm-started leaves.

        The node keeps its model; its statistics and candidates restart so
        that the loss windows entering future prune and replacement gains
        cover the same batches for the node and for the children it is
        compared against. Without the restart, the node's lifetime loss
        dominates those gains and stale subtrees survive concept drift
        almost indefinitely.
        """
        node.test = test
        node.left = self._new_leaf(node.model.copy())
        node.right = self._new_leaf(node.model.copy())
        node.stats.reset()
        node.candidates = []

    def _install_prune(self, node: TreeNode) -> None:
        """Collapse the subtree; the node keeps its model and statistics."""
        node.test = None
        node.left = None
        node.right = None

    # ------------------------------------------------------------------
    # inference
    # ------------------------------------------------------------------

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities from the leaf model each row routes to."""
        X = as_feature_matrix(X, self.config.n_features)
        out = np.empty((X.shape[0], self.config.n_classes))
        self._route_proba(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _route_proba(self, node, X, rows, out) -> None:
        if rows.size == 0:
            return
        if node.is_leaf:
            out[rows] = node.model.predict_proba(X[rows])
            return
        mask = node.test.routes_left(X[rows])
        self._route_proba(node.left, X, rows[mask], out)
        self._route_proba(node.right, X, rows[~mask], out)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    # ------------------------------------------------------------------
    # reporting
    # ------------------------------------------------------------------

    def describe(self) -> dict:
        """Census of the current structure, safe to serialize as JSON."""
        nodes = []
        n_inner = 0
        for node in self.root.iter_nodes():
            record = {
                "id": node.node_id,
                "kind": "leaf" if node.is_leaf else "inner",
                "weights": node.model.weights.tolist(),
                "stats": {
                    "loss_sum": node.stats.loss_sum,
                    "grad_sum": node.stats.grad_sum.tolist(),
                    "count": node.stats.count,
                },
                "test": None,
                "left": None,
                "right": None,
            }
            if not node.is_leaf:
                n_inner += 1
                record["test"] = {
                    "feature": node.test.feature,
                    "value": node.test.value,
                    "op": "eq" if node.test.categorical else "le",
                }
                record["left"] = node.left.node_id
                record["right"] = node.right.node_id
            nodes.append(record)
        return {
            "n_features": self.config.n_features,
            "n_classes": self.config.n_classes,
            "n_inner": n_inner,
            "n_leaves": len(nodes) - n_inner,
            "n_nodes": len(nodes),
            "depth": self.root.subtree_depth(),
            "leaf_parameter_count": self.leaf_parameter_count,
            "nodes": nodes,
        }

    def dump(self) -> dict:
        report = self.describe()
        report["format"] = TREE_DUMP_FORMAT
        report["root"] = self.root.node_id
        return report

    def dumps(self) -> str:
        return json.dumps(self.dump(), indent=2)

    def verify_audit(self) -> None:
        """Raise ``AuditError`` if any logged guarantee was violated."""
        for event in self.audit_log:
            if not event.gain >= event.threshold:
                raise AuditError(
                    f"{event.action} at node {event.node_id} applied with "
                    f"gain {event.gain} below threshold {event.threshold}")
        for check in self.prune_checks:
            if check.action == "none":
                raise AuditError(
                    f"prune gain passed at node {check.node_id} "
                    f"(batch {check.batch_index}) without a structural change")
        if self.decomposition_violations:
            raise AuditError(
                f"{self.decomposition_violations} candidate statistics "
                "decomposition violations")


def parse_tree_dump(text: str) -> dict:
    """Validate and return a tree dump previously produced by ``dumps``.

    Raises ``ValueError`` with the offending location on malformed input.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != TREE_DUMP_FORMAT:
        raise ValueError(f"missing or unknown dump format marker "
                         f"{data.get('format') if isinstance(data, dict) else data!r}")
    nodes = data.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise ValueError("dump has no node list")
    by_id = {}
    for pos, record in enumerate(nodes):
        for key in ("id", "kind", "weights", "stats", "test", "left", "right"):
            if key not in record:
                raise ValueError(f"node at position {pos} lacks field {key!r}")
        if record["kind"] not in ("leaf", "inner"):
            raise ValueError(f"node {record['id']} has unknown kind "
                             f"{record['kind']!r}")
        if record["kind"] == "inner" and record["test"] is None:
            raise ValueError(f"inner node {record['id']} lacks a split test")
        by_id[record["id"]] = record
    for record in nodes:
        for side in ("left", "right"):
            child = record[side]
            if child is not None and child not in by_id:
                raise ValueError(f"node {record['id']} references missing "
                                 f"child {child}")
    if data.get("root") not in by_id:
        raise ValueError("dump root id missing from node list")
    return data
