"""Bounded split-candidate bookkeeping.

Every node keeps at most ``candidate_cap`` candidates. Per batch, stored
candidates absorb the statistics of the samples they route left; new
candidates are then enumerated from the values observed in the batch, scored
on that batch alone, and may displace up to a fixed fraction of the
lowest-scoring stored candidates. A candidate dropped earlier can re-enter
later if the data starts favouring it again.

Numeric candidates are midpoints between consecutive distinct sorted values
of a feature within the batch; categorical candidates are equality tests on
the observed values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gains import NEG_INF, split_gain
from .nodes import NodeStats, SplitCandidate, SplitTest, TreeNode


@dataclass(frozen=True)
class BatchEval:
    """One batch evaluated at a node's pre-step weights."""

    X: np.ndarray                 # (n, m) features
    losses: np.ndarray            # (n,) per-sample negative log-likelihood
    grad_rows: np.ndarray         # (n, r, m+1) per-sample gradient terms
    loss_sum: float
    grad_sum: np.ndarray          # (r, m+1)
    count: int

    @classmethod
    def from_model_output(cls, X, losses, grad_rows) -> "BatchEval":
        return cls(X, losses, grad_rows, float(losses.sum()),
                   grad_rows.sum(axis=0), X.shape[0])


def candidate_gains(node: TreeNode, learning_rate: float) -> list[float]:
    """Current gain of each stored candidate against the node's statistics.

    Candidates with an empty side are reported as ``-inf``. The same score
    ranks candidates for eviction at every node kind; the subtree-level
    replacement gain differs from it only by an offset that is common to all
    candidates of the node.
    """
    stats = node.stats
    return [
        split_gain(stats.loss_sum, stats.grad_sum, stats.count,
                   cand.left.loss_sum, cand.left.grad_sum, cand.left.count,
                   learning_rate)
        for cand in node.candidates
    ]


def increment_stored(node: TreeNode, batch: BatchEval) -> None:
    """Add each stored candidate's left-subset share of the batch."""
    for cand in node.candidates:
        mask = cand.test.routes_left(batch.X)
        n_left = int(mask.sum())
        if n_left == 0:
            continue
        cand.left.add(batch.losses[mask].sum(),
                      batch.grad_rows[mask].sum(axis=0), n_left)


def _feature_candidates(values, order, cum_loss, cum_grad, batch: BatchEval,
                        feature: int, categorical: bool, learning_rate: float):
    """Candidate tests and single-batch stats for one feature.

    Returns parallel lists (scores, tests, left_losses, left_grads,
    left_counts) with one entry per distinct test enumerable from the batch.
    """
    sorted_vals = values[order]
    # Boundaries after which the sorted value changes; each marks the end of
    # a run of equal values.
    change = np.nonzero(sorted_vals[:-1] != sorted_vals[1:])[0]
    if change.size == 0:
        return [], [], [], [], []

    grad_shape = batch.grad_sum.shape
    tests: list[SplitTest] = []
    left_losses: list[float] = []
    left_grads: list[np.ndarray] = []
    left_counts: list[int] = []

    if categorical:
        run_starts = np.concatenate([[0], change + 1])
        run_ends = np.concatenate([change, [len(sorted_vals) - 1]])
        for start, end in zip(run_starts, run_ends):
            count = int(end - start + 1)
            if count == batch.count:
                continue  # equality test routing everything left
            loss = cum_loss[end] - (cum_loss[start - 1] if start else 0.0)
            grad = cum_grad[end] - (cum_grad[start - 1] if start else 0.0)
            tests.append(SplitTest(feature, float(sorted_vals[start]), True))
            left_losses.append(float(loss))
            left_grads.append(grad.reshape(grad_shape))
            left_counts.append(count)
    else:
        midpoints = 0.5 * (sorted_vals[change] + sorted_vals[change + 1])
        for idx, value in zip(change, midpoints):
            tests.append(SplitTest(feature, float(value), False))
            left_losses.append(float(cum_loss[idx]))
            left_grads.append(cum_grad[idx].reshape(grad_shape))
            left_counts.append(int(idx) + 1)

    scores = [
        split_gain(batch.loss_sum, batch.grad_sum, batch.count,
                   left_losses[i], left_grads[i], left_counts[i],
                   learning_rate)
        for i in range(len(tests))
    ]
    return scores, tests, left_losses, left_grads, left_counts


def enumerate_fresh(batch: BatchEval, categorical_features,
                    learning_rate: float):
    """All distinct candidates enumerable from the batch, best first.

    Each entry is ``(score, SplitCandidate)`` where the candidate's left
    statistics are initialized from this batch alone. Ordering is by
    descending score with ties broken on the lowest feature index, then the
    lowest split value.
    """
    n, m = batch.X.shape
    if n < 2:
        return []
    flat_rows = batch.grad_rows.reshape(n, -1)
    found = []
    for feature in range(m):
        values = batch.X[:, feature]
        order = np.argsort(values, kind="stable")
        cum_loss = np.cumsum(batch.losses[order])
        cum_grad = np.cumsum(flat_rows[order], axis=0)
        parts = _feature_candidates(values, order, cum_loss, cum_grad, batch,
                                    feature, feature in categorical_features,
                                    learning_rate)
        found.extend(zip(*parts))
    found.sort(key=lambda item: (-item[0], item[1].feature, item[1].value))
    return [
        (score, SplitCandidate(test, NodeStats(loss, grad.copy(), count)))
        for score, test, loss, grad, count in found
        if score > NEG_INF
    ]


def refresh_store(node: TreeNode, batch: BatchEval, candidate_cap: int,
                  replacement_fraction: float, categorical_features,
                  learning_rate: float) -> None:
    """Per-batch candidate maintenance at one node.

    Stored candidates are updated first, then fresh candidates compete for
    free capacity and for at most ``ceil(replacement_fraction *
    candidate_cap)`` eviction slots held by the lowest-scoring stored
    candidates.
    """
    increment_stored(node, batch)

    fresh = enumerate_fresh(batch, categorical_features, learning_rate)
    if not fresh:
        return
    known = {cand.test.key for cand in node.candidates}
    fresh = [(score, cand) for score, cand in fresh
             if cand.test.key not in known]

    budget = math.ceil(replacement_fraction * candidate_cap)
    scores = candidate_gains(node, learning_rate)
    replaced = 0
    for score, cand in fresh:
        if len(node.candidates) < candidate_cap:
            node.candidates.append(cand)
            scores.append(score)
            continue
        if replaced >= budget:
            break
        worst = min(range(len(scores)), key=lambda i: (scores[i],
                                                       -node.candidates[i].test.feature,
                                                       -node.candidates[i].test.value))
        if scores[worst] >= score:
            break
        node.candidates[worst] = cand
        scores[worst] = score
        replaced += 1
