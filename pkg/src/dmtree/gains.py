"""Gain functions and decision thresholds for structural tree updates.

All gains measure the reduction in accumulated negative log-likelihood that
a structural change would achieve. Candidate child losses are estimated from
the statistics kept at the parent: a first-order expansion around the parent
weights turns a single warm-start gradient step into the correction term
``(lr / count) * ||grad_sum||^2``, so no candidate child models are ever
trained. Right-side statistics are always derived as parent minus left,
which is why only left-child statistics are stored.

Thresholds come from comparing Akaike information criteria of the competing
structures: a change is accepted when the probability that the larger model
is actually the better one drops below ``epsilon``. With the log-likelihood
expressed through the gains, the test reduces to
``gain >= k_new_parts - k_old_parts - log(epsilon)``.
"""

from __future__ import annotations

import math

import numpy as np

NEG_INF = float("-inf")


def candidate_loss_approx(loss_sum: float, grad_sum: np.ndarray, count: int,
                          learning_rate: float) -> float:
    """Estimated loss of a warm-started child model on its subset.

    ``loss_sum``, ``grad_sum`` and ``count`` are the subset statistics
    accumulated at the parent's weights. The estimate is floored at zero
    because the underlying loss cannot be negative.
    """
    if count < 1:
        raise ValueError("candidate subset has no observations")
    sq_norm = float(np.vdot(grad_sum, grad_sum))
    return max(0.0, float(loss_sum) - (learning_rate / count) * sq_norm)


def gain_threshold(k_left: int, k_right: int, k_parent: int,
                   epsilon: float) -> float:
    """Minimum gain for replacing a ``k_parent``-parameter structure.

    ``k_left + k_right`` are the parameters of the two new children and
    ``k_parent`` those of the structure they replace (a single model for a
    leaf split, the summed leaf models of a subtree for a replacement).
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    return k_left + k_right - k_parent - math.log(epsilon)


def prune_threshold(k_inner: int, k_leaves_total: int, epsilon: float) -> float:
    """Minimum gain for collapsing a subtree into its root model."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    return k_inner - k_leaves_total - math.log(epsilon)


def split_gain(parent_loss: float, parent_grad: np.ndarray, parent_count: int,
               left_loss: float, left_grad: np.ndarray, left_count: int,
               learning_rate: float) -> float:
    """Gain of splitting a leaf on a stored candidate.

    Returns ``-inf`` when either side of the partition is empty, in which
    case the candidate is not evaluable.
    """
    right_count = parent_count - left_count
    if left_count < 1 or right_count < 1:
        return NEG_INF
    right_loss = parent_loss - left_loss
    right_grad = parent_grad - left_grad
    return (parent_loss
            - candidate_loss_approx(left_loss, left_grad, left_count,
                                    learning_rate)
            - candidate_loss_approx(right_loss, right_grad, right_count,
                                    learning_rate))


def replace_gain(leaf_loss_total: float,
                 inner_loss: float, inner_grad: np.ndarray, inner_count: int,
                 left_loss: float, left_grad: np.ndarray, left_count: int,
                 learning_rate: float) -> float:
    """Gain of replacing a whole subtree with a fresh two-leaf split.

    ``leaf_loss_total`` is the summed accumulated loss of the subtree's
    current leaves; the candidate statistics live at the subtree root.
    """
    right_count = inner_count - left_count
    if left_count < 1 or right_count < 1:
        return NEG_INF
    right_loss = inner_loss - left_loss
    right_grad = inner_grad - left_grad
    return (leaf_loss_total
            - candidate_loss_approx(left_loss, left_grad, left_count,
                                    learning_rate)
            - candidate_loss_approx(right_loss, right_grad, right_count,
                                    learning_rate))


def prune_gain(leaf_loss_total: float, inner_loss: float) -> float:
    """Gain of collapsing a subtree into a leaf that keeps the root model."""
    return leaf_loss_total - inner_loss
