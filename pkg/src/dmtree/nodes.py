"""Node-level data structures of the model tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .glm import LinearNodeModel


@dataclass
class NodeStats:
    """Accumulated loss, gradient and observation count of a node or candidate.

    The gradient accumulator has the same shape as the owning model's weight
    matrix and resets to exact zeros.
    """

    loss_sum: float
    grad_sum: np.ndarray
    count: int

    @classmethod
    def zeros(cls, grad_shape) -> "NodeStats":
        return cls(0.0, np.zeros(grad_shape), 0)

    def add(self, loss: float, grad: np.ndarray, count: int) -> None:
        self.loss_sum += float(loss)
        self.grad_sum += grad
        self.count += int(count)

    def reset(self) -> None:
        self.loss_sum = 0.0
        self.grad_sum = np.zeros_like(self.grad_sum)
        self.count = 0

    def copy(self) -> "NodeStats":
        return NodeStats(self.loss_sum, self.grad_sum.copy(), self.count)


@dataclass(frozen=True)
class SplitTest:
    """A binary feature test routing samples left or right.

    Numeric tests send ``x[feature] <= value`` left; categorical tests send
    ``x[feature] == value`` left.
    """

    feature: int
    value: float
    categorical: bool = False

    def routes_left(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.feature]
        if self.categorical:
            return col == self.value
        return col <= self.value

    @property
    def key(self):
        return (self.feature, self.value, self.categorical)

    def describe(self) -> str:
        op = "==" if self.categorical else "<="
        return f"x{self.feature} {op} {self.value:.6g}"


@dataclass
class SplitCandidate:
    """A feature test plus the statistics of the subset it routes left.

    Right-side statistics are never stored; they are derived as the owning
    node's statistics minus ``left``.
    """

    test: SplitTest
    left: NodeStats


class TreeNode:
    """A leaf or inner node.

    Inner nodes keep training their model and accumulating statistics after
    splitting, exactly like leaves; the only difference is that they carry a
    split test and two children and are evaluated for replacement or pruning
    instead of splitting.
    """

    __slots__ = ("node_id", "model", "stats", "candidates",
                 "test", "left", "right")

    def __init__(self, node_id: int, model: LinearNodeModel):
        self.node_id = node_id
        self.model = model
        self.stats = NodeStats.zeros(model.weights.shape)
        self.candidates: list[SplitCandidate] = []
        self.test: SplitTest | None = None
        self.left: TreeNode | None = None
        self.right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.test is None

    def iter_nodes(self):
        """Yield the subtree's nodes in depth-first, left-first order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def iter_leaves(self):
        for node in self.iter_nodes():
            if node.is_leaf:
                yield node

    def subtree_depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.subtree_depth(), self.right.subtree_depth())
