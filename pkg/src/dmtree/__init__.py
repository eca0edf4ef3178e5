"""Incremental model trees for evolving data streams.

A model tree keeps a small linear model at every node and scores structural
changes (splits, replacements, prunes) by the reduction in accumulated
negative log-likelihood, gated by information-criterion thresholds. The
package also ships synthetic drifting-stream generators, CSV ingestion and
a prequential evaluation harness with a CLI.
"""

__version__ = "0.1.0"

from .classifier import DynamicModelTreeClassifier, LinearModelClassifier
from .evaluation import (
    PrequentialRecord,
    count_parameters,
    count_splits,
    f1_score,
    prequential_run,
    sliding_aggregate,
)
from .glm import LinearNodeModel, warm_start_params
from .nodes import NodeStats, SplitCandidate, SplitTest, TreeNode
from .tree import (
    AuditError,
    AuditEvent,
    DmtConfig,
    ModelTree,
    parse_tree_dump,
)

__all__ = [
    "AuditError",
    "AuditEvent",
    "DmtConfig",
    "DynamicModelTreeClassifier",
    "LinearModelClassifier",
    "LinearNodeModel",
    "ModelTree",
    "NodeStats",
    "PrequentialRecord",
    "SplitCandidate",
    "SplitTest",
    "TreeNode",
    "count_parameters",
    "count_splits",
    "f1_score",
    "parse_tree_dump",
    "prequential_run",
    "sliding_aggregate",
    "warm_start_params",
    "__version__",
]
