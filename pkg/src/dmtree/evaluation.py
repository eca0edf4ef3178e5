"""Prequential (test-then-train) evaluation and its metrics.

Each batch is scored with the model state left by the previous batches and
only then used for training. Per-iteration records carry the F1 score, the
structure counts of the learner and the wall time of the iteration.

Conventions, chosen once and used everywhere:

* Multiclass F1 is macro-averaged; classes absent from a batch's true
  labels are excluded from that batch's macro denominator. Classes present
  in the truth but never predicted contribute an F1 of 0.
* ``f1_score`` defaults to the positive-class F1 for two classes; the
  prequential runner scores every batch with the macro average so that
  both classes of a binary stream carry weight.
* Sliding aggregation uses the population standard deviation, and the first
  ``window - 1`` entries average over the available prefix.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

RECORD_FIELDS = ("iteration", "f1", "n_splits", "n_parameters", "elapsed",
                 "batch_size")


@dataclass(frozen=True)
class PrequentialRecord:
    """One test-then-train iteration."""

    iteration: int
    f1: float
    n_splits: int
    n_parameters: int
    elapsed: float
    batch_size: int


def f1_score(y_true, y_pred, n_classes: int, average: str | None = None) -> float:
    """F1 score of a label batch.

    ``average`` defaults to ``"binary"`` (positive class 1) when
    ``n_classes == 2`` and to ``"macro"`` otherwise; ``"micro"`` is also
    accepted. Undefined per-class scores count as 0.
    """
    y_true = np.asarray(y_true, dtype=np.int64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if y_true.shape[0] != y_pred.shape[0]:
        raise ValueError(f"length mismatch: {y_true.shape[0]} true vs "
                         f"{y_pred.shape[0]} predicted labels")
    if y_true.shape[0] == 0:
        raise ValueError("f1_score requires at least one sample")
    if average is None:
        average = "binary" if n_classes == 2 else "macro"

    true_counts = np.bincount(y_true, minlength=n_classes)
    pred_counts = np.bincount(y_pred, minlength=n_classes)
    tp = np.bincount(y_true[y_true == y_pred], minlength=n_classes)

    if average == "binary":
        if n_classes != 2:
            raise ValueError("binary averaging requires n_classes == 2")
        return _f1_from_counts(tp[1], pred_counts[1], true_counts[1])
    if average == "micro":
        return _f1_from_counts(tp.sum(), pred_counts.sum(), true_counts.sum())
    if average == "macro":
        present = np.nonzero(true_counts > 0)[0]
        scores = [_f1_from_counts(tp[c], pred_counts[c], true_counts[c])
                  for c in present]
        return float(np.mean(scores))
    raise ValueError(f"unknown average {average!r}")


def _f1_from_counts(tp, predicted, actual) -> float:
    denom = predicted + actual  # == 2 tp + fp + fn
    if denom == 0:
        return 0.0
    return float(2.0 * tp / denom)


def count_splits(report: dict, n_classes: int) -> int:
    """Split count of a tree report: one per inner node plus one per leaf
    classifier for binary targets, or one per class for multiclass."""
    per_leaf = 1 if n_classes == 2 else n_classes
    return report["n_inner"] + report["n_leaves"] * per_leaf


def count_parameters(report: dict, n_classes: int,
                     convention: str = "reported") -> int:
    """Parameter count of a tree report.

    ``"reported"`` is the compact complexity-table convention: one
    parameter per inner node (the split value) and ``m`` weights per leaf
    (times the class count for multiclass targets, intercepts not
    counted). ``"internal"`` counts the weights the models actually carry,
    intercepts included.
    """
    m = report["n_features"]
    if convention == "reported":
        per_leaf = m * (1 if n_classes == 2 else n_classes)
    elif convention == "internal":
        per_leaf = report["leaf_parameter_count"]
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return report["n_inner"] + report["n_leaves"] * per_leaf


def prequential_run(learner, batches, n_classes: int,
                    f1_average: str = "macro",
                    param_convention: str = "reported",
                    timer=time.perf_counter) -> list[PrequentialRecord]:
    """Score each batch with the current model, then train on it.

    ``learner`` needs ``predict(X)``, ``partial_fit(X, y)`` and
    ``describe()``. ``batches`` yields ``StreamBatch``-like objects or
    ``(X, y)`` pairs. ``timer`` exists so reproducibility checks can
    substitute a deterministic clock.
    """
    records: list[PrequentialRecord] = []
    for iteration, batch in enumerate(batches):
        X, y = _unpack(batch)
        started = timer()
        predicted = learner.predict(X)
        score = f1_score(y, predicted, n_classes, average=f1_average)
        learner.partial_fit(X, y)
        elapsed = timer() - started
        report = learner.describe()
        records.append(PrequentialRecord(
            iteration=iteration,
            f1=score,
            n_splits=count_splits(report, n_classes),
            n_parameters=count_parameters(report, n_classes,
                                          param_convention),
            elapsed=float(elapsed),
            batch_size=X.shape[0],
        ))
    if not records:
        raise ValueError("prequential evaluation needs a nonempty stream")
    return records


def _unpack(batch):
    if hasattr(batch, "features"):
        return batch.features, batch.labels
    X, y = batch
    return np.asarray(X), np.asarray(y)


def rolling_stats(values, window: int):
    """Trailing mean and population standard deviation of a series.

    Entry ``i`` aggregates ``values[max(0, i - window + 1) : i + 1]``.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    values = np.asarray(values, dtype=np.float64)
    means = np.empty_like(values)
    stds = np.empty_like(values)
    for i in range(values.shape[0]):
        chunk = values[max(0, i - window + 1):i + 1]
        means[i] = chunk.mean()
        stds[i] = chunk.std()
    return means, stds


def sliding_aggregate(records, window: int = 20) -> dict:
    """Trailing mean/std series of every numeric record field."""
    out = {}
    for name in ("f1", "n_splits", "n_parameters", "elapsed"):
        series = [getattr(r, name) for r in records]
        means, stds = rolling_stats(series, window)
        out[f"{name}_mean"] = means
        out[f"{name}_std"] = stds
    return out


# ----------------------------------------------------------------------
# persistence
# ----------------------------------------------------------------------

def records_to_csv(records) -> str:
    """Render records as CSV text; floats use ``repr`` so the round trip is
    lossless."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for record in records:
        writer.writerow([
            record.iteration,
            repr(float(record.f1)),
            record.n_splits,
            record.n_parameters,
            repr(float(record.elapsed)),
            record.batch_size,
        ])
    return buffer.getvalue()


def export_records(records, path, format: str = "csv") -> None:
    if format == "csv":
        text = records_to_csv(records)
    elif format == "json":
        text = json.dumps([asdict(r) for r in records], indent=2) + "\n"
    else:
        raise ValueError(f"unknown export format {format!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def load_records(path) -> list[PrequentialRecord]:
    """Inverse of ``export_records`` for both formats."""
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or tuple(reader.fieldnames) != RECORD_FIELDS:
            raise ValueError(f"unexpected metrics header: {reader.fieldnames}")
        rows = list(reader)
    return [
        PrequentialRecord(
            iteration=int(row["iteration"]),
            f1=float(row["f1"]),
            n_splits=int(row["n_splits"]),
            n_parameters=int(row["n_parameters"]),
            elapsed=float(row["elapsed"]),
            batch_size=int(row["batch_size"]),
        )
        for row in rows
    ]
