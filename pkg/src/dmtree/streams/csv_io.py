"""CSV ingestion and export for streams.

Ingestion factorizes string-valued columns to integer codes in order of
first appearance, min-max scales every feature column to [0, 1] (either
from caller-supplied ranges or from a preliminary full pass over the file)
and cuts the rows into batches by a fixed row count or a fraction of the
total. The whole file is read into memory, which matches the offline
normalization it implements.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .generators import StreamBatch


class IngestionError(ValueError):
    """A CSV could not be turned into a stream; ``row`` is the 0-based data
    row index when the problem is tied to one row."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None
                         else f"{message} (data row {row})")
        self.row = row


@dataclass(frozen=True)
class StreamSchema:
    """What ingestion learned about a file."""

    feature_names: tuple[str, ...]
    categorical_features: tuple[int, ...]
    n_features: int
    n_classes: int
    label_values: tuple            # original label values, code order
    n_rows: int


def _factorize(values: list[str]):
    codes = np.empty(len(values), dtype=np.float64)
    mapping: dict[str, int] = {}
    for i, v in enumerate(values):
        if v not in mapping:
            mapping[v] = len(mapping)
        codes[i] = mapping[v]
    return codes, tuple(mapping)


def _parse_column(name: str, values: list[str]):
    """Return ``(array, is_categorical, original_values)``."""
    try:
        arr = np.asarray(values, dtype=np.float64)
    except ValueError:
        codes, originals = _factorize(values)
        return codes, True, originals
    bad = np.nonzero(~np.isfinite(arr))[0]
    if bad.size:
        raise IngestionError(f"column {name!r} has a non-finite value",
                             row=int(bad[0]))
    return arr, False, None


def _encode_labels(values: list[str]):
    """Integer labels in [0, c): verbatim if already 0..c-1, else factorized."""
    try:
        arr = np.asarray(values, dtype=np.float64)
        ints = arr.astype(np.int64)
        if np.array_equal(arr, ints):
            distinct = np.unique(ints)
            if distinct[0] == 0 and np.array_equal(
                    distinct, np.arange(distinct.size)):
                return ints, tuple(int(v) for v in distinct)
    except ValueError:
        pass
    codes, originals = _factorize(values)
    return codes.astype(np.int64), originals


def ingest_csv(path, label_column: str = "label", batch_size: int | None = None,
               batch_fraction: float | None = None,
               feature_ranges: dict | None = None,
               delimiter: str = ",", exclude_columns=(),
               shuffle_seed: int | None = None):
    """Read a CSV into normalized batches.

    Returns ``(batches, schema)`` where ``batches`` is a list of
    ``StreamBatch``. Exactly one of ``batch_size`` or ``batch_fraction``
    controls batching; the default is a fraction of 0.001. With
    ``feature_ranges`` (a ``{column_name: (low, high)}`` mapping) numeric
    columns are scaled by the given ranges and clamped to [0, 1]; otherwise
    the observed min/max of the full file is used. ``shuffle_seed`` applies
    one seeded shuffle of all rows before batching.
    """
    if batch_size is not None and batch_fraction is not None:
        raise ValueError("pass batch_size or batch_fraction, not both")
    if batch_size is None and batch_fraction is None:
        batch_fraction = 0.001
    if batch_size is not None and batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    if batch_fraction is not None and not 0.0 < batch_fraction <= 1.0:
        raise ValueError("batch_fraction must lie in (0, 1]")

    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle, delimiter=delimiter)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestionError("file is empty") from None
            rows = list(reader)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc

    header = [h.strip() for h in header]
    if label_column not in header:
        raise IngestionError(f"label column {label_column!r} not in header "
                             f"{header}")
    for name in exclude_columns:
        if name not in header:
            raise IngestionError(f"excluded column {name!r} not in header")
    if not rows:
        raise IngestionError("file has a header but no data rows")
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise IngestionError(
                f"expected {width} fields, found {len(row)}", row=i)

    feature_names = [name for name in header
                     if name != label_column and name not in exclude_columns]
    columns = {name: [row[idx] for row in rows]
               for idx, name in enumerate(header)}

    labels, label_values = _encode_labels(columns[label_column])
    n_classes = len(label_values)
    if n_classes < 2:
        raise IngestionError("label column holds fewer than 2 classes")

    matrix = np.empty((len(rows), len(feature_names)))
    categorical = []
    for j, name in enumerate(feature_names):
        arr, is_cat, _ = _parse_column(name, columns[name])
        if is_cat:
            categorical.append(j)
        if feature_ranges is not None and name in feature_ranges:
            lo, hi = feature_ranges[name]
        else:
            lo, hi = float(arr.min()), float(arr.max())
        span = hi - lo
        scaled = (arr - lo) / span if span > 0 else np.zeros_like(arr)
        matrix[:, j] = np.clip(scaled, 0.0, 1.0)

    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(rows))
        matrix = matrix[order]
        labels = labels[order]

    n = len(rows)
    if batch_size is None:
        batch_size = max(1, int(n * batch_fraction))
    batches = [
        StreamBatch(matrix[i:i + batch_size], labels[i:i + batch_size])
        for i in range(0, n, batch_size)
    ]
    schema = StreamSchema(
        feature_names=tuple(feature_names),
        categorical_features=tuple(categorical),
        n_features=len(feature_names),
        n_classes=n_classes,
        label_values=label_values,
        n_rows=n,
    )
    return batches, schema


def export_stream_csv(batches, path, include_concept_ids: bool = False,
                      feature_names=None) -> int:
    """Write batches to a CSV; returns the number of rows written.

    Floats are written with ``repr`` so a round trip through ``ingest_csv``
    is lossless. The optional concept-id debug column is off by default.
    """
    written = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        header = None
        for batch in batches:
            if header is None:
                m = batch.features.shape[1]
                names = (list(feature_names) if feature_names is not None
                         else [f"f{j}" for j in range(m)])
                if len(names) != m:
                    raise ValueError(f"{len(names)} feature names for "
                                     f"{m} columns")
                header = names + ["label"]
                if include_concept_ids:
                    header.append("concept")
                writer.writerow(header)
            concept = batch.concept_ids
            if include_concept_ids and concept is None:
                raise ValueError("batches carry no concept ids to export")
            for i in range(batch.features.shape[0]):
                row = [repr(float(v)) for v in batch.features[i]]
                row.append(int(batch.labels[i]))
                if include_concept_ids:
                    row.append(int(concept[i]))
                writer.writerow(row)
                written += 1
    return written
