"""Stream sources: synthetic drifting generators and CSV ingestion."""

from .csv_io import IngestionError, StreamSchema, export_stream_csv, ingest_csv
from .generators import (
    AGRAWAL_CATEGORICAL,
    GENERATOR_FEATURES,
    N_CONCEPTS,
    SEA_THRESHOLDS,
    DriftEvent,
    DriftSchedule,
    GeneratorConfig,
    StreamBatch,
    generate,
)

__all__ = [
    "AGRAWAL_CATEGORICAL",
    "GENERATOR_FEATURES",
    "N_CONCEPTS",
    "SEA_THRESHOLDS",
    "DriftEvent",
    "DriftSchedule",
    "GeneratorConfig",
    "StreamBatch",
    "IngestionError",
    "StreamSchema",
    "export_stream_csv",
    "generate",
    "ingest_csv",
]
