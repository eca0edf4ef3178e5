"""Synthetic drifting-stream generators.

Three classic stream families, each emitting batches of features normalized
to [0, 1] with integer labels:

* ``sea``: three uniform features on [0, 10]; the label is 1 when the sum of
  the first two features falls below a concept-specific threshold (8, 9, 7
  or 9.5). The third feature is irrelevant. Drift switches thresholds.
* ``agrawal``: nine mixed-type demographic features (salary, commission,
  age, education level, car, zipcode, house value, house years, loan) with
  four classification rules built from age, salary and education level.
  Drift mixes adjacent rules with a probability ramp across each window.
* ``hyperplane``: uniform features in the unit cube labelled by the side of
  a hyperplane through the cube centre whose normal receives a small random
  increment per sample, yielding continuous incremental drift.

Input noise perturbs a sample with the configured probability by redrawing
one randomly chosen feature from its base distribution; labels are computed
from the unperturbed values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

SEA_THRESHOLDS = (8.0, 9.0, 7.0, 9.5)

N_CONCEPTS = {"sea": len(SEA_THRESHOLDS), "agrawal": 4, "hyperplane": 1}

GENERATOR_FEATURES = {"sea": 3, "agrawal": 9}

AGRAWAL_CATEGORICAL = (3, 4, 5)  # elevel, car, zipcode

# Theoretical (min, max) per raw Agrawal column, used for normalization.
_AGRAWAL_RANGES = np.array([
    (20_000.0, 150_000.0),   # salary
    (0.0, 75_000.0),         # commission
    (20.0, 80.0),            # age
    (0.0, 4.0),              # elevel
    (1.0, 20.0),             # car
    (0.0, 8.0),              # zipcode
    (50_000.0, 1_350_000.0), # hvalue
    (1.0, 30.0),             # hyear
    (0.0, 500_000.0),        # loan
])


@dataclass(frozen=True)
class StreamBatch:
    """A batch of normalized feature rows with integer class labels.

    ``concept_ids`` is an optional debug channel carrying the concept that
    generated each sample.
    """

    features: np.ndarray
    labels: np.ndarray
    concept_ids: np.ndarray | None = None


@dataclass(frozen=True)
class DriftEvent:
    """Transition to ``concept`` ramped over ``[start, end)``; abrupt when
    ``start == end``."""

    start: int
    end: int
    concept: int


@dataclass(frozen=True)
class DriftSchedule:
    events: tuple[DriftEvent, ...]

    def __post_init__(self):
        pos = 0
        for ev in self.events:
            if ev.start < pos or ev.end < ev.start:
                raise ValueError("drift events must be ordered and "
                                 "non-overlapping")
            pos = ev.end if ev.end > ev.start else ev.start

    @classmethod
    def from_drift_points(cls, points, n_concepts: int) -> "DriftSchedule":
        """Abrupt schedule cycling through concepts at the given indices."""
        events = tuple(
            DriftEvent(int(p), int(p), (i + 1) % n_concepts)
            for i, p in enumerate(points)
        )
        return cls(events)

    @classmethod
    def from_windows(cls, windows, n_concepts: int) -> "DriftSchedule":
        """Incremental schedule ramping across ``(start, end)`` windows."""
        events = tuple(
            DriftEvent(int(s), int(e), (i + 1) % n_concepts)
            for i, (s, e) in enumerate(windows)
        )
        return cls(events)


@dataclass
class GeneratorConfig:
    kind: str
    n_samples: int
    batch_size: int = 1000
    noise_probability: float = 0.1
    seed: int | None = None
    schedule: DriftSchedule | None = None
    n_features: int = 50           # hyperplane only
    drift_magnitude: float = 0.001  # hyperplane only
    emit_concept_ids: bool = False

    def __post_init__(self):
        if self.kind not in N_CONCEPTS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n_samples < 1 or self.batch_size < 1:
            raise ValueError("n_samples and batch_size must be positive")
        if not 0.0 <= self.noise_probability <= 1.0:
            raise ValueError("noise_probability must lie in [0, 1]")
        if self.kind == "hyperplane" and self.n_features < 1:
            raise ValueError("n_features must be positive")
        if self.schedule is not None:
            bound = N_CONCEPTS[self.kind]
            for ev in self.schedule.events:
                if not 0 <= ev.concept < bound:
                    raise ValueError(
                        f"concept {ev.concept} out of range for {self.kind}")

    @property
    def feature_count(self) -> int:
        return (self.n_features if self.kind == "hyperplane"
                else GENERATOR_FEATURES[self.kind])

    @property
    def categorical_features(self) -> tuple[int, ...]:
        return AGRAWAL_CATEGORICAL if self.kind == "agrawal" else ()


def _concept_pieces(schedule: DriftSchedule | None):
    """Piecewise description: (start, end, previous, target-or-None)."""
    pieces = []
    pos, prev = 0, 0
    for ev in (schedule.events if schedule else ()):
        if ev.start > pos:
            pieces.append((pos, ev.start, prev, None))
        if ev.end > ev.start:
            pieces.append((ev.start, ev.end, prev, ev.concept))
        pos = max(ev.start, ev.end)
        prev = ev.concept
    pieces.append((pos, None, prev, None))
    return pieces


def _concepts_for_range(pieces, lo: int, hi: int,
                        rng: np.random.Generator) -> np.ndarray:
    out = np.empty(hi - lo, dtype=np.int64)
    for start, end, prev, target in pieces:
        a = max(lo, start)
        b = hi if end is None else min(hi, end)
        if a >= b:
            continue
        if target is None:
            out[a - lo:b - lo] = prev
        else:
            frac = (np.arange(a, b) - start) / (end - start)
            mix = rng.random(b - a)
            out[a - lo:b - lo] = np.where(mix < frac, target, prev)
    return out


def _apply_feature_noise(raw: np.ndarray, redraw: np.ndarray,
                         probability: float, rng: np.random.Generator) -> None:
    """Replace one feature of each selected sample with a fresh draw."""
    if probability <= 0.0:
        return
    n, m = raw.shape
    noisy = rng.random(n) < probability
    picked = rng.integers(0, m, size=n)
    rows = np.nonzero(noisy)[0]
    raw[rows, picked[rows]] = redraw[rows, picked[rows]]


def _sea_labels(raw: np.ndarray, concepts: np.ndarray) -> np.ndarray:
    thresholds = np.asarray(SEA_THRESHOLDS)[concepts]
    return (raw[:, 0] + raw[:, 1] <= thresholds).astype(np.int64)


def _agrawal_raw(rng: np.random.Generator, n: int) -> np.ndarray:
    salary = rng.uniform(20_000.0, 150_000.0, n)
    commission = np.where(salary >= 75_000.0, 0.0,
                          rng.uniform(10_000.0, 75_000.0, n))
    age = rng.uniform(20.0, 80.0, n)
    elevel = rng.integers(0, 5, n).astype(np.float64)
    car = rng.integers(1, 21, n).astype(np.float64)
    zipcode = rng.integers(0, 9, n).astype(np.float64)
    hvalue = (9.0 - zipcode) * 100_000.0 * rng.uniform(0.5, 1.5, n)
    hyear = rng.integers(1, 31, n).astype(np.float64)
    loan = rng.uniform(0.0, 500_000.0, n)
    return np.column_stack([salary, commission, age, elevel, car, zipcode,
                            hvalue, hyear, loan])


def _agrawal_labels(raw: np.ndarray, concepts: np.ndarray) -> np.ndarray:
    salary, age, elevel = raw[:, 0], raw[:, 2], raw[:, 3]
    young = age < 40
    old = age >= 60
    mid = ~young & ~old

    group_a = np.empty((4, raw.shape[0]), dtype=bool)
    group_a[0] = young | old
    group_a[1] = ((young & (50_000 <= salary) & (salary <= 100_000))
                  | (mid & (75_000 <= salary) & (salary <= 125_000))
                  | (old & (25_000 <= salary) & (salary <= 75_000)))
    group_a[2] = ((young & (elevel <= 1))
                  | (mid & (1 <= elevel) & (elevel <= 3))
                  | (old & (2 <= elevel)))
    low_band = (25_000 <= salary) & (salary <= 75_000)
    mid_band = (50_000 <= salary) & (salary <= 100_000)
    high_band = (75_000 <= salary) & (salary <= 125_000)
    group_a[3] = ((young & np.where(elevel <= 1, low_band, mid_band))
                  | (mid & np.where((1 <= elevel) & (elevel <= 3),
                                    mid_band, high_band))
                  | (old & np.where(elevel >= 2, mid_band, low_band)))
    picked = group_a[concepts, np.arange(raw.shape[0])]
    return np.where(picked, 0, 1).astype(np.int64)


def _normalize_agrawal(raw: np.ndarray) -> np.ndarray:
    lo = _AGRAWAL_RANGES[:, 0]
    hi = _AGRAWAL_RANGES[:, 1]
    return np.clip((raw - lo) / (hi - lo), 0.0, 1.0)


def generate(config: GeneratorConfig) -> Iterator[StreamBatch]:
    """Yield the configured stream as a sequence of batches.

    Deterministic for a fixed configuration, including the batch size.
    """
    rng = np.random.default_rng(config.seed)
    pieces = _concept_pieces(config.schedule)
    m = config.feature_count
    if config.kind == "hyperplane":
        weights = rng.uniform(0.0, 1.0, m)

    produced = 0
    while produced < config.n_samples:
        n = min(config.batch_size, config.n_samples - produced)
        lo, hi = produced, produced + n

        if config.kind == "sea":
            raw = rng.uniform(0.0, 10.0, (n, 3))
            concepts = _concepts_for_range(pieces, lo, hi, rng)
            labels = _sea_labels(raw, concepts)
            _apply_feature_noise(raw, rng.uniform(0.0, 10.0, (n, 3)),
                                 config.noise_probability, rng)
            features = raw / 10.0
        elif config.kind == "agrawal":
            raw = _agrawal_raw(rng, n)
            concepts = _concepts_for_range(pieces, lo, hi, rng)
            labels = _agrawal_labels(raw, concepts)
            _apply_feature_noise(raw, _agrawal_raw(rng, n),
                                 config.noise_probability, rng)
            features = _normalize_agrawal(raw)
        else:  # hyperplane
            features = rng.uniform(0.0, 1.0, (n, m))
            if config.drift_magnitude > 0.0:
                steps = rng.uniform(-config.drift_magnitude,
                                    config.drift_magnitude, (n, m))
                path = weights + np.cumsum(steps, axis=0)
                weights = path[-1].copy()
            else:
                path = np.broadcast_to(weights, (n, m))
            margins = ((features - 0.5) * path).sum(axis=1)
            labels = (margins > 0.0).astype(np.int64)
            concepts = np.zeros(n, dtype=np.int64)
            _apply_feature_noise(features, rng.uniform(0.0, 1.0, (n, m)),
                                 config.noise_probability, rng)

        yield StreamBatch(
            features=features,
            labels=labels,
            concept_ids=concepts if config.emit_concept_ids else None,
        )
        produced = hi
