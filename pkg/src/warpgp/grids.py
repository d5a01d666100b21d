"""Lattice geometry and container types for spectrogram collections.

A dataset is a list of spectrograms sharing one log-frequency grid. Each
spectrogram lives on a regular (time x log-frequency) lattice and is
flattened in ascending time, then ascending frequency within each time,
which fixes the canonical linear ordering used everywhere else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "DEFAULT_TIME_STEP",
    "DEFAULT_FREQ_STEP",
    "DEFAULT_FREQ_BINS",
    "DatasetError",
    "FrequencyGrid",
    "TimeGrid",
    "Spectrogram",
    "Dataset",
    "PointRef",
    "validate_dataset",
    "point_index",
    "point_ref",
]

DEFAULT_TIME_STEP = 0.01
DEFAULT_FREQ_STEP = 0.23
DEFAULT_FREQ_BINS = 26
_LOG63 = math.log(63.0)


class DatasetError(ValueError):
    """A dataset, grid or index violates a structural invariant."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing log-frequency coordinates (log-Hz)."""

    values: np.ndarray

    def __post_init__(self):
        vals = _readonly(np.asarray(self.values, dtype=np.float64))
        if vals.ndim != 1 or vals.size < 2:
            raise DatasetError("frequency grid needs at least 2 coordinates")
        if not np.all(np.isfinite(vals)):
            raise DatasetError("non-finite frequency coordinate")
        if not np.all(np.diff(vals) > 0):
            raise DatasetError("frequency grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def default(cls, bins: int = DEFAULT_FREQ_BINS) -> "FrequencyGrid":
        """One-third-octave style grid: 0.23*k + log(63) for k = 1..bins."""
        k = np.arange(1, bins + 1, dtype=np.float64)
        return cls(DEFAULT_FREQ_STEP * k + _LOG63)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def uniform_step(self) -> float | None:
        """Common spacing when the grid is evenly spaced, else None."""
        d = np.diff(self.values)
        if np.allclose(d, d[0], rtol=1e-9, atol=0.0):
            return float(d[0])
        return None

    def __eq__(self, other) -> bool:
        return isinstance(other, FrequencyGrid) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class TimeGrid:
    """Regular time coordinates {step*(k-1), k=1..count}."""

    count: int
    step: float = DEFAULT_TIME_STEP

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 2:
            raise DatasetError("time grid needs count >= 2")
        object.__setattr__(self, "count", int(self.count))
        if not (self.step > 0 and math.isfinite(self.step)):
            raise DatasetError("time step must be positive and finite")

    @property
    def length(self) -> float:
        """Signal length l = step*(count-1)."""
        return self.step * (self.count - 1)

    def coords(self) -> np.ndarray:
        return np.arange(self.count, dtype=np.float64) * self.step


@dataclass(frozen=True)
class Spectrogram:
    """One signal's lattice of intensities (dB SPL) on time x frequency.

    ``mask`` (optional) marks lattice points that participate in the model;
    points with mask False are treated as removed (used by cross-validation
    holdouts). ``None`` means every point is active.
    """

    id: int
    time: TimeGrid
    freq: FrequencyGrid
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        vals = _readonly(np.asarray(self.values, dtype=np.float64))
        if vals.shape != (self.time.count, len(self.freq)):
            raise DatasetError(
                f"signal {self.id}: values shape {vals.shape} != "
                f"({self.time.count}, {len(self.freq)})"
            )
        object.__setattr__(self, "values", vals)
        if self.mask is not None:
            m = np.array(self.mask, dtype=bool, copy=True)
            if m.shape != vals.shape:
                raise DatasetError(f"signal {self.id}: mask shape mismatch")
            m.setflags(write=False)
            object.__setattr__(self, "mask", m)

    @property
    def n_active(self) -> int:
        if self.mask is None:
            return self.values.size
        return int(self.mask.sum())

    @property
    def length(self) -> float:
        return self.time.length


@dataclass(frozen=True)
class Dataset:
    """A collection of spectrograms sharing one frequency grid."""

    signals: tuple
    species_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    @property
    def n(self) -> int:
        """Total active point count."""
        return sum(s.n_active for s in self.signals)

    @property
    def freq(self) -> FrequencyGrid:
        return self.signals[0].freq

    def lengths(self) -> np.ndarray:
        return np.array([s.length for s in self.signals])


@dataclass(frozen=True)
class PointRef:
    """One lattice point addressed by 1-based (signal, time, frequency) indices."""

    signal: int
    time_index: int
    freq_index: int
    global_index: int


def validate_dataset(raw: Dataset) -> Dataset:
    """Check all dataset invariants and return the validated dataset.

    Raises DatasetError on: empty dataset or signal, mismatched frequency
    grids, non-finite intensities, or a mask that removes a whole signal.
    """
    if raw.n_signals < 1:
        raise DatasetError("dataset has no signals")
    ref = raw.signals[0].freq
    for s in raw.signals:
        if s.freq != ref:
            raise DatasetError(f"signal {s.id}: frequency grid mismatch")
        if not np.all(np.isfinite(s.values)):
            raise DatasetError(f"signal {s.id}: non-finite intensity value")
        if s.n_active == 0:
            raise DatasetError(f"signal {s.id}: empty signal (no active points)")
    return raw


def _active_counts(ds: Dataset) -> np.ndarray:
    return np.array([s.n_active for s in ds.signals], dtype=np.int64)


def point_index(i: int, j: int, k: int, dataset: Dataset) -> int:
    """Global position of point (signal i, time j, frequency k), all 1-based.

    The global ordering concatenates signals 1..N, each flattened in
    ascending time then ascending frequency, skipping masked points.
    """
    if not (1 <= i <= dataset.n_signals):
        raise DatasetError(f"signal index {i} out of range")
    sig = dataset.signals[i - 1]
    if not (1 <= j <= sig.time.count) or not (1 <= k <= len(sig.freq)):
        raise DatasetError(f"point ({i},{j},{k}) out of range")
    offset = int(_active_counts(dataset)[: i - 1].sum())
    if sig.mask is None:
        return offset + (j - 1) * len(sig.freq) + (k - 1)
    if not sig.mask[j - 1, k - 1]:
        raise DatasetError(f"point ({i},{j},{k}) is masked")
    flat = sig.mask.ravel()
    pos = (j - 1) * len(sig.freq) + (k - 1)
    return offset + int(flat[:pos].sum())


def point_ref(global_index: int, dataset: Dataset) -> PointRef:
    """Inverse of point_index."""
    counts = _active_counts(dataset)
    if not (0 <= global_index < counts.sum()):
        raise DatasetError(f"global index {global_index} out of range")
    i = 0
    g = global_index
    while g >= counts[i]:
        g -= counts[i]
        i += 1
    sig = dataset.signals[i]
    H = len(sig.freq)
    if sig.mask is None:
        j, k = divmod(g, H)
    else:
        flat_pos = int(np.flatnonzero(sig.mask.ravel())[g])
        j, k = divmod(flat_pos, H)
    return PointRef(signal=i + 1, time_index=j + 1, freq_index=k + 1,
                    global_index=global_index)
