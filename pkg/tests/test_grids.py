import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpgp import (
    Dataset,
    DatasetError,
    FrequencyGrid,
    Spectrogram,
    TimeGrid,
    point_index,
    point_ref,
    validate_dataset,
)

from conftest import toy_dataset


def test_default_frequency_grid():
    g = FrequencyGrid.default()
    assert len(g) == 26
    assert g.values[0] == pytest.approx(0.23 + math.log(63.0))
    assert g.values[-1] == pytest.approx(0.23 * 26 + math.log(63.0))
    assert np.all(np.diff(g.values) > 0)
    assert g.uniform_step == pytest.approx(0.23)


def test_grid_invariants():
    with pytest.raises(DatasetError):
        FrequencyGrid(np.array([1.0]))
    with pytest.raises(DatasetError):
        FrequencyGrid(np.array([1.0, 1.0]))
    with pytest.raises(DatasetError):
        TimeGrid(1)
    t = TimeGrid(7, 0.01)
    assert t.length == pytest.approx(0.06)
    assert t.coords()[-1] == pytest.approx(t.length)


def test_validate_accepts_and_counts():
    ds = toy_dataset(n_signals=1, bins=26, t_counts=(3,))
    assert ds.n == 78


def test_validate_rejects_grid_mismatch():
    a = Spectrogram(id=1, time=TimeGrid(3), freq=FrequencyGrid.default(4),
                    values=np.zeros((3, 4)))
    b = Spectrogram(id=2, time=TimeGrid(3), freq=FrequencyGrid.default(5),
                    values=np.zeros((3, 5)))
    with pytest.raises(DatasetError, match="grid mismatch"):
        validate_dataset(Dataset(signals=(a, b)))


def test_validate_rejects_nonfinite():
    vals = np.zeros((3, 4))
    vals[1, 2] = np.nan
    a = Spectrogram(id=1, time=TimeGrid(3), freq=FrequencyGrid.default(4),
                    values=vals)
    with pytest.raises(DatasetError, match="non-finite"):
        validate_dataset(Dataset(signals=(a,)))


def test_validate_rejects_empty():
    with pytest.raises(DatasetError):
        validate_dataset(Dataset(signals=()))
    masked = Spectrogram(id=1, time=TimeGrid(2), freq=FrequencyGrid.default(4),
                         values=np.zeros((2, 4)), mask=np.zeros((2, 4), bool))
    with pytest.raises(DatasetError, match="empty"):
        validate_dataset(Dataset(signals=(masked,)))


def test_point_index_examples():
    ds = toy_dataset(n_signals=2, bins=26, t_counts=(3, 4))
    assert point_index(1, 1, 1, ds) == 0
    assert point_index(1, 2, 1, ds) == 26
    assert point_index(2, 1, 1, ds) == 78
    with pytest.raises(DatasetError):
        point_index(1, 4, 1, ds)
    with pytest.raises(DatasetError):
        point_index(3, 1, 1, ds)


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 3), st.integers(2, 5), st.integers(2, 6),
       st.integers(0, 10_000))
def test_point_index_roundtrip(n_signals, bins, tmax, pick):
    ds = toy_dataset(n_signals=n_signals, bins=bins,
                     t_counts=tuple(2 + (tmax + i) % tmax for i in range(n_signals)))
    g = pick % ds.n
    ref = point_ref(g, ds)
    assert ref.global_index == g
    assert point_index(ref.signal, ref.time_index, ref.freq_index, ds) == g


def test_point_index_with_mask():
    ds = toy_dataset(n_signals=1, bins=3, t_counts=(3,))
    mask = np.ones((3, 3), bool)
    mask[0, 1] = False
    spec = Spectrogram(id=1, time=ds.signals[0].time, freq=ds.signals[0].freq,
                       values=ds.signals[0].values, mask=mask)
    masked = validate_dataset(Dataset(signals=(spec,)))
    assert masked.n == 8
    assert point_index(1, 1, 1, masked) == 0
    assert point_index(1, 1, 3, masked) == 1  # skipped the masked point
    with pytest.raises(DatasetError, match="masked"):
        point_index(1, 1, 2, masked)
    for g in range(8):
        ref = point_ref(g, masked)
        assert point_index(ref.signal, ref.time_index, ref.freq_index, masked) == g


def test_length_identity():
    for T, step in [(2, 0.01), (25, 0.01), (7, 0.02)]:
        assert TimeGrid(T, step).length == step * (T - 1)
