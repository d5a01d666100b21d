"""On-disk formats: spectrogram tables, dataset manifests, flat configs.

A spectrogram file is a whitespace-delimited intensity table (rows = time
points, columns = frequency bins) preceded by a ``# key: value`` header
declaring ``id``, ``time_step`` and the comma-separated ``freq_values``.
A dataset directory holds one such file per signal plus ``manifest.txt``
listing the file names in signal order.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .grids import Dataset, DatasetError, FrequencyGrid, Spectrogram, TimeGrid, validate_dataset

__all__ = [
    "save_spectrogram",
    "load_spectrogram",
    "save_dataset",
    "load_dataset",
    "parse_flat_config",
    "load_flat_config",
]

MANIFEST_NAME = "manifest.txt"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_spectrogram(path, spec: Spectrogram) -> None:
    lines = [
        f"# id: {spec.id}",
        f"# time_step: {_fmt(spec.time.step)}",
        "# freq_values: " + ",".join(_fmt(v) for v in spec.freq.values),
    ]
    for row in spec.values:
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_header(lines) -> dict:
    header = {}
    for ln in lines:
        if not ln.startswith("#"):
            break
        body = ln[1:].strip()
        if ":" in body:
            key, _, val = body.partition(":")
            header[key.strip()] = val.strip()
    return header


def load_spectrogram(path) -> Spectrogram:
    text = Path(path).read_text().splitlines()
    header = _parse_header(text)
    for key in ("id", "time_step", "freq_values"):
        if key not in header:
            raise DatasetError(f"{path}: missing header key '{key}'")
    freq = FrequencyGrid(np.array([float(v) for v in header["freq_values"].split(",")]))
    rows = [ln.split() for ln in text if ln and not ln.startswith("#")]
    values = np.array([[float(v) for v in row] for row in rows])
    if values.ndim != 2:
        raise DatasetError(f"{path}: malformed intensity table")
    time = TimeGrid(count=values.shape[0], step=float(header["time_step"]))
    return Spectrogram(id=int(header["id"]), time=time, freq=freq, values=values)


def save_dataset(dirpath, dataset: Dataset) -> None:
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for idx, spec in enumerate(dataset.signals):
        name = f"signal_{idx + 1:04d}.txt"
        save_spectrogram(d / name, spec)
        names.append(name)
    manifest = [f"# species: {dataset.species_label}"] + names
    (d / MANIFEST_NAME).write_text("\n".join(manifest) + "\n")


def load_dataset(dirpath) -> Dataset:
    d = Path(dirpath)
    manifest_path = d / MANIFEST_NAME
    if not manifest_path.exists():
        raise DatasetError(f"{dirpath}: no {MANIFEST_NAME}")
    lines = manifest_path.read_text().splitlines()
    header = _parse_header(lines)
    names = [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]
    if not names:
        raise DatasetError(f"{dirpath}: manifest lists no signals")
    signals = [load_spectrogram(d / name) for name in names]
    ds = Dataset(signals=tuple(signals), species_label=header.get("species", ""))
    return validate_dataset(ds)


def parse_flat_config(text: str) -> dict:
    """Parse a flat ``key = value`` config; '#' starts a comment line."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def load_flat_config(path) -> dict:
    return parse_flat_config(Path(path).read_text())
