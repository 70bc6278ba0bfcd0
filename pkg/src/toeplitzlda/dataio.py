"""Epoch container, on-disk dataset format, and feature extraction.

Dataset directory layout (format version 1):

* ``meta.json`` -- dimensions, sampling rate, epoch start time, channel
  names, and whether labels are present.
* ``data.bin`` -- raw little-endian float64, C order with axes
  (epoch, channel, time).
* ``labels.bin`` -- optional, one uint8 per epoch (0 non-target, 1 target).

Sample ``k`` of an epoch is at time ``t0 + k / sfreq`` seconds.  Times in
seconds map to sample indices with ``floor((t - t0) * sfreq + 0.5)``, and
all extraction windows are half-open ``[a, b)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blockmat import BlockDims, Layout
from .errors import DataFormatError, ShapeError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Epochs:
    """A stack of epochs with acquisition metadata.

    ``data`` has shape (n_epochs, n_channels, n_times); ``labels`` is None
    for unlabeled data, otherwise one 0/1 value per epoch.
    """

    data: np.ndarray
    sfreq: float
    t0: float
    channel_names: tuple[str, ...]
    labels: np.ndarray | None = None

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, order="C")
        if data.ndim != 3:
            raise ShapeError(
                f"epoch data must be 3-D (epochs, channels, times), got {data.shape}"
            )
        if not np.isfinite(data).all():
            raise DataFormatError("epoch data contains non-finite values")
        if self.sfreq <= 0:
            raise ShapeError(f"sfreq must be positive, got {self.sfreq}")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != data.shape[1]:
            raise ShapeError(
                f"{len(names)} channel names for {data.shape[1]} channels"
            )
        labels = self.labels
        if labels is not None:
            labels = np.array(labels, dtype=np.uint8)
            if labels.shape != (data.shape[0],):
                raise ShapeError(
                    f"labels have shape {labels.shape}, expected ({data.shape[0]},)"
                )
            if not np.isin(labels, (0, 1)).all():
                raise DataFormatError("labels must be 0 (non-target) or 1 (target)")
            labels.setflags(write=False)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "labels", labels)

    @property
    def n_epochs(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def n_times(self) -> int:
        return self.data.shape[2]

    @property
    def dims(self) -> BlockDims:
        return BlockDims(self.n_channels, self.n_times)

    @property
    def times(self) -> np.ndarray:
        """Sample times in seconds."""
        return self.t0 + np.arange(self.n_times) / self.sfreq


def write_dataset(epochs: Epochs, directory) -> None:
    """Write a dataset directory (meta.json, data.bin, optional labels.bin)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "n_epochs": epochs.n_epochs,
        "n_channels": epochs.n_channels,
        "n_times": epochs.n_times,
        "sfreq": epochs.sfreq,
        "t0": epochs.t0,
        "channel_names": list(epochs.channel_names),
        "endianness": "little",
        "has_labels": epochs.labels is not None,
    }
    with open(directory / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    (directory / "data.bin").write_bytes(
        np.ascontiguousarray(epochs.data, dtype="<f8").tobytes()
    )
    if epochs.labels is not None:
        (directory / "labels.bin").write_bytes(epochs.labels.tobytes())


def read_dataset(directory) -> Epochs:
    """Read a dataset directory, validating format version and sizes."""
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.is_file():
        raise DataFormatError(f"missing meta.json in {directory}")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise DataFormatError(
            f"unsupported format version {version!r}, expected {FORMAT_VERSION}"
        )
    shape = (meta["n_epochs"], meta["n_channels"], meta["n_times"])
    raw = (directory / "data.bin").read_bytes()
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise DataFormatError(
            f"data.bin holds {len(raw)} bytes, expected {expected} for shape {shape}"
        )
    data = np.frombuffer(raw, dtype="<f8").reshape(shape)
    if np.isnan(data).any():
        raise DataFormatError("data.bin contains NaN values")
    labels = None
    if meta.get("has_labels"):
        raw_labels = (directory / "labels.bin").read_bytes()
        if len(raw_labels) != shape[0]:
            raise DataFormatError(
                f"labels.bin holds {len(raw_labels)} bytes, expected {shape[0]}"
            )
        labels = np.frombuffer(raw_labels, dtype=np.uint8)
    return Epochs(
        data=data,
        sfreq=float(meta["sfreq"]),
        t0=float(meta["t0"]),
        channel_names=tuple(meta["channel_names"]),
        labels=labels,
    )


@dataclass(frozen=True)
class FeatureMatrix:
    """Channel-prime feature vectors stacked as a ``D x N_e`` array."""

    data: np.ndarray
    dims: BlockDims
    layout: Layout = Layout.CHANNEL_PRIME

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, order="C")
        if data.ndim != 2 or data.shape[0] != self.dims.size:
            raise ShapeError(
                f"feature data has shape {data.shape}, expected "
                f"({self.dims.size}, n_epochs)"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "layout", Layout(self.layout))

    @property
    def n_epochs(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class FeatureConfig:
    """Which feature extraction to run.

    ``kind`` is 'all_samples' (with ``window = (a, b)`` in seconds) or
    'interval_means' (with ``boundaries``, a strictly increasing sequence of
    interval edges in seconds).
    """

    kind: str
    window: tuple[float, float] | None = None
    boundaries: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == "all_samples":
            if self.window is None:
                raise ValueError("all_samples features need a (start, stop) window")
            window = (float(self.window[0]), float(self.window[1]))
            if window[1] <= window[0]:
                raise ValueError(f"window must satisfy start < stop, got {window}")
            object.__setattr__(self, "window", window)
        elif self.kind == "interval_means":
            if self.boundaries is None or len(self.boundaries) < 2:
                raise ValueError("interval_means features need >= 2 boundaries")
            bounds = tuple(float(b) for b in self.boundaries)
            if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
                raise ValueError(f"boundaries must be strictly increasing: {bounds}")
            object.__setattr__(self, "boundaries", bounds)
        else:
            raise ValueError(
                f"unknown feature kind {self.kind!r}; "
                "expected 'all_samples' or 'interval_means'"
            )


def sample_index(seconds: float, sfreq: float, t0: float) -> int:
    """Map a time in seconds to a sample index: floor((t - t0) * sfreq + 0.5)."""
    return int(math.floor((seconds - t0) * sfreq + 0.5))


def _stack_channel_prime(feats: np.ndarray, dims: BlockDims) -> FeatureMatrix:
    """(n_epochs, n_channels, n_feat_times) -> channel-prime (D, n_epochs)."""
    return FeatureMatrix(feats.transpose(0, 2, 1).reshape(feats.shape[0], -1).T, dims)


def interval_means(epochs: Epochs, boundaries) -> FeatureMatrix:
    """Per-channel means over consecutive half-open time intervals.

    ``boundaries`` has ``n + 1`` edges in seconds defining ``n`` intervals
    ``[b_i, b_{i+1})``; each interval must cover at least one sample.
    """
    bounds = tuple(float(b) for b in boundaries)
    if len(bounds) < 2:
        raise ShapeError("need at least two boundaries")
    idx = [sample_index(b, epochs.sfreq, epochs.t0) for b in bounds]
    n_int = len(idx) - 1
    feats = np.empty((epochs.n_epochs, epochs.n_channels, n_int))
    for k in range(n_int):
        lo, hi = idx[k], idx[k + 1]
        if lo < 0 or hi > epochs.n_times:
            raise ShapeError(
                f"interval [{bounds[k]}, {bounds[k + 1]}) maps to samples "
                f"[{lo}, {hi}) outside the epoch (n_times={epochs.n_times})"
            )
        if hi <= lo:
            raise ShapeError(
                f"interval [{bounds[k]}, {bounds[k + 1]}) contains no sample "
                f"at sfreq={epochs.sfreq}"
            )
        feats[:, :, k] = epochs.data[:, :, lo:hi].mean(axis=2)
    return _stack_channel_prime(feats, BlockDims(epochs.n_channels, n_int))


def all_samples(epochs: Epochs, window) -> FeatureMatrix:
    """All samples whose time lies in the half-open window ``[a, b)``.

    The number of selected samples is ``round((b - a) * sfreq)``.
    """
    a, b = float(window[0]), float(window[1])
    if b <= a:
        raise ShapeError(f"window must satisfy start < stop, got ({a}, {b})")
    start = sample_index(a, epochs.sfreq, epochs.t0)
    count = int(math.floor((b - a) * epochs.sfreq + 0.5))
    if count < 1:
        raise ShapeError(f"window ({a}, {b}) selects no sample at sfreq={epochs.sfreq}")
    if start < 0 or start + count > epochs.n_times:
        raise ShapeError(
            f"window ({a}, {b}) maps to samples [{start}, {start + count}) "
            f"outside the epoch (n_times={epochs.n_times})"
        )
    feats = epochs.data[:, :, start : start + count]
    return _stack_channel_prime(feats, BlockDims(epochs.n_channels, count))


def extract_features(epochs: Epochs, config: FeatureConfig) -> FeatureMatrix:
    """Run the feature extraction selected by ``config``."""
    if config.kind == "all_samples":
        return all_samples(epochs, config.window)
    return interval_means(epochs, config.boundaries)
