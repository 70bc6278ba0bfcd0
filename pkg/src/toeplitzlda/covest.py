"""Covariance estimation: centering, shrinkage, and the block-Toeplitz fit.

Data matrices are ``D x N_e`` (one flattened channel-prime epoch per
column).  The estimation pipeline is: center (globally or per class),
sample covariance with divisor ``N_e - 1``, analytic shrinkage toward the
scaled identity, then optionally block-diagonal averaging and linear
tapering to obtain the compact block-Toeplitz estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockmat import (
    BlockCov,
    BlockDims,
    BlockToeplitzCov,
    Layout,
    apply_taper,
    apply_taper_dense,
    block_diagonal_average,
)
from .errors import ShapeError


@dataclass(frozen=True)
class ClassStats:
    """Per-class mean vectors and epoch counts.

    Row ``k`` of ``means`` is the mean of class ``k`` (0 = non-target,
    1 = target).
    """

    means: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        counts = np.array(self.counts, dtype=np.int64)
        if means.ndim != 2 or means.shape[0] != 2:
            raise ShapeError(f"class means must have shape (2, D), got {means.shape}")
        if counts.shape != (2,):
            raise ShapeError(f"class counts must have shape (2,), got {counts.shape}")
        means.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class ShrinkageResult:
    """Shrunk covariance together with the intensity and target scale used."""

    matrix: BlockCov
    gamma: float
    nu: float


def _as_data_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"data matrix must be 2-D (D x N_e), got shape {x.shape}")
    return x


def _check_labels(labels, n_epochs: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n_epochs,):
        raise ShapeError(
            f"labels have shape {labels.shape}, expected ({n_epochs},)"
        )
    labels = labels.astype(np.int64)
    if not np.isin(labels, (0, 1)).all():
        raise ShapeError("labels must be 0 (non-target) or 1 (target)")
    return labels


def class_means(x, labels) -> ClassStats:
    """Mean vector and epoch count for each of the two classes."""
    x = _as_data_matrix(x)
    labels = _check_labels(labels, x.shape[1])
    counts = np.array([(labels == 0).sum(), (labels == 1).sum()])
    if counts.min() < 1:
        raise ShapeError("both classes must be present with at least one epoch")
    means = np.stack([x[:, labels == k].mean(axis=1) for k in (0, 1)])
    return ClassStats(means, counts)


def center(x, means=None, labels=None) -> np.ndarray:
    """Subtract a mean assignment from every column.

    With ``labels`` given, each column is centered by its class mean (either
    supplied via ``means`` as :class:`ClassStats` or estimated from the
    data).  Without labels a single global mean vector is used.
    """
    x = _as_data_matrix(x)
    if labels is None:
        if means is None:
            mu = x.mean(axis=1)
        else:
            mu = np.asarray(means, dtype=np.float64)
            if mu.shape != (x.shape[0],):
                raise ShapeError(
                    f"global mean has shape {mu.shape}, expected ({x.shape[0]},)"
                )
        return x - mu[:, None]
    labels = _check_labels(labels, x.shape[1])
    stats = means if isinstance(means, ClassStats) else class_means(x, labels)
    return x - stats.means[labels].T


def sample_covariance(
    centered, dims: BlockDims, layout: Layout = Layout.CHANNEL_PRIME
) -> BlockCov:
    """Sample covariance of centered data with divisor ``N_e - 1``."""
    xc = _as_data_matrix(centered)
    d, n = xc.shape
    if d != dims.size:
        raise ShapeError(f"data dimension {d} does not match dims.size {dims.size}")
    if n < 2:
        raise ShapeError(f"need at least 2 epochs for a covariance, got {n}")
    s = xc @ xc.T / (n - 1)
    s = (s + s.T) / 2.0
    return BlockCov(dims, s, layout)


def ledoit_wolf_gamma(centered) -> float:
    """Analytic shrinkage intensity toward the scaled identity.

    Standard Ledoit-Wolf estimate computed from centered data: the ratio of
    the summed variance of the sample covariance entries to the squared
    distance between the sample covariance and its scaled-identity target,
    clipped to [0, 1].
    """
    xc = _as_data_matrix(centered)
    d, n = xc.shape
    if n < 2:
        raise ShapeError(f"need at least 2 epochs, got {n}")
    emp = xc @ xc.T / n
    emp = (emp + emp.T) / 2.0
    mu = np.trace(emp) / d
    delta = ((emp - mu * np.eye(d)) ** 2).sum() / d
    if delta <= 0.0:
        return 0.0
    x2 = xc * xc
    beta = ((x2 @ x2.T) / n - emp * emp).sum() / (d * n)
    beta = min(max(beta, 0.0), delta)
    return float(beta / delta)


def shrink(s: BlockCov, gamma: float | None = None, centered=None) -> ShrinkageResult:
    """Shrink toward ``nu * I`` with ``nu = trace(S) / D``.

    When ``gamma`` is None the analytic Ledoit-Wolf intensity is computed
    from ``centered`` (the data the covariance came from).  The returned
    matrix is ``(1 - gamma) S + gamma nu I``; its trace equals ``trace(S)``.
    """
    if gamma is None:
        if centered is None:
            raise ValueError("either gamma or the centered data must be given")
        gamma = ledoit_wolf_gamma(centered)
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    d = s.dims.size
    nu = float(np.trace(s.data) / d)
    out = (1.0 - gamma) * s.data
    out.flat[:: d + 1] += gamma * nu
    return ShrinkageResult(BlockCov(s.dims, out, s.layout), gamma, nu)


def within_class_cov(x, labels, dims: BlockDims) -> BlockCov:
    """Pooled within-class covariance: class-center, then sample covariance.

    Uses the common divisor ``N_e - 1`` on the pooled centered data, so the
    result is invariant to class-mean shifts.
    """
    x = _as_data_matrix(x)
    if x.shape[1] < 3:
        raise ShapeError(
            f"need at least 3 epochs for a within-class covariance, got {x.shape[1]}"
        )
    return sample_covariance(center(x, labels=labels), dims)


def global_cov(x, dims: BlockDims) -> BlockCov:
    """Covariance around the global mean, ignoring any labels."""
    return sample_covariance(center(x), dims)


def toeplitz_tapered_cov(
    x,
    dims: BlockDims,
    mode: str = "within",
    labels=None,
    gamma: float | None = None,
    stationarity: bool = True,
    taper: bool = True,
) -> BlockToeplitzCov | BlockCov:
    """Structured covariance estimate from raw epochs.

    Pipeline: center per ``mode`` ('within' centers by class and requires
    labels, 'global' centers by the overall mean), sample covariance,
    shrinkage (analytic intensity unless ``gamma`` is given), then the
    structural steps selected by the flags:

    * ``stationarity`` and ``taper`` (default): block-diagonal averaging
      followed by linear tapering; returns the compact
      :class:`BlockToeplitzCov`.
    * ``stationarity`` only: averaging without tapering (compact form; the
      result may be indefinite for small ``N_e``).
    * ``taper`` only: blockwise tapering of the dense shrunk covariance;
      returns a dense :class:`BlockCov`.
    * neither: the dense shrunk covariance itself.
    """
    if mode not in ("within", "global"):
        raise ValueError(f"mode must be 'within' or 'global', got {mode!r}")
    if mode == "within":
        if labels is None:
            raise ValueError("mode='within' requires labels")
        xc = center(x, labels=labels)
    else:
        xc = center(x)
    s = sample_covariance(xc, dims)
    shrunk = shrink(s, gamma, xc).matrix
    if stationarity:
        btc = block_diagonal_average(shrunk)
        return apply_taper(btc) if taper else btc
    if taper:
        return apply_taper_dense(shrunk)
    return shrunk
