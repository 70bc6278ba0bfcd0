"""Block-structured matrices for spatiotemporal covariance.

An epoch with ``n_channels`` channels and ``n_times`` samples flattens to a
vector of dimension ``D = n_channels * n_times``.  Two layouts exist:

* channel-prime: ``x[t * n_channels + c] = epoch[c, t]`` (channels cycle
  fastest).  In this layout a ``D x D`` covariance matrix is an
  ``n_times x n_times`` grid of ``n_channels x n_channels`` blocks whose
  block ``(i, j)`` is the cross-channel covariance between time samples
  ``i`` and ``j``.
* time-prime: ``x[c * n_times + t] = epoch[c, t]`` (time cycles fastest).

All covariance operations in this package work on the channel-prime layout;
``permute_layout`` converts between the two.

For stationary data the block grid is block-Toeplitz: block ``(i, j)``
depends only on the lag ``d = j - i``, with ``C_{-d} = C_d^T``.  The compact
``BlockToeplitzCov`` type stores one block per non-negative lag
(``n_times * n_channels**2`` values) instead of the full ``D x D`` matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import LayoutError, ShapeError

#: Relative tolerance for the symmetry check on covariance data.
SYMMETRY_RTOL = 1e-10


class Layout(str, Enum):
    """Flattening order of an epoch into a vector."""

    CHANNEL_PRIME = "channel_prime"
    TIME_PRIME = "time_prime"


@dataclass(frozen=True)
class BlockDims:
    """Channel/time block dimensions of flattened epochs."""

    n_channels: int
    n_times: int

    def __post_init__(self):
        if self.n_channels < 1 or self.n_times < 1:
            raise ShapeError(
                f"block dimensions must be >= 1, got "
                f"(n_channels={self.n_channels}, n_times={self.n_times})"
            )

    @property
    def size(self) -> int:
        """Total feature dimension ``D = n_channels * n_times``."""
        return self.n_channels * self.n_times


def _frozen_array(values, shape=None, name="array") -> np.ndarray:
    a = np.array(values, dtype=np.float64, order="C")
    if shape is not None and a.shape != shape:
        raise ShapeError(f"{name} has shape {a.shape}, expected {shape}")
    a.setflags(write=False)
    return a


def _check_symmetric(a: np.ndarray, what: str) -> None:
    scale = np.abs(a).max() if a.size else 0.0
    tol = SYMMETRY_RTOL * max(scale, np.finfo(np.float64).tiny)
    worst = np.abs(a - a.T).max() if a.size else 0.0
    if worst > tol:
        raise ShapeError(
            f"{what} is not symmetric: max |A - A^T| = {worst:.3e} "
            f"exceeds {tol:.3e}"
        )


@dataclass(frozen=True)
class BlockCov:
    """Dense symmetric ``D x D`` covariance with block metadata.

    ``data`` is copied and made read-only.  Symmetry is validated to
    ``SYMMETRY_RTOL`` (relative to the largest entry).
    """

    dims: BlockDims
    data: np.ndarray
    layout: Layout = Layout.CHANNEL_PRIME

    def __post_init__(self):
        d = self.dims.size
        a = _frozen_array(self.data, (d, d), "covariance data")
        _check_symmetric(a, "covariance data")
        object.__setattr__(self, "data", a)
        object.__setattr__(self, "layout", Layout(self.layout))

    def block(self, i: int, j: int) -> np.ndarray:
        """Cross-channel block for the time-sample pair ``(i, j)``, 0-based."""
        return block_at(self, i, j)


@dataclass(frozen=True)
class BlockToeplitzCov:
    """Compact block-Toeplitz covariance: one block per non-negative lag.

    ``lag_blocks[d]`` is the cross-channel covariance block at temporal lag
    ``d`` (block ``(i, i+d)`` of the dense matrix).  The lag-0 block is
    validated to be symmetric and then symmetrized exactly so that round
    trips through ``to_dense`` / ``block_diagonal_average`` are bit-exact.
    """

    dims: BlockDims
    lag_blocks: np.ndarray

    def __post_init__(self):
        nc, nt = self.dims.n_channels, self.dims.n_times
        a = np.array(self.lag_blocks, dtype=np.float64, order="C")
        if a.shape != (nt, nc, nc):
            raise ShapeError(
                f"lag_blocks has shape {a.shape}, expected {(nt, nc, nc)}"
            )
        _check_symmetric(a[0], "lag-0 block")
        a[0] = (a[0] + a[0].T) / 2.0
        a.setflags(write=False)
        object.__setattr__(self, "lag_blocks", a)

    @property
    def layout(self) -> Layout:
        return Layout.CHANNEL_PRIME


def flatten_epoch(epoch: np.ndarray, layout: Layout, dims: BlockDims | None = None) -> np.ndarray:
    """Flatten an ``(n_channels, n_times)`` epoch into a vector.

    Channel-prime order interleaves channels within each time sample;
    time-prime order concatenates whole channel time courses.
    """
    epoch = np.asarray(epoch, dtype=np.float64)
    if epoch.ndim != 2:
        raise ShapeError(f"epoch must be 2-D (channels x times), got shape {epoch.shape}")
    if dims is not None and epoch.shape != (dims.n_channels, dims.n_times):
        raise ShapeError(
            f"epoch has shape {epoch.shape}, expected "
            f"({dims.n_channels}, {dims.n_times})"
        )
    layout = Layout(layout)
    if layout is Layout.CHANNEL_PRIME:
        return epoch.T.reshape(-1).copy()
    return epoch.reshape(-1).copy()


def _layout_permutation(dims: BlockDims, from_layout: Layout, to_layout: Layout) -> np.ndarray:
    """Gather indices ``idx`` such that ``converted = x[idx]``."""
    nc, nt = dims.n_channels, dims.n_times
    if from_layout is Layout.CHANNEL_PRIME:
        # target index c*nt + t reads source index t*nc + c
        return np.arange(dims.size).reshape(nt, nc).T.reshape(-1)
    return np.arange(dims.size).reshape(nc, nt).T.reshape(-1)


def permute_layout(
    x: np.ndarray, dims: BlockDims, from_layout: Layout, to_layout: Layout
) -> np.ndarray:
    """Reorder a vector or square matrix between the two layouts.

    The conversion is a pure permutation, so applying it twice with the
    layouts swapped returns the input exactly.
    """
    from_layout, to_layout = Layout(from_layout), Layout(to_layout)
    x = np.asarray(x, dtype=np.float64)
    d = dims.size
    if x.ndim == 1:
        if x.shape != (d,):
            raise ShapeError(f"vector has shape {x.shape}, expected ({d},)")
        if from_layout is to_layout:
            return x.copy()
        return x[_layout_permutation(dims, from_layout, to_layout)]
    if x.ndim == 2:
        if x.shape != (d, d):
            raise ShapeError(f"matrix has shape {x.shape}, expected ({d}, {d})")
        if from_layout is to_layout:
            return x.copy()
        idx = _layout_permutation(dims, from_layout, to_layout)
        return x[np.ix_(idx, idx)]
    raise ShapeError(f"expected a vector or a square matrix, got shape {x.shape}")


def block_at(cov: BlockCov, i: int, j: int) -> np.ndarray:
    """Cross-channel block ``(i, j)`` of a channel-prime covariance, 0-based."""
    if cov.layout is not Layout.CHANNEL_PRIME:
        raise LayoutError("block_at requires a channel-prime covariance")
    nc, nt = cov.dims.n_channels, cov.dims.n_times
    if not (0 <= i < nt and 0 <= j < nt):
        raise ShapeError(f"block index ({i}, {j}) out of range for n_times={nt}")
    return cov.data[i * nc:(i + 1) * nc, j * nc:(j + 1) * nc].copy()


def block_diagonal_average(cov: BlockCov) -> BlockToeplitzCov:
    """Average each block diagonal into one lag block (stationarity fit).

    Lag ``d`` averages the ``n_times - d`` blocks ``(i, i+d)``.  The mean is
    computed as ``first + mean(others - first)`` so that the operation is
    exactly idempotent on inputs that are already block-Toeplitz.  The lag-0
    result is symmetrized as ``(M + M^T) / 2``.
    """
    if cov.layout is not Layout.CHANNEL_PRIME:
        raise LayoutError("block_diagonal_average requires a channel-prime covariance")
    nc, nt = cov.dims.n_channels, cov.dims.n_times
    grid = cov.data.reshape(nt, nc, nt, nc)
    lags = np.empty((nt, nc, nc))
    for d in range(nt):
        rows = np.arange(nt - d)
        blocks = grid[rows, :, rows + d, :]
        base = blocks[0]
        mean = base + (blocks - base).sum(axis=0) / (nt - d)
        if d == 0:
            mean = (mean + mean.T) / 2.0
        lags[d] = mean
    return BlockToeplitzCov(cov.dims, lags)


def taper_weight(d: int, n_times: int) -> float:
    """Linear taper ``1 - |d| / n_times`` for temporal lag ``d``."""
    if n_times < 1:
        raise ShapeError(f"n_times must be >= 1, got {n_times}")
    if abs(d) > n_times:
        raise ShapeError(f"lag {d} out of range for n_times={n_times}")
    return 1.0 - abs(d) / n_times


def apply_taper(btc: BlockToeplitzCov) -> BlockToeplitzCov:
    """Scale each lag block by the linear taper weight.

    The lag-0 weight is exactly 1.0, so the zero-lag block is unchanged
    bit-for-bit.
    """
    nt = btc.dims.n_times
    w = 1.0 - np.arange(nt) / nt
    return BlockToeplitzCov(btc.dims, btc.lag_blocks * w[:, None, None])


def apply_taper_dense(cov: BlockCov) -> BlockCov:
    """Taper a dense covariance blockwise without averaging.

    Block ``(i, j)`` is scaled by ``taper_weight(j - i, n_times)``.  The
    taper weights form a positive semidefinite (Bartlett) matrix, so the
    blockwise product keeps a positive definite input positive definite.
    """
    if cov.layout is not Layout.CHANNEL_PRIME:
        raise LayoutError("apply_taper_dense requires a channel-prime covariance")
    nc, nt = cov.dims.n_channels, cov.dims.n_times
    lag = np.abs(np.arange(nt)[:, None] - np.arange(nt)[None, :])
    weights = np.kron(1.0 - lag / nt, np.ones((nc, nc)))
    return BlockCov(cov.dims, cov.data * weights, cov.layout)


def to_dense(btc: BlockToeplitzCov) -> BlockCov:
    """Expand a compact block-Toeplitz covariance into the dense matrix.

    Block ``(i, j)`` is ``lag_blocks[j - i]`` for ``j >= i`` and
    ``lag_blocks[i - j]^T`` below the diagonal, so the result is exactly
    symmetric.
    """
    nc, nt = btc.dims.n_channels, btc.dims.n_times
    grid = np.zeros((nt, nc, nt, nc))
    for d in range(nt):
        rows = np.arange(nt - d)
        grid[rows, :, rows + d, :] = btc.lag_blocks[d]
        if d > 0:
            grid[rows + d, :, rows, :] = btc.lag_blocks[d].T
    return BlockCov(btc.dims, grid.reshape(btc.dims.size, btc.dims.size))


def free_parameter_count(dims: BlockDims) -> tuple[int, int]:
    """Free parameters of (full symmetric, block-Toeplitz) covariances.

    A full symmetric ``D x D`` matrix has ``D (D + 1) / 2`` parameters.  The
    block-Toeplitz form needs the symmetric lag-0 block plus one full block
    per positive lag: ``n_channels (n_channels + 1) / 2 +
    (n_times - 1) n_channels^2``.
    """
    nc, nt = dims.n_channels, dims.n_times
    d = dims.size
    full = d * (d + 1) // 2
    toeplitz = nc * (nc + 1) // 2 + (nt - 1) * nc * nc
    return full, toeplitz
