"""Linear solvers for block-Toeplitz systems.

``block_levinson_solve`` solves ``T x = b`` where ``T`` is the symmetric
positive definite dense expansion of a :class:`BlockToeplitzCov`, without
ever forming ``T``.  It runs a symmetric block Levinson recursion over the
``n_times`` block rows, carrying forward and backward solves of the leading
block minors, for a cost of O(n_times^2) block operations instead of the
O(n_times^3) of a dense factorization.  All right-hand-side columns are
solved in one pass.

``dense_solve`` is the Cholesky-based reference path for dense covariance
matrices; with ``allow_indefinite=True`` it falls back to a symmetric
indefinite factorization and flags the report as ill-conditioned.

Notation: ``L[d]`` is the lag-``d`` block, so the dense matrix has block
``(i, j)`` equal to ``L[j-i]`` above the diagonal and ``L[i-j]^T`` below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .blockmat import BlockCov, BlockToeplitzCov
from .errors import ShapeError, SolveBreakdownError, SolveError


@dataclass(frozen=True)
class SolveReport:
    """Solution of one linear system plus diagnostics.

    ``residual_norm`` is ``||A @ solution - b||_F`` computed after the
    solve.  ``well_conditioned`` is False when a positive definite
    factorization failed and an indefinite fallback produced the solution.
    """

    solution: np.ndarray
    method: str
    residual_norm: float
    well_conditioned: bool


def _as_rhs(b, d: int) -> tuple[np.ndarray, bool]:
    b = np.asarray(b, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.ndim != 2 or b.shape[0] != d:
        raise ShapeError(f"right-hand side has shape {b.shape}, expected ({d}, k)")
    return b, squeeze


def _check_step_pd(first_block: np.ndarray, order: int) -> None:
    """Positive definiteness test for one recursion step's Schur complement.

    The first block of the forward solve is the inverse Schur complement of
    the leading minor; its Cholesky factorization fails exactly when the
    minor sequence stops being positive definite.
    """
    sym = (first_block + first_block.T) / 2.0
    if not np.isfinite(sym).all():
        raise SolveBreakdownError(order)
    try:
        np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        raise SolveBreakdownError(order) from None


def block_toeplitz_matmul(btc: BlockToeplitzCov, x: np.ndarray) -> np.ndarray:
    """Product of the dense expansion of ``btc`` with ``x``, lag by lag."""
    d = btc.dims.size
    x, squeeze = _as_rhs(x, d)
    nc, nt = btc.dims.n_channels, btc.dims.n_times
    lags = btc.lag_blocks
    xb = x.reshape(nt, nc, -1)
    yb = np.matmul(lags[0], xb)
    for lag in range(1, nt):
        yb[: nt - lag] += lags[lag] @ xb[lag:]
        yb[lag:] += lags[lag].T @ xb[: nt - lag]
    y = yb.reshape(d, -1)
    return y[:, 0] if squeeze else y


def block_levinson_solve(btc: BlockToeplitzCov, b) -> SolveReport:
    """Solve the symmetric block-Toeplitz system defined by ``btc``.

    Raises :class:`SolveBreakdownError` naming the failing recursion step
    when a leading block minor is singular or indefinite; the caller decides
    whether to retry with a dense indefinite solve.
    """
    d = btc.dims.size
    b, squeeze = _as_rhs(b, d)
    nc, nt = btc.dims.n_channels, btc.dims.n_times
    n_rhs = b.shape[1]
    lags = btc.lag_blocks
    lags_t = np.swapaxes(lags, 1, 2)
    y = b.reshape(nt, nc, n_rhs)
    eye = np.eye(nc)

    _check_step_pd(lags[0], 1)
    fwd = np.empty((nt, nc, nc))
    bwd = np.empty((nt, nc, nc))
    x = np.empty((nt, nc, n_rhs))
    c0_inv = np.linalg.solve(lags[0], eye)
    fwd[0] = c0_inv
    bwd[0] = c0_inv
    x[0] = np.linalg.solve(lags[0], y[0])

    for nu in range(1, nt):
        eps_f = np.einsum("dij,djk->ik", lags_t[1 : nu + 1], fwd[nu - 1 :: -1])
        eps_b = np.einsum("dij,djk->ik", lags[1 : nu + 1], bwd[:nu])
        eps_x = np.einsum("dij,djk->ik", lags_t[1 : nu + 1], x[nu - 1 :: -1])
        try:
            coef_f = np.linalg.solve(eye - eps_b @ eps_f, eye)
            coef_b = np.linalg.solve(eye - eps_f @ eps_b, eye)
        except np.linalg.LinAlgError:
            raise SolveBreakdownError(nu + 1) from None
        cross_f = -eps_f @ coef_f
        cross_b = -eps_b @ coef_b

        fwd_scaled = fwd[:nu] @ coef_f
        fwd_cross = bwd[:nu] @ cross_f
        bwd_scaled = bwd[:nu] @ coef_b
        bwd_cross = fwd[:nu] @ cross_b

        fwd[:nu] = fwd_scaled
        fwd[nu] = 0.0
        fwd[1 : nu + 1] += fwd_cross
        bwd[:nu] = bwd_cross
        bwd[nu] = 0.0
        bwd[1 : nu + 1] += bwd_scaled
        _check_step_pd(fwd[0], nu + 1)

        x[nu] = 0.0
        x[: nu + 1] += bwd[: nu + 1] @ (y[nu] - eps_x)

    solution = x.reshape(d, n_rhs)
    residual = float(np.linalg.norm(block_toeplitz_matmul(btc, solution) - b))
    solution = solution[:, 0] if squeeze else solution
    return SolveReport(solution, "levinson", residual, True)


def dense_solve(cov: BlockCov, b, allow_indefinite: bool = False) -> SolveReport:
    """Cholesky solve of a dense symmetric system.

    When the matrix is not positive definite this raises
    :class:`SolveError`, unless ``allow_indefinite`` is set, in which case a
    symmetric indefinite factorization is used and the report is flagged
    ``well_conditioned=False``.
    """
    d = cov.dims.size
    b, squeeze = _as_rhs(b, d)
    well_conditioned = True
    try:
        factor = scipy.linalg.cho_factor(cov.data, lower=True)
        solution = scipy.linalg.cho_solve(factor, b)
    except np.linalg.LinAlgError as exc:
        if not allow_indefinite:
            raise SolveError(
                f"dense factorization failed: {exc}"
            ) from exc
        well_conditioned = False
        try:
            solution = scipy.linalg.solve(cov.data, b, assume_a="sym")
        except np.linalg.LinAlgError as exc2:
            raise SolveError(
                f"symmetric indefinite solve failed: {exc2}"
            ) from exc2
    residual = float(np.linalg.norm(cov.data @ solution - b))
    solution = solution[:, 0] if squeeze else solution
    return SolveReport(solution, "dense", residual, well_conditioned)
