"""Binary linear discriminant analysis with structured covariance.

The weight vector solves ``Sigma w = mu_target - mu_nontarget`` and the
bias is ``-w^T (mu_nontarget + mu_target) / 2``, so the decision boundary
passes through the midpoint of the class means and ``decision_values`` is
positive on the target side.

``estimator`` selects the covariance model:

* ``slda`` -- dense shrinkage-regularized sample covariance.
* ``toeplitz`` -- block-diagonal averaging plus linear tapering; solved in
  compact form by the block Levinson recursion.
* ``toeplitz_a1_only`` -- averaging without tapering.  The averaged matrix
  is not guaranteed positive definite; on recursion breakdown the fit
  retries with a dense symmetric indefinite solve and flags the model.
* ``toeplitz_a2_only`` -- blockwise tapering of the dense shrunk covariance
  (no averaging).

``cov_mode`` selects the centering: 'within' uses per-class means (needs
labels), 'global' uses the overall mean, which requires no labels when the
class means are supplied via ``mean_override``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import covest
from .blockmat import (
    BlockCov,
    BlockDims,
    BlockToeplitzCov,
    apply_taper,
    apply_taper_dense,
    block_diagonal_average,
    to_dense,
)
from .btsolve import SolveReport, block_levinson_solve, dense_solve
from .covest import ClassStats
from .errors import DataFormatError, ShapeError, SolveBreakdownError

ESTIMATORS = ("slda", "toeplitz", "toeplitz_a1_only", "toeplitz_a2_only")
COV_MODES = ("within", "global")

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LdaModel:
    """Fitted discriminant: weights, bias, and fit metadata."""

    weights: np.ndarray
    bias: float
    dims: BlockDims
    estimator: str
    cov_mode: str
    gamma: float
    well_conditioned: bool = True
    degenerate: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (self.dims.size,):
            raise ShapeError(
                f"weights have shape {w.shape}, expected ({self.dims.size},)"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def _estimate_covariance(
    x: np.ndarray,
    dims: BlockDims,
    estimator: str,
    cov_mode: str,
    labels,
    gamma: float | None,
) -> tuple[BlockCov | BlockToeplitzCov, float]:
    """Shrunk covariance in the structure the estimator asks for."""
    if cov_mode == "within":
        centered = covest.center(x, labels=labels)
    else:
        centered = covest.center(x)
    sample = covest.sample_covariance(centered, dims)
    shrunk = covest.shrink(sample, gamma, centered)
    if estimator == "slda":
        return shrunk.matrix, shrunk.gamma
    if estimator == "toeplitz_a2_only":
        return apply_taper_dense(shrunk.matrix), shrunk.gamma
    averaged = block_diagonal_average(shrunk.matrix)
    if estimator == "toeplitz_a1_only":
        return averaged, shrunk.gamma
    return apply_taper(averaged), shrunk.gamma


def _solve(cov: BlockCov | BlockToeplitzCov, delta: np.ndarray, estimator: str) -> SolveReport:
    if isinstance(cov, BlockToeplitzCov):
        if estimator == "toeplitz_a1_only":
            # Averaging without tapering may produce an indefinite matrix;
            # fall back to a dense indefinite solve instead of failing.
            try:
                return block_levinson_solve(cov, delta)
            except SolveBreakdownError:
                report = dense_solve(to_dense(cov), delta, allow_indefinite=True)
                return replace(report, well_conditioned=False)
        return block_levinson_solve(cov, delta)
    return dense_solve(cov, delta)


def fit(
    x,
    labels=None,
    dims: BlockDims | None = None,
    estimator: str = "toeplitz",
    cov_mode: str = "within",
    mean_override: ClassStats | None = None,
    gamma: float | None = None,
) -> LdaModel:
    """Fit the discriminant on channel-prime feature columns.

    ``mean_override`` replaces the estimated class means (for example means
    computed on a larger dataset) while the covariance still comes from
    ``x``.  ``gamma`` overrides the analytic shrinkage intensity.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(
            f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}"
        )
    if cov_mode not in COV_MODES:
        raise ValueError(
            f"unknown cov_mode {cov_mode!r}; expected one of {COV_MODES}"
        )
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D (D x N_e), got {x.shape}")
    if dims is None:
        raise ValueError("dims is required")
    if x.shape[0] != dims.size:
        raise ShapeError(
            f"feature dimension {x.shape[0]} does not match dims.size {dims.size}"
        )
    if cov_mode == "within" and labels is None:
        raise ValueError("cov_mode='within' requires labels")
    if mean_override is None:
        if labels is None:
            raise ValueError("labels are required when mean_override is not given")
        stats = covest.class_means(x, labels)
    else:
        stats = mean_override
        if stats.means.shape[1] != dims.size:
            raise ShapeError(
                f"mean_override dimension {stats.means.shape[1]} does not "
                f"match dims.size {dims.size}"
            )

    cov, gamma_used = _estimate_covariance(x, dims, estimator, cov_mode, labels, gamma)
    delta = stats.means[1] - stats.means[0]
    if np.linalg.norm(delta) == 0.0:
        warnings.warn(
            "identical class means: returning a degenerate model with zero weights",
            RuntimeWarning,
            stacklevel=2,
        )
        return LdaModel(
            weights=np.zeros(dims.size),
            bias=0.0,
            dims=dims,
            estimator=estimator,
            cov_mode=cov_mode,
            gamma=gamma_used,
            degenerate=True,
        )
    report = _solve(cov, delta, estimator)
    w = report.solution
    bias = float(-0.5 * (w @ (stats.means[0] + stats.means[1])))
    return LdaModel(
        weights=w,
        bias=bias,
        dims=dims,
        estimator=estimator,
        cov_mode=cov_mode,
        gamma=gamma_used,
        well_conditioned=report.well_conditioned,
    )


def decision_values(model: LdaModel, x) -> np.ndarray:
    """Signed scores ``w^T x + b`` for feature columns (positive = target)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != model.dims.size:
        raise ShapeError(
            f"feature matrix has shape {x.shape}, expected "
            f"({model.dims.size}, n_epochs)"
        )
    return model.weights @ x + model.bias


def save_model(model: LdaModel, path) -> None:
    """Write the model as JSON; floats round-trip exactly."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "n_channels": model.dims.n_channels,
        "n_times": model.dims.n_times,
        "estimator": model.estimator,
        "cov_mode": model.cov_mode,
        "gamma": model.gamma,
        "bias": model.bias,
        "weights": model.weights.tolist(),
        "well_conditioned": model.well_conditioned,
        "degenerate": model.degenerate,
    }
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> LdaModel:
    """Read a model written by :func:`save_model`."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataFormatError(
            f"unsupported model format version {version!r}, "
            f"expected {MODEL_FORMAT_VERSION}"
        )
    if payload.get("estimator") not in ESTIMATORS:
        raise DataFormatError(f"unknown estimator {payload.get('estimator')!r}")
    if payload.get("cov_mode") not in COV_MODES:
        raise DataFormatError(f"unknown cov_mode {payload.get('cov_mode')!r}")
    return LdaModel(
        weights=np.array(payload["weights"], dtype=np.float64),
        bias=float(payload["bias"]),
        dims=BlockDims(int(payload["n_channels"]), int(payload["n_times"])),
        estimator=payload["estimator"],
        cov_mode=payload["cov_mode"],
        gamma=float(payload["gamma"]),
        well_conditioned=bool(payload.get("well_conditioned", True)),
        degenerate=bool(payload.get("degenerate", False)),
    )
