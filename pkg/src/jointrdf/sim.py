"""Monte-Carlo validation of a solved instance.

Draws source samples, pushes them through a test-channel realization, and
compares empirical block distortions, residual statistics, and estimator
mean-squared errors against their analytic values.  Randomness comes from the
counter-based Philox bit generator, which is seedable and splittable; the
generator identity is recorded on every report so runs are self-describing.
All pass/fail thresholds are statistical (concentration-based), never exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._linalg import sqrt_factor
from .model import DistortionPair, GaussianPairSource
from .realization import TestChannelRealization, conditional_mean_map

GENERATOR = "philox4x64"


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class SampleBatch:
    """Source draws x, reproductions xhat, and residuals e = x - xhat.

    sample_source fills x only; push_channel returns a completed batch.
    Rows are samples, columns the stacked (p1 + p2) coordinates.
    """

    p1: int
    p2: int
    n: int
    x: np.ndarray
    xhat: np.ndarray | None = None
    e: np.ndarray | None = None


@dataclass(frozen=True)
class DistortionReport:
    empirical_d1: float
    empirical_d2: float
    bound_d1: float
    bound_d2: float
    passed: bool
    generator: str = GENERATOR


@dataclass(frozen=True)
class CmOptimalityReport:
    """Per-alternative MSE margins against the conditional-mean estimator.

    margins[k] holds ((margin_block1, margin_block2), (slack1, slack2)) for
    alternative k; the check passes when every margin clears -slack.
    """

    base_mse: tuple[float, float]
    margins: tuple[tuple[tuple[float, float], tuple[float, float]], ...]
    passed: bool
    generator: str = GENERATOR


def sample_source(src: GaussianPairSource, n: int, seed: int) -> SampleBatch:
    """Draw n i.i.d. zero-mean Gaussian rows with covariance q.

    The covariance factor comes from an eigendecomposition with negative
    round-off clipped to zero, so semidefinite (degenerate) sources sample
    correctly.  Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    factor = sqrt_factor(src.q)
    z = _rng(seed).standard_normal((n, src.n))
    return SampleBatch(p1=src.p1, p2=src.p2, n=n, x=z @ factor.T)


def push_channel(batch: SampleBatch, r: TestChannelRealization, seed: int) -> SampleBatch:
    """Apply xhat = x H^T + v with v ~ N(0, qv) independent of x."""
    if batch.x.shape[1] != r.n:
        raise ValueError(
            f"batch dimension {batch.x.shape[1]} does not match channel dimension {r.n}"
        )
    noise = _rng(seed).standard_normal((batch.n, r.n)) @ sqrt_factor(r.qv).T
    xhat = batch.x @ r.h.T + noise
    return replace(batch, xhat=xhat, e=batch.x - xhat)


def _block_sq(e: np.ndarray, p1: int) -> tuple[np.ndarray, np.ndarray]:
    return np.sum(e[:, :p1] ** 2, axis=1), np.sum(e[:, p1:] ** 2, axis=1)


def check_distortion(batch: SampleBatch, d: DistortionPair) -> DistortionReport:
    """Empirical per-block mean squared residuals against the budgets.

    Passes iff each empirical distortion is at most the budget inflated by
    the three-sigma allowance 1 + 3*sqrt(2 p_i / n).
    """
    if batch.e is None:
        raise ValueError("batch has no residuals; run push_channel first")
    sq1, sq2 = _block_sq(batch.e, batch.p1)
    emp1 = float(sq1.mean())
    emp2 = float(sq2.mean())
    bound1 = d.d1 * (1.0 + 3.0 * math.sqrt(2.0 * batch.p1 / batch.n))
    bound2 = d.d2 * (1.0 + 3.0 * math.sqrt(2.0 * batch.p2 / batch.n))
    return DistortionReport(
        empirical_d1=emp1,
        empirical_d2=emp2,
        bound_d1=bound1,
        bound_d2=bound2,
        passed=bool(emp1 <= bound1 and emp2 <= bound2),
    )


def check_cm_optimality(
    batch: SampleBatch,
    r: TestChannelRealization,
    alternatives: list[np.ndarray],
) -> CmOptimalityReport:
    """Empirical MSE dominance of the conditional-mean estimate.

    For each alternative linear map g the per-block MSE of x - g(xhat) must
    not beat the conditional-mean map by more than the statistical slack
    3 * std / sqrt(n) of the per-sample MSE difference.
    """
    if batch.xhat is None:
        raise ValueError("batch has no reproductions; run push_channel first")
    m = conditional_mean_map(r)
    base_res = batch.x - batch.xhat @ m.T
    base1, base2 = _block_sq(base_res, batch.p1)
    results = []
    passed = True
    for g in alternatives:
        alt_res = batch.x - batch.xhat @ np.asarray(g, dtype=float).T
        alt1, alt2 = _block_sq(alt_res, batch.p1)
        margins = []
        slacks = []
        for diff in (alt1 - base1, alt2 - base2):
            margin = float(diff.mean())
            ddof = 1 if batch.n > 1 else 0
            slack = 3.0 * float(diff.std(ddof=ddof)) / math.sqrt(batch.n)
            margins.append(margin)
            slacks.append(slack)
            if margin < -slack:
                passed = False
        results.append(((margins[0], margins[1]), (slacks[0], slacks[1])))
    return CmOptimalityReport(
        base_mse=(float(base1.mean()), float(base2.mean())),
        margins=tuple(results),
        passed=passed,
    )


def empirical_error_covariance(batch: SampleBatch) -> np.ndarray:
    """Sample covariance of the residuals (zero-mean convention)."""
    if batch.e is None:
        raise ValueError("batch has no residuals; run push_channel first")
    return (batch.e.T @ batch.e) / batch.n
