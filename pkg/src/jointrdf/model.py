"""Gaussian source-pair model and the classical information quantities on it.

A source pair is a zero-mean jointly Gaussian vector split into two blocks of
dimensions p1 and p2, described entirely by its joint covariance.  This module
validates such covariances, computes the mutual information between the two
blocks, evaluates the single-source rate-distortion function by reverse
water-filling, and combines the three into the additive lower bound on the
joint rate-distortion function.

All rates are in nats.  Display conversion to bits lives in the CLI.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._linalg import chol_logdet, readonly, sym

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10
WATER_LEVEL_RTOL = 1e-12


class SourceValidationError(ValueError):
    """Covariance input failed a shape, symmetry, or definiteness check."""


class NotPositiveDefiniteError(ValueError):
    """Operation requires a strictly positive-definite covariance."""


@dataclass(frozen=True)
class GaussianPairSource:
    """Validated joint covariance of a two-block zero-mean Gaussian vector.

    Construct through :func:`validate_source`.  The stored matrix is
    symmetrized, clipped to the PSD cone within tolerance, and marked
    read-only; block views q11, q12, q22 index directly into it.
    """

    p1: int
    p2: int
    q: np.ndarray
    positive_definite: bool

    @property
    def n(self) -> int:
        return self.p1 + self.p2

    @property
    def q11(self) -> np.ndarray:
        return self.q[: self.p1, : self.p1]

    @property
    def q12(self) -> np.ndarray:
        return self.q[: self.p1, self.p1 :]

    @property
    def q22(self) -> np.ndarray:
        return self.q[self.p1 :, self.p1 :]


@dataclass(frozen=True)
class DistortionPair:
    """Per-block squared-error budgets (d1, d2), both nonnegative.

    A zero budget is admissible as input but flagged: the rate is infinite
    whenever the corresponding block has positive variance.
    """

    d1: float
    d2: float

    def __post_init__(self) -> None:
        for name, value in (("d1", self.d1), ("d2", self.d2)):
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")

    @property
    def has_zero_budget(self) -> bool:
        return self.d1 == 0.0 or self.d2 == 0.0


def validate_source(
    raw_matrix: np.ndarray,
    p1: int,
    p2: int,
    *,
    sym_rtol: float = SYMMETRY_RTOL,
    psd_rtol: float = PSD_RTOL,
) -> GaussianPairSource:
    """Validate a raw joint covariance and wrap it as a GaussianPairSource.

    Checks, in order: dimensions match (p1 + p2) square; entries finite;
    relative asymmetry within sym_rtol (then symmetrized); minimum eigenvalue
    >= -psd_rtol * ||q||_2 (negative round-off clipped to zero).  Whether the
    matrix is safely positive definite is recorded on the result.
    """
    if p1 < 1 or p2 < 1:
        raise SourceValidationError(f"block dimensions must be positive, got p1={p1}, p2={p2}")
    a = np.asarray(raw_matrix, dtype=float)
    n = p1 + p2
    if a.ndim != 2 or a.shape != (n, n):
        raise SourceValidationError(
            f"covariance must be {n}x{n} for p1={p1}, p2={p2}, got shape {a.shape}"
        )
    if not np.all(np.isfinite(a)):
        raise SourceValidationError("covariance contains non-finite entries")
    scale = float(np.abs(a).max())
    asym = float(np.abs(a - a.T).max())
    if asym > sym_rtol * scale:
        raise SourceValidationError(
            f"covariance is asymmetric: max |q - q.T| = {asym:.3e} "
            f"exceeds {sym_rtol:.1e} * max|q| = {sym_rtol * scale:.3e}"
        )
    q = sym(a)
    w, u = np.linalg.eigh(q)
    eig_scale = float(np.abs(w).max()) if w.size else 0.0
    if w[0] < -psd_rtol * eig_scale:
        raise SourceValidationError(
            f"covariance is not positive semidefinite: min eigenvalue {w[0]:.3e} "
            f"below tolerance {-psd_rtol * eig_scale:.3e}"
        )
    if w[0] < 0.0:
        q = sym((u * np.maximum(w, 0.0)) @ u.T)
    positive_definite = bool(w[0] > psd_rtol * eig_scale)
    return GaussianPairSource(p1=p1, p2=p2, q=readonly(q), positive_definite=positive_definite)


def mutual_information(src: GaussianPairSource) -> float:
    """Mutual information between the two blocks, in nats.

    Equals 0.5 * ln(det(Q11) det(Q22) / det(Q)); zero exactly when the
    cross-covariance block vanishes.  Requires a positive-definite source.
    """
    if not src.positive_definite:
        raise NotPositiveDefiniteError("mutual information requires q > 0")
    val = 0.5 * (chol_logdet(src.q11) + chol_logdet(src.q22) - chol_logdet(src.q))
    return max(val, 0.0)


def marginal_rdf(cov: np.ndarray, delta: float) -> float:
    """Rate-distortion function of one Gaussian block by reverse water-filling.

    Eigenvalues mu_j of cov share a water level theta with
    sum_j min(theta, mu_j) = delta; the rate is sum_j 0.5*ln(max(mu_j/theta, 1)).
    Returns 0 when delta >= trace(cov) and +inf when delta == 0 with a
    nonzero covariance.  The water level is located by bisection with
    |sum min(theta, mu) - delta| <= 1e-12 * max(1, delta).
    """
    if not math.isfinite(delta) or delta < 0.0:
        raise ValueError(f"delta must be finite and nonnegative, got {delta!r}")
    a = np.asarray(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"cov must be square, got shape {a.shape}")
    scale = float(np.abs(a).max()) if a.size else 0.0
    if float(np.abs(a - a.T).max()) > SYMMETRY_RTOL * scale:
        raise ValueError("cov must be symmetric")
    w = np.linalg.eigvalsh(sym(a))
    eig_scale = float(np.abs(w).max()) if w.size else 0.0
    if w[0] < -PSD_RTOL * eig_scale:
        raise ValueError(f"cov is not positive semidefinite: min eigenvalue {w[0]:.3e}")
    mu = np.maximum(w, 0.0)
    total = float(mu.sum())
    if delta >= total:
        return 0.0
    if delta == 0.0:
        return math.inf
    lo, hi = 0.0, float(mu.max())
    tol = WATER_LEVEL_RTOL * max(1.0, delta)
    theta = 0.5 * (lo + hi)
    for _ in range(200):
        theta = 0.5 * (lo + hi)
        filled = float(np.minimum(theta, mu).sum())
        if abs(filled - delta) <= tol:
            break
        if filled > delta:
            hi = theta
        else:
            lo = theta
    return float(0.5 * np.sum(np.log(np.maximum(mu / theta, 1.0))))


def gray_lower_bound(src: GaussianPairSource, d: DistortionPair) -> float:
    """Additive lower bound on the joint rate: sum of marginal rates minus
    the mutual information between the blocks.  May be negative.
    """
    if not src.positive_definite:
        raise NotPositiveDefiniteError("lower bound requires q > 0")
    if d.d1 <= 0.0 or d.d2 <= 0.0:
        raise ValueError("lower bound requires strictly positive distortion budgets")
    return marginal_rdf(src.q11, d.d1) + marginal_rdf(src.q22, d.d2) - mutual_information(src)


def parse_source(obj: dict) -> GaussianPairSource:
    """Build a source from a decoded JSON document {"p1": int, "p2": int, "Q": [[...]]}."""
    try:
        p1 = int(obj["p1"])
        p2 = int(obj["p2"])
        q = obj["Q"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SourceValidationError(f"source document must carry p1, p2 and Q: {exc}") from exc
    return validate_source(np.asarray(q, dtype=float), p1, p2)


def load_source(path: str) -> GaussianPairSource:
    """Read and validate a source covariance from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SourceValidationError(f"invalid JSON in {path}: {exc}") from exc
    return parse_source(obj)


def source_to_dict(src: GaussianPairSource) -> dict:
    """Inverse of parse_source; round-trips matrix payloads bit-exactly."""
    return {"p1": src.p1, "p2": src.p2, "Q": src.q.tolist()}
