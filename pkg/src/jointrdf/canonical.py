"""Canonical variable form of a two-block covariance.

Two whitening transforms S1, S2 take the blocks to identity marginal
covariance while the cross block becomes Block-diag(I, D4, 0): a leading
identity for perfectly correlated coordinate pairs, a diagonal D4 of
canonical correlations strictly inside (0, 1), and zeros for uncorrelated
coordinates.  The resulting determinant identities turn the joint
rate objective into a product over scalar canonical quantities, which this
module evaluates for verification against the direct determinant form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import readonly, sym
from .model import GaussianPairSource, NotPositiveDefiniteError, validate_source

# Classification of canonical correlations: values >= 1 - UNIT_CORR_TOL count
# as exactly 1, values <= ZERO_CORR_TOL as exactly 0.  Exact-arithmetic index
# partitions need such a tolerance in floating point.
UNIT_CORR_TOL = 1e-9
ZERO_CORR_TOL = 1e-9

_SIGN_REL_TOL = 1e-12


@dataclass(frozen=True)
class CanonicalPartition:
    """Index counts (p11, p12, p13, p21, p22, p23) of the canonical split.

    p11 = p21 counts correlations classified as 1, p12 = p22 counts those in
    (0, 1), and p13 / p23 the uncorrelated remainder of each block.
    """

    p11: int
    p12: int
    p13: int
    p21: int
    p22: int
    p23: int

    def as_tuple(self) -> tuple[int, int, int, int, int, int]:
        return (self.p11, self.p12, self.p13, self.p21, self.p22, self.p23)


@dataclass(frozen=True)
class CanonicalForm:
    """Canonical variable form of a two-block covariance.

    s1 and s2 are the block transforms, d1_vals / d2_vals the descending
    eigenvalues of the marginal blocks, d4_vals the canonical correlations in
    (0, 1), and q_cvf the transformed covariance (I, D3; D3.T, I).
    """

    p1: int
    p2: int
    s1: np.ndarray
    s2: np.ndarray
    d1_vals: np.ndarray
    d2_vals: np.ndarray
    d4_vals: np.ndarray
    partition: CanonicalPartition
    q_cvf: np.ndarray

    @property
    def d3(self) -> np.ndarray:
        return self.q_cvf[: self.p1, self.p1 :]


def _fix_column_signs(u: np.ndarray) -> np.ndarray:
    """Flip columns so the first significant entry of each is positive."""
    out = u.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        thresh = _SIGN_REL_TOL * float(np.abs(col).max() or 1.0)
        sig = np.nonzero(np.abs(col) > thresh)[0]
        if sig.size and col[sig[0]] < 0.0:
            out[:, k] = -col
    return out


def _descending_eigh(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, u = np.linalg.eigh(sym(block))
    order = np.argsort(w)[::-1]
    return w[order], _fix_column_signs(u[:, order])


def to_canonical_form(src: GaussianPairSource) -> CanonicalForm:
    """Transform a positive-definite pair covariance to canonical variable form.

    Steps: eigendecompose each marginal block, whiten the cross block,
    singular-value decompose it, and classify each singular value as 1,
    interior, or 0 using the classification tolerances.  Signs of the
    decomposition factors are normalized so the transforms are deterministic.
    """
    if not src.positive_definite:
        raise NotPositiveDefiniteError("canonical form requires q > 0")
    p1, p2 = src.p1, src.p2
    d1_vals, u1 = _descending_eigh(src.q11)
    d2_vals, u2 = _descending_eigh(src.q22)
    if d1_vals[-1] <= 0.0 or d2_vals[-1] <= 0.0:
        raise NotPositiveDefiniteError("marginal block is numerically singular")

    t1 = (u1 / np.sqrt(d1_vals)).T
    t2 = (u2 / np.sqrt(d2_vals)).T
    c = t1 @ src.q12 @ t2.T
    u3, svals, v4t = np.linalg.svd(c, full_matrices=True)
    u4 = v4t.T
    # Flip (u3, u4) column pairs together to keep the product unchanged.
    for k in range(min(p1, p2)):
        col = u3[:, k]
        thresh = _SIGN_REL_TOL * float(np.abs(col).max() or 1.0)
        sig = np.nonzero(np.abs(col) > thresh)[0]
        if sig.size and col[sig[0]] < 0.0:
            u3[:, k] = -u3[:, k]
            u4[:, k] = -u4[:, k]
    if p1 > min(p1, p2):
        u3[:, min(p1, p2) :] = _fix_column_signs(u3[:, min(p1, p2) :])
    if p2 > min(p1, p2):
        u4[:, min(p1, p2) :] = _fix_column_signs(u4[:, min(p1, p2) :])

    n_one = int(np.count_nonzero(svals >= 1.0 - UNIT_CORR_TOL))
    n_mid = int(np.count_nonzero((svals > ZERO_CORR_TOL) & (svals < 1.0 - UNIT_CORR_TOL)))
    part = CanonicalPartition(
        p11=n_one,
        p12=n_mid,
        p13=p1 - n_one - n_mid,
        p21=n_one,
        p22=n_mid,
        p23=p2 - n_one - n_mid,
    )
    d4_vals = svals[n_one : n_one + n_mid].copy()

    d3 = np.zeros((p1, p2))
    if n_one:
        d3[:n_one, :n_one] = np.eye(n_one)
    if n_mid:
        idx = np.arange(n_one, n_one + n_mid)
        d3[idx, idx] = d4_vals
    q_cvf = np.block([[np.eye(p1), d3], [d3.T, np.eye(p2)]])

    return CanonicalForm(
        p1=p1,
        p2=p2,
        s1=readonly(u3.T @ t1),
        s2=readonly(u4.T @ t2),
        d1_vals=readonly(d1_vals),
        d2_vals=readonly(d2_vals),
        d4_vals=readonly(d4_vals),
        partition=part,
        q_cvf=readonly(q_cvf),
    )


def canonical_form_of_covariance(q: np.ndarray, p1: int, p2: int) -> CanonicalForm:
    """Canonical form of a raw covariance matrix (validates it first).

    Convenience used for error covariances, which share the block structure
    of the source.
    """
    return to_canonical_form(validate_source(q, p1, p2))


def log_det_cvf(form: CanonicalForm) -> float:
    """ln det of the canonical covariance: sum of ln(1 - d4_i^2).

    Equal to 1 (log 0) when there are no interior correlations; requires the
    unit-correlation class to be empty, since a correlation of 1 makes the
    canonical covariance singular.
    """
    if form.partition.p11 > 0:
        raise ValueError(
            "canonical covariance is singular: "
            f"{form.partition.p11} canonical correlation(s) classified as 1"
        )
    if form.d4_vals.size == 0:
        return 0.0
    return float(np.sum(np.log1p(-form.d4_vals**2)))


def cvf_objective(src_cvf: CanonicalForm, err_cvf: CanonicalForm) -> float:
    """Rate value in canonical coordinates, in nats.

    0.5 * ln of det(D1) det(D2) det(Q_cvf) over the same product for the
    error form.  Coincides with 0.5 * ln(det Q / det Sigma) through the
    canonical determinant identity.  Refuses when either form carries a
    canonical correlation classified as 1: the source case falls outside the
    supported index partition, the error case means a degenerate (singular)
    error covariance.
    """
    if (src_cvf.p1, src_cvf.p2) != (err_cvf.p1, err_cvf.p2):
        raise ValueError("source and error canonical forms have mismatched block sizes")
    if src_cvf.partition.p11 > 0:
        raise ValueError(
            "unsupported source: canonical correlations equal to 1 "
            "(perfectly correlated coordinates); objective restricted to p11 = p21 = 0"
        )
    if err_cvf.partition.p11 > 0:
        raise ValueError(
            "degenerate error covariance: canonical correlation equal to 1 "
            "makes the error form singular"
        )
    num = (
        float(np.sum(np.log(src_cvf.d1_vals)))
        + float(np.sum(np.log(src_cvf.d2_vals)))
        + log_det_cvf(src_cvf)
    )
    den = (
        float(np.sum(np.log(err_cvf.d1_vals)))
        + float(np.sum(np.log(err_cvf.d2_vals)))
        + log_det_cvf(err_cvf)
    )
    return 0.5 * (num - den)


def det_identity_residual(src: GaussianPairSource, form: CanonicalForm) -> float:
    """Relative residual of det(Q) = det(Q11) det(Q22) prod(1 - d4_i^2)."""
    if form.partition.p11 > 0:
        return math.inf
    log_lhs = float(np.linalg.slogdet(src.q)[1])
    log_rhs = (
        float(np.linalg.slogdet(src.q11)[1])
        + float(np.linalg.slogdet(src.q22)[1])
        + log_det_cvf(form)
    )
    return abs(math.expm1(log_rhs - log_lhs))
