"""Joint rate-distortion solver for a Gaussian source pair.

The rate is the infimum of 0.5 * ln(det Q / det Sigma) over error covariances
Sigma with 0 <= Sigma <= Q and per-block trace budgets.  Three branches:

* ZeroRate when both budgets cover the block traces (Sigma = Q).
* A closed form Sigma = Block-diag((d1/p1) I, (d2/p2) I) on the distortion
  region where Q - Sigma stays strictly positive definite; there the additive
  lower bound of :func:`jointrdf.model.gray_lower_bound` is attained.
* Otherwise a primal path-following barrier method on the self-concordant
  composite t*(-ln det Sigma) - ln det(Q - Sigma) - ln(slack1) - ln(slack2),
  with damped Newton steps in the space of symmetric matrices.

Every solve carries a certificate (lambda1, lambda2, Theta) whose stationarity
and complementary-slackness residuals are recomputable via
:func:`kkt_residuals`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from ._linalg import psd_project, readonly, sym
from .model import (
    DistortionPair,
    GaussianPairSource,
    NotPositiveDefiniteError,
    gray_lower_bound,
)


class FeasibilityError(ValueError):
    """Error covariance violates PSD or budget constraints."""


class SolveBranch(Enum):
    CLOSED_FORM_INTERIOR_D = "ClosedFormInteriorD"
    INTERIOR_POINT = "InteriorPoint"
    ZERO_RATE = "ZeroRate"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SolverConfig:
    """All solver tolerances, centralized for reproducibility.

    t_init / t_factor: barrier weight schedule; the ladder stops once
    (p1 + p2 + 2) / t < gap_tol.  centering_tol bounds the squared Newton
    decrement; region_tol scales the strict-positivity margin of the
    closed-form region test; psd_rtol and trace_slack_tol govern feasibility
    checks; active_rank_tol splits the active eigenspace of Q - Sigma when
    extracting dual variables.
    """

    t_init: float = 1.0
    t_factor: float = 10.0
    gap_tol: float = 1e-9
    centering_tol: float = 1e-18
    max_newton_steps: int = 60
    armijo_slope: float = 0.01
    backtrack_factor: float = 0.5
    boundary_fraction: float = 0.99
    region_tol: float = 1e-9
    psd_rtol: float = 1e-10
    trace_slack_tol: float = 1e-9
    active_rank_tol: float = 1e-6


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class ErrorCovariance:
    """Symmetric error covariance with the block partition of its source."""

    p1: int
    p2: int
    sigma: np.ndarray

    @property
    def n(self) -> int:
        return self.p1 + self.p2

    @property
    def sigma11(self) -> np.ndarray:
        return self.sigma[: self.p1, : self.p1]

    @property
    def sigma12(self) -> np.ndarray:
        return self.sigma[: self.p1, self.p1 :]

    @property
    def sigma22(self) -> np.ndarray:
        return self.sigma[self.p1 :, self.p1 :]

    def validate(
        self,
        src: GaussianPairSource,
        d: DistortionPair,
        config: SolverConfig = DEFAULT_CONFIG,
    ) -> None:
        """Raise FeasibilityError unless sigma >= 0, Q - sigma >= 0 and the
        block traces respect the budgets (all within config tolerances)."""
        s = self.sigma
        if s.shape != (self.n, self.n):
            raise FeasibilityError(f"sigma must be {self.n}x{self.n}, got {s.shape}")
        scale_q = float(np.abs(np.linalg.eigvalsh(src.q)).max())
        w_s = np.linalg.eigvalsh(sym(s))
        if w_s[0] < -config.psd_rtol * max(float(np.abs(w_s).max()), scale_q):
            raise FeasibilityError(f"sigma is not PSD: min eigenvalue {w_s[0]:.3e}")
        w_qs = np.linalg.eigvalsh(sym(src.q - s))
        if w_qs[0] < -config.psd_rtol * scale_q:
            raise FeasibilityError(f"Q - sigma is not PSD: min eigenvalue {w_qs[0]:.3e}")
        tr1 = float(np.trace(self.sigma11))
        tr2 = float(np.trace(self.sigma22))
        if tr1 > d.d1 + config.trace_slack_tol or tr2 > d.d2 + config.trace_slack_tol:
            raise FeasibilityError(
                f"trace budget violated: tr(sigma11)={tr1:.6g} vs d1={d.d1:.6g}, "
                f"tr(sigma22)={tr2:.6g} vs d2={d.d2:.6g}"
            )


def _as_matrix(sigma) -> np.ndarray:
    return np.asarray(getattr(sigma, "sigma", sigma), dtype=float)


@dataclass(frozen=True)
class KktCertificate:
    """Multipliers certifying optimality of an error covariance.

    slackness_residuals holds, in order: lambda1*(tr sigma11 - d1),
    lambda2*(tr sigma22 - d2), tr(V sigma) which is identically zero since
    the optimal sigma is strictly positive definite, and tr(Theta (sigma - Q)).
    """

    lambda1: float
    lambda2: float
    theta: np.ndarray
    stationarity_residual: float
    slackness_residuals: tuple[float, float, float, float]
    dual_feasible: bool

    @property
    def max_residual(self) -> float:
        return max(self.stationarity_residual, max(abs(r) for r in self.slackness_residuals))


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve: rate, optimizer, certificate, and diagnostics."""

    rate_nats: float
    sigma: ErrorCovariance
    certificate: KktCertificate | None
    branch: SolveBranch
    in_region_d: bool
    gray_bound_nats: float
    iterations: int
    wall_time: float


def closed_form_candidate(src: GaussianPairSource, d: DistortionPair) -> ErrorCovariance:
    """Equal split of each budget over its block diagonal, zero cross block.

    Makes no feasibility claim; pair with :func:`in_region_d`.
    """
    diag = np.concatenate(
        [np.full(src.p1, d.d1 / src.p1), np.full(src.p2, d.d2 / src.p2)]
    )
    return ErrorCovariance(p1=src.p1, p2=src.p2, sigma=readonly(np.diag(diag)))


def in_region_d(
    src: GaussianPairSource,
    d: DistortionPair,
    config: SolverConfig = DEFAULT_CONFIG,
) -> bool:
    """True iff Q minus the closed-form candidate is strictly positive definite.

    Zero budgets are excluded outright: the closed-form candidate is then
    singular and the rate infinite, so the point cannot lie in the region.
    Boundary contact within tolerance is classified as outside so the general
    branch handles it.
    """
    if d.d1 <= 0.0 or d.d2 <= 0.0:
        return False
    w_q = np.linalg.eigvalsh(src.q)
    cand = closed_form_candidate(src, d)
    w = np.linalg.eigvalsh(src.q - cand.sigma)
    return bool(w[0] > config.region_tol * float(np.abs(w_q).max()))


def rate_of(src: GaussianPairSource, sigma) -> float:
    """0.5 * (ln det Q - ln det Sigma) in nats; +inf for singular sigma."""
    if not src.positive_definite:
        raise NotPositiveDefiniteError("rate requires q > 0")
    s = sym(_as_matrix(sigma))
    try:
        ld_sigma = 2.0 * float(np.sum(np.log(np.diag(np.linalg.cholesky(s)))))
    except np.linalg.LinAlgError:
        return math.inf
    ld_q = 2.0 * float(np.sum(np.log(np.diag(np.linalg.cholesky(src.q)))))
    return 0.5 * (ld_q - ld_sigma)


def kkt_residuals(
    src: GaussianPairSource,
    d: DistortionPair,
    sigma: ErrorCovariance,
    cert: KktCertificate,
) -> KktCertificate:
    """Recompute all certificate residuals for (sigma, cert) on this instance.

    Stationarity is the Frobenius norm of
    -0.5 * Sigma^{-1} + Block-diag(lambda1 I, lambda2 I) + Theta; the four
    slackness residuals follow the field order documented on KktCertificate.
    """
    s = sym(_as_matrix(sigma))
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise FeasibilityError("kkt residuals require sigma > 0") from exc
    eye = np.eye(sigma.n)
    s_inv = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
    lam_block = np.zeros((sigma.n, sigma.n))
    lam_block[: sigma.p1, : sigma.p1] = cert.lambda1 * np.eye(sigma.p1)
    lam_block[sigma.p1 :, sigma.p1 :] = cert.lambda2 * np.eye(sigma.p2)
    stat = float(np.linalg.norm(-0.5 * sym(s_inv) + lam_block + cert.theta, "fro"))
    slack = (
        cert.lambda1 * (float(np.trace(sigma.sigma11)) - d.d1),
        cert.lambda2 * (float(np.trace(sigma.sigma22)) - d.d2),
        0.0,
        float(np.sum(cert.theta * (s - src.q))),
    )
    w_theta = np.linalg.eigvalsh(sym(cert.theta))
    theta_scale = float(np.abs(w_theta).max()) if w_theta.size else 0.0
    dual_ok = (
        cert.lambda1 >= 0.0
        and cert.lambda2 >= 0.0
        and w_theta[0] >= -1e-10 * max(theta_scale, 1.0)
    )
    return replace(
        cert,
        stationarity_residual=stat,
        slackness_residuals=slack,
        dual_feasible=bool(dual_ok),
    )


# ---------------------------------------------------------------------------
# barrier method internals
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _sym_basis(n: int) -> np.ndarray:
    """Orthonormal basis of symmetric n x n matrices under the Frobenius inner
    product: unit diagonals first, then (e_ij + e_ji)/sqrt(2)."""
    mats = []
    for i in range(n):
        b = np.zeros((n, n))
        b[i, i] = 1.0
        mats.append(b)
    off = 1.0 / math.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            b = np.zeros((n, n))
            b[i, j] = off
            b[j, i] = off
            mats.append(b)
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


def _svec(basis: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.einsum("kij,ij->k", basis, a)


def _unsvec(basis: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("k,kij->ij", v, basis)


def _slacks(s: np.ndarray, d: DistortionPair, p1: int) -> tuple[float, float]:
    return (
        d.d1 - float(np.trace(s[:p1, :p1])),
        d.d2 - float(np.trace(s[p1:, p1:])),
    )


def _barrier_value(q: np.ndarray, s: np.ndarray, t: float, d: DistortionPair, p1: int) -> float:
    s1, s2 = _slacks(s, d, p1)
    if s1 <= 0.0 or s2 <= 0.0:
        return math.inf
    try:
        l_s = np.linalg.cholesky(s)
        l_qs = np.linalg.cholesky(q - s)
    except np.linalg.LinAlgError:
        return math.inf
    ld_s = 2.0 * float(np.sum(np.log(np.diag(l_s))))
    ld_qs = 2.0 * float(np.sum(np.log(np.diag(l_qs))))
    return -t * ld_s - ld_qs - math.log(s1) - math.log(s2)


def _grad_hess(
    q: np.ndarray,
    s: np.ndarray,
    t: float,
    d: DistortionPair,
    p1: int,
    basis: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    n = s.shape[0]
    s_inv = sym(np.linalg.solve(s, np.eye(n)))
    w = sym(np.linalg.solve(q - s, np.eye(n)))
    s1, s2 = _slacks(s, d, p1)
    grad_mat = -t * s_inv + w + e1 / s1 + e2 / s2
    g = _svec(basis, grad_mat)
    # tr(M B_k M B_l) terms via the stacked products M B_k M.
    prod_s = np.einsum("ij,kjl,lm->kim", s_inv, basis, s_inv)
    prod_w = np.einsum("ij,kjl,lm->kim", w, basis, w)
    hess = t * np.einsum("kij,lij->kl", prod_s, basis)
    hess += np.einsum("kij,lij->kl", prod_w, basis)
    v1 = _svec(basis, e1)
    v2 = _svec(basis, e2)
    hess += np.outer(v1, v1) / s1**2 + np.outer(v2, v2) / s2**2
    return g, sym(hess)


def _max_feasible_step(
    q: np.ndarray, s: np.ndarray, step: np.ndarray, d: DistortionPair, p1: int
) -> float:
    """Largest alpha keeping s + alpha*step strictly inside all constraints."""
    alpha = math.inf
    l_s = np.linalg.cholesky(s)
    m = np.linalg.solve(l_s, np.linalg.solve(l_s, step).T)
    w = np.linalg.eigvalsh(sym(m))
    if w[0] < 0.0:
        alpha = min(alpha, -1.0 / w[0])
    l_qs = np.linalg.cholesky(q - s)
    m = np.linalg.solve(l_qs, np.linalg.solve(l_qs, step).T)
    w = np.linalg.eigvalsh(sym(m))
    if w[-1] > 0.0:
        alpha = min(alpha, 1.0 / w[-1])
    s1, s2 = _slacks(s, d, p1)
    t1 = float(np.trace(step[:p1, :p1]))
    t2 = float(np.trace(step[p1:, p1:]))
    if t1 > 0.0:
        alpha = min(alpha, s1 / t1)
    if t2 > 0.0:
        alpha = min(alpha, s2 / t2)
    return alpha


def _center(
    q: np.ndarray,
    s: np.ndarray,
    t: float,
    d: DistortionPair,
    p1: int,
    config: SolverConfig,
    basis: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Damped Newton to the analytic center of the t-weighted barrier.

    Stops on the centering tolerance, on a stalled decrement (rounding noise
    floor at large t), or on a failed line search.
    """
    steps = 0
    prev_lam2 = math.inf
    for _ in range(config.max_newton_steps):
        try:
            g, h = _grad_hess(q, s, t, d, p1, basis, e1, e2)
            try:
                delta = np.linalg.solve(h, -g)
            except np.linalg.LinAlgError:
                h = h + (1e-12 * float(np.trace(h)) / h.shape[0]) * np.eye(h.shape[0])
                delta = np.linalg.solve(h, -g)
            lam2 = float(-g @ delta)
            if lam2 <= config.centering_tol:
                break
            if lam2 < 1e-10 and lam2 > 0.5 * prev_lam2:
                break  # rounding noise floor at large t
            prev_lam2 = lam2
            step = _unsvec(basis, delta)
            alpha_max = _max_feasible_step(q, s, step, d, p1)
        except np.linalg.LinAlgError:
            break  # iterate within round-off of the boundary: accept it
        alpha = min(1.0, config.boundary_fraction * alpha_max)
        f0 = _barrier_value(q, s, t, d, p1)
        accepted = False
        while alpha > 1e-20:
            trial = sym(s + alpha * step)
            if _barrier_value(q, trial, t, d, p1) <= f0 - config.armijo_slope * alpha * lam2:
                s = trial
                accepted = True
                break
            alpha *= config.backtrack_factor
        steps += 1
        if not accepted:
            break
    return s, steps


def _solve_barrier(
    src: GaussianPairSource, d: DistortionPair, config: SolverConfig
) -> tuple[np.ndarray, float, int]:
    q = src.q
    n = src.n
    basis = _sym_basis(n)
    e1 = np.zeros((n, n))
    e1[: src.p1, : src.p1] = np.eye(src.p1)
    e2 = np.eye(n) - e1
    lam_min_q = float(np.linalg.eigvalsh(q)[0])
    alpha0 = 0.9 * min(d.d1 / src.p1, d.d2 / src.p2, lam_min_q / 2.0)
    s = alpha0 * np.eye(n)
    t = config.t_init
    total = 0
    while True:
        s, steps = _center(q, s, t, d, src.p1, config, basis, e1, e2)
        total += steps
        if (n + 2) / t < config.gap_tol:
            break
        t *= config.t_factor
    return s, t, total


def _block_multiplier_matrix(n: int, p1: int, lambda1: float, lambda2: float) -> np.ndarray:
    m = np.zeros((n, n))
    m[:p1, :p1] = lambda1 * np.eye(p1)
    m[p1:, p1:] = lambda2 * np.eye(n - p1)
    return m


# A trace slack below this fraction of max(1, budget) marks the constraint as
# active when re-estimating multipliers; far looser than the central-path
# slack O(gap_tol) yet far tighter than any genuinely inactive slack.
_TRACE_ACTIVE_TOL = 1e-4


def _certificate_candidates(
    src: GaussianPairSource,
    s: np.ndarray,
    t: float,
    d: DistortionPair,
    config: SolverConfig,
) -> list[tuple[float, float, np.ndarray]]:
    """Dual extraction at the final barrier iterate, plus a polish candidate.

    The raw barrier duals are lambda_i = 1/(2 t slack_i) and
    Theta = (Q - Sigma)^{-1} / (2 t).  Near the optimum the active slacks
    shrink to O(1/t) and their computation cancels catastrophically, so a
    second candidate re-estimates the multipliers from the stationarity
    structure: Theta must annihilate the inactive eigenspace U+ of Q - Sigma,
    so each active lambda_i solves
    min || (0.5 Sigma^{-1} - lambda1 E1 - lambda2 E2) U+ ||_F, which decouples
    by block; Theta is then rebuilt from stationarity and projected onto the
    PSD cone.  The caller keeps whichever candidate certifies better.
    """
    n = src.n
    p1 = src.p1
    s_inv = sym(np.linalg.solve(s, np.eye(n)))
    half_inv = 0.5 * s_inv
    w, u = np.linalg.eigh(sym(src.q - s))
    scale = float(np.abs(w).max()) if w.size else 0.0
    candidates: list[tuple[float, float, np.ndarray]] = []

    s1, s2 = _slacks(s, d, p1)
    if s1 > 0.0 and s2 > 0.0:
        w_pos = np.maximum(w, np.finfo(float).tiny)
        q_s_inv = sym((u / w_pos) @ u.T)
        candidates.append(
            (1.0 / (2.0 * t * s1), 1.0 / (2.0 * t * s2), psd_project(q_s_inv / (2.0 * t)))
        )

    inactive = w > config.active_rank_tol * scale
    if np.any(inactive):
        u_in = u[:, inactive]
        au = half_inv @ u_in
        lams = [0.0, 0.0]
        blocks = (slice(0, p1), slice(p1, n))
        for i, (slack, budget) in enumerate(((s1, d.d1), (s2, d.d2))):
            if slack > _TRACE_ACTIVE_TOL * max(1.0, budget):
                continue  # inactive budget: complementary slackness forces lambda = 0
            rows = u_in[blocks[i], :]
            denom = float(np.sum(rows * rows))
            if denom > 0.0:
                lams[i] = max(0.0, float(np.sum(rows * au[blocks[i], :])) / denom)
            elif slack > 0.0:
                lams[i] = 1.0 / (2.0 * t * slack)
        theta = psd_project(half_inv - _block_multiplier_matrix(n, p1, lams[0], lams[1]))
        candidates.append((lams[0], lams[1], theta))
    return candidates


def _best_certificate(
    src: GaussianPairSource,
    d: DistortionPair,
    sigma: ErrorCovariance,
    candidates: list[tuple[float, float, np.ndarray]],
) -> KktCertificate:
    best: KktCertificate | None = None
    for lam1, lam2, theta in candidates:
        cert = kkt_residuals(
            src,
            d,
            sigma,
            KktCertificate(
                lambda1=lam1,
                lambda2=lam2,
                theta=readonly(theta),
                stationarity_residual=0.0,
                slackness_residuals=(0.0, 0.0, 0.0, 0.0),
                dual_feasible=True,
            ),
        )
        if best is None or cert.max_residual < best.max_residual:
            best = cert
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# public solve
# ---------------------------------------------------------------------------


def solve(
    src: GaussianPairSource,
    d: DistortionPair,
    config: SolverConfig = DEFAULT_CONFIG,
    *,
    force_interior: bool = False,
) -> SolveReport:
    """Compute the joint rate-distortion value and its optimal error covariance.

    Branch selection follows the module docstring; force_interior skips the
    zero-rate and closed-form shortcuts so the barrier path can be exercised
    on any instance (used by consistency checks).

    A zero budget against a block with positive variance yields the
    Infeasible branch with an infinite rate: every admissible error
    covariance is then singular.
    """
    start = time.perf_counter()
    if not src.positive_definite:
        raise NotPositiveDefiniteError("solve requires q > 0")
    n = src.n

    if d.d1 <= 0.0 or d.d2 <= 0.0:
        sigma = ErrorCovariance(p1=src.p1, p2=src.p2, sigma=readonly(np.zeros((n, n))))
        return SolveReport(
            rate_nats=math.inf,
            sigma=sigma,
            certificate=None,
            branch=SolveBranch.INFEASIBLE,
            in_region_d=False,
            gray_bound_nats=math.inf,
            iterations=0,
            wall_time=time.perf_counter() - start,
        )

    gray = gray_lower_bound(src, d)
    region = in_region_d(src, d, config)
    tr1 = float(np.trace(src.q11))
    tr2 = float(np.trace(src.q22))

    if d.d1 >= tr1 and d.d2 >= tr2 and not force_interior:
        sigma = ErrorCovariance(p1=src.p1, p2=src.p2, sigma=readonly(src.q.copy()))
        theta = psd_project(0.5 * sym(np.linalg.solve(src.q, np.eye(n))))
        cert = _best_certificate(src, d, sigma, [(0.0, 0.0, theta)])
        return SolveReport(
            rate_nats=0.0,
            sigma=sigma,
            certificate=cert,
            branch=SolveBranch.ZERO_RATE,
            in_region_d=region,
            gray_bound_nats=gray,
            iterations=0,
            wall_time=time.perf_counter() - start,
        )

    if region and not force_interior:
        sigma = closed_form_candidate(src, d)
        rate = rate_of(src, sigma)
        lam1 = src.p1 / (2.0 * d.d1)
        lam2 = src.p2 / (2.0 * d.d2)
        cert = _best_certificate(src, d, sigma, [(lam1, lam2, np.zeros((n, n)))])
        return SolveReport(
            rate_nats=rate,
            sigma=sigma,
            certificate=cert,
            branch=SolveBranch.CLOSED_FORM_INTERIOR_D,
            in_region_d=True,
            gray_bound_nats=gray,
            iterations=0,
            wall_time=time.perf_counter() - start,
        )

    s, t_final, iterations = _solve_barrier(src, d, config)
    sigma = ErrorCovariance(p1=src.p1, p2=src.p2, sigma=readonly(sym(s)))
    sigma.validate(src, d, config)
    cert = _best_certificate(
        src, d, sigma, _certificate_candidates(src, s, t_final, d, config)
    )
    return SolveReport(
        rate_nats=rate_of(src, sigma),
        sigma=sigma,
        certificate=cert,
        branch=SolveBranch.INTERIOR_POINT,
        in_region_d=region,
        gray_bound_nats=gray,
        iterations=iterations,
        wall_time=time.perf_counter() - start,
    )
