"""Shared test utilities: random instance generators and independent oracles.

The oracles deliberately avoid the library's own code paths: the water-filling
oracle locates the level by brute-force grid refinement instead of bisection,
and the scalar joint-rate oracle maximizes the 2x2 determinant over a refined
grid with eigenvalue-free feasibility tests.
"""

from __future__ import annotations

import numpy as np


def random_pd_pair(rng: np.random.Generator, p1: int, p2: int, ridge: float = 0.4):
    """Random strictly positive-definite (p1+p2) pair covariance."""
    n = p1 + p2
    a = rng.standard_normal((n, n))
    return a @ a.T + ridge * np.eye(n)


def random_feasible_sigma(
    rng: np.random.Generator, q: np.ndarray, lo: float = 0.1, hi: float = 0.9
) -> np.ndarray:
    """Random sigma with 0 < sigma < q strictly: Q^(1/2) W Q^(1/2) with
    eigenvalues of W drawn in (lo, hi)."""
    n = q.shape[0]
    w_eig, u_q = np.linalg.eigh(q)
    q_half = (u_q * np.sqrt(w_eig)) @ u_q.T
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    scales = rng.uniform(lo, hi, size=n)
    w = (basis * scales) @ basis.T
    s = q_half @ w @ q_half
    return 0.5 * (s + s.T)


def waterfill_oracle(eigenvalues: np.ndarray, delta: float) -> float:
    """Reverse water-filling rate by 1-D grid search over the water level.

    Refines the grid around the level whose filled distortion matches delta;
    independent of the bisection used by the library.
    """
    mu = np.maximum(np.asarray(eigenvalues, dtype=float), 0.0)
    total = mu.sum()
    if delta >= total:
        return 0.0
    lo, hi = 0.0, float(mu.max())
    for _ in range(6):
        grid = np.linspace(lo, hi, 2001)
        filled = np.minimum(grid[:, None], mu[None, :]).sum(axis=1)
        k = int(np.argmin(np.abs(filled - delta)))
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, len(grid) - 1)]
    theta = 0.5 * (lo + hi)
    return float(0.5 * np.sum(np.log(np.maximum(mu / theta, 1.0))))


def _best_det_given_diagonal(
    s1g: np.ndarray, s2g: np.ndarray, q11: float, q22: float, q12: float
) -> np.ndarray:
    """Max of det(sigma) over the cross term c, elementwise on an (s1, s2) grid.

    det = s1 s2 - c^2 decreases in |c|, so the best feasible c is the point
    closest to zero in [q12 - r, q12 + r] with r = sqrt((q11-s1)(q22-s2))
    (the q - sigma >= 0 band), intersected with |c| <= sqrt(s1 s2)
    (the sigma >= 0 band).  Infeasible cells evaluate to -inf.
    """
    r11 = q11 - s1g
    r22 = q22 - s2g
    rad = np.sqrt(np.maximum(r11 * r22, 0.0))
    lo = q12 - rad
    hi = q12 + rad
    c_best = np.clip(0.0, lo, hi)  # closest-to-zero point of the band
    own = np.sqrt(np.maximum(s1g * s2g, 0.0))
    feasible = (r11 >= -1e-12) & (r22 >= -1e-12) & (np.abs(c_best) <= own + 1e-12)
    det = s1g * s2g - c_best**2
    return np.where(feasible & (det > 0.0), det, -np.inf)


def scalar_bruteforce_rate(q: np.ndarray, d1: float, d2: float) -> float:
    """Joint rate for p1 = p2 = 1 by refined grid search over 2x2 sigma.

    Maximizes det(sigma) over the diagonal (s1 <= min(d1, q11),
    s2 <= min(d2, q22)) on a refined grid, with the cross term eliminated
    exactly per cell and feasibility checked through 2x2 determinant tests.
    Six refinement rounds bring the final grid step far below 1e-3.
    """
    q11, q22, q12 = float(q[0, 0]), float(q[1, 1]), float(q[0, 1])
    s1_hi = min(d1, q11)
    s2_hi = min(d2, q22)
    bounds = [(1e-12 * s1_hi, s1_hi), (1e-12 * s2_hi, s2_hi)]
    hard = [tuple(b) for b in bounds]
    best = -np.inf
    steps = 81
    for _ in range(6):
        axes = [np.linspace(lo, hi, steps) for lo, hi in bounds]
        s1g, s2g = np.meshgrid(*axes, indexing="ij")
        det = _best_det_given_diagonal(s1g, s2g, q11, q22, q12)
        idx = np.unravel_index(np.argmax(det), det.shape)
        if not np.isfinite(det[idx]):
            break
        best = max(best, float(det[idx]))
        new_bounds = []
        for ax, (lo_h, hi_h), i in zip(axes, hard, idx):
            step = ax[1] - ax[0] if len(ax) > 1 else (hi_h - lo_h)
            new_bounds.append(
                (max(lo_h, ax[i] - 2.0 * step), min(hi_h, ax[i] + 2.0 * step))
            )
        bounds = new_bounds
    if not np.isfinite(best) or best <= 0.0:
        return float("inf")
    det_q = q11 * q22 - q12**2
    return max(0.5 * float(np.log(det_q / best)), 0.0)


def gaussian_mi_of_channel(q: np.ndarray, h: np.ndarray, qv: np.ndarray) -> float:
    """Mutual information I(X; HX + V) from the assembled joint covariance."""
    n = q.shape[0]
    c_xh = q @ h.T
    c_hh = h @ q @ h.T + qv
    joint = np.block([[q, c_xh], [c_xh.T, c_hh]])
    sign_j, ld_joint = np.linalg.slogdet(joint)
    assert sign_j > 0
    return 0.5 * (np.linalg.slogdet(q)[1] + np.linalg.slogdet(c_hh)[1] - ld_joint)
