"""Discrete minimal-surface-type operators on embedded-boundary grids.

For a field u with slope p = (u_x, u_y) and W = sqrt(1 + |p|^2), the
quasilinear operator is

    M u = (W^2 - u_x^2) u_xx - 2 u_x u_y u_xy + (W^2 - u_y^2) u_yy,

equal to W^3 div(p / W).  Two algebraically equivalent evaluations are
provided: the coefficient form above and the expanded form
W^2 (u_xx + u_yy) - <Hess(u) p, p>.  They agree to rounding and the pair is
kept as a cross-check on the tensor algebra.

The defect against a prescribed curvature field H at load factor tau is

    Q u = M u - tau * n * H * W^3,

so Q u = 0 is the equation in nondivergence form and Q applied to an exact
solution measures pure truncation error.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, ScalarField, InvalidFieldError

DIMENSION = 2   # graphs over planar domains; n enters bounds explicitly


def gradient(u: ScalarField) -> np.ndarray:
    """(n_interior, 2) centered slopes, ghosts eliminated through closures."""
    u.validate()
    ops = u.grid.operators()
    feet = u.feet if u.feet is not None else np.zeros(u.grid.n_feet)
    gx = ops["Gx"][0] @ u.values + ops["Gx"][1] @ feet
    gy = ops["Gy"][0] @ u.values + ops["Gy"][1] @ feet
    return np.stack([gx, gy], axis=-1)


def hessian(u: ScalarField) -> np.ndarray:
    """(n_interior, 2, 2) second differences; cross term one-sided at flagged nodes."""
    u.validate()
    ops = u.grid.operators()
    feet = u.feet if u.feet is not None else np.zeros(u.grid.n_feet)
    uxx = ops["Dxx"][0] @ u.values + ops["Dxx"][1] @ feet
    uyy = ops["Dyy"][0] @ u.values + ops["Dyy"][1] @ feet
    uxy = ops["Dxy"][0] @ u.values + ops["Dxy"][1] @ feet
    H = np.empty((u.grid.n_interior, 2, 2))
    H[:, 0, 0] = uxx
    H[:, 1, 1] = uyy
    H[:, 0, 1] = H[:, 1, 0] = uxy
    return H


def slope_factor(p: np.ndarray) -> np.ndarray:
    """W = sqrt(1 + |p|^2) for slopes p of shape (..., 2)."""
    return np.sqrt(1.0 + np.sum(np.asarray(p) ** 2, axis=-1))


def coefficient_matrix(p) -> tuple[np.ndarray, tuple[float, float]]:
    """A(p) = W^2 I - p p^T with its exact eigenvalue pair (1, 1 + |p|^2).

    The small eigenvalue 1 belongs to the direction of p, the large one
    1 + |p|^2 to the orthogonal direction, so the ellipticity ratio is W^2.
    """
    p = np.asarray(p, dtype=float)
    squeeze = p.ndim == 1
    p = np.atleast_2d(p)
    w2 = 1.0 + np.sum(p**2, axis=-1)
    A = w2[:, None, None] * np.eye(2) - p[:, :, None] * p[:, None, :]
    lam = (1.0, float(w2[0]) if squeeze else w2)
    if squeeze:
        return A[0], lam
    return A, (np.ones_like(w2), w2)


def apply_M(u: ScalarField) -> np.ndarray:
    """Coefficient-form evaluation of M u at interior nodes."""
    p = gradient(u)
    Hs = hessian(u)
    w2 = 1.0 + np.sum(p**2, axis=-1)
    a11 = w2 - p[:, 0] ** 2
    a22 = w2 - p[:, 1] ** 2
    a12 = -p[:, 0] * p[:, 1]
    return a11 * Hs[:, 0, 0] + 2.0 * a12 * Hs[:, 0, 1] + a22 * Hs[:, 1, 1]


def apply_M_tensor(u: ScalarField) -> np.ndarray:
    """Expanded-form evaluation W^2 tr(Hess) - <Hess p, p>; cross-check of apply_M."""
    p = gradient(u)
    Hs = hessian(u)
    w2 = 1.0 + np.sum(p**2, axis=-1)
    lap = Hs[:, 0, 0] + Hs[:, 1, 1]
    Hp = np.einsum("nij,nj->ni", Hs, p)
    return w2 * lap - np.einsum("ni,ni->n", Hp, p)


def apply_Q(u: ScalarField, H, n: int = DIMENSION, tau: float = 1.0) -> np.ndarray:
    """Defect Q u = M u - tau n H W^3 at interior nodes.

    H may be a PrescribedCurvature, a callable of points, or a scalar.
    """
    p = gradient(u)
    W = slope_factor(p)
    hv = _curvature_values(H, u.grid.interior_xy)
    return apply_M(u) - tau * n * hv * W**3


def _curvature_values(H, pts: np.ndarray) -> np.ndarray:
    if np.isscalar(H):
        return np.full(len(pts), float(H))
    return np.asarray(H(pts), dtype=float)


def residual_norms(u: ScalarField, H, n: int = DIMENSION, tau: float = 1.0):
    """(core, collar) sup norms of Q u; core excludes the 2h boundary collar."""
    q = apply_Q(u, H, n, tau)
    core = u.grid.core_mask
    r_core = float(np.max(np.abs(q[core]))) if core.any() else 0.0
    r_collar = float(np.max(np.abs(q[~core]))) if (~core).any() else 0.0
    return r_core, r_collar


def operator_agreement(u: ScalarField) -> float:
    """Sup difference between the two M evaluations (rounding-level for valid fields)."""
    return float(np.max(np.abs(apply_M(u) - apply_M_tensor(u))))
