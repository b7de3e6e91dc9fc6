"""Numerical checks for optimality-preserving output transformations.

Centerpiece: the linear system in the transformed values
(T(f(x_1)), ..., T(f(x_m))) that holds exactly when the transformation
leaves the model's interior subproblem minimizer unchanged.  With
y_j = x_j - x_opt and H the inverse of the saddle-point matrix based at
x_opt, the condition reads

    sum_j (y_j y_j' d*) H_j (v - q_a; 0) + Ha d* = -Hg (v - q_a; 0) - ga,

where v are the unknown transformed values, q_a the base model's values
on the set, Ha and ga its Hessian and gradient at x_opt, H_j the
multiplier rows and Hg the gradient rows of H.  Everything here reduces
to dense linear algebra on that system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kkt_system
from .exceptions import InconclusiveError, PoisednessError
from .quad_model import QuadraticModel, as_point

# Smallest Hessian eigenvalue accepted as "strictly convex".
CONVEXITY_FLOOR = 1e-10
# Relative singular-value threshold for rank decisions.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class MopSystem:
    """Linear system characterizing minimizer-preserving value vectors."""

    coefficient_matrix: np.ndarray  # (n, m)
    offset: np.ndarray  # (n,)
    set: kkt_system.InterpolationSet
    q_alpha: QuadraticModel
    x_opt: np.ndarray
    d_star: np.ndarray
    delta: float

    @property
    def m(self):
        return self.coefficient_matrix.shape[1]

    @property
    def n(self):
        return self.coefficient_matrix.shape[0]


@dataclass(frozen=True)
class SolutionSpace:
    particular: np.ndarray
    basis: np.ndarray  # (m, dimension) orthonormal columns
    rank: int
    consistent: bool

    @property
    def dimension(self):
        return self.basis.shape[1]

    def contains_direction(self, direction, tol=1e-8):
        """Whether a homogeneous direction lies in the basis span."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        resid = d - self.basis @ (self.basis.T @ d)
        return np.linalg.norm(resid) <= tol


@dataclass(frozen=True)
class FullyLinearConstants:
    kappa_g_hat: float
    kappa_f_hat: float
    m: int
    pinv_norm: float
    mu_alpha: float
    qtilde_hessian_norm: float
    kappa_g: float
    kappa_f: float
    c1: float


def build_mop_system(iset, q_alpha, x_opt, d_star, delta, sigma=0.0):
    """Assemble the value-space system for a strictly convex base model.

    Requires an interior candidate step (||d*|| < delta) and a strictly
    convex base quadratic; otherwise the preservation question cannot be
    settled by the interior stationarity condition and the construction
    refuses with InconclusiveError.  The set is rebased at x_opt.
    """
    x_opt = as_point(x_opt, iset.n)
    d_star = as_point(d_star, iset.n)
    if not np.linalg.norm(d_star) < delta:
        raise InconclusiveError(
            f"candidate step has norm {np.linalg.norm(d_star):g} >= delta {delta:g}"
        )
    lam_min = scipy.linalg.eigvalsh(q_alpha.hessian)[0]
    if lam_min <= CONVEXITY_FLOOR:
        raise InconclusiveError(
            f"base model is not strictly convex (lambda_min = {lam_min:.3e})"
        )
    based = iset.with_base(x_opt)
    sys = kkt_system.assemble(based, sigma)
    m, n = based.m, based.n

    # Columns of the inverse restricted to the value block, one solve each.
    h_lam = np.empty((m, m))
    h_g = np.empty((n, m))
    for j in range(m):
        e = np.zeros(m)
        e[j] = 1.0
        sol = kkt_system.solve(sys, e)
        h_lam[:, j] = sol.lam
        h_g[:, j] = sol.g

    y = based.points - x_opt
    a_rows = y * (y @ d_star)[:, None]  # a_j = (y_j' d*) y_j
    coeff = h_g + a_rows.T @ h_lam
    q_alpha_vals = np.array([q_alpha(p) for p in based.points])
    offset = (
        coeff @ q_alpha_vals
        - q_alpha.hessian @ d_star
        - q_alpha.gradient_at(x_opt)
    )
    return MopSystem(
        coefficient_matrix=coeff,
        offset=offset,
        set=based,
        q_alpha=q_alpha,
        x_opt=x_opt,
        d_star=d_star,
        delta=float(delta),
    )


def check_mop(system, transformed_values, rtol=1e-8):
    """Whether a value vector satisfies the system; returns (ok, residual)."""
    v = np.asarray(transformed_values, dtype=float)
    if v.shape != (system.m,):
        raise ValueError(f"expected {system.m} values, got shape {v.shape}")
    residual = system.coefficient_matrix @ v - system.offset
    scale = (
        1.0
        + np.abs(system.offset).max()
        + np.abs(system.coefficient_matrix).sum(axis=1).max() * max(np.abs(v).max(), 1.0)
    )
    return bool(np.abs(residual).max() <= rtol * scale), residual


def solution_space(system):
    """Particular solution and null-space basis of the system."""
    coeff = system.coefficient_matrix
    svals = scipy.linalg.svdvals(coeff)
    rank = int(np.sum(svals > RANK_RTOL * max(svals[0], 1e-300)))
    particular, *_ = np.linalg.lstsq(coeff, system.offset, rcond=None)
    basis = scipy.linalg.null_space(coeff, rcond=RANK_RTOL)
    resid = np.abs(coeff @ particular - system.offset).max()
    scale = 1.0 + np.abs(system.offset).max()
    return SolutionSpace(
        particular=particular,
        basis=basis,
        rank=rank,
        consistent=bool(resid <= 1e-8 * scale),
    )


def _grid_argmin(values_fn, center, radius, x_opt, delta, points_per_axis):
    """Argmin of a scalar map over a cube grid clipped to the delta ball."""
    n = center.shape[0]
    axes = [np.linspace(center[i] - radius, center[i] + radius, points_per_axis)
            for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    inside = np.linalg.norm(pts - x_opt, axis=1) <= delta
    pts = pts[inside]
    if pts.shape[0] == 0:
        return x_opt.copy()
    vals = np.array([values_fn(p) for p in pts])
    return pts[int(np.argmin(vals))]


def check_objective_optimality_preserving(f, t, x_opt, delta, grid=21, rounds=3):
    """Brute-force comparison of argmin f and argmin T(f) over the ball.

    Two-stage grid refinement; supported for n <= 3 only.  Returns True
    when the refined minimizers agree within the final grid resolution.
    """
    x_opt = as_point(x_opt)
    n = x_opt.shape[0]
    if n > 3:
        raise ValueError(f"brute-force check supports n <= 3, got n = {n}")

    def tf(p):
        return float(t(float(f(p))))

    spacing = 2.0 * delta / (grid - 1)
    arg_f = _grid_argmin(lambda p: float(f(p)), x_opt, delta, x_opt, delta, grid)
    arg_tf = _grid_argmin(tf, x_opt, delta, x_opt, delta, grid)
    for _ in range(rounds):
        radius = 2.0 * spacing
        arg_f = _grid_argmin(lambda p: float(f(p)), arg_f, radius, x_opt, delta, grid)
        arg_tf = _grid_argmin(tf, arg_tf, radius, x_opt, delta, grid)
        spacing = 2.0 * radius / (grid - 1)
    return bool(np.linalg.norm(arg_f - arg_tf) <= 3.0 * spacing)


def base_interpolant(iset, q_alpha, sigma=0.0):
    """Least-curvature interpolant of the base model's own values."""
    vals = np.array([q_alpha(p) for p in iset.points])
    return kkt_system.mfn_interpolant(iset, vals, None, sigma)


def gradient_lipschitz(model):
    """Lipschitz constant of the model gradient: the Hessian spectral norm."""
    return float(np.linalg.norm(model.hessian, 2))


def fully_linear_constants(iset, delta, kappa_g, kappa_f, c1, mu_alpha,
                           qtilde_hessian_norm):
    """Error constants of the model of an affinely scaled objective.

    Given constants (kappa_g, kappa_f) certifying the untransformed model
    on this geometry, returns the constants certifying the model of
    C1 f + C2:

        kg' = |C1| kg + |C1-1| (5 sqrt(m-1)/2) ||Lhat^+|| (mu + ||H~||)
        kf' = |C1| kf + |C1-1| ((5 sqrt(m-1)/2) ||Lhat^+|| + 1/2) (mu + ||H~||)

    with Lhat the displacement rows from the incumbent scaled by 1/delta.
    """
    x_c = iset.points[iset.opt_index]
    rows = np.delete(iset.points, iset.opt_index, axis=0) - x_c
    dist = np.linalg.norm(iset.points - x_c, axis=1)
    if dist.max() > delta * (1.0 + 1e-9):
        raise ValueError(
            f"points leave the delta ball about the center (max dist {dist.max():g})"
        )
    l_hat = rows / delta
    svals = scipy.linalg.svdvals(l_hat)
    if svals.size < iset.n or svals[iset.n - 1] <= RANK_RTOL * max(svals[0], 1e-300):
        raise PoisednessError("displacement matrix is rank deficient")
    pinv_norm = 1.0 / svals[iset.n - 1]
    m = iset.m
    spread = 2.5 * np.sqrt(m - 1.0) * pinv_norm
    bulk = mu_alpha + qtilde_hessian_norm
    kappa_g_hat = abs(c1) * kappa_g + abs(c1 - 1.0) * spread * bulk
    kappa_f_hat = abs(c1) * kappa_f + abs(c1 - 1.0) * (spread + 0.5) * bulk
    return FullyLinearConstants(
        kappa_g_hat=float(kappa_g_hat),
        kappa_f_hat=float(kappa_f_hat),
        m=m,
        pinv_norm=float(pinv_norm),
        mu_alpha=float(mu_alpha),
        qtilde_hessian_norm=float(qtilde_hessian_norm),
        kappa_g=float(kappa_g),
        kappa_f=float(kappa_f),
        c1=float(c1),
    )
