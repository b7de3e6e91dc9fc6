"""Interpolation geometry and the saddle-point system behind model updates.

The system couples the squared-inner-product block

    A_ij = 1/2 ((x_i - x0)'(x_j - x0))^2

with the affine moment rows X = [1 ... 1; x_1-x0 ... x_m-x0].  Solving

    [A  X'] [lambda]   [r]
    [X  B ] [  c   ] = [0]
            [  g   ]

yields the parameters of the minimum-curvature-change increment; B is zero
for the plain variant and diag(0, -sigma/2 I) when the gradient change is
weighted by sigma > 0.

The system is assembled in coordinates scaled by the largest displacement
so the factorization's condition estimate measures geometry, not units;
the exposed ``matrix`` attribute is always the unscaled W.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .exceptions import PoisednessError
from .quad_model import KktSolution, QuadraticModel, as_point, from_kkt_solution

# Reciprocal condition estimate below this signals a non-poised set.
RCOND_FLOOR = 1e-12


@dataclass(frozen=True, init=False)
class InterpolationSet:
    """m sample points with base point and step-tagged function values."""

    points: np.ndarray  # (m, n)
    base: np.ndarray  # (n,)
    values: np.ndarray  # (m,) transformed values from step `step_tag`
    opt_index: int
    step_tag: int

    def __init__(self, points, base, values=None, opt_index=0, step_tag=0):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2:
            raise ValueError("points must be an (m, n) array")
        m, n = points.shape
        base = as_point(base, n)
        if values is None:
            values = np.full(m, np.nan)
        values = np.asarray(values, dtype=float)
        if values.shape != (m,):
            raise ValueError(f"values shape {values.shape} != ({m},)")
        if not (n + 1 <= m <= (n + 1) * (n + 2) // 2):
            raise ValueError(
                f"m={m} outside [n+1, (n+1)(n+2)/2] = [{n + 1}, {(n + 1) * (n + 2) // 2}]"
            )
        if not np.all(np.isfinite(points)):
            raise ValueError("points contain NaN or Inf")
        if not 0 <= opt_index < m:
            raise ValueError(f"opt_index {opt_index} out of range")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "opt_index", int(opt_index))
        object.__setattr__(self, "step_tag", int(step_tag))

    @property
    def m(self):
        return self.points.shape[0]

    @property
    def n(self):
        return self.points.shape[1]

    @property
    def x_opt(self):
        return self.points[self.opt_index]

    def displacements(self):
        return self.points - self.base

    def with_point(self, t, x_new):
        """Copy with slot ``t`` replaced; the stale value is blanked."""
        x_new = as_point(x_new, self.n)
        points = self.points.copy()
        points[t] = x_new
        values = self.values.copy()
        values[t] = np.nan
        return InterpolationSet(points, self.base, values, self.opt_index, self.step_tag)

    def with_values(self, values, step_tag, opt_index=None):
        """Copy holding a fresh batch of values."""
        if opt_index is None:
            opt_index = self.opt_index
        return InterpolationSet(self.points, self.base, values, opt_index, step_tag)

    def with_base(self, new_base):
        return InterpolationSet(
            self.points, new_base, self.values, self.opt_index, self.step_tag
        )


def _build_w(displacements, sigma):
    m, n = displacements.shape
    prod = displacements @ displacements.T
    w = np.zeros((m + n + 1, m + n + 1))
    w[:m, :m] = 0.5 * prod**2
    w[:m, m] = 1.0
    w[m, :m] = 1.0
    w[:m, m + 1 :] = displacements
    w[m + 1 :, :m] = displacements.T
    if sigma > 0:
        w[m + 1 :, m + 1 :] = -0.5 * sigma * np.eye(n)
    return w


@dataclass(frozen=True)
class KktSystem:
    """Assembled and factorized saddle-point system for one geometry."""

    matrix: np.ndarray  # unscaled W, (m+n+1) square
    sigma: float
    rcond: float
    set: InterpolationSet
    _scale: float = field(repr=False)
    _w_scaled: np.ndarray = field(repr=False)
    _ldl: tuple = field(repr=False)  # (lu, ipiv) from dsytrf on the scaled W
    _alpha: np.ndarray = field(repr=False, default=None)

    @property
    def m(self):
        return self.set.m

    @property
    def n(self):
        return self.set.n

    def _solve_raw(self, rhs_scaled):
        lu, ipiv = self._ldl
        x, info = lapack.dsytrs(lu, ipiv, rhs_scaled, lower=1)
        if info != 0:
            raise PoisednessError(f"dsytrs failed with info={info}", rcond=self.rcond)
        return x

    def solve(self, r):
        """Return the (lambda, c, g) solution for residual vector ``r``."""
        return solve(self, r)

    def _phi(self, x):
        x = as_point(x, self.n)
        yhat = (x - self.set.base) / self._scale
        dhat = self.set.displacements() / self._scale
        return np.concatenate([0.5 * (dhat @ yhat) ** 2, [1.0], yhat]), yhat

    def lagrange_values_at(self, x):
        """Values of all m Lagrange polynomials at ``x`` via one solve.

        Uses the symmetry of W: l_j(x) = phi(x)' W^{-1} e_j, so the whole
        vector is the first m entries of W^{-1} phi(x).
        """
        phi, _ = self._phi(x)
        return self._solve_raw(phi)[: self.m]

    def lambda_block_diagonal(self):
        """Diagonal of the multiplier block of W^{-1} (cached)."""
        if self._alpha is None:
            size = self.m + self.n + 1
            rhs = np.zeros((size, self.m))
            rhs[: self.m, : self.m] = np.eye(self.m)
            sol = self._solve_raw(rhs)
            object.__setattr__(self, "_alpha", np.diag(sol[: self.m, : self.m]).copy())
        return self._alpha

    def replacement_denominators(self, x):
        """Stability factor of swapping each point for ``x``.

        sigma_t = alpha_t beta + l_t(x)^2 with alpha the inverse's
        multiplier diagonal and beta the Schur complement of the incoming
        point; the swap keeps W invertible iff sigma_t is nonzero, so
        larger |sigma_t| means a safer replacement.
        """
        phi, yhat = self._phi(x)
        u = self._solve_raw(phi)
        tau = u[: self.m]
        beta = 0.5 * (yhat @ yhat) ** 2 - phi @ u
        return self.lambda_block_diagonal() * beta + tau**2


def assemble(iset, sigma=0.0):
    """Assemble and factorize the system for an interpolation set.

    Raises PoisednessError when the geometry is singular to working
    precision (duplicate points, rank-deficient displacements, or a
    reciprocal condition estimate below 1e-12).
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    y = iset.displacements()
    m = iset.m

    # Duplicate points make A and the X columns rank deficient.
    span = max(np.abs(y).max(), 1.0)
    for i in range(m):
        d = np.abs(iset.points[i + 1 :] - iset.points[i]).max(axis=1)
        if d.size and d.min() <= 1e-13 * span:
            raise PoisednessError(
                f"duplicate interpolation points (pair distance <= {1e-13 * span:g})"
            )

    scale = np.linalg.norm(y, axis=1).max()
    if scale <= 0:
        raise PoisednessError("all points coincide with the base point")
    w_scaled = _build_w(y / scale, sigma * scale**2)

    lu, ipiv, info = lapack.dsytrf(w_scaled, lower=1)
    if info > 0:
        raise PoisednessError(f"singular pivot in factorization (D[{info},{info}] = 0)")
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dsytrf")
    anorm = np.abs(w_scaled).sum(axis=0).max()
    rcond, info = lapack.dsycon(lu, ipiv, anorm, lower=1)
    if info != 0:
        raise ValueError(f"dsycon failed with info={info}")
    if rcond < RCOND_FLOOR:
        raise PoisednessError(
            f"interpolation set is not poised (rcond estimate {rcond:.3e})", rcond=rcond
        )

    return KktSystem(
        matrix=_build_w(y, sigma),
        sigma=float(sigma),
        rcond=float(rcond),
        set=iset,
        _scale=float(scale),
        _w_scaled=w_scaled,
        _ldl=(lu, ipiv),
    )


def solve(sys, r):
    """Solve for the increment parameters given residual vector ``r``.

    One step of iterative refinement keeps the residual within
    1e-9 (1 + max|r|); a larger residual raises PoisednessError.  The
    residual is measured on the displacement-scaled system, which
    coincides with the unscaled one when the largest displacement is 1.
    """
    r = np.asarray(r, dtype=float)
    m, n = sys.m, sys.n
    if r.shape != (m,):
        raise ValueError(f"residual vector shape {r.shape} != ({m},)")
    if not np.all(np.isfinite(r)):
        raise ValueError("residual vector contains NaN or Inf")

    s = sys._scale
    w = sys._w_scaled
    rhs = np.concatenate([r, np.zeros(n + 1)])
    tol = 1e-9 * (1.0 + np.abs(r).max())
    z = sys._solve_raw(rhs)
    resid = np.abs(w @ z - rhs).max()
    for _ in range(4):
        if np.isfinite(resid) and resid <= 0.01 * tol:
            break
        z_new = z + sys._solve_raw(rhs - w @ z)
        resid_new = np.abs(w @ z_new - rhs).max()
        if not resid_new < resid:
            break
        z, resid = z_new, resid_new

    if not np.isfinite(resid) or resid > tol:
        raise PoisednessError(
            f"solve residual {resid:.3e} exceeds {tol:.3e}", rcond=sys.rcond
        )

    lam = z[:m] / s**4
    c = z[m]
    g = z[m + 1 :] / s
    return KktSolution(lam=lam, c=float(c), g=g)


def lagrange_polynomial(sys, j):
    """The minimum-curvature quadratic with l_j(x_i) = delta_ij (0-based j)."""
    if not 0 <= j < sys.m:
        raise ValueError(f"index {j} out of range [0, {sys.m})")
    e = np.zeros(sys.m)
    e[j] = 1.0
    return from_kkt_solution(solve(sys, e), sys.set)


def mfn_interpolant(iset, values, base_model=None, sigma=0.0):
    """Least-curvature-change interpolant of ``values`` on the set.

    With ``base_model`` None the base is the zero quadratic, giving the
    plain minimum-curvature interpolant of the values.
    """
    values = np.asarray(values, dtype=float)
    if base_model is None:
        base_model = QuadraticModel.zero(iset.n)
    base_vals = np.array([base_model(p) for p in iset.points])
    sol = solve(assemble(iset, sigma), values - base_vals)
    return base_model + from_kkt_solution(sol, iset)
