"""Euclidean-ball trust-region subproblem and radius management.

The subproblem is solved nearly exactly: safeguarded Newton iteration on
the secular equation with Cholesky factorizations of H + mu I, and the
hard case handled through the smallest-eigenvalue direction.  Near-exact
solutions matter because interior minimizers are used as test vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .quad_model import as_point

# Radius control constants (NEWUOA-family practice).
ETA_BAD = 0.1
ETA_GOOD = 0.7
SHRINK = 0.5
GROW = 2.0
RHO_SHRINK = 10.0
BOUNDARY_FRACTION = 0.99

_BOUNDARY_TOL = 1e-11  # relative slack accepted on ||d|| = delta
_MAX_NEWTON = 100


@dataclass(frozen=True)
class SubproblemResult:
    d: np.ndarray
    predicted_reduction: float
    on_boundary: bool
    multiplier: float

    @property
    def step_norm(self):
        return float(np.linalg.norm(self.d))


@dataclass(frozen=True)
class RadiusState:
    delta: float
    rho: float
    rho_end: float
    delta_max: float

    def __post_init__(self):
        if not 0 < self.rho_end <= self.rho:
            raise ValueError("need 0 < rho_end <= rho")
        if self.delta < self.rho:
            raise ValueError("need delta >= rho")

    @classmethod
    def initial(cls, rho_beg, rho_end, delta_max=None):
        if delta_max is None:
            delta_max = 1e3 * rho_beg
        return cls(delta=rho_beg, rho=rho_beg, rho_end=rho_end, delta_max=delta_max)


def _reduction(g, h, d):
    return float(-(g @ d + 0.5 * d @ h @ d))


def solve_subproblem(model, center, delta):
    """Minimize the model over the ball of radius ``delta`` about ``center``.

    Returns the step, the predicted reduction Q(center) - Q(center + d),
    whether the step hit the boundary, and the ball multiplier mu with
    (H + mu I) d = -g.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    center = as_point(center, model.n)
    g = model.gradient_at(center)
    h = model.hessian
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise ValueError("model has non-finite coefficients")
    n = g.shape[0]

    # Interior stationary point, accepted when H is positive definite.
    try:
        cho = scipy.linalg.cho_factor(h, lower=True)
        d = scipy.linalg.cho_solve(cho, -g)
        if np.linalg.norm(d) <= delta * (1.0 + _BOUNDARY_TOL):
            return SubproblemResult(
                d=d,
                predicted_reduction=max(_reduction(g, h, d), 0.0),
                on_boundary=np.linalg.norm(d) >= delta * (1.0 - 1e-6),
                multiplier=0.0,
            )
    except np.linalg.LinAlgError:
        pass
    except scipy.linalg.LinAlgError:
        pass

    # Boundary solution: find mu > max(0, -lambda_min) with ||d(mu)|| = delta.
    evals, evecs = np.linalg.eigh(h)
    lam_min = evals[0]
    mu_floor = max(0.0, -lam_min)
    gnorm = np.linalg.norm(g)

    mu_lo = mu_floor
    mu_hi = max(mu_floor * 2, mu_floor + gnorm / delta + np.abs(h).sum(axis=0).max(), 1e-12)

    # Detect the hard case: g orthogonal to the lambda_min eigenspace and
    # the limiting solution strictly inside the ball.
    proj = evecs.T @ g
    near_min = np.abs(evals - lam_min) <= 1e-12 * max(1.0, abs(lam_min))
    hard_candidate = np.all(np.abs(proj[near_min]) <= 1e-11 * max(1.0, gnorm))
    if hard_candidate:
        safe = ~near_min
        d_perp = np.zeros(n)
        if np.any(safe):
            d_perp = -evecs[:, safe] @ (proj[safe] / (evals[safe] + mu_floor))
        norm_perp = np.linalg.norm(d_perp)
        if norm_perp <= delta:
            tau = np.sqrt(max(delta**2 - norm_perp**2, 0.0))
            v = evecs[:, 0]
            d = d_perp + tau * v
            red = _reduction(g, h, d)
            d_alt = d_perp - tau * v
            red_alt = _reduction(g, h, d_alt)
            if red_alt > red:
                d, red = d_alt, red_alt
            if red <= 0.0:
                # Flat direction with a stationary center: zero step is optimal.
                return SubproblemResult(
                    d=np.zeros(n),
                    predicted_reduction=0.0,
                    on_boundary=False,
                    multiplier=0.0,
                )
            return SubproblemResult(
                d=d,
                predicted_reduction=max(red, 0.0),
                on_boundary=True,
                multiplier=mu_floor,
            )

    # Safeguarded Newton on phi(mu) = 1/delta - 1/||d(mu)||.
    eps_floor = max(1e-14, 1e-10 * max(1.0, mu_floor))
    mu = float(np.clip(gnorm / delta - evals[-1], mu_floor + eps_floor, mu_hi))

    d = np.zeros(n)
    for _ in range(_MAX_NEWTON):
        try:
            cho = scipy.linalg.cho_factor(h + mu * np.eye(n), lower=True)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            mu_lo = max(mu_lo, mu)
            mu = 0.5 * (mu_lo + mu_hi)
            continue
        d = scipy.linalg.cho_solve(cho, -g)
        dnorm = np.linalg.norm(d)
        if abs(dnorm - delta) <= _BOUNDARY_TOL * delta:
            break
        if dnorm > delta:
            mu_lo = max(mu_lo, mu)
        else:
            mu_hi = min(mu_hi, mu)
        # Newton step from the secular reformulation (More-Sorensen).
        q = scipy.linalg.solve_triangular(cho[0], d, lower=True)
        qnorm = np.linalg.norm(q)
        if qnorm == 0.0:
            break
        mu_new = mu + (dnorm / qnorm) ** 2 * ((dnorm - delta) / delta)
        if not mu_lo < mu_new < mu_hi:
            mu_new = 0.5 * (mu_lo + mu_hi)
        if mu_new <= mu_floor:
            mu_new = mu_floor + 0.5 * (mu_hi - mu_floor)
        mu = mu_new

    return SubproblemResult(
        d=d,
        predicted_reduction=max(_reduction(g, h, d), 0.0),
        on_boundary=True,
        multiplier=float(mu),
    )


def update_radius(state, ratio, step_norm):
    """Shrink on poor agreement, grow on strong agreement at the boundary."""
    delta = state.delta
    if ratio < ETA_BAD:
        delta = max(state.rho, delta * SHRINK)
    elif ratio > ETA_GOOD and step_norm >= BOUNDARY_FRACTION * delta:
        delta = min(GROW * delta, state.delta_max)
    delta = max(delta, state.rho)
    return replace(state, delta=delta)


def check_rho_termination(state, step_norm):
    """Decide how to proceed when a step may be below the resolution bound.

    Returns (decision, new_state) with decision one of "continue",
    "shrink_rho", "terminate".
    """
    if step_norm >= state.rho:
        return "continue", state
    if state.rho > state.rho_end:
        new_rho = max(state.rho_end, state.rho / RHO_SHRINK)
        new_delta = max(new_rho, state.delta * SHRINK)
        return "shrink_rho", replace(state, rho=new_rho, delta=new_delta)
    return "terminate", state
