"""Explicit quadratic model functions.

A model is stored as (base point, constant, gradient, dense symmetric
Hessian) and evaluates as

    Q(x) = c + (x - x0)' g + 1/2 (x - x0)' H (x - x0).

Models are immutable values; arithmetic returns new instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_point(x, n=None):
    """Validate and return ``x`` as a finite 1-d float array.

    Raises ValueError on non-finite entries and on a dimension mismatch
    when ``n`` is given.
    """
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"point must be a 1-d vector, got shape {p.shape}")
    if n is not None and p.shape[0] != n:
        raise ValueError(f"point has dimension {p.shape[0]}, expected {n}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point contains NaN or Inf")
    return p


@dataclass(frozen=True)
class KktSolution:
    """Parameters (lambda, c, g) of an update increment.

    For the unweighted variant the multipliers satisfy
    ``sum(lam) = 0`` and ``sum(lam_j (x_j - x0)) = 0``; with a positive
    gradient weight the second sum equals ``(sigma/2) g`` instead.
    """

    lam: np.ndarray
    c: float
    g: np.ndarray

    @property
    def m(self):
        return self.lam.shape[0]

    @property
    def n(self):
        return self.g.shape[0]


@dataclass(frozen=True, init=False)
class QuadraticModel:
    """Quadratic function in explicit (constant, gradient, Hessian) form."""

    base: np.ndarray
    constant: float
    gradient: np.ndarray
    hessian: np.ndarray

    def __init__(self, base, constant, gradient, hessian):
        base = as_point(base)
        n = base.shape[0]
        gradient = as_point(gradient, n)
        hessian = np.asarray(hessian, dtype=float)
        if hessian.shape != (n, n):
            raise ValueError(f"hessian shape {hessian.shape} != ({n}, {n})")
        if not np.all(np.isfinite(hessian)):
            raise ValueError("hessian contains NaN or Inf")
        scale = np.abs(hessian).max()
        if scale > 0 and np.abs(hessian - hessian.T).max() > 1e-14 * scale:
            raise ValueError("hessian is not symmetric to working precision")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "constant", float(constant))
        object.__setattr__(self, "gradient", gradient)
        object.__setattr__(self, "hessian", 0.5 * (hessian + hessian.T))

    @property
    def n(self):
        return self.base.shape[0]

    @classmethod
    def zero(cls, n):
        """The identically-zero model in dimension ``n``."""
        return cls(np.zeros(n), 0.0, np.zeros(n), np.zeros((n, n)))

    def __call__(self, x):
        d = as_point(x, self.n) - self.base
        return float(self.constant + d @ self.gradient + 0.5 * d @ self.hessian @ d)

    def gradient_at(self, x):
        """Gradient vector g + H (x - x0)."""
        d = as_point(x, self.n) - self.base
        return self.gradient + self.hessian @ d

    def rebase(self, new_base):
        """Re-express the same quadratic about another base point."""
        new_base = as_point(new_base, self.n)
        s = new_base - self.base
        c = self.constant + s @ self.gradient + 0.5 * s @ self.hessian @ s
        g = self.gradient + self.hessian @ s
        return QuadraticModel(new_base, c, g, self.hessian)

    def __add__(self, other):
        if not isinstance(other, QuadraticModel):
            return NotImplemented
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
        b = other.rebase(self.base)
        return QuadraticModel(
            self.base,
            self.constant + b.constant,
            self.gradient + b.gradient,
            self.hessian + b.hessian,
        )

    def __mul__(self, alpha):
        alpha = float(alpha)
        return QuadraticModel(
            self.base, alpha * self.constant, alpha * self.gradient, alpha * self.hessian
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        if not isinstance(other, QuadraticModel):
            return NotImplemented
        return self + (-other)

    def shift(self, offset):
        """The model plus a constant."""
        return QuadraticModel(
            self.base, self.constant + float(offset), self.gradient, self.hessian
        )

    def coefficients_at(self, base):
        """(constant, gradient, hessian) of the model expressed about ``base``."""
        r = self.rebase(base)
        return r.constant, r.gradient, r.hessian

    def max_coefficient_difference(self, other):
        """Largest entrywise coefficient gap after expressing both about one base."""
        c1, g1, h1 = self.coefficients_at(self.base)
        c2, g2, h2 = other.coefficients_at(self.base)
        return max(abs(c1 - c2), np.abs(g1 - g2).max(), np.abs(h1 - h2).max())


def from_kkt_solution(sol, iset):
    """Build the explicit increment quadratic from KKT parameters.

    The increment has constant ``c`` and gradient ``g`` at the set's base
    point, and Hessian ``sum_j lam_j (x_j - x0)(x_j - x0)'``.
    """
    if sol.m != iset.m or sol.n != iset.n:
        raise ValueError(
            f"solution dims ({sol.m}, {sol.n}) do not match set ({iset.m}, {iset.n})"
        )
    y = iset.points - iset.base
    hess = (y.T * sol.lam) @ y
    hess = 0.5 * (hess + hess.T)
    return QuadraticModel(iset.base, sol.c, sol.g, hess)
