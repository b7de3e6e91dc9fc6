"""Residual construction and the updating quadratic model.

The residual vector is where transformed outputs enter the method: when
point t of the set has been replaced by a new point, the update solves
for the increment D with

    D(x_i)    = f_k(x_i) - f_{k-1}(x_i)      for retained points,
    D(x_new)  = f_k(x_new) - Q_{k-1}(x_new),

so re-queried values absorb the step-to-step change of the output map.
``plain`` mode zeroes the retained entries instead, reproducing the
classical updating formula that ignores re-queried values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kkt_system
from .quad_model import QuadraticModel, from_kkt_solution

MODES = ("trans", "plain")


@dataclass(frozen=True)
class UpdateInputs:
    """Everything one model update needs.

    ``new_values`` is the fresh batch on the set (which already holds
    x_new at slot ``t``); ``prev_values`` is the previous batch on the
    retained points, with the stale entry at slot ``t`` ignored.
    """

    prev_model: QuadraticModel
    set: kkt_system.InterpolationSet
    new_values: np.ndarray
    prev_values: np.ndarray
    t: int
    mode: str = "trans"

    def __post_init__(self):
        m = self.set.m
        if not 0 <= self.t < m:
            raise ValueError(f"replacement index {self.t} out of range [0, {m})")
        new_values = np.asarray(self.new_values, dtype=float)
        prev_values = np.asarray(self.prev_values, dtype=float)
        if new_values.shape != (m,) or prev_values.shape != (m,):
            raise ValueError(
                f"value vectors must have shape ({m},), got "
                f"{new_values.shape} and {prev_values.shape}"
            )
        if not np.all(np.isfinite(new_values)):
            raise ValueError("new_values contain NaN or Inf")
        retained = np.delete(prev_values, self.t)
        if not np.all(np.isfinite(retained)):
            raise ValueError("prev_values contain NaN or Inf at a retained slot")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.prev_model.n != self.set.n:
            raise ValueError("prev_model dimension does not match the set")
        object.__setattr__(self, "new_values", new_values)
        object.__setattr__(self, "prev_values", prev_values)


def build_residual(inputs):
    """The right-hand-side vector of the update system."""
    if inputs.mode == "trans":
        r = inputs.new_values - inputs.prev_values
    else:
        r = np.zeros(inputs.set.m)
    x_new = inputs.set.points[inputs.t]
    r[inputs.t] = inputs.new_values[inputs.t] - inputs.prev_model(x_new)
    return r


def update(inputs, sigma=0.0):
    """Q_k = Q_{k-1} + D with D the least-curvature-change interpolant."""
    sys = kkt_system.assemble(inputs.set, sigma)
    sol = kkt_system.solve(sys, build_residual(inputs))
    return inputs.prev_model + from_kkt_solution(sol, inputs.set)


def updating_model(base_model, iset, values, sigma=0.0):
    """Model of ``values`` on the set that least changes ``base_model``.

    This is the full-interpolation form used by the analysis helpers: the
    residual is values - base_model at every point, equivalent to an
    update whose previous values were the base model's own.
    """
    return kkt_system.mfn_interpolant(iset, values, base_model, sigma)
