"""The full trust-region loop for step-transformed black boxes.

One iteration: solve the subproblem at the incumbent, replace the worst
point with the trial point, re-query the whole set as one batch (so every
value carries the step's single transformation), accept within-batch,
update the model in the configured mode, and manage the radii.  Geometry
repair replaces far points or un-poised points using Lagrange-polynomial
maximization and consumes its own batch step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kkt_system, trust_region
from .exceptions import PoisednessError
from .kkt_system import InterpolationSet
from .model_update import MODES, UpdateInputs, build_residual, from_kkt_solution
from .quad_model import QuadraticModel, as_point

DROP_RULES = ("distance", "value")

# A point farther than this many radii from the incumbent is "far".
FAR_RADIUS_FACTOR = 2.0
# Rebase the model and set when the incumbent drifts this far from the base.
REBASE_FACTOR = 10.0
# Consecutive geometry failures before giving up.
MAX_CONSECUTIVE_FAILURES = 3


@dataclass(frozen=True)
class SolverConfig:
    n: int
    m: int = 0  # 0 means the default 2n+1
    rho_beg: float = 1e-1
    rho_end: float = 1e-8
    max_nf: int = 10000
    sigma: float = 0.0
    mode: str = "trans"
    drop_rule: str = "distance"
    lambda_poisedness: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.m == 0:
            object.__setattr__(self, "m", 2 * self.n + 1)
        n, m = self.n, self.m
        if not (n + 2 <= m <= (n + 1) * (n + 2) // 2):
            raise ValueError(
                f"m={m} outside [n+2, (n+1)(n+2)/2] = [{n + 2}, {(n + 1) * (n + 2) // 2}]"
            )
        if not 0 < self.rho_end <= self.rho_beg:
            raise ValueError("need 0 < rho_end <= rho_beg")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.drop_rule not in DROP_RULES:
            raise ValueError(f"drop_rule must be one of {DROP_RULES}")
        if self.max_nf < self.m:
            raise ValueError("max_nf smaller than one batch")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    nf: int
    delta: float
    rho: float
    step_norm: float
    ratio: float
    accepted: bool
    drop_index: int
    f_best_true: float
    kind: str = "trial"  # trial | improve | init


@dataclass
class SolverResult:
    x_best: np.ndarray
    f_best_true: float
    history: list[IterationRecord]
    termination: str  # rho_converged | max_nf | stalled
    nf: int
    iterations: int
    config: SolverConfig = None

    def write_csv(self, path):
        write_run_csv(self.history, path)


def write_run_csv(history, path):
    """Per-iteration run record with a fixed column schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "iteration",
                "nf",
                "delta",
                "rho",
                "step_norm",
                "ratio",
                "accepted",
                "drop_index",
                "f_best_true",
            ]
        )
        for rec in history:
            writer.writerow(
                [
                    rec.iteration,
                    rec.nf,
                    repr(rec.delta),
                    repr(rec.rho),
                    repr(rec.step_norm),
                    repr(rec.ratio),
                    int(rec.accepted),
                    rec.drop_index,
                    repr(rec.f_best_true),
                ]
            )


def initial_points(x_start, m, rho_beg):
    """Coordinate pattern x, x + rho e_i, x - rho e_i, then paired offsets.

    The first 2n+1 points follow the plus-then-minus coordinate pattern,
    truncated for m < 2n+1; any remainder uses two-coordinate offsets
    x + rho (e_p + e_q) in lexicographic pair order.
    """
    x_start = as_point(x_start)
    n = x_start.shape[0]
    pts = [x_start.copy()]
    for i in range(min(n, m - 1)):
        e = np.zeros(n)
        e[i] = rho_beg
        pts.append(x_start + e)
    for i in range(min(n, m - 1 - n)):
        e = np.zeros(n)
        e[i] = rho_beg
        pts.append(x_start - e)
    if len(pts) < m:
        for p in range(n):
            for q in range(p + 1, n):
                if len(pts) >= m:
                    break
                e = np.zeros(n)
                e[p] = rho_beg
                e[q] = rho_beg
                pts.append(x_start + e)
            if len(pts) >= m:
                break
    return np.array(pts)


def initialize(config, oracle, x_start):
    """Query the initial pattern at step 1 and build the first model."""
    x_start = as_point(x_start, config.n)
    pts = initial_points(x_start, config.m, config.rho_beg)
    values = oracle.query_batch(pts, step=1)
    iset = InterpolationSet(
        pts, x_start, values, opt_index=int(np.argmin(values)), step_tag=1
    )
    sys = kkt_system.assemble(iset, config.sigma)
    sol = kkt_system.solve(sys, values)
    model = from_kkt_solution(sol, iset)
    return iset, model


@dataclass(frozen=True)
class GeometryProposal:
    kind: str  # far_point | poisedness | perturbation | poised
    drop_index: int = -1
    point: np.ndarray = None

    @property
    def actionable(self):
        return self.kind != "poised"


def _abs_maximizer(sys, j, center, delta):
    """Point maximizing |l_j| over the ball, via two subproblem solves."""
    l_j = kkt_system.lagrange_polynomial(sys, j)
    best_point, best_val = None, -1.0
    for signed in (l_j, -1.0 * l_j):
        sub = trust_region.solve_subproblem(-1.0 * signed, center, delta)
        cand = center + sub.d
        val = abs(l_j(cand))
        if val > best_val:
            best_point, best_val = cand, val
    return best_point, best_val


def _perturbation_proposal(iset, delta, cycle):
    """Replace one member of the closest pair with a coordinate offset."""
    m, n = iset.m, iset.n
    best = (np.inf, None)
    for i in range(m):
        for j in range(i + 1, m):
            d = np.linalg.norm(iset.points[i] - iset.points[j])
            if d < best[0]:
                best = (d, (i, j))
    i, j = best[1]
    x_opt = iset.x_opt
    if i == iset.opt_index:
        drop = j
    elif j == iset.opt_index:
        drop = i
    else:
        di = np.linalg.norm(iset.points[i] - x_opt)
        dj = np.linalg.norm(iset.points[j] - x_opt)
        drop = i if di >= dj else j
    e = np.zeros(n)
    e[cycle % n] = delta
    return GeometryProposal("perturbation", drop, x_opt + e)


def improve_geometry(iset, sys, delta, lambda_max=100.0, perturb_cycle=0):
    """Propose a replacement that repairs the interpolation geometry.

    Far points (outside the 2 delta ball about the incumbent) are retired
    first; otherwise the point whose Lagrange polynomial exceeds
    ``lambda_max`` on the delta ball is moved to that polynomial's
    maximizer.  A well-poised set yields a non-actionable proposal.
    """
    if sys is None:
        return _perturbation_proposal(iset, delta, perturb_cycle)
    x_opt = iset.x_opt
    dist = np.linalg.norm(iset.points - x_opt, axis=1)
    far = dist > FAR_RADIUS_FACTOR * delta
    try:
        if far.any():
            t = int(np.argmax(dist))
            point, _ = _abs_maximizer(sys, t, x_opt, delta)
            return GeometryProposal("far_point", t, point)
        worst_j, worst_val, worst_point = -1, -1.0, None
        for j in range(iset.m):
            if j == iset.opt_index:
                continue
            point, val = _abs_maximizer(sys, j, x_opt, delta)
            if val > worst_val:
                worst_j, worst_val, worst_point = j, val, point
        if worst_val > lambda_max:
            return GeometryProposal("poisedness", worst_j, worst_point)
        return GeometryProposal("poised")
    except PoisednessError:
        return _perturbation_proposal(iset, delta, perturb_cycle)


def _drop_candidates(iset, x_new, rule, sys=None, delta=None):
    """Replacement slots for a trial step, best first; never the incumbent.

    Distance rule: the swap-stability factor sigma of each slot is
    weighted by the fourth power of relative staleness, so far points go
    first while near-singular swaps are avoided.  Falls back to plain
    distance when the current system is unavailable.
    """
    dist = np.linalg.norm(iset.points - x_new, axis=1)
    if rule == "distance":
        score = dist.copy()
        if sys is not None:
            radius = delta if delta else max(dist.max(), 1e-300)
            try:
                sigma = np.abs(sys.replacement_denominators(x_new))
                score = sigma * np.maximum(dist / max(radius, 1e-300), 1.0) ** 4
            except PoisednessError:
                pass
    else:
        score = iset.values.copy()
    score[iset.opt_index] = -np.inf
    return [int(j) for j in np.argsort(score)[::-1] if j != iset.opt_index]


def minimize(config, oracle, x_start):
    """Run the loop until the resolution bound, budget, or a stall."""
    iset, model = initialize(config, oracle, x_start)
    state = trust_region.RadiusState.initial(config.rho_beg, config.rho_end)
    step = 1
    history = []
    failures = 0
    termination = None
    iteration = 0
    f_true_opt = float(oracle.log.batches[-1].true_values[iset.opt_index])
    history.append(
        IterationRecord(0, oracle.nf, state.delta, state.rho, np.nan, np.nan, True,
                        -1, f_true_opt, kind="init")
    )

    def run_batch(new_set, t, kind, step_norm=np.nan, predicted=np.nan):
        """Query a replaced set, update the model, refresh bookkeeping.

        In plain mode the re-queried values are discarded: the set keeps
        the value each point had when it entered, and only slot t sees
        this step's output, reproducing the classical method's view.
        """
        nonlocal iset, model, step, f_true_opt, failures, iteration
        fresh = oracle.query_batch(new_set.points, step + 1)
        step += 1
        prev_values = iset.values
        if config.mode == "plain":
            visible = prev_values.copy()
            visible[t] = fresh[t]
        else:
            visible = fresh
        old_opt = iset.opt_index
        if visible[t] < visible[old_opt] and visible[t] <= visible.min():
            new_opt = t
        elif kind == "improve":
            new_opt = int(np.argmin(visible))
            if visible[new_opt] >= visible[old_opt]:
                new_opt = old_opt
        else:
            new_opt = old_opt
        accepted = new_opt == t
        ratio = np.nan
        if np.isfinite(predicted) and predicted > 0:
            ratio = (visible[old_opt] - visible[t]) / predicted
        updated = new_set.with_values(visible, step, opt_index=new_opt)
        inputs = UpdateInputs(
            prev_model=model,
            set=updated,
            new_values=visible,
            prev_values=prev_values,
            t=t,
            mode=config.mode,
        )
        sys = kkt_system.assemble(updated, config.sigma)
        sol = kkt_system.solve(sys, build_residual(inputs))
        model = model + from_kkt_solution(sol, updated)
        iset = updated
        failures = 0
        f_true_opt = float(oracle.log.batches[-1].true_values[new_opt])
        iteration += 1
        history.append(
            IterationRecord(iteration, oracle.nf, state.delta, state.rho, step_norm,
                            ratio, accepted, t, f_true_opt, kind=kind)
        )
        return ratio, accepted

    def try_improvement():
        """Execute a geometry proposal; returns True if one was actionable."""
        nonlocal failures, termination
        try:
            sys = kkt_system.assemble(iset, config.sigma)
        except PoisednessError:
            sys = None
        proposal = improve_geometry(
            iset, sys, state.delta, config.lambda_poisedness, perturb_cycle=step
        )
        if not proposal.actionable:
            return False
        new_set = iset.with_point(proposal.drop_index, proposal.point)
        try:
            kkt_system.assemble(new_set, config.sigma)
        except PoisednessError:
            failures += 1
            return True
        if oracle.nf + config.m > config.max_nf:
            termination = "max_nf"
            return True
        try:
            run_batch(new_set, proposal.drop_index, kind="improve")
        except PoisednessError:
            failures += 1
        return True

    def far_points_exist(factor=FAR_RADIUS_FACTOR):
        dist = np.linalg.norm(iset.points - iset.x_opt, axis=1)
        return dist.max() > factor * state.delta

    def rho_step(step_norm):
        """Improvement first, then shrink the resolution bound or stop."""
        nonlocal state, termination
        if try_improvement():
            return
        if termination is not None:
            return
        decision, state = trust_region.check_rho_termination(state, step_norm)
        if decision == "terminate":
            termination = "rho_converged"

    floor_misses = 0  # consecutive poor-ratio trials with delta at the rho floor

    while termination is None:
        if np.linalg.norm(iset.x_opt - iset.base) >= REBASE_FACTOR * state.delta:
            iset = iset.with_base(iset.x_opt)
            model = model.rebase(iset.x_opt)

        if failures >= MAX_CONSECUTIVE_FAILURES:
            termination = "stalled"
            break

        sub = trust_region.solve_subproblem(model, iset.x_opt, state.delta)

        # Strictly-inside check with slack: a boundary step at the rho
        # floor computes as rho +- one ulp and is a real step, not a
        # below-resolution one.
        if sub.step_norm < state.rho * (1.0 - 1e-9):
            rho_step(sub.step_norm)
            continue

        try:
            current_sys = kkt_system.assemble(iset, config.sigma)
        except PoisednessError:
            current_sys = None
        x_new = iset.x_opt + sub.d
        candidates = _drop_candidates(iset, x_new, config.drop_rule, current_sys,
                                      state.delta)
        trial_set = None
        for t in candidates:
            attempt = iset.with_point(t, x_new)
            try:
                kkt_system.assemble(attempt, config.sigma)
            except PoisednessError:
                continue
            trial_set = attempt
            break
        if trial_set is None:
            failures += 1
            try_improvement()
            continue
        if oracle.nf + config.m > config.max_nf:
            termination = "max_nf"
            break
        try:
            ratio, accepted = run_batch(
                trial_set, t, kind="trial",
                step_norm=sub.step_norm, predicted=sub.predicted_reduction,
            )
        except PoisednessError:
            failures += 1
            try_improvement()
            continue
        if oracle.nf + config.m > config.max_nf:
            termination = "max_nf"
            continue
        if np.isfinite(ratio) and ratio >= trust_region.ETA_BAD:
            state = trust_region.update_radius(state, ratio, sub.step_norm)
            floor_misses = 0
            continue
        # Poor agreement.  Stale geometry is repaired before the radius
        # takes the blame; accepted steps tolerate twice the stray
        # distance since the drop rule is already retiring laggards.
        if far_points_exist(2 * FAR_RADIUS_FACTOR if accepted else FAR_RADIUS_FACTOR):
            try_improvement()
            continue
        if far_points_exist():
            continue
        at_floor = state.delta <= state.rho * (1.0 + 1e-12)
        if np.isfinite(ratio):
            state = trust_region.update_radius(state, ratio, sub.step_norm)
        if at_floor:
            # Demand two consecutive ineffective floor trials before
            # declaring the resolution exhausted; a single miss can be a
            # transformation artifact rather than true stagnation.
            floor_misses += 1
            if floor_misses >= 2:
                floor_misses = 0
                rho_step(0.0)

    return SolverResult(
        x_best=iset.x_opt.copy(),
        f_best_true=f_true_opt,
        history=history,
        termination=termination,
        nf=oracle.nf,
        iterations=iteration,
        config=config,
    )
