"""Accuracy curves and performance/sensitivity profile machinery.

Progress on a problem is measured by

    acc(N) = (f(x^N) - f(x_0)) / (f_best - f(x_0)),   clamped to [0, 1],

with success at tolerance tau once acc >= 1 - tau.  Profiles compare
per-problem costs (evaluation counts, or their standard deviation across
coordinate permutations) against the best solver on each problem.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateProblemError


def f_acc(f_value, f_start, f_best):
    """Normalized progress of a single objective value, clamped to [0, 1]."""
    if not f_best < f_start:
        raise DegenerateProblemError(
            f"f_best {f_best:g} must be below f_start {f_start:g}"
        )
    return float(np.clip((f_value - f_start) / (f_best - f_start), 0.0, 1.0))


def _as_pairs(history):
    for rec in history:
        if hasattr(rec, "nf"):
            yield rec.nf, rec.f_best_true
        else:
            yield rec[0], rec[1]


def accuracy_curve(history, f_start, f_best):
    """(evaluation counts, accuracy values) along a run history."""
    nf, acc = [], []
    for count, value in _as_pairs(history):
        nf.append(count)
        acc.append(f_acc(value, f_start, f_best))
    return np.array(nf), np.array(acc)


def evaluations_to_accuracy(history, f_start, f_best, tau):
    """First evaluation count reaching accuracy tau, or None."""
    nf, acc = accuracy_curve(history, f_start, f_best)
    hits = np.nonzero(acc >= 1.0 - tau)[0]
    return int(nf[hits[0]]) if hits.size else None


@dataclass
class ProfileTable:
    """Per-(solver, problem) costs at one tolerance; inf marks failure."""

    tau: float
    costs: dict = field(default_factory=dict)  # solver -> problem -> cost

    def add(self, solver, problem, cost):
        self.costs.setdefault(solver, {})[problem] = (
            math.inf if cost is None else float(cost)
        )

    @property
    def solvers(self):
        return sorted(self.costs)

    @property
    def problems(self):
        names = set()
        for per_problem in self.costs.values():
            names.update(per_problem)
        return sorted(names)

    def ratios(self):
        """r_{s,p}: cost over the best solver's cost on that problem."""
        out = {}
        for p in self.problems:
            per = {s: self.costs.get(s, {}).get(p, math.inf) for s in self.solvers}
            best = min(per.values())
            for s, cost in per.items():
                if math.isinf(cost):
                    out[s, p] = math.inf
                elif cost == best:
                    out[s, p] = 1.0
                elif best == 0.0:
                    out[s, p] = math.inf
                else:
                    out[s, p] = cost / best
        return out

    def success_fraction(self, solver):
        per = self.costs.get(solver, {})
        total = len(self.problems)
        return sum(1 for p in self.problems if math.isfinite(per.get(p, math.inf))) / total


def merge_tables(tables):
    merged = ProfileTable(tau=tables[0].tau)
    for t in tables:
        if t.tau != merged.tau:
            raise ValueError("cannot merge tables with different tolerances")
        for s, per in t.costs.items():
            for p, cost in per.items():
                merged.add(s, p, cost)
    return merged


def performance_profile(tables):
    """Step curves pi_s(alpha) = fraction of problems with r_{s,p} <= alpha.

    Accepts one table or a list to merge.  Returns (alphas, {solver: pi})
    on a shared breakpoint grid starting at alpha = 1.
    """
    table = merge_tables(tables) if isinstance(tables, (list, tuple)) else tables
    ratios = table.ratios()
    problems = table.problems
    if not problems:
        raise ValueError("profile needs at least one problem")
    finite = sorted({r for r in ratios.values() if math.isfinite(r)})
    alphas = np.array([1.0] + [r for r in finite if r > 1.0])
    curves = {}
    for s in table.solvers:
        rs = np.array([ratios[s, p] for p in problems])
        curves[s] = np.array([(rs <= a).mean() for a in alphas])
    return alphas, curves


def write_profile_csv(path, tau, alphas, curves):
    """Columns (solver, tau, alpha, pi), deterministic ordering."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "tau", "alpha", "pi"])
        for solver in sorted(curves):
            for alpha, pi in zip(alphas, curves[solver]):
                writer.writerow([solver, repr(float(tau)), repr(float(alpha)), repr(float(pi))])


def random_permutations(n, count, seed):
    """Deterministic batch of permutations of range(n)."""
    rng = np.random.default_rng([int(seed), 0x5EED])
    return [rng.permutation(n) for _ in range(count)]


def permuted_problem(objective, x_start, perm):
    """min f(P x) with the start mapped so it represents the same point.

    ``perm`` holds the row pattern of P: (P x)_i = x[perm[i]].  The
    returned start is P' applied to the original start.
    """
    perm = np.asarray(perm)

    def permuted(x):
        return objective(np.asarray(x)[perm])

    inverse = np.argsort(perm)
    return permuted, np.asarray(x_start)[inverse]


def std_nf(costs):
    """Population mean and standard deviation of evaluation counts."""
    arr = np.asarray(costs, dtype=float)
    mean = arr.mean()
    return float(mean), float(np.sqrt(np.mean((arr - mean) ** 2)))
