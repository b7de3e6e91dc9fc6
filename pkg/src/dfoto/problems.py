"""Unconstrained test objectives with standard published formulas.

Each problem carries its conventional starting point pattern and, where
the analytic optimum is known, the best value for profile normalization.
Dimensions are configurable; problems with block structure round the
requested dimension up to the nearest valid multiple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TestProblem:
    name: str
    n: int
    objective: object
    x_start: np.ndarray
    f_best_known: float = None  # None: normalize against the best found

    def __call__(self, x):
        return float(self.objective(np.asarray(x, dtype=float)))

    @property
    def f_start(self):
        return self(self.x_start)


def _quarticsphere(x):
    return np.sum(x**4) + np.sum(x**2)


def _arwhead(x):
    return np.sum((x[:-1] ** 2 + x[-1] ** 2) ** 2 - 4.0 * x[:-1] + 3.0)


def _chrosen(x):
    return np.sum(4.0 * (x[:-1] - x[1:] ** 2) ** 2 + (1.0 - x[1:]) ** 2)


def _rosenbrock(x):
    return np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2)


def _srosenbr(x):
    odd, even = x[0::2], x[1::2]
    return np.sum(100.0 * (even - odd**2) ** 2 + (1.0 - odd) ** 2)


def _woods(x):
    x1, x2, x3, x4 = x[0::4], x[1::4], x[2::4], x[3::4]
    return np.sum(
        100.0 * (x2 - x1**2) ** 2
        + (1.0 - x1) ** 2
        + 90.0 * (x4 - x3**2) ** 2
        + (1.0 - x3) ** 2
        + 10.0 * (x2 + x4 - 2.0) ** 2
        + 0.1 * (x2 - x4) ** 2
    )


def _powellsg(x):
    x1, x2, x3, x4 = x[0::4], x[1::4], x[2::4], x[3::4]
    return np.sum(
        (x1 + 10.0 * x2) ** 2
        + 5.0 * (x3 - x4) ** 2
        + (x2 - 2.0 * x3) ** 4
        + 10.0 * (x1 - x4) ** 4
    )


def _dqrtic(x):
    i = np.arange(1, x.shape[0] + 1, dtype=float)
    return np.sum((x - i) ** 4)


def _engval1(x):
    return np.sum((x[:-1] ** 2 + x[1:] ** 2) ** 2 - 4.0 * x[:-1] + 3.0)


def _freuroth(x):
    a, b = x[:-1], x[1:]
    r1 = (5.0 - b) * b**2 + a - 2.0 * b - 13.0
    r2 = (1.0 + b) * b**2 + a - 14.0 * b - 29.0
    return np.sum(r1**2 + r2**2)


def _liarwhd(x):
    return np.sum(4.0 * (x**2 - x[0]) ** 2 + (x - 1.0) ** 2)


def _nondia(x):
    return (x[0] - 1.0) ** 2 + np.sum(100.0 * (x[0] - x[:-1] ** 2) ** 2)


def _penalty1(x):
    return 1e-5 * np.sum((x - 1.0) ** 2) + (np.sum(x**2) - 0.25) ** 2


def _sphrpts(x):
    return np.sum(x**2)


def _tointgss(x):
    n = x.shape[0]
    a, b, c = x[:-2], x[1:-1], x[2:]
    t = c**2
    return np.sum((10.0 / (n + 2.0) + t) * (2.0 - np.exp(-((a - b) ** 2) / (0.1 + t))))


def _alternating(n, pattern):
    return np.array([pattern[i % len(pattern)] for i in range(n)], dtype=float)


def _round_up(n, block):
    return max(block, block * int(np.ceil(n / block)))


@dataclass(frozen=True)
class _Spec:
    fn: object
    start: object  # n -> x_start
    best: object  # n -> f_best_known or None
    block: int = 1
    min_n: int = 2


_SPECS = {
    "QUARTICSPHERE": _Spec(_quarticsphere, lambda n: np.full(n, 10.0), lambda n: 0.0),
    "ARWHEAD": _Spec(_arwhead, lambda n: np.ones(n), lambda n: 0.0),
    "CHROSEN": _Spec(_chrosen, lambda n: np.full(n, -1.0), lambda n: 0.0),
    "ROSENBROCK": _Spec(_rosenbrock, lambda n: _alternating(n, (-1.2, 1.0)), lambda n: 0.0),
    "SROSENBR": _Spec(_srosenbr, lambda n: _alternating(n, (-1.2, 1.0)), lambda n: 0.0, block=2),
    "WOODS": _Spec(_woods, lambda n: _alternating(n, (-3.0, -1.0)), lambda n: 0.0, block=4),
    "POWELLSG": _Spec(_powellsg, lambda n: _alternating(n, (3.0, -1.0, 0.0, 1.0)), lambda n: 0.0, block=4),
    "DQRTIC": _Spec(_dqrtic, lambda n: np.full(n, 2.0), lambda n: 0.0),
    "ENGVAL1": _Spec(_engval1, lambda n: np.full(n, 2.0), lambda n: None),
    "FREUROTH": _Spec(_freuroth, lambda n: _alternating(n, (0.5, -2.0)), lambda n: None),
    "LIARWHD": _Spec(_liarwhd, lambda n: np.full(n, 4.0), lambda n: 0.0),
    "NONDIA": _Spec(_nondia, lambda n: np.full(n, -1.0), lambda n: 0.0),
    "PENALTY1": _Spec(_penalty1, lambda n: np.arange(1.0, n + 1.0), lambda n: None),
    "SPHRPTS": _Spec(_sphrpts, lambda n: np.full(n, 3.0), lambda n: 0.0),
    "TOINTGSS": _Spec(_tointgss, lambda n: np.full(n, 3.0), lambda n: 10.0 * (n - 2.0) / (n + 2.0), min_n=3),
}

PROBLEM_NAMES = tuple(_SPECS)


def get_problem(name, n):
    """Build a problem instance; block-structured dimensions are rounded up."""
    key = name.upper()
    if key not in _SPECS:
        raise KeyError(f"unknown problem {name!r}; choices: {', '.join(PROBLEM_NAMES)}")
    spec = _SPECS[key]
    n = max(_round_up(n, spec.block), spec.min_n)
    if n < 2:
        raise ValueError("problems require n >= 2")
    return TestProblem(
        name=key,
        n=n,
        objective=spec.fn,
        x_start=spec.start(n),
        f_best_known=spec.best(n),
    )


def default_suite(n=10):
    """All fifteen problems at (approximately) the requested dimension."""
    return [get_problem(name, n) for name in PROBLEM_NAMES]
