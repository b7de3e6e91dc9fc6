"""Batch query oracle with one shared per-step output transformation.

Each query step k evaluates a batch of points and returns T_k(f(z_i))
for all of them, with a single transformation drawn per step.  Draws are
keyed by (seed, step) so replays and parallel runs are reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EvaluationError, ProtocolError
from .quad_model import as_point

# gamma_k + 1 stays at least this far above zero when a halfwidth spec
# touches 1 (e.g. u_k = 1/k at k = 1).
_HALFWIDTH_CAP = 1.0 - 1e-12


def sample_laplace(b, rng, size=None):
    """Laplace(0, b) samples by inverse CDF.

    Draws u uniform on (-1/2, 1/2) and returns -b sign(u) ln(1 - 2|u|).
    """
    if b <= 0:
        raise ValueError(f"laplace scale must be positive, got {b}")
    u = rng.uniform(-0.5, 0.5, size=size)
    # u = -1/2 has probability 2^-53 but would map to -inf; nudge it inside.
    return -b * np.sign(u) * np.log1p(np.maximum(-2.0 * np.abs(u), -1.0 + 1e-16))


def sample_uniform(halfwidth, rng, size=None):
    """Uniform(-u, u) sample; the halfwidth must lie in (0, 1)."""
    if not 0.0 < halfwidth < 1.0:
        raise ValueError(f"uniform halfwidth must be in (0, 1), got {halfwidth}")
    return rng.uniform(-halfwidth, halfwidth, size=size)


@dataclass(frozen=True)
class Transformation:
    """Scalar map applied to every value of one query batch."""

    kind: str  # identity | affine | translation | callable
    a: float = 1.0
    b: float = 0.0
    fn: object = None

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def affine(cls, a, b):
        return cls("affine", a=float(a), b=float(b))

    @classmethod
    def translation(cls, b):
        return cls("translation", b=float(b))

    @classmethod
    def from_callable(cls, fn):
        return cls("callable", fn=fn)

    @property
    def positive_monotonic(self):
        """True when the map provably preserves strict order."""
        if self.kind in ("identity", "translation"):
            return True
        if self.kind == "affine":
            return self.a > 0
        return False

    def apply(self, values):
        values = np.asarray(values, dtype=float)
        if self.kind == "identity":
            return values.copy()
        if self.kind == "translation":
            return values + self.b
        if self.kind == "affine":
            return self.a * values + self.b
        return np.array([float(self.fn(v)) for v in values])


def _coefficient_fn(spec):
    """Turn a numeric constant or callable k -> value into a callable."""
    if callable(spec):
        return spec
    value = float(spec)
    return lambda k: value


class TransformationSchedule:
    """Map from query step k to the transformation T_k.

    ``stochastic_affine`` draws, once per step and cached for replay,

        gamma_k ~ U(-u_k, u_k),   eta_k ~ Lap(b_k),

    and returns the map y -> (gamma_k + 1) y + C eta_k.  A zero scale or
    halfwidth means that draw is deterministically zero; halfwidths that
    reach 1 are capped just below it so gamma_k + 1 stays positive.
    """

    def __init__(self, generator, seed=0, params=None):
        self._generator = generator
        self.seed = int(seed)
        self.params = params or {}
        self._cache = {}

    @classmethod
    def identity(cls, seed=0):
        return cls(lambda k, rng: Transformation.identity(), seed=seed)

    @classmethod
    def fixed_affine(cls, a, b, seed=0):
        t = Transformation.affine(a, b)
        return cls(lambda k, rng: t, seed=seed, params={"a": a, "b": b})

    @classmethod
    def stochastic_affine(cls, C, laplace_scale, uniform_halfwidth, seed=0):
        b_fn = _coefficient_fn(laplace_scale)
        u_fn = _coefficient_fn(uniform_halfwidth)
        C = float(C)

        def gen(k, rng):
            u_k = u_fn(k)
            b_k = b_fn(k)
            if u_k < 0 or b_k < 0:
                raise ValueError(f"negative schedule coefficient at step {k}")
            if u_k > 1.0:
                raise ValueError(f"uniform halfwidth {u_k} > 1 at step {k}")
            gamma = sample_uniform(min(u_k, _HALFWIDTH_CAP), rng) if u_k > 0 else 0.0
            eta = sample_laplace(b_k, rng) if b_k > 0 else 0.0
            return Transformation.affine(gamma + 1.0, C * eta)

        return cls(
            gen,
            seed=seed,
            params={"C": C, "laplace_scale": b_fn, "uniform_halfwidth": u_fn},
        )

    def transformation_at(self, k):
        """The (cached) transformation of step k."""
        if k not in self._cache:
            rng = np.random.default_rng([self.seed, int(k)])
            self._cache[k] = self._generator(k, rng)
        return self._cache[k]


@dataclass
class BatchRecord:
    step: int
    points: np.ndarray
    transformation: Transformation
    values: np.ndarray  # transformed values returned to the caller
    true_values: np.ndarray
    nf_after: int


@dataclass
class OracleLog:
    batches: list[BatchRecord] = field(default_factory=list)

    @property
    def nf(self):
        return self.batches[-1].nf_after if self.batches else 0

    @property
    def steps(self):
        return len(self.batches)

    def write_csv(self, path):
        """One row per evaluation: step, index, coords, true, transformed, a, b, NF."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["step", "point_index", "coords", "f_true", "f_transformed", "a", "b", "nf"]
            )
            for batch in self.batches:
                t = batch.transformation
                a = t.a if t.kind in ("identity", "affine", "translation") else math.nan
                b = t.b if t.kind in ("identity", "affine", "translation") else math.nan
                base_nf = batch.nf_after - len(batch.points)
                for i, point in enumerate(batch.points):
                    writer.writerow(
                        [
                            batch.step,
                            i,
                            ";".join(repr(c) for c in point),
                            repr(float(batch.true_values[i])),
                            repr(float(batch.values[i])),
                            repr(float(a)),
                            repr(float(b)),
                            base_nf + i + 1,
                        ]
                    )


class TransformedOracle:
    """Owns the true objective and serves step-transformed batch queries.

    The solver only ever sees transformed values; true values are kept in
    the log for harness-side reporting.
    """

    def __init__(self, objective, schedule=None, name=""):
        self.objective = objective
        self.schedule = schedule or TransformationSchedule.identity()
        self.name = name
        self.log = OracleLog()
        self.nf = 0
        self._last_step = 0

    def query_batch(self, points, step):
        """Evaluate all points under the single transformation of ``step``."""
        if len(points) == 0:
            raise ValueError("empty query batch")
        if step <= self._last_step:
            raise ProtocolError(
                f"query step {step} does not increase past {self._last_step}"
            )
        pts = np.array([as_point(p) for p in points])
        true_vals = np.empty(len(pts))
        for i, p in enumerate(pts):
            v = float(self.objective(p))
            if not math.isfinite(v):
                raise EvaluationError(f"objective returned {v}", point=p)
            true_vals[i] = v
        transformation = self.schedule.transformation_at(step)
        values = transformation.apply(true_vals)
        self.nf += len(pts)
        self._last_step = step
        self.log.batches.append(
            BatchRecord(
                step=step,
                points=pts,
                transformation=transformation,
                values=values,
                true_values=true_vals,
                nf_after=self.nf,
            )
        )
        return values
