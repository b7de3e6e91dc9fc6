"""Self-contained verification suites behind ``dfoto verify``.

Each suite returns (name, passed, detail) triples.  The checks mirror
the library's algebraic guarantees: the worked two-dimensional chain
with its known rational answers, the model-map identities under affine
changes of the objective or the base model, and the minimizer-preserving
value systems.
"""

from __future__ import annotations

import numpy as np

from . import kkt_system, transform_analysis, trust_region
from .exceptions import InconclusiveError, PoisednessError
from .kkt_system import InterpolationSet
from .quad_model import QuadraticModel, from_kkt_solution

SUITES = ("example21", "identities", "mop")


def _random_quadratic(rng, n, convex=False):
    a = rng.normal(size=(n, n))
    h = 0.5 * (a + a.T)
    if convex:
        h = a @ a.T + 0.5 * np.eye(n)
    return QuadraticModel(np.zeros(n), rng.normal(), rng.normal(size=n), h)


def _random_set(rng, n, m, spread=1.5):
    pts = rng.uniform(-spread, spread, size=(m, n))
    base = pts[0].copy()
    return InterpolationSet(pts, base, np.zeros(m), opt_index=0, step_tag=0)


def _model_of(values, iset, base_model, sigma=0.0):
    return kkt_system.mfn_interpolant(iset, values, base_model, sigma)


def example21_chain():
    """The worked n=2 chain with exact rational targets."""
    checks = []
    tol = 1e-10

    pts1 = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    values1 = np.array([1.0, 1.0, 1.0, 3.0, 3.0])
    set1 = InterpolationSet(pts1, pts1[0], values1, opt_index=0, step_tag=1)
    sys1 = kkt_system.assemble(set1)
    sol1 = kkt_system.solve(sys1, values1)
    ok = (
        np.abs(sol1.lam - [-4, 1, 1, 1, 1]).max() <= tol
        and abs(sol1.c - 1) <= tol
        and np.abs(sol1.g - [-1, -1]).max() <= tol
    )
    checks.append(("first multipliers (lambda, c, g)", ok, ""))

    q1 = from_kkt_solution(sol1, set1)
    c, g, h = q1.coefficients_at(np.zeros(2))
    ok = (
        abs(c - 1) <= tol
        and np.abs(g - [-1, -1]).max() <= tol
        and np.abs(h - 2 * np.eye(2)).max() <= tol
    )
    checks.append(("first model 1 - x - y + x^2 + y^2", ok, ""))

    x_new = np.array([0.5, 0.5])
    pts2 = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.5, 0.5]])
    set2 = InterpolationSet(
        pts2, x_new, np.array([1.0, 1.0, 1.0, 3.0, 0.25]), opt_index=4, step_tag=2
    )
    sys2 = kkt_system.assemble(set2)
    r2 = np.array([0.0, 0.0, 0.0, 0.0, 0.25 - q1(x_new)])
    sol2 = kkt_system.solve(sys2, r2)
    lam_target = np.array([2 / 3, 1.0, 4 / 3, -1 / 3, -8 / 3])
    ok = (
        np.abs(sol2.lam - lam_target).max() <= tol
        and abs(sol2.c + 0.25) <= tol
        and np.abs(sol2.g - [-1 / 3, -1 / 3]).max() <= tol
    )
    checks.append(("second multipliers (lambda+, c+, g+)", ok, ""))

    d_model = from_kkt_solution(sol2, set2)
    c, g, h = d_model.coefficients_at(np.zeros(2))
    h_target = np.array([[0.0, -2 / 3], [-2 / 3, 2 / 3]])
    ok = (
        abs(c) <= tol
        and np.abs(g - [0.0, -1 / 3]).max() <= tol
        and np.abs(h - h_target).max() <= tol
    )
    checks.append(("increment -(2/3)xy + (1/3)y^2 - (1/3)y", ok, ""))

    q2 = q1 + d_model
    c, g, h = q2.coefficients_at(np.zeros(2))
    h2_target = np.array([[2.0, -2 / 3], [-2 / 3, 8 / 3]])
    ok = (
        abs(c - 1) <= tol
        and np.abs(g - [-1.0, -4 / 3]).max() <= tol
        and np.abs(h - h2_target).max() <= tol
    )
    checks.append(("updated model coefficients", ok, ""))

    sub = trust_region.solve_subproblem(q2, x_new, 10.0)
    ok = (
        np.abs(sub.d - [5 / 22, 2 / 11]).max() <= tol
        and np.abs(x_new + sub.d - [8 / 11, 15 / 22]).max() <= tol
    )
    checks.append(("interior minimizer step (5/22, 2/11)", ok, ""))

    system = transform_analysis.build_mop_system(set2, q1, x_new, sub.d, 10.0)
    space = transform_analysis.solution_space(system)
    particular = np.array([0.0, 0.0, 0.0, 2.0, -0.75])
    directions = [
        np.array([40.0, 0.0, 0.0, 36.0, 33.0]),
        np.array([0.0, 20.0, 0.0, -108.0, 21.0]),
        np.array([0.0, 0.0, 8.0, 44.0, -7.0]),
    ]
    resid = np.abs(system.coefficient_matrix @ particular - system.offset).max()
    ok = (
        space.rank == 2
        and space.dimension == 3
        and resid <= tol
        and all(space.contains_direction(d, tol=1e-8) for d in directions)
    )
    checks.append(("preservation system and solution space", ok, ""))

    original = np.array([1.0, 1.0, 1.0, 3.0, 0.25])
    ok_orig, _ = transform_analysis.check_mop(system, original)
    ok_shift, _ = transform_analysis.check_mop(system, original + 7.0)
    ok_scaled, _ = transform_analysis.check_mop(system, 2.0 * original)
    checks.append(
        ("original and translated values preserve, doubled values do not",
         ok_orig and ok_shift and not ok_scaled, "")
    )
    return checks


def identity_checks(trials=50, seed=2024):
    """Affine model-map identities on random instances."""
    rng = np.random.default_rng(seed)
    worst = {"base_affine": 0.0, "linear_base": 0.0, "blend": 0.0, "reduced": 0.0}
    c1_pool = [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0]
    c2_pool = [-10.0, 0.0, 7.0]
    for trial in range(trials):
        n = int(rng.integers(2, 5))
        m_hi = min((n + 1) * (n + 2) // 2 - 1, 10)
        m = int(rng.integers(n + 2, m_hi + 1))
        iset = _random_set(rng, n, m)
        f = _random_quadratic(rng, n)
        q_alpha = _random_quadratic(rng, n)
        f_vals = np.array([f(p) for p in iset.points])
        c1 = c1_pool[trial % len(c1_pool)]
        c2 = c2_pool[trial % len(c2_pool)]

        m_f = _model_of(f_vals, iset, q_alpha)
        m_aff = _model_of(c1 * f_vals + c2, iset, q_alpha)
        q_tilde = transform_analysis.base_interpolant(iset, q_alpha)
        rhs = c1 * m_f + (c1 - 1.0) * (q_tilde - q_alpha)
        rhs = rhs.shift(c2)
        worst["base_affine"] = max(worst["base_affine"],
                                   m_aff.max_coefficient_difference(rhs))

        lin = QuadraticModel(np.zeros(n), rng.normal(), rng.normal(size=n),
                             np.zeros((n, n)))
        m_lin_aff = _model_of(c1 * f_vals + c2, iset, lin)
        rhs_lin = (c1 * _model_of(f_vals, iset, lin)).shift(c2)
        worst["linear_base"] = max(worst["linear_base"],
                                   m_lin_aff.max_coefficient_difference(rhs_lin))

        nu1, nu2 = float(rng.normal()), float(rng.normal())
        blended_base = (nu1 * q_alpha).shift(nu2)
        m_blend = _model_of(f_vals, iset, blended_base)
        m_zero = _model_of(f_vals, iset, None)
        rhs_blend = nu1 * m_f + (1.0 - nu1) * m_zero
        worst["blend"] = max(worst["blend"],
                             m_blend.max_coefficient_difference(rhs_blend))

        # Base interpolating f off one slot: scaled base against scaled data.
        t = int(rng.integers(m))
        reduced = InterpolationSet(
            np.delete(iset.points, t, axis=0), iset.base,
            np.delete(f_vals, t), opt_index=0, step_tag=0,
        )
        q_hat = _model_of(np.delete(f_vals, t), reduced, _random_quadratic(rng, n))
        tf_vals = c1 * f_vals + c2
        lhs = _model_of(tf_vals, iset, (c1 * q_hat).shift(c2))
        m0_tf = _model_of(tf_vals, iset, None)
        rhs_red = c1 * (_model_of(tf_vals, iset, q_hat) - m0_tf) + m0_tf
        worst["reduced"] = max(worst["reduced"],
                               lhs.max_coefficient_difference(rhs_red))

    tol = 1e-9
    return [
        ("affine data identity (base model fixed)", worst["base_affine"] <= tol,
         f"max dev {worst['base_affine']:.2e}"),
        ("affine data identity (linear base)", worst["linear_base"] <= tol,
         f"max dev {worst['linear_base']:.2e}"),
        ("affine base-model blend identity", worst["blend"] <= tol,
         f"max dev {worst['blend']:.2e}"),
        ("scaled interpolating-base identity", worst["reduced"] <= tol,
         f"max dev {worst['reduced']:.2e}"),
    ]


def mop_checks(trials=50, seed=7):
    """Preservation-system invariants on random strictly convex instances."""
    rng = np.random.default_rng(seed)
    identity_ok = 0
    translation_ok = 0
    scaled_fail = 0
    total = 0
    attempts = 0
    while total < trials and attempts < 50 * trials:
        attempts += 1
        n = int(rng.integers(2, 4))
        m_hi = min((n + 1) * (n + 2) // 2 - 1, 9)
        m = int(rng.integers(n + 2, m_hi + 1))
        iset = _random_set(rng, n, m, spread=1.0)
        f = _random_quadratic(rng, n, convex=True)
        q_alpha = _random_quadratic(rng, n, convex=True)
        f_vals = np.array([f(p) for p in iset.points])
        x_opt = iset.points[int(np.argmin(f_vals))]
        iset = InterpolationSet(iset.points, x_opt, f_vals,
                                opt_index=int(np.argmin(f_vals)), step_tag=0)
        try:
            model = _model_of(f_vals, iset, q_alpha)
            evals = np.linalg.eigvalsh(model.hessian)
            if evals[0] <= 1e-6:
                continue
            delta = 10.0
            sub = trust_region.solve_subproblem(model, x_opt, delta)
            if sub.on_boundary:
                continue
            system = transform_analysis.build_mop_system(
                iset, q_alpha, x_opt, sub.d, delta
            )
        except (PoisednessError, InconclusiveError):
            continue
        total += 1
        ok, _ = transform_analysis.check_mop(system, f_vals)
        identity_ok += ok
        ok, _ = transform_analysis.check_mop(system, f_vals + rng.normal() * 5.0)
        translation_ok += ok
        ok, _ = transform_analysis.check_mop(system, 2.0 * f_vals)
        scaled_fail += not ok
    return [
        ("original values satisfy their own system",
         identity_ok == total, f"{identity_ok}/{total}"),
        ("translated values satisfy the system",
         translation_ok == total, f"{translation_ok}/{total}"),
        ("doubled values fail in >= 95% of instances",
         scaled_fail >= 0.95 * total, f"{scaled_fail}/{total}"),
    ]


def run_suite(name):
    if name == "example21":
        return example21_chain()
    if name == "identities":
        return identity_checks()
    if name == "mop":
        return mop_checks()
    raise KeyError(f"unknown suite {name!r}; choices: {', '.join(SUITES)}")
