import math

import numpy as np
import pytest

from helpers import all_problems, lasso_problem, plant, random_errors, random_mspec, random_state, template_problem
from pdfbf import fbf, prox
from pdfbf.errors import ShapeError, UnsupportedEvaluation
from pdfbf.linalg import LinearOperator, Space
from pdfbf.minimize import (
    MinBlock,
    MinimizationSpec,
    dual_objective,
    objectives,
    primal_objective,
    prox_step,
    solve_minimization,
    supports_objectives,
    to_problem_spec,
)
from pdfbf.operators import LipschitzOperator, ResolventOperator, zero_operator


def scalar_spec(f, g, l_star, h=None, z=0.0, r=0.0):
    return MinimizationSpec(
        np.array([z]), f, h or prox.smooth_zero(1), (MinBlock(g, l_star, LinearOperator.identity(1), np.array([r])),)
    )


def test_translation_box_and_squared_distance():
    b = np.array([0.3, 2.0])
    mspec = MinimizationSpec(
        np.zeros(2), prox.box(2, 0.0, 1.0), prox.squared_distance(2, 1.0, b),
        (MinBlock(prox.l1_norm(2), prox.smooth_zero(2), LinearOperator.identity(2)),),
    )
    spec = to_problem_spec(mspec)
    np.testing.assert_array_equal(spec.A.resolvent(0.5, np.array([-1.0, 3.0])), [0.0, 1.0])
    x = np.array([1.0, 1.0])
    np.testing.assert_allclose(spec.C(x), x - b)
    assert spec.blocks[0].nu == 0.0
    np.testing.assert_array_equal(spec.blocks[0].op.D_inv(np.ones(2)), 0.0)


def test_spec_validation():
    with pytest.raises(ShapeError):
        MinimizationSpec(np.zeros(2), prox.zero(2), prox.smooth_zero(3), (MinBlock(prox.zero(2), prox.smooth_zero(2), LinearOperator.identity(2)),))
    with pytest.raises(ShapeError):
        MinimizationSpec(np.zeros(2), prox.zero(2), prox.smooth_zero(2), ())
    with pytest.raises(ShapeError):
        MinimizationSpec(np.zeros(2), prox.zero(2), prox.smooth_zero(2), (MinBlock(prox.zero(3), prox.smooth_zero(3), LinearOperator.identity(2)),))


def test_prox_recursion_matches_solver_recursion():
    for seed in range(10):
        mspec = random_mspec(seed)
        spec = to_problem_spec(mspec)
        rng = np.random.default_rng(seed)
        gamma = fbf.StepPolicy.for_spec(spec).gamma(0)
        a = b = random_state(spec, rng)
        for n in range(50):
            err = random_errors(spec, rng, 0.1 / (n + 1)) if seed % 2 else None
            a, _ = prox_step(mspec, a, gamma, err)
            b, _ = fbf.expanded_step(spec, b, gamma, err)
        assert np.abs(a.to_block().flat() - b.to_block().flat()).max() <= 1e-12


def test_indicator_of_zero_reduction():
    """``l* = 0`` gives the same trace as ``D^{-1} = 0`` posed directly in operator form."""
    rng = np.random.default_rng(3)
    Lm = rng.standard_normal((3, 4))
    f, g, h = prox.l1_norm(4, 0.5), prox.box(3, -1.0, 1.0), prox.squared_distance(4, 2.0, rng.standard_normal(4))
    z, r = rng.standard_normal(4), rng.standard_normal(3)
    L = LinearOperator.from_matrix(Lm)
    mspec = MinimizationSpec(z, f, h, (MinBlock(g, prox.smooth_zero(3), L, r),))
    A = ResolventOperator(Space(4), f.prox)
    C = LipschitzOperator(Space(4), h.gradient, h.lipschitz_constant)
    B = ResolventOperator(Space(3), g.prox)  # inverse resolvent derived, not supplied
    op_spec = fbf.two_block_problem(A, C, B, zero_operator(Space(3)), L, z=z, r=r)
    r1 = solve_minimization(mspec, tol=0, max_iter=100, track_objectives=False).report
    r2 = fbf.solve(op_spec, stop=fbf.StoppingRule(tol=0, max_iter=100))
    assert np.abs(r1.final.to_block().flat() - r2.final.to_block().flat()).max() <= 1e-12


def test_primal_objective_examples():
    mspec = scalar_spec(prox.nonnegative(1), prox.l1_norm(1), prox.smooth_zero(1))
    assert primal_objective(mspec, [1.0]) == 1.0
    assert primal_objective(mspec, [-1.0]) == math.inf


def test_primal_objective_infconv_with_half_square_is_huber():
    mspec = scalar_spec(prox.zero(1), prox.l1_norm(1), prox.squared_distance(1))
    for x in (-2.0, -0.5, 0.0, 0.7, 3.0):
        huber = x * x / 2 if abs(x) <= 1 else abs(x) - 0.5
        assert primal_objective(mspec, [x]) == pytest.approx(huber, abs=1e-15)


def test_dual_objective_quadratic_data_fit_form():
    """``f = 0``, ``h = |.|^2/2``: the dual is ``½|z - sum L^*v|^2 + sum (g*(v) + <v, r>)``."""
    lp = template_problem("data_fit")
    mspec = lp.spec
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = [np.clip(rng.standard_normal(5), -1, 1), rng.standard_normal(3)]
        w = mspec.z - sum(b.L.apply_adjoint(vi) for b, vi in zip(mspec.blocks, v))
        ball_conj = np.linalg.norm(v[1])  # support function of the unit ball
        expected = 0.5 * w @ w + ball_conj + v[1] @ mspec.blocks[1].r
        assert dual_objective(mspec, v) == pytest.approx(expected, rel=1e-12)
    # the primal is the data-fit objective minus the constant |z|^2/2
    x = rng.standard_normal(5) * 0.1
    L2, r2 = mspec.blocks[1].L, mspec.blocks[1].r
    if np.linalg.norm(L2.apply(x) - r2) <= 1:
        data_fit = np.abs(x).sum() + 0.5 * np.sum((x - mspec.z) ** 2)
        assert primal_objective(mspec, x) == pytest.approx(data_fit - 0.5 * mspec.z @ mspec.z)


def test_dual_objective_at_zero():
    for name, lp in all_problems().items():
        mspec = lp.spec
        v0 = [np.zeros(b.space.dim) for b in mspec.blocks]
        expected = mspec.h.conjugate_infconv(mspec.f.conjugate_value, lambda g, y: prox.prox_conjugate(mspec.f, g, y), mspec.z)
        assert dual_objective(mspec, v0) == pytest.approx(expected), name


def test_weak_duality_on_samples():
    checked = 0
    for seed in range(300):
        mspec = random_mspec(seed)
        if not supports_objectives(mspec):
            continue
        rng = np.random.default_rng(seed)
        for _ in range(10):
            x = mspec.f.prox(1.0, 2 * rng.standard_normal(mspec.H.dim))
            v = [prox.prox_conjugate(b.g, 1.0, 2 * rng.standard_normal(b.space.dim)) for b in mspec.blocks]
            p, d = primal_objective(mspec, x), dual_objective(mspec, v)
            if math.isfinite(p) and math.isfinite(d):
                assert p + d >= -1e-9 * (1 + abs(p) + abs(d))
                checked += 1
    assert checked > 20


@pytest.mark.parametrize("name", ["classical_duality", "yosida", "tseng", "data_fit", "composite", "lasso"])
def test_gap_vanishes_on_templates(name):
    lp = all_problems()[name]
    res = solve_minimization(lp.spec, tol=1e-10)
    assert res.report.termination is fbf.Termination.ResidualTolerance
    assert 0 <= res.objectives.gap + 1e-12
    assert res.objectives.gap <= 1e-6


def test_planted_objectives_meet():
    for seed in range(15):
        mspec, x, v = plant(random_mspec(seed), seed)
        if not supports_objectives(mspec):
            continue
        rep = objectives(mspec, x, v)
        if math.isfinite(rep.primal_value) and math.isfinite(rep.dual_value):
            assert rep.gap == pytest.approx(0.0, abs=1e-8 * (1 + abs(rep.primal_value)))


def test_unsupported_objectives_degrade_report_only():
    mspec = MinimizationSpec(
        np.zeros(2), prox.zero(2), prox.smooth_quadratic([1.0, 2.0]),
        (MinBlock(prox.l1_norm(2), prox.smooth_zero(2), LinearOperator.identity(2)),),
    )
    assert not supports_objectives(mspec)
    with pytest.raises(UnsupportedEvaluation):
        dual_objective(mspec, [np.zeros(2)])
    res = solve_minimization(mspec)
    assert res.objectives is None
    assert res.report.termination is fbf.Termination.ResidualTolerance
    assert res.report.history[-1].gap is None


def test_zero_cap_returns_initial_objectives():
    lp = lasso_problem()
    res = solve_minimization(lp.spec, max_iter=0)
    x0 = np.zeros(6)
    assert res.objectives.primal_value == pytest.approx(primal_objective(lp.spec, x0))
    assert res.objectives.dual_value == pytest.approx(dual_objective(lp.spec, [np.zeros(6)]))


def test_strongly_convex_template_decays_fast():
    """Diagnostic: with a strongly convex f the residual falls by orders of magnitude per few dozen steps."""
    res = solve_minimization(template_problem("classical_duality").spec, tol=1e-12)
    hist = [r.primal_residual for r in res.report.history]
    n = len(hist)
    assert hist[-1] < 1e-6 * hist[n // 4]


def test_history_has_objectives_and_gap():
    res = solve_minimization(lasso_problem().spec, tol=1e-9)
    row = res.report.history[-1]
    assert row.gap == pytest.approx(row.primal_objective + row.dual_objective)
    assert all(r.primal_objective is not None for r in res.report.history)
