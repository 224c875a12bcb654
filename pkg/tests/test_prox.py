import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from pdfbf import prox
from helpers import prox_catalog as catalog
from pdfbf.operators import LipschitzOperator, check_monotone

GAMMAS = (0.1, 1.0, 10.0)


def smooth_catalog(dim=4):
    rng = np.random.default_rng(43)
    return [
        prox.smooth_zero(dim),
        prox.smooth_linear(rng.standard_normal(dim)),
        prox.squared_distance(dim, 2.5, rng.standard_normal(dim)),
        prox.smooth_quadratic(1.0 + rng.random(dim), rng.standard_normal(dim)),
        prox.smooth_huber(dim, 0.7),
    ]


ids = lambda f: f.name  # noqa: E731


# --- spec examples ------------------------------------------------------

def test_prox_conjugate_abs():
    f = prox.l1_norm(1)
    assert prox.prox_conjugate(f, 1.0, [2.0])[0] == 1.0
    assert prox.moreau_prox_conjugate(f, 1.0, [2.0])[0] == 1.0


def test_prox_conjugate_zero():
    for gamma in GAMMAS:
        np.testing.assert_array_equal(prox.prox_conjugate(prox.zero(3), gamma, [1.0, -2.0, 5.0]), 0.0)
        np.testing.assert_array_equal(prox.moreau_prox_conjugate(prox.zero(3), gamma, [1.0, -2.0, 5.0]), 0.0)


def test_prox_conjugate_half_square_self_conjugate():
    f = prox.quadratic([1.0])
    assert prox.prox_conjugate(f, 1.0, [4.0])[0] == 2.0
    assert prox.moreau_prox_conjugate(f, 1.0, [4.0])[0] == 2.0
    assert f.prox(1.0, np.array([4.0]))[0] == 2.0


def test_subdifferential_check_l1():
    f = prox.l1_norm(2)
    np.testing.assert_array_equal(f.prox(1.0, np.array([3.0, -0.5])), [2.0, 0.0])
    assert prox.subdifferential_check(f, 1.0, [3.0, -0.5], samples=100) <= 1e-9


def test_subdifferential_check_box_projection():
    f = prox.box(1, 0.0, 1.0)
    assert f.prox(1.0, np.array([2.0]))[0] == 1.0
    assert prox.subdifferential_check(f, 1.0, [2.0]) <= 1e-12


def test_subdifferential_check_zero():
    assert prox.subdifferential_check(prox.zero(3), 1.0, [1.0, 2.0, 3.0]) == 0.0


def test_gradient_check_examples():
    assert prox.gradient_check(prox.squared_distance(4), tol=1e-9).ok
    a = np.array([1.0, -2.0, 0.5])
    assert prox.gradient_check(prox.smooth_linear(a), tol=1e-9).ok
    # random points are almost surely away from the Huber kinks at +-rho
    assert prox.gradient_check(prox.smooth_huber(4, 0.5), tol=1e-6).ok


def test_gradient_check_catches_wrong_gradient():
    h = prox.SmoothFunction(prox.Space(2), lambda x: 2 * x, 1.0, lambda x: 0.5 * float(x @ x))
    assert not prox.gradient_check(h).ok


# --- invariants ---------------------------------------------------------

@pytest.mark.parametrize("f", catalog(), ids=ids)
def test_moreau_decomposition(f):
    rng = np.random.default_rng(0)
    for gamma in GAMMAS:
        for _ in range(200):
            y = 3.0 * rng.standard_normal(f.space.dim)
            assert prox.moreau_residual(f, gamma, y) <= 1e-11


@pytest.mark.parametrize("f", catalog(), ids=ids)
def test_conjugate_prox_closed_form_matches_moreau_route(f):
    rng = np.random.default_rng(1)
    for gamma in GAMMAS:
        for _ in range(50):
            y = 3.0 * rng.standard_normal(f.space.dim)
            np.testing.assert_allclose(
                prox.prox_conjugate(f, gamma, y), prox.moreau_prox_conjugate(f, gamma, y), atol=1e-10
            )


@pytest.mark.parametrize("f", catalog(), ids=ids)
def test_fenchel_young_equality_on_prox_pairs(f):
    """``p = prox f(y)``, ``u = y - p`` in ``∂f(p)``: ``f(p) + f*(u) = <p, u>``."""
    rng = np.random.default_rng(2)
    for _ in range(100):
        y = 3.0 * rng.standard_normal(f.space.dim)
        p = f.prox(1.0, y)
        u = y - p
        lhs = f.value(p) + f.conjugate_value(u)
        assert lhs == pytest.approx(float(p @ u), abs=1e-9 * (1 + abs(float(p @ u))))


@pytest.mark.parametrize("f", catalog(), ids=ids)
def test_fenchel_young_inequality(f):
    rng = np.random.default_rng(3)
    for _ in range(200):
        x = f.prox(1.0, 3.0 * rng.standard_normal(f.space.dim))
        u = prox.prox_conjugate(f, 1.0, 3.0 * rng.standard_normal(f.space.dim))
        total = f.value(x) + f.conjugate_value(u)
        assert total >= float(x @ u) - 1e-9 * (1 + abs(float(x @ u)))


@pytest.mark.parametrize("f", catalog(), ids=ids)
def test_prox_value_optimality(f):
    """``p`` beats 1000 random candidates on ``f(w) + |y - w|^2 / (2 gamma)``."""
    rng = np.random.default_rng(4)
    gamma = 0.7
    y = 2.0 * rng.standard_normal(f.space.dim)
    p = f.prox(gamma, y)
    best = f.value(p) + float((y - p) @ (y - p)) / (2 * gamma)
    for k in range(1000):
        w = p + rng.standard_normal(f.space.dim) * (0.01 if k % 2 else 1.0)
        if k % 3 == 0:
            w = f.prox(gamma, w)
        val = f.value(w) + float((y - w) @ (y - w)) / (2 * gamma)
        assert best <= val + 1e-12 * (1 + abs(val))


@pytest.mark.parametrize("f", catalog(), ids=ids)
def test_subdifferential_inequality_catalog(f):
    rng = np.random.default_rng(5)
    for gamma in GAMMAS:
        y = 3.0 * rng.standard_normal(f.space.dim)
        assert prox.subdifferential_check(f, gamma, y, samples=100) <= 1e-9


@pytest.mark.parametrize("f", catalog(), ids=ids)
def test_conjugate_of_conjugate(f):
    g = prox.conjugate(prox.conjugate(f))
    y = np.linspace(-2, 2, f.space.dim)
    np.testing.assert_allclose(g.prox(0.5, y), f.prox(0.5, y), atol=1e-12)


def test_quadratic_conjugate_value_against_numeric():
    d, b = np.array([2.0, 0.5]), np.array([1.0, -1.0])
    f = prox.quadratic(d, b)
    u = np.array([0.3, -0.7])
    res = minimize(lambda x: -(x @ u - f.value(x)), np.zeros(2), method="BFGS", options={"gtol": 1e-10})
    assert f.conjugate_value(u) == pytest.approx(-res.fun, abs=1e-8)


def test_indicator_values():
    assert prox.box(2, 0.0, 1.0).value(np.array([0.5, 2.0])) == math.inf
    assert prox.nonnegative(2).value(np.array([0.0, 1.0])) == 0.0
    assert prox.ball(2, 1.0).value(np.array([1.0, 1.0])) == math.inf
    assert prox.zero_indicator(2).value(np.zeros(2)) == 0.0


def test_box_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        prox.box(2, 1.0, 0.0)


# --- smooth functions -----------------------------------------------------

@pytest.mark.parametrize("h", smooth_catalog(), ids=ids)
def test_smooth_gradients(h):
    assert prox.gradient_check(h).ok


@pytest.mark.parametrize("h", smooth_catalog(), ids=ids)
def test_smooth_gradients_monotone_and_lipschitz(h):
    rep = check_monotone(LipschitzOperator(h.space, h.gradient, h.lipschitz_constant), samples=500)
    assert rep.ok


@pytest.mark.parametrize("nu", [0.1, 1.0, 3.7])
def test_strongly_convex_conjugate_gradient_is_nu_identity(nu):
    ls = prox.squared_distance(3, nu)
    rep = check_monotone(LipschitzOperator(ls.space, ls.gradient, nu), samples=200)
    assert rep.max_ratio == pytest.approx(nu, abs=1e-12)
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(ls.gradient(x), nu * x)


def test_infconv_abs_with_half_square_is_huber():
    g = prox.l1_norm(1)
    ls = prox.squared_distance(1, 1.0)
    for y in (-3.0, -0.4, 0.0, 0.2, 1.0, 2.5):
        expected = y * y / 2 if abs(y) <= 1 else abs(y) - 0.5
        assert ls.conjugate_infconv(g.value, g.prox, np.array([y])) == pytest.approx(expected, abs=1e-15)


def test_infconv_squared_distance_against_numeric():
    """``(phi □ s*)(y) = min_w phi(w) + |y - w|^2/(2s) + <y - w, c>``."""
    phi = prox.l1_norm(2, 0.8)
    s, c = 2.0, np.array([0.5, -1.0])
    sd = prox.squared_distance(2, s, c)
    y = np.array([1.3, -0.2])
    obj = lambda w: phi.value(w) + (y - w) @ (y - w) / (2 * s) + (y - w) @ c  # noqa: E731
    res = minimize(obj, np.zeros(2), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000})
    assert sd.conjugate_infconv(phi.value, phi.prox, y) == pytest.approx(res.fun, abs=1e-7)


def test_infconv_linear_is_shift():
    phi = prox.l2_norm(2)
    a = np.array([1.0, 2.0])
    y = np.array([0.5, 0.5])
    assert prox.smooth_linear(a).conjugate_infconv(phi.value, phi.prox, y) == pytest.approx(phi.value(y - a))


def test_moreau_envelope_of_abs():
    f = prox.l1_norm(1)
    assert prox.moreau_envelope(f.value, f.prox, 2.0, np.array([5.0])) == pytest.approx(4.0)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.01, 100.0),
    st.lists(st.floats(-50, 50), min_size=3, max_size=3),
    st.sampled_from(range(len(catalog(3)))),
)
def test_moreau_property(gamma, y, idx):
    f = catalog(3)[idx]
    y = np.array(y)
    assert prox.moreau_residual(f, gamma, y) <= 1e-9 * (1 + np.linalg.norm(y))
