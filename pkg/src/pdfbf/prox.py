"""Closed-form proximity operators, conjugates and smooth functions.

Every catalog :class:`ProxFunction` carries its value, its prox, and an
independently derived prox and value for its Fenchel conjugate, so the
Moreau decomposition can be checked rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import Space, inner

INF = math.inf
# slack for membership tests in indicator values; projections land on the
# boundary only up to rounding
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class ProxFunction:
    """A proper lsc convex function known through ``prox_{gamma f}``."""

    space: Space
    prox: Callable[[float, np.ndarray], np.ndarray]
    value: Callable[[np.ndarray], float] | None = None
    conjugate_prox: Callable[[float, np.ndarray], np.ndarray] | None = None
    conjugate_value: Callable[[np.ndarray], float] | None = None
    name: str = "f"

    def __call__(self, x):
        if self.value is None:
            raise ValueError(f"{self.name} has no value closure")
        return self.value(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SmoothFunction:
    """A convex differentiable function with Lipschitz gradient.

    ``conjugate_infconv(phi, prox_phi, y)`` evaluates ``(phi □ s*)(y)``,
    the infimal convolution of a function ``phi`` (given by its value and
    prox) with the conjugate ``s*`` of this function. It is available for
    catalog entries whose conjugate makes that infimum closed form.
    """

    space: Space
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz_constant: float
    value: Callable[[np.ndarray], float] | None = None
    conjugate_infconv: Callable | None = None
    name: str = "h"

    def __call__(self, x):
        if self.value is None:
            raise ValueError(f"{self.name} has no value closure")
        return self.value(np.asarray(x, dtype=float))


def prox_conjugate(f: ProxFunction, gamma: float, y) -> np.ndarray:
    """``prox_{gamma f*}(y)``: the supplied closed form, else ``y - gamma prox_{f/gamma}(y/gamma)``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    y = np.asarray(y, dtype=float)
    if f.conjugate_prox is not None:
        return f.conjugate_prox(gamma, y)
    return y - gamma * f.prox(1.0 / gamma, y / gamma)


def moreau_prox_conjugate(f: ProxFunction, gamma: float, y) -> np.ndarray:
    """The Moreau-decomposition route only, ignoring any supplied closed form."""
    y = np.asarray(y, dtype=float)
    return y - gamma * f.prox(1.0 / gamma, y / gamma)


def conjugate(f: ProxFunction) -> ProxFunction:
    """``f*`` as a ProxFunction; its conjugate is ``f`` again."""
    return ProxFunction(
        f.space,
        lambda gamma, y: prox_conjugate(f, gamma, y),
        f.conjugate_value,
        f.prox,
        f.value,
        f"{f.name}*",
    )


def _indicator(ok: bool) -> float:
    return 0.0 if ok else INF


def _vec(dim, v, default=0.0):
    if v is None:
        return np.full(dim, float(default))
    arr = np.asarray(v, dtype=float)
    return np.broadcast_to(arr, (dim,)).copy()


# --- ProxFunction catalog ------------------------------------------------

def zero(dim: int) -> ProxFunction:
    """``f = 0``; ``f*`` is the indicator of ``{0}``."""
    return ProxFunction(
        Space(dim),
        lambda gamma, y: np.array(y, dtype=float),
        lambda x: 0.0,
        lambda gamma, y: np.zeros(dim),
        lambda u: _indicator(np.linalg.norm(u) <= FEASIBILITY_TOL),
        "zero",
    )


def linear(a) -> ProxFunction:
    """``f = <., a>``; ``f*`` is the indicator of ``{a}``."""
    a = np.array(a, dtype=float)
    return ProxFunction(
        Space(a.size),
        lambda gamma, y: np.asarray(y, dtype=float) - gamma * a,
        lambda x: inner(x, a),
        lambda gamma, y: a.copy(),
        lambda u: _indicator(np.linalg.norm(u - a) <= FEASIBILITY_TOL * (1 + np.linalg.norm(a))),
        "linear",
    )


def quadratic(diag, b=None) -> ProxFunction:
    """``f = ½|d*x - b|^2`` with ``d`` a diagonal (entrywise) scaling.

    ``f*(u) = sum_j u_j b_j / d_j + u_j^2 / (2 d_j^2)`` on coordinates with
    ``d_j != 0``; coordinates with ``d_j = 0`` force ``u_j = 0``.
    """
    d = np.array(diag, dtype=float).ravel()
    dim = d.size
    b = _vec(dim, b)
    nz = d != 0

    def value(x):
        r = d * x - b
        return 0.5 * float(np.dot(r, r))

    def prox(gamma, y):
        return (np.asarray(y, dtype=float) + gamma * d * b) / (1.0 + gamma * d * d)

    def conj_prox(gamma, y):
        y = np.asarray(y, dtype=float)
        return (d * d * y - gamma * d * b) / (d * d + gamma)

    def conj_value(u):
        if np.any(np.abs(u[~nz]) > FEASIBILITY_TOL):
            return INF
        un, dn, bn = u[nz], d[nz], b[nz]
        return float(np.sum(un * bn / dn + un * un / (2 * dn * dn))) - 0.5 * float(np.dot(b[~nz], b[~nz]))

    return ProxFunction(Space(dim), prox, value, conj_prox, conj_value, "quadratic")


def l1_norm(dim: int, scale: float = 1.0) -> ProxFunction:
    """``f = scale*|x|_1``: soft thresholding; ``f*`` is the indicator of the ``scale``-box."""
    lam = float(scale)

    def prox(gamma, y):
        y = np.asarray(y, dtype=float)
        return np.sign(y) * np.maximum(np.abs(y) - gamma * lam, 0.0)

    return ProxFunction(
        Space(dim),
        prox,
        lambda x: lam * float(np.sum(np.abs(x))),
        lambda gamma, y: np.clip(y, -lam, lam),
        lambda u: _indicator(np.max(np.abs(u)) <= lam * (1 + FEASIBILITY_TOL)),
        "l1",
    )


def _block_shrink(y, t):
    n = np.linalg.norm(y)
    if n <= t:
        return np.zeros_like(y)
    return (1.0 - t / n) * y


def _ball_project(y, center, radius):
    d = y - center
    n = np.linalg.norm(d)
    if n <= radius:
        return np.array(y, dtype=float)
    return center + (radius / n) * d


def l2_norm(dim: int, scale: float = 1.0) -> ProxFunction:
    """``f = scale*|x|_2``: block soft thresholding; ``f*`` is the ball indicator."""
    lam = float(scale)
    origin = np.zeros(dim)
    return ProxFunction(
        Space(dim),
        lambda gamma, y: _block_shrink(np.asarray(y, dtype=float), gamma * lam),
        lambda x: lam * float(np.linalg.norm(x)),
        lambda gamma, y: _ball_project(np.asarray(y, dtype=float), origin, lam),
        lambda u: _indicator(np.linalg.norm(u) <= lam * (1 + FEASIBILITY_TOL)),
        "l2",
    )


def box(dim: int, lower, upper) -> ProxFunction:
    """Indicator of ``[lower, upper]``; the conjugate is the support function."""
    lo, hi = _vec(dim, lower), _vec(dim, upper)
    if np.any(lo > hi):
        raise ValueError("box needs lower <= upper")

    def conj_prox(gamma, y):
        # sigma_j(u) = hi_j u for u >= 0, lo_j u for u <= 0
        y = np.asarray(y, dtype=float)
        up, down = y - gamma * hi, y - gamma * lo
        return np.where(up > 0, up, np.where(down < 0, down, 0.0))

    def value(x):
        slack = FEASIBILITY_TOL * (1 + np.abs(x))
        return _indicator(bool(np.all(x >= lo - slack) and np.all(x <= hi + slack)))

    return ProxFunction(
        Space(dim),
        lambda gamma, y: np.clip(y, lo, hi),
        value,
        conj_prox,
        lambda u: float(np.sum(np.where(u > 0, hi * u, lo * u))),
        "box",
    )


def ball(dim: int, radius: float = 1.0, center=None) -> ProxFunction:
    """Indicator of the Euclidean ball; conjugate ``<c,u> + R|u|``."""
    R = float(radius)
    c = _vec(dim, center)
    return ProxFunction(
        Space(dim),
        lambda gamma, y: _ball_project(np.asarray(y, dtype=float), c, R),
        lambda x: _indicator(np.linalg.norm(x - c) <= R * (1 + FEASIBILITY_TOL) + FEASIBILITY_TOL),
        lambda gamma, y: _block_shrink(np.asarray(y, dtype=float) - gamma * c, gamma * R),
        lambda u: inner(c, u) + R * float(np.linalg.norm(u)),
        "ball",
    )


def hyperplane(a, offset: float) -> ProxFunction:
    """Indicator of ``{x : <a,x> = offset}``; conjugate ``t*offset`` on ``u = t a``."""
    a = np.array(a, dtype=float)
    beta = float(offset)
    a2 = float(np.dot(a, a))
    if a2 == 0:
        raise ValueError("hyperplane normal must be nonzero")

    def conj_prox(gamma, y):
        t = (float(np.dot(a, y)) - gamma * beta) / a2
        return t * a

    def conj_value(u):
        t = float(np.dot(a, u)) / a2
        if np.linalg.norm(u - t * a) > FEASIBILITY_TOL * (1 + np.linalg.norm(u)):
            return INF
        return t * beta

    return ProxFunction(
        Space(a.size),
        lambda gamma, y: np.asarray(y, dtype=float) - ((float(np.dot(a, y)) - beta) / a2) * a,
        lambda x: _indicator(abs(float(np.dot(a, x)) - beta) <= FEASIBILITY_TOL * (1 + abs(beta))),
        conj_prox,
        conj_value,
        "hyperplane",
    )


def nonnegative(dim: int) -> ProxFunction:
    """Indicator of the nonnegative orthant; conjugate is the nonpositive orthant indicator."""
    return ProxFunction(
        Space(dim),
        lambda gamma, y: np.maximum(y, 0.0),
        lambda x: _indicator(bool(np.all(x >= -FEASIBILITY_TOL))),
        lambda gamma, y: np.minimum(y, 0.0),
        lambda u: _indicator(bool(np.all(u <= FEASIBILITY_TOL))),
        "nonnegative",
    )


def zero_indicator(dim: int) -> ProxFunction:
    """Indicator of ``{0}``: prox is the zero map, the conjugate is ``0``."""
    return ProxFunction(
        Space(dim),
        lambda gamma, y: np.zeros(dim),
        lambda x: _indicator(np.linalg.norm(x) <= FEASIBILITY_TOL),
        lambda gamma, y: np.array(y, dtype=float),
        lambda u: 0.0,
        "zero_indicator",
    )


def _huber_value(x, rho):
    ax = np.abs(x)
    return float(np.sum(np.where(ax <= rho, x * x / (2 * rho), ax - rho / 2)))


def huber(dim: int, rho: float = 1.0) -> ProxFunction:
    """Huber function, the Moreau envelope of ``|.|_1`` with parameter ``rho``.

    ``f*(u) = (rho/2)|u|^2`` on ``|u|_inf <= 1``.
    """
    rho = float(rho)

    def prox(gamma, y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) <= rho + gamma, y * rho / (rho + gamma), y - gamma * np.sign(y))

    def conj_value(u):
        if np.max(np.abs(u)) > 1 + FEASIBILITY_TOL:
            return INF
        return 0.5 * rho * float(np.dot(u, u))

    return ProxFunction(
        Space(dim),
        prox,
        lambda x: _huber_value(x, rho),
        lambda gamma, y: np.clip(np.asarray(y, dtype=float) / (1.0 + gamma * rho), -1.0, 1.0),
        conj_value,
        "huber",
    )


# --- infimal convolutions ------------------------------------------------

def moreau_envelope(value, prox, t: float, y) -> float:
    """``min_w phi(w) + |y - w|^2 / (2t)``, attained at ``prox_{t phi}(y)``."""
    p = prox(t, y)
    return value(p) + float(np.dot(y - p, y - p)) / (2 * t)


# --- SmoothFunction catalog ----------------------------------------------

def smooth_zero(dim: int) -> SmoothFunction:
    """``0``; its conjugate is the indicator of ``{0}``, so ``phi □ 0* = phi``."""
    return SmoothFunction(
        Space(dim),
        lambda x: np.zeros(dim),
        0.0,
        lambda x: 0.0,
        lambda value, prox, y: value(np.asarray(y, dtype=float)),
        "zero",
    )


def smooth_linear(a) -> SmoothFunction:
    """``<., a>``; its conjugate is the indicator of ``{a}``."""
    a = np.array(a, dtype=float)
    return SmoothFunction(
        Space(a.size),
        lambda x: a.copy(),
        0.0,
        lambda x: inner(x, a),
        lambda value, prox, y: value(np.asarray(y, dtype=float) - a),
        "linear",
    )


def squared_distance(dim: int, scale: float = 1.0, center=None) -> SmoothFunction:
    """``(s/2)|x - c|^2``; conjugate ``|u|^2/(2s) + <u, c>``.

    With ``c = 0`` and ``s = nu`` this is ``l*`` for ``l = |.|^2 / (2 nu)``,
    whose gradient ``nu*Id`` is exactly ``nu``-Lipschitz.
    """
    s = float(scale)
    if s <= 0:
        raise ValueError("scale must be positive")
    c = _vec(dim, center)

    def infconv(value, prox, y):
        y = np.asarray(y, dtype=float)
        return moreau_envelope(value, prox, s, y + s * c) - 0.5 * s * float(np.dot(c, c))

    return SmoothFunction(
        Space(dim),
        lambda x: s * (np.asarray(x, dtype=float) - c),
        s,
        lambda x: 0.5 * s * float(np.dot(x - c, x - c)),
        infconv,
        "squared_distance",
    )


def smooth_quadratic(diag, b=None) -> SmoothFunction:
    """``½|d*x - b|^2`` for a diagonal ``d``; no closed-form infimal convolution."""
    d = np.array(diag, dtype=float).ravel()
    b = _vec(d.size, b)
    return SmoothFunction(
        Space(d.size),
        lambda x: d * (d * np.asarray(x, dtype=float) - b),
        float(np.max(d * d)),
        lambda x: 0.5 * float(np.dot(d * x - b, d * x - b)),
        None,
        "quadratic",
    )


def smooth_huber(dim: int, rho: float = 1.0) -> SmoothFunction:
    rho = float(rho)
    return SmoothFunction(
        Space(dim),
        lambda x: np.clip(np.asarray(x, dtype=float) / rho, -1.0, 1.0),
        1.0 / rho,
        lambda x: _huber_value(x, rho),
        None,
        "huber",
    )


# --- sampled checks -----------------------------------------------------

def moreau_residual(f: ProxFunction, gamma: float, y) -> float:
    """``|prox_{gamma f}(y) + gamma prox_{f*/gamma}(y/gamma) - y|`` using the closed-form conjugate prox."""
    if f.conjugate_prox is None:
        raise ValueError(f"{f.name} has no closed-form conjugate prox")
    y = np.asarray(y, dtype=float)
    lhs = f.prox(gamma, y) + gamma * f.conjugate_prox(1.0 / gamma, y / gamma)
    return float(np.linalg.norm(lhs - y))


def subdifferential_check(
    f: ProxFunction, gamma: float, y, samples: int = 100, seed: int = 0, spread: float = 3.0
) -> float:
    """Max violation of ``f(p) + <y-p, w-p>/gamma <= f(w)`` over sampled ``w``.

    ``p = prox_{gamma f}(y)``; candidates ``w`` with ``f(w) = +inf`` cannot
    violate the inequality and are skipped. Candidates are drawn around ``p``
    and also projected through the prox at random points, so that
    constrained functions get feasible test points.
    """
    if f.value is None:
        raise ValueError(f"{f.name} has no value closure")
    y = np.asarray(y, dtype=float)
    p = f.prox(gamma, y)
    fp = f.value(p)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(samples):
        w = p + spread * rng.standard_normal(p.size)
        if k % 2:
            w = f.prox(gamma, w)
        fw = f.value(w)
        if math.isinf(fw):
            continue
        worst = max(worst, fp + float(np.dot(y - p, w - p)) / gamma - fw)
    return worst


@dataclass(frozen=True)
class GradientReport:
    max_relative_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_relative_error <= self.tolerance


def gradient_check(
    h: SmoothFunction, samples: int = 20, seed: int = 0, step: float = 1e-5, tol: float = 1e-6
) -> GradientReport:
    """Compare ``h.gradient`` against central differences at random points."""
    if h.value is None:
        raise ValueError(f"{h.name} has no value closure")
    rng = np.random.default_rng(seed)
    dim = h.space.dim
    worst = 0.0
    for _ in range(samples):
        x = rng.standard_normal(dim)
        g = h.gradient(x)
        fd = np.empty(dim)
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = step
            fd[j] = (h.value(x + e) - h.value(x - e)) / (2 * step)
        err = np.linalg.norm(fd - g) / max(1.0, np.linalg.norm(g))
        worst = max(worst, float(err))
    return GradientReport(worst, tol)
