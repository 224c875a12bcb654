"""Random and planted test instances shared by the test modules."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from pdfbf import fbf, problemfile, prox, templates
from pdfbf.linalg import LinearOperator, Space
from pdfbf.minimize import MinBlock, MinimizationSpec
from pdfbf.operators import (
    LipschitzOperator,
    identity_resolvent,
    linear_monotone,
    parallel_sum_resolvent_pair,
    scaled_identity_operator,
    subdifferential,
    zero_operator,
    zero_resolvent,
)

ROOT = Path(__file__).resolve().parents[1]
LASSO_PATH = ROOT / "problems" / "lasso.json"


def prox_catalog(dim=4):
    """One instance of every ProxFunction catalog entry."""
    rng = np.random.default_rng(42)
    return [
        prox.zero(dim),
        prox.linear(rng.standard_normal(dim)),
        prox.quadratic(1.0 + rng.random(dim), rng.standard_normal(dim)),
        prox.quadratic(np.array([1.0, 0.0, 2.0, 0.5])[:dim], rng.standard_normal(dim)),
        prox.l1_norm(dim, 0.7),
        prox.l2_norm(dim, 1.5),
        prox.box(dim, -1.0, np.arange(dim) + 0.5),
        prox.ball(dim, 0.8, rng.standard_normal(dim)),
        prox.hyperplane(rng.standard_normal(dim), 0.4),
        prox.nonnegative(dim),
        prox.zero_indicator(dim),
        prox.huber(dim, 0.6),
    ]


def random_prox(dim, rng, smooth_only=False):
    kinds = ["zero", "linear", "quadratic", "l1", "l2", "box", "ball", "hyperplane", "nonnegative", "huber"]
    if not smooth_only:
        kinds.append("zero_indicator")
    k = kinds[rng.integers(len(kinds))]
    if k == "zero":
        return prox.zero(dim)
    if k == "linear":
        return prox.linear(rng.standard_normal(dim))
    if k == "quadratic":
        return prox.quadratic(0.5 + rng.random(dim), rng.standard_normal(dim))
    if k == "l1":
        return prox.l1_norm(dim, 0.1 + rng.random())
    if k == "l2":
        return prox.l2_norm(dim, 0.1 + rng.random())
    if k == "box":
        lo = -rng.random(dim)
        return prox.box(dim, lo, lo + rng.random(dim) + 0.1)
    if k == "ball":
        return prox.ball(dim, 0.5 + rng.random(), rng.standard_normal(dim))
    if k == "hyperplane":
        return prox.hyperplane(rng.standard_normal(dim), rng.standard_normal())
    if k == "nonnegative":
        return prox.nonnegative(dim)
    if k == "huber":
        return prox.huber(dim, 0.2 + rng.random())
    return prox.zero_indicator(dim)


def random_smooth(dim, rng):
    k = rng.integers(5)
    if k == 0:
        return prox.smooth_zero(dim)
    if k == 1:
        return prox.smooth_linear(rng.standard_normal(dim))
    if k == 2:
        return prox.squared_distance(dim, 0.2 + 2 * rng.random(), rng.standard_normal(dim))
    if k == 3:
        return prox.smooth_quadratic(rng.standard_normal(dim), rng.standard_normal(dim))
    return prox.smooth_huber(dim, 0.2 + rng.random())


def random_mspec(seed: int) -> MinimizationSpec:
    """A random composite problem with 1 to 3 blocks of mixed catalog entries."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    blocks = []
    for _ in range(int(rng.integers(1, 4))):
        k = int(rng.integers(1, 5))
        L = LinearOperator.from_matrix(rng.standard_normal((k, n)))
        blocks.append(MinBlock(random_prox(k, rng), random_smooth(k, rng), L, rng.standard_normal(k)))
    return MinimizationSpec(rng.standard_normal(n), random_prox(n, rng), random_smooth(n, rng), tuple(blocks))


def random_state(spec, rng, scale=1.0) -> fbf.PrimalDualState:
    return fbf.PrimalDualState(
        scale * rng.standard_normal(spec.H.dim), tuple(scale * rng.standard_normal(b.space.dim) for b in spec.blocks)
    )


def random_errors(spec, rng, scale=0.1) -> fbf.ErrorTerms:
    H = spec.H.dim
    dims = [b.space.dim for b in spec.blocks]
    g = lambda: tuple(scale * rng.standard_normal(d) for d in dims)  # noqa: E731
    return fbf.ErrorTerms(
        scale * rng.standard_normal(H), scale * rng.standard_normal(H), scale * rng.standard_normal(H), g(), g(), g()
    )


def random_operator_spec(seed: int) -> fbf.ProblemSpec:
    """A random operator-form problem, including non-gradient (skew) parts."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    H = Space(n)

    def monotone_matrix(d):
        G = rng.standard_normal((d, d))
        S = rng.standard_normal((d, d))
        return rng.random() * G @ G.T / d + (S - S.T)

    def lipschitz_part(d):
        k = rng.integers(3)
        if k == 0:
            return zero_operator(Space(d))
        if k == 1:
            return scaled_identity_operator(Space(d), rng.random() * 2)
        return linear_monotone(monotone_matrix(d))

    def resolvent_part(d):
        k = rng.integers(3)
        if k == 0:
            return zero_resolvent(Space(d))
        if k == 1:
            return identity_resolvent(Space(d))
        return subdifferential(random_prox(d, rng))

    blocks = []
    for _ in range(int(rng.integers(1, 4))):
        k = int(rng.integers(1, 5))
        L = LinearOperator.from_matrix(rng.standard_normal((k, n)))
        blocks.append(fbf.Block(parallel_sum_resolvent_pair(resolvent_part(k), lipschitz_part(k)), L, rng.standard_normal(k)))
    return fbf.ProblemSpec(rng.standard_normal(n), resolvent_part(n), lipschitz_part(n), tuple(blocks))


def plant(mspec: MinimizationSpec, seed: int = 0):
    """Replace ``z`` and the ``r_i`` so that a chosen pair solves the KKT system exactly.

    Pick ``t`` and set ``x = prox_f(t)``, so ``t - x`` lies in ``∂f(x)``;
    per block pick ``s`` and set ``v = prox_{g*}(s)``, so ``s - v`` lies in
    ``∂g*(v)``. Then ``r = L x - (s - v) - grad l*(v)`` and
    ``z = (t - x) + grad h(x) + sum L^* v`` close both inclusions.
    """
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(mspec.H.dim)
    x = mspec.f.prox(1.0, t)
    z = (t - x) + mspec.h.gradient(x)
    vs, blocks = [], []
    for b in mspec.blocks:
        s = rng.standard_normal(b.space.dim)
        v = prox.prox_conjugate(b.g, 1.0, s)
        r = b.L.apply(x) - (s - v) - b.l_star.gradient(v)
        z = z + b.L.apply_adjoint(v)
        vs.append(v)
        blocks.append(MinBlock(b.g, b.l_star, b.L, r, b.L_norm))
    return MinimizationSpec(z, mspec.f, mspec.h, tuple(blocks)), x, tuple(vs)


def template_problem(name: str) -> problemfile.LoadedProblem:
    return problemfile.build(templates.get(name))


def lasso_problem() -> problemfile.LoadedProblem:
    return problemfile.load(LASSO_PATH)


def lasso_data():
    doc = json.loads(LASSO_PATH.read_text())
    return np.array(doc["h"]["center"]), doc["blocks"][0]["g"]["scale"]


def all_problems():
    """Every template plus the shipped LASSO file, by name."""
    out = {name: template_problem(name) for name in templates.names()}
    out["lasso"] = lasso_problem()
    return out
