"""Composite convex minimization on top of the monotone-inclusion solver.

Primal problem::

    minimize  f(x) + sum_i (g_i □ l_i)(L_i x - r_i) + h(x) - <x, z>

Dual problem::

    minimize  (f* □ h*)(z - sum_i L_i^* v_i) + sum_i (g_i*(v_i) + l_i*(v_i) + <v_i, r_i>)

``l_i`` is only ever used through ``l_i*``, which is passed directly as a
:class:`~pdfbf.prox.SmoothFunction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fbf
from .errors import ShapeError, UnsupportedEvaluation
from .linalg import LinearOperator, Space, inner
from .operators import LipschitzOperator, ResolventOperator, parallel_sum_resolvent_pair
from .prox import ProxFunction, SmoothFunction, prox_conjugate


@dataclass(frozen=True)
class MinBlock:
    g: ProxFunction
    l_star: SmoothFunction
    L: LinearOperator
    r: np.ndarray | None = None
    L_norm: float | None = None

    @property
    def space(self) -> Space:
        return self.g.space


@dataclass(frozen=True)
class MinimizationSpec:
    z: np.ndarray
    f: ProxFunction
    h: SmoothFunction
    blocks: tuple

    def __post_init__(self):
        H = self.f.space
        object.__setattr__(self, "z", H.check(self.z, "z"))
        blocks = tuple(self.blocks)
        if not blocks:
            raise ShapeError("at least one block is required")
        if self.h.space != H:
            raise ShapeError(f"h acts on {self.h.space}, f on {H}")
        fixed = []
        for i, b in enumerate(blocks, start=1):
            if b.l_star.space != b.space or b.L.domain != H or b.L.codomain != b.space:
                raise ShapeError(f"block {i}: inconsistent spaces")
            r = b.space.zeros() if b.r is None else b.space.check(b.r, f"r_{i}")
            fixed.append(MinBlock(b.g, b.l_star, b.L, r, b.L_norm))
        object.__setattr__(self, "blocks", tuple(fixed))

    @property
    def H(self) -> Space:
        return self.f.space

    @property
    def m(self) -> int:
        return len(self.blocks)


def to_problem_spec(mspec: MinimizationSpec) -> fbf.ProblemSpec:
    """``A = ∂f``, ``C = ∇h``, ``B_i = ∂g_i``, ``D_i^{-1} = ∇l_i*``."""
    f, h = mspec.f, mspec.h
    A = ResolventOperator(f.space, f.prox, f.conjugate_prox, f"∂{f.name}")
    C = LipschitzOperator(h.space, h.gradient, h.lipschitz_constant, f"∇{h.name}")
    blocks = []
    for b in mspec.blocks:
        g = b.g
        B = ResolventOperator(
            g.space, g.prox, lambda gamma, y, g=g: prox_conjugate(g, gamma, y), f"∂{g.name}"
        )
        D_inv = LipschitzOperator(b.space, b.l_star.gradient, b.l_star.lipschitz_constant, f"∇{b.l_star.name}")
        blocks.append(fbf.Block(parallel_sum_resolvent_pair(B, D_inv), b.L, b.r, b.L_norm))
    return fbf.ProblemSpec(mspec.z, A, C, tuple(blocks))


def prox_step(
    mspec: MinimizationSpec,
    state: fbf.PrimalDualState,
    gamma: float,
    errors: fbf.ErrorTerms | None = None,
) -> tuple[fbf.PrimalDualState, fbf.IterationWorkspace]:
    """One iteration written directly with proxes and gradients.

    Kept separate from :func:`pdfbf.fbf.expanded_step` on purpose: the two
    are compared in the tests.
    """
    f, h, z = mspec.f, mspec.h, mspec.z
    x, v = state.x, state.v
    e = errors or fbf.ErrorTerms(
        np.zeros_like(x), np.zeros_like(x), np.zeros_like(x),
        tuple(np.zeros_like(vi) for vi in v), tuple(np.zeros_like(vi) for vi in v),
        tuple(np.zeros_like(vi) for vi in v),
    )

    s = h.gradient(x)
    for b, vi in zip(mspec.blocks, v):
        s = s + b.L.apply_adjoint(vi)
    y1 = x - gamma * (s + e.a1)
    p1 = f.prox(gamma, y1 + gamma * z) + e.b1

    y2s, p2s, q2s, v_next = [], [], [], []
    for i, (b, vi) in enumerate(zip(mspec.blocks, v)):
        y2 = vi + gamma * (b.L.apply(x) - b.l_star.gradient(vi) + e.a2[i])
        p2 = prox_conjugate(b.g, gamma, y2 - gamma * b.r) + e.b2[i]
        q2 = p2 + gamma * (b.L.apply(p1) - b.l_star.gradient(p2) + e.c2[i])
        y2s.append(y2)
        p2s.append(p2)
        q2s.append(q2)
        v_next.append(vi - y2 + q2)

    t = h.gradient(p1)
    for b, p2 in zip(mspec.blocks, p2s):
        t = t + b.L.apply_adjoint(p2)
    q1 = p1 - gamma * (t + e.c1)
    ws = fbf.IterationWorkspace(y1, p1, q1, tuple(y2s), tuple(p2s), tuple(q2s))
    return fbf.PrimalDualState(x - y1 + q1, tuple(v_next), state.n + 1), ws


# --- objectives --------------------------------------------------------

def _sum_extended(terms) -> float:
    total = 0.0
    for t in terms:
        if t == math.inf:
            return math.inf
        total += t
    return total


def primal_objective(mspec: MinimizationSpec, x) -> float:
    """``f(x) + sum_i (g_i □ l_i)(L_i x - r_i) + h(x) - <x, z>``; may be ``+inf``."""
    x = mspec.H.check(x, "x")
    if mspec.f.value is None or mspec.h.value is None:
        raise UnsupportedEvaluation("f or h has no value closure")
    terms = [mspec.f.value(x)]
    for i, b in enumerate(mspec.blocks, start=1):
        if b.g.value is None or b.l_star.conjugate_infconv is None:
            raise UnsupportedEvaluation(f"block {i}: no closed form for (g □ l) with {b.g.name}, {b.l_star.name}")
        terms.append(b.l_star.conjugate_infconv(b.g.value, b.g.prox, b.L.apply(x) - b.r))
    terms.append(mspec.h.value(x) - inner(x, mspec.z))
    return _sum_extended(terms)


def dual_objective(mspec: MinimizationSpec, v) -> float:
    """``(f* □ h*)(z - sum_i L_i^* v_i) + sum_i (g_i*(v_i) + l_i*(v_i) + <v_i, r_i>)``."""
    v = [b.space.check(vi, f"v_{i}") for i, (b, vi) in enumerate(zip(mspec.blocks, v), start=1)]
    if len(v) != mspec.m:
        raise ShapeError(f"{len(v)} dual blocks for {mspec.m} blocks")
    f, h = mspec.f, mspec.h
    if f.conjugate_value is None or h.conjugate_infconv is None:
        raise UnsupportedEvaluation(f"no closed form for f* □ h* with {f.name}, {h.name}")
    w = mspec.z.copy()
    for b, vi in zip(mspec.blocks, v):
        w = w - b.L.apply_adjoint(vi)
    terms = [h.conjugate_infconv(f.conjugate_value, lambda gamma, y: prox_conjugate(f, gamma, y), w)]
    for i, (b, vi) in enumerate(zip(mspec.blocks, v), start=1):
        if b.g.conjugate_value is None or b.l_star.value is None:
            raise UnsupportedEvaluation(f"block {i}: g* or l* has no value closure")
        terms.append(b.g.conjugate_value(vi))
        terms.append(b.l_star.value(vi) + inner(vi, b.r))
    return _sum_extended(terms)


@dataclass(frozen=True)
class ObjectiveReport:
    primal_value: float
    dual_value: float

    @property
    def gap(self) -> float:
        """Primal plus dual value; nonnegative by weak duality, zero at optimality."""
        return _sum_extended([self.primal_value, self.dual_value])


def objectives(mspec: MinimizationSpec, x, v) -> ObjectiveReport:
    return ObjectiveReport(primal_objective(mspec, x), dual_objective(mspec, v))


def supports_objectives(mspec: MinimizationSpec) -> bool:
    try:
        objectives(mspec, mspec.H.zeros(), [b.space.zeros() for b in mspec.blocks])
    except UnsupportedEvaluation:
        return False
    return True


@dataclass
class MinimizationResult:
    report: fbf.SolveReport
    objectives: ObjectiveReport | None
    problem: fbf.ProblemSpec

    @property
    def x(self) -> np.ndarray:
        return self.report.final.x

    @property
    def v(self) -> tuple:
        return self.report.final.v


def solve_minimization(
    mspec: MinimizationSpec,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    policy: fbf.StepPolicy | None = None,
    injector: fbf.ErrorInjector | None = None,
    init: fbf.PrimalDualState | None = None,
    callback=None,
    record_every: int = 1,
    track_objectives: bool = True,
) -> MinimizationResult:
    """Solve the primal-dual pair and report objectives when they are evaluable.

    Objectives are evaluated at the resolvent outputs ``(p_1n, p_2n)`` of
    the last iteration, which lie in the domains of ``f`` and ``g_i*``.
    """
    problem = to_problem_spec(mspec)
    with_obj = track_objectives and supports_objectives(mspec)

    def monitor(state, ws):
        rep = objectives(mspec, ws.p1, ws.p2)
        return rep.primal_value, rep.dual_value

    report = fbf.solve(
        problem,
        policy=policy,
        injector=injector,
        init=init,
        stop=fbf.StoppingRule(tol=tol, max_iter=max_iter),
        callback=callback,
        monitor=monitor if with_obj else None,
        record_every=record_every,
    )
    final_obj = None
    if with_obj:
        ws = report.last_workspace
        if ws is not None and report.termination is not fbf.Termination.Diverged:
            final_obj = objectives(mspec, ws.p1, ws.p2)
        elif ws is None:
            final_obj = objectives(mspec, report.final.x, report.final.v)
    return MinimizationResult(report, final_obj, problem)
