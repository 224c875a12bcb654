"""Primal-dual forward-backward-forward splitting.

Solves ``z in Ax + sum_i L_i^*((B_i □ D_i)(L_i x - r_i)) + Cx`` together
with its dual inclusion in ``(v_1, ..., v_m)``. Each iteration uses one
resolvent of ``A`` and of every ``B_i^{-1}`` and two forward evaluations
of ``C``, every ``D_i^{-1}``, ``L_i`` and ``L_i^*``.

Two implementations of one iteration are provided. :func:`expanded_step`
is the blockwise recursion the solver runs; :func:`fbf_step` is the same
iteration written on the product space ``K = H + G_1 + ... + G_m`` with the
operators from :func:`assemble_M` and :func:`assemble_Q`. They must agree to
rounding, which the test suite checks.
"""

from __future__ import annotations

import enum
import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DivergenceError, ShapeError, StepSizeError
from .linalg import BlockVector, LinearOperator, ProductSpace, Space, adjoint_sum, resolve_norm
from .operators import LipschitzOperator, ParallelSum, ResolventOperator

logger = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e12
BETA_RTOL = 1e-12


@dataclass(frozen=True)
class Block:
    """One coupling term ``L^*((B □ D)(L x - r))``."""

    op: ParallelSum
    L: LinearOperator
    r: np.ndarray
    L_norm: float | None = None

    @property
    def space(self) -> Space:
        return self.op.space

    @property
    def nu(self) -> float:
        return self.op.nu


@dataclass(frozen=True)
class ProblemSpec:
    """Data of the structured primal-dual inclusion.

    ``A`` acts on ``H`` through its resolvent, ``C`` is monotone and
    ``mu``-Lipschitz, and every block carries ``(B_i, D_i^{-1})``, a nonzero
    ``L_i : H -> G_i`` and a shift ``r_i``. Missing operator norms are
    estimated by power iteration unless ``estimate_norms`` is false.
    """

    z: np.ndarray
    A: ResolventOperator
    C: LipschitzOperator
    blocks: tuple[Block, ...]
    estimate_norms: bool = True

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ConfigurationError("at least one block is required")
        H = self.A.space
        object.__setattr__(self, "z", H.check(self.z, "z"))
        if self.C.space != H:
            raise ShapeError(f"C acts on {self.C.space}, expected {H}")
        checked = []
        for i, blk in enumerate(blocks, start=1):
            if blk.L.domain != H or blk.L.codomain != blk.space or blk.op.D_inv.space != blk.space:
                raise ShapeError(f"block {i}: inconsistent spaces")
            r = blk.space.check(blk.r, f"r_{i}")
            norm = blk.L_norm
            if norm is None and self.estimate_norms:
                norm = resolve_norm(blk.L)
            if norm is not None and not norm > 0:
                raise ConfigurationError(f"block {i}: L must be nonzero (norm estimate {norm})")
            checked.append(replace(blk, r=r, L_norm=norm))
        object.__setattr__(self, "blocks", tuple(checked))

    @property
    def H(self) -> Space:
        return self.A.space

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def mu(self) -> float:
        return self.C.lipschitz_constant

    @property
    def K(self) -> ProductSpace:
        return ProductSpace((self.H,) + tuple(b.space for b in self.blocks))


def compute_beta(spec: ProblemSpec) -> float:
    """``max(mu, nu_1, ..., nu_m) + sqrt(sum_i |L_i|^2)``."""
    norms = [b.L_norm for b in spec.blocks]
    if any(n is None for n in norms):
        raise ConfigurationError("operator norm estimate missing for some L_i")
    lip = max([spec.mu] + [b.nu for b in spec.blocks])
    return lip + math.sqrt(sum(n * n for n in norms))


@dataclass(frozen=True)
class StepPolicy:
    """Step sizes ``gamma_n`` confined to ``[epsilon, (1 - epsilon)/beta]``."""

    beta: float
    epsilon: float
    gamma_schedule: Callable[[int], float]

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigurationError("beta must be positive")
        if not 0 < self.epsilon < 1.0 / (self.beta + 1.0):
            raise ConfigurationError(
                f"epsilon={self.epsilon} outside ]0, 1/(beta+1)[ for beta={self.beta}"
            )

    @property
    def bounds(self) -> tuple[float, float]:
        return self.epsilon, (1.0 - self.epsilon) / self.beta

    def gamma(self, n: int) -> float:
        g = float(self.gamma_schedule(n))
        lo, hi = self.bounds
        if not lo <= g <= hi:
            raise StepSizeError(f"gamma_{n}={g!r} outside [{lo!r}, {hi!r}]")
        return g

    @classmethod
    def constant(cls, beta: float, gamma: float | None = None, epsilon: float | None = None) -> "StepPolicy":
        """Constant step; defaults to the largest admissible one."""
        if not beta > 0:
            raise ConfigurationError("beta must be positive")
        if epsilon is None:
            epsilon = min(1e-6, 0.5 / (beta + 1.0))
        if gamma is None:
            gamma = (1.0 - epsilon) / beta
        gamma = float(gamma)
        return cls(beta, epsilon, lambda n: gamma)

    @classmethod
    def for_spec(cls, spec: ProblemSpec, gamma: float | None = None, epsilon: float | None = None):
        return cls.constant(compute_beta(spec), gamma, epsilon)


# --- error sequences -----------------------------------------------------

@dataclass(frozen=True)
class ErrorTerms:
    """The error vectors of one iteration, with the signs used in the blockwise recursion."""

    a1: np.ndarray
    b1: np.ndarray
    c1: np.ndarray
    a2: tuple
    b2: tuple
    c2: tuple

    @classmethod
    def zero(cls, spec: ProblemSpec) -> "ErrorTerms":
        h = spec.H.zeros()
        g = tuple(b.space.zeros() for b in spec.blocks)
        return cls(h, h, h, g, g, g)

    def compact(self):
        """``(a, b, c)`` on the product space.

        The dual blocks of the forward steps enter the blockwise recursion
        with a ``+`` sign but the product-space recursion subtracts
        ``gamma*(Q x + a)``, so ``a`` and ``c`` flip sign on the dual blocks.
        """
        a = BlockVector((self.a1,) + tuple(-e for e in self.a2))
        b = BlockVector((self.b1,) + tuple(self.b2))
        c = BlockVector((self.c1,) + tuple(-e for e in self.c2))
        return a, b, c


Sequence_ = Callable[[int], np.ndarray]


@dataclass(frozen=True)
class ErrorInjector:
    """Absolutely summable perturbations of each step of the recursion.

    Each entry is ``None`` (identically zero) or a function ``n -> vector``.
    The ``*2`` entries are per-block tuples. ``summable_bound`` is an upper
    bound on ``sum_n |e_n|`` summed over all sequences, when known.
    """

    a1: Sequence_ | None = None
    b1: Sequence_ | None = None
    c1: Sequence_ | None = None
    a2: tuple | None = None
    b2: tuple | None = None
    c2: tuple | None = None
    summable_bound: float | None = None

    @property
    def is_zero(self) -> bool:
        return all(s is None for s in (self.a1, self.b1, self.c1, self.a2, self.b2, self.c2))

    def at(self, n: int, spec: ProblemSpec) -> ErrorTerms:
        def one(seq, space):
            return space.zeros() if seq is None else space.check(seq(n), "error term")

        def many(seqs):
            if seqs is None:
                return tuple(b.space.zeros() for b in spec.blocks)
            if len(seqs) != spec.m:
                raise ShapeError(f"{len(seqs)} error sequences for {spec.m} blocks")
            return tuple(one(s, b.space) for s, b in zip(seqs, spec.blocks))

        H = spec.H
        return ErrorTerms(
            one(self.a1, H), one(self.b1, H), one(self.c1, H),
            many(self.a2), many(self.b2), many(self.c2),
        )

    @classmethod
    def none(cls) -> "ErrorInjector":
        return cls(summable_bound=0.0)

    @classmethod
    def spike(cls, spec: ProblemSpec, magnitude: float = 10.0, seed: int = 0) -> "ErrorInjector":
        """A single error of norm ``magnitude`` in ``b_1`` at ``n = 0``."""
        u = _unit(spec.H.dim, np.random.default_rng(seed))
        zero = spec.H.zeros()
        return cls(b1=lambda n: magnitude * u if n == 0 else zero, summable_bound=float(magnitude))

    @classmethod
    def decay(cls, spec: ProblemSpec, scale: float = 0.1, seed: int = 0) -> "ErrorInjector":
        """Every sequence has norm ``scale/(n+1)^2`` along a fixed random direction."""
        rng = np.random.default_rng(seed)

        def seq(dim):
            u = _unit(dim, rng)
            return lambda n: (scale / (n + 1) ** 2) * u

        dims = [b.space.dim for b in spec.blocks]
        count = 3 * (1 + spec.m)
        return cls(
            seq(spec.H.dim), seq(spec.H.dim), seq(spec.H.dim),
            tuple(seq(d) for d in dims), tuple(seq(d) for d in dims), tuple(seq(d) for d in dims),
            summable_bound=count * scale * math.pi ** 2 / 6,
        )

    @classmethod
    def preset(cls, name: str, spec: ProblemSpec, seed: int = 0) -> "ErrorInjector":
        if name == "none":
            return cls.none()
        if name == "spike":
            return cls.spike(spec, seed=seed)
        if name == "decay":
            return cls.decay(spec, seed=seed)
        raise ValueError(f"unknown error-injection preset {name!r}")


def _unit(dim, rng):
    u = rng.standard_normal(dim)
    return u / np.linalg.norm(u)


# --- iteration state -----------------------------------------------------

@dataclass(frozen=True)
class PrimalDualState:
    x: np.ndarray
    v: tuple
    n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))

    def to_block(self) -> BlockVector:
        return BlockVector((self.x,) + self.v)

    @classmethod
    def from_block(cls, u: BlockVector, n: int = 0) -> "PrimalDualState":
        return cls(u[0], u.blocks[1:], n)

    @classmethod
    def zeros(cls, spec: ProblemSpec) -> "PrimalDualState":
        return cls(spec.H.zeros(), tuple(b.space.zeros() for b in spec.blocks), 0)

    def is_finite(self) -> bool:
        return self.to_block().is_finite()


@dataclass(frozen=True)
class IterationWorkspace:
    y1: np.ndarray
    p1: np.ndarray
    q1: np.ndarray
    y2: tuple
    p2: tuple
    q2: tuple

    @classmethod
    def from_blocks(cls, y: BlockVector, p: BlockVector, q: BlockVector) -> "IterationWorkspace":
        return cls(y[0], p[0], q[0], y.blocks[1:], p.blocks[1:], q.blocks[1:])

    def is_finite(self) -> bool:
        arrays = (self.y1, self.p1, self.q1) + self.y2 + self.p2 + self.q2
        return all(np.all(np.isfinite(a)) for a in arrays)


def residuals(state: PrimalDualState, ws: IterationWorkspace) -> tuple[float, tuple]:
    """``|x_n - p_1n|`` and ``(|v_in - p_2in|)_i``."""
    primal = float(np.linalg.norm(state.x - ws.p1))
    dual = tuple(float(np.linalg.norm(v - p)) for v, p in zip(state.v, ws.p2))
    return primal, dual


# --- the two iteration paths ----------------------------------------------

def expanded_step(
    spec: ProblemSpec,
    state: PrimalDualState,
    gamma: float,
    errors: ErrorTerms | None = None,
    counts: Counter | None = None,
) -> tuple[PrimalDualState, IterationWorkspace]:
    """One iteration of the blockwise primal-dual recursion."""
    x, v = state.x, state.v
    blocks = spec.blocks
    Ls = [b.L for b in blocks]

    y1 = x - gamma * (spec.C(x) + adjoint_sum(Ls, v))
    if errors is not None:
        y1 = y1 - gamma * errors.a1
    p1 = spec.A.resolvent(gamma, y1 + gamma * spec.z)
    if errors is not None:
        p1 = p1 + errors.b1

    y2s, p2s, q2s, v_next = [], [], [], []
    for i, blk in enumerate(blocks):
        vi = v[i]
        y2 = vi + gamma * (blk.L(x) - blk.op.D_inv(vi))
        if errors is not None:
            y2 = y2 + gamma * errors.a2[i]
        p2 = blk.op.inverse_resolvent(gamma, y2 - gamma * blk.r)
        if errors is not None:
            p2 = p2 + errors.b2[i]
        q2 = p2 + gamma * (blk.L(p1) - blk.op.D_inv(p2))
        if errors is not None:
            q2 = q2 + gamma * errors.c2[i]
        y2s.append(y2)
        p2s.append(p2)
        q2s.append(q2)
        v_next.append(vi - y2 + q2)

    q1 = p1 - gamma * (spec.C(p1) + adjoint_sum(Ls, p2s))
    if errors is not None:
        q1 = q1 - gamma * errors.c1
    x_next = x - y1 + q1

    ws = IterationWorkspace(y1, p1, q1, tuple(y2s), tuple(p2s), tuple(q2s))
    if counts is not None:
        counts["C"] += 2
        counts["resolvent_A"] += 1
        for i in range(1, spec.m + 1):
            counts[f"D_inv_{i}"] += 2
            counts[f"L_{i}"] += 2
            counts[f"L_{i}_adjoint"] += 2
            counts[f"resolvent_B_{i}_inverse"] += 1
    new = PrimalDualState(x_next, tuple(v_next), state.n + 1)
    if not (ws.is_finite() and new.is_finite()):
        raise DivergenceError(f"non-finite iterate at n={state.n}", ws)
    return new, ws


def assemble_M(spec: ProblemSpec) -> ResolventOperator:
    """``M(x, v) = (-z + Ax) x (r_1 + B_1^{-1} v_1) x ...`` through its resolvent."""
    z = spec.z
    blocks = spec.blocks

    def resolvent(gamma, u: BlockVector) -> BlockVector:
        parts = [spec.A.resolvent(gamma, u[0] + gamma * z)]
        for i, blk in enumerate(blocks, start=1):
            parts.append(blk.op.inverse_resolvent(gamma, u[i] - gamma * blk.r))
        return BlockVector(parts)

    return ResolventOperator(spec.K, resolvent, None, "M")


def assemble_Q(spec: ProblemSpec) -> LipschitzOperator:
    """``Q(x, v) = (Cx + sum_i L_i^* v_i, -L_1 x + D_1^{-1} v_1, ...)``, declared ``beta``-Lipschitz."""
    blocks = spec.blocks
    Ls = [b.L for b in blocks]

    def apply(u: BlockVector) -> BlockVector:
        x, v = u[0], u.blocks[1:]
        parts = [spec.C(x) + adjoint_sum(Ls, v)]
        for blk, vi in zip(blocks, v):
            parts.append(-blk.L(x) + blk.op.D_inv(vi))
        return BlockVector(parts)

    return LipschitzOperator(spec.K, apply, compute_beta(spec), "Q")


def fbf_step(
    state: PrimalDualState,
    gamma: float,
    M: ResolventOperator,
    Q: LipschitzOperator,
    errors: ErrorTerms | None = None,
) -> tuple[PrimalDualState, IterationWorkspace]:
    """One forward-backward-forward step on the product space."""
    xb = state.to_block()
    Qx = Q(xb)
    if errors is not None:
        a, b, c = errors.compact()
        y = xb - gamma * (Qx + a)
        p = M.resolvent(gamma, y) + b
        q = p - gamma * (Q(p) + c)
    else:
        y = xb - gamma * Qx
        p = M.resolvent(gamma, y)
        q = p - gamma * Q(p)
    nxt = xb - y + q
    ws = IterationWorkspace.from_blocks(y, p, q)
    if not (nxt.is_finite() and ws.is_finite()):
        raise DivergenceError(f"non-finite iterate at n={state.n}", ws)
    return PrimalDualState.from_block(nxt, state.n + 1), ws


# --- certificates --------------------------------------------------------

def kkt_residuals(spec: ProblemSpec, state: PrimalDualState, gamma_check: float = 1.0):
    """Resolvent fixed-point defects ``(primal, (dual_1, ..., dual_m))``.

    Both vanish exactly when ``z - sum L_i^* v_i in Ax + Cx`` and
    ``L_i x - r_i in B_i^{-1} v_i + D_i^{-1} v_i`` for every block.
    """
    if not gamma_check > 0:
        raise ValueError("gamma_check must be positive")
    g = gamma_check
    x, v = state.x, state.v
    Ls = [b.L for b in spec.blocks]
    w = spec.z - adjoint_sum(Ls, v) - spec.C(x)
    primal = float(np.linalg.norm(x - spec.A.resolvent(g, x + g * w)))
    duals = []
    for blk, vi in zip(spec.blocks, v):
        t = vi + g * (blk.L(x) - blk.r - blk.op.D_inv(vi))
        duals.append(float(np.linalg.norm(vi - blk.op.inverse_resolvent(g, t))))
    return primal, tuple(duals)


def kkt_residual(spec: ProblemSpec, state: PrimalDualState, gamma_check: float = 1.0) -> float:
    primal, duals = kkt_residuals(spec, state, gamma_check)
    return max((primal,) + duals)


@dataclass(frozen=True)
class DualCertificate:
    """Residuals of the joint primal-dual conditions, read as a dual certificate."""

    primal_residual: float
    dual_residuals: tuple
    tolerance: float

    @property
    def residual(self) -> float:
        return max((self.primal_residual,) + self.dual_residuals)

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def dual_solution_certificate(
    spec: ProblemSpec, state: PrimalDualState, tol: float = 1e-6, gamma_check: float = 1.0
) -> DualCertificate:
    """Certify ``v`` as a dual solution through the joint conditions it satisfies with ``x``.

    The dual inclusion involves ``(A^{-1} □ C^{-1})``, which is not
    available in resolvent form; the joint primal-dual conditions imply it
    and are checkable, so they are what is reported.
    """
    primal, duals = kkt_residuals(spec, state, gamma_check)
    return DualCertificate(primal, duals, tol)


# --- driver ------------------------------------------------------------

class Termination(enum.Enum):
    ResidualTolerance = "ResidualTolerance"
    MaxIterations = "MaxIterations"
    Diverged = "Diverged"


@dataclass(frozen=True)
class StoppingRule:
    tol: float = 1e-8
    max_iter: int = 100_000
    divergence_norm: float = DIVERGENCE_NORM

    def __post_init__(self):
        if self.tol < 0 or self.max_iter < 0:
            raise ConfigurationError("tol and max_iter must be nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    n: int
    gamma: float
    primal_residual: float
    dual_residuals: tuple
    kkt_residual: float
    primal_objective: float | None = None
    dual_objective: float | None = None
    gap: float | None = None


@dataclass
class SolveReport:
    final: PrimalDualState
    history: list = field(default_factory=list)
    termination: Termination = Termination.MaxIterations
    kkt_residual: float = math.nan
    last_workspace: IterationWorkspace | None = None
    evaluations: Counter = field(default_factory=Counter)
    gammas: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return self.final.n

    @property
    def residual_history(self):
        return [(r.n, r.primal_residual, r.dual_residuals, r.kkt_residual) for r in self.history]

    def primal_residual_sums(self) -> tuple[float, float]:
        """``(sum over last quarter, total)`` of ``|x_n - p_1n|^2`` in the history."""
        sq = np.array([r.primal_residual ** 2 for r in self.history])
        if sq.size == 0:
            return 0.0, 0.0
        tail = sq[len(sq) - len(sq) // 4:] if len(sq) >= 4 else sq[-1:]
        return float(tail.sum()), float(sq.sum())


def solve(
    spec: ProblemSpec,
    policy: StepPolicy | None = None,
    injector: ErrorInjector | None = None,
    init: PrimalDualState | None = None,
    stop: StoppingRule | None = None,
    callback: Callable[[IterationRecord], None] | None = None,
    monitor: Callable[[PrimalDualState, IterationWorkspace], tuple] | None = None,
    record_every: int = 1,
) -> SolveReport:
    """Run the recursion until the relative joint residual drops below ``stop.tol``.

    Stops after step ``n`` when ``max(|x_n - p_1n|, max_i |v_in - p_2in|)
    <= tol*(1 + |x_n|)``. ``monitor(state, workspace)`` may return
    ``(primal_objective, dual_objective)`` for recorded rows; ``callback``
    receives every recorded :class:`IterationRecord`.
    """
    policy = policy or StepPolicy.for_spec(spec)
    stop = stop or StoppingRule()
    injector = injector or ErrorInjector.none()
    beta = compute_beta(spec)
    if abs(policy.beta - beta) > BETA_RTOL * beta:
        raise ConfigurationError(f"policy beta {policy.beta!r} does not match the problem's {beta!r}")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")

    state = init or PrimalDualState.zeros(spec)
    state = PrimalDualState(
        spec.H.check(state.x, "x0"),
        tuple(b.space.check(v, f"v0[{i}]") for i, (b, v) in enumerate(zip(spec.blocks, state.v))),
        0,
    )
    if len(state.v) != spec.m:
        raise ShapeError(f"initial dual point has {len(state.v)} blocks, expected {spec.m}")
    report = SolveReport(final=state)
    use_errors = not injector.is_zero

    for n in range(stop.max_iter):
        gamma = policy.gamma(n)
        errors = injector.at(n, spec) if use_errors else None
        try:
            new, ws = expanded_step(spec, state, gamma, errors, report.evaluations)
        except DivergenceError as exc:
            logger.warning("diverged: %s", exc)
            report.termination = Termination.Diverged
            report.last_workspace = exc.workspace
            break
        report.gammas.append(gamma)
        primal, dual = residuals(state, ws)
        converged = max((primal,) + dual) <= stop.tol * (1.0 + float(np.linalg.norm(state.x)))
        if n % record_every == 0 or converged:
            row = _record(spec, state, ws, gamma, primal, dual, monitor)
            report.history.append(row)
            if callback is not None:
                callback(row)
        report.last_workspace = ws
        state = new
        report.final = state
        if converged:
            report.termination = Termination.ResidualTolerance
            break
        if new.to_block().norm() > stop.divergence_norm:
            report.termination = Termination.Diverged
            break

    if report.termination is not Termination.Diverged:
        report.kkt_residual = kkt_residual(spec, report.final)
    logger.debug("stopped after %d iterations: %s", report.iterations, report.termination.value)
    return report


def _record(spec, state, ws, gamma, primal, dual, monitor) -> IterationRecord:
    kkt = kkt_residual(spec, state)
    pobj = dobj = gap = None
    if monitor is not None:
        pobj, dobj = monitor(state, ws)
        if pobj is not None and dobj is not None:
            gap = pobj + dobj
    return IterationRecord(state.n, gamma, primal, dual, kkt, pobj, dobj, gap)


def make_block(B: ResolventOperator, D_inv: LipschitzOperator, L: LinearOperator, r=None, L_norm=None) -> Block:
    """Convenience constructor validating the ``(B, D^{-1})`` pair."""
    from .operators import parallel_sum_resolvent_pair

    op = parallel_sum_resolvent_pair(B, D_inv)
    if r is None:
        r = op.space.zeros()
    return Block(op, L, r, L_norm)


def two_block_problem(A, C, B, D_inv, L, z=None, r=None, L_norm=None) -> ProblemSpec:
    """The ``m = 1`` problem ``z in Ax + L^*((B □ D)(Lx - r)) + Cx``."""
    if z is None:
        z = A.space.zeros()
    return ProblemSpec(z, A, C, (make_block(B, D_inv, L, r, L_norm),))
