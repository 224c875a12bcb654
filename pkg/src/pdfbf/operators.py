"""Monotone operators represented through resolvents or forward evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import ShapeError

MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class ResolventOperator:
    """A (set-valued) maximally monotone operator ``B`` known through ``J_{gamma B}``.

    ``resolvent(gamma, y)`` must be exact. ``inverse_resolvent(gamma, y)``,
    when given, is an independent closed form of ``J_{gamma B^{-1}}``;
    otherwise :func:`resolvent_of_inverse` derives it.
    """

    space: Any
    resolvent: Callable[[float, np.ndarray], np.ndarray]
    inverse_resolvent: Callable[[float, np.ndarray], np.ndarray] | None = None
    name: str = "B"

    def __call__(self, gamma, y):
        return self.resolvent(gamma, y)

    def inverse(self) -> "ResolventOperator":
        """The operator ``B^{-1}``, whose resolvent is ``J_{gamma B^{-1}}``."""
        return ResolventOperator(
            self.space,
            lambda gamma, y: resolvent_of_inverse(self, gamma, y),
            self.resolvent,
            f"{self.name}^-1",
        )


@dataclass(frozen=True)
class LipschitzOperator:
    """A single-valued monotone operator with a declared Lipschitz constant."""

    space: Any
    apply: Callable[[Any], Any]
    lipschitz_constant: float
    name: str = "T"

    def __post_init__(self):
        if not self.lipschitz_constant >= 0:
            raise ValueError(f"{self.name}: Lipschitz constant must be nonnegative")

    def __call__(self, x):
        return self.apply(x)


def resolvent_of_inverse(B: ResolventOperator, gamma: float, y: np.ndarray) -> np.ndarray:
    """``J_{gamma B^{-1}}(y) = y - gamma J_{B/gamma}(y/gamma)``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    y = np.asarray(y, dtype=float)
    return y - gamma * B.resolvent(1.0 / gamma, y / gamma)


def inverse_resolvent(B: ResolventOperator, gamma: float, y: np.ndarray) -> np.ndarray:
    """``J_{gamma B^{-1}}(y)``, preferring a supplied closed form."""
    if B.inverse_resolvent is not None:
        return B.inverse_resolvent(gamma, y)
    return resolvent_of_inverse(B, gamma, y)


def yosida(B: ResolventOperator, rho: float, y: np.ndarray) -> np.ndarray:
    """Yosida approximation ``(y - J_{rho B}(y)) / rho``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    y = np.asarray(y, dtype=float)
    return (y - B.resolvent(rho, y)) / rho


@dataclass(frozen=True)
class ParallelSum:
    """The pair ``(B, D^{-1})`` standing for ``B □ D``.

    ``B □ D`` itself is never evaluated; the solver only needs
    ``J_{gamma B^{-1}}`` and forward steps of ``D^{-1}``.
    """

    B: ResolventOperator
    D_inv: LipschitzOperator

    @property
    def space(self):
        return self.B.space

    @property
    def nu(self) -> float:
        return self.D_inv.lipschitz_constant

    def inverse_resolvent(self, gamma, y):
        return inverse_resolvent(self.B, gamma, y)


def parallel_sum_resolvent_pair(B: ResolventOperator, D_inv: LipschitzOperator) -> ParallelSum:
    if B.space != D_inv.space:
        raise ShapeError(f"parallel sum of operators on {B.space} and {D_inv.space}")
    return ParallelSum(B, D_inv)


# --- small catalog -------------------------------------------------------

def zero_resolvent(space) -> ResolventOperator:
    """The zero operator: ``J = Id`` and ``J_{gamma 0^{-1}} = 0``."""
    return ResolventOperator(
        space,
        lambda gamma, y: np.array(y, dtype=float),
        lambda gamma, y: np.zeros_like(np.asarray(y, dtype=float)),
        "zero",
    )


def identity_resolvent(space) -> ResolventOperator:
    """``B = Id``, so ``J_{gamma B} = J_{gamma B^{-1}} = y / (1 + gamma)``."""
    f = lambda gamma, y: np.asarray(y, dtype=float) / (1.0 + gamma)  # noqa: E731
    return ResolventOperator(space, f, f, "identity")


def subdifferential(f) -> ResolventOperator:
    """``∂f`` of a :class:`~pdfbf.prox.ProxFunction`; the inverse uses ``prox_{gamma f*}``."""
    return ResolventOperator(f.space, f.prox, f.conjugate_prox, f"∂{f.name}")


def zero_operator(space) -> LipschitzOperator:
    return LipschitzOperator(space, lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0, "zero")


def linear_monotone(matrix, lipschitz: float | None = None, name="linear") -> LipschitzOperator:
    """``x -> M x`` for a matrix with positive semidefinite symmetric part."""
    from .linalg import Space

    M = np.array(matrix, dtype=float)
    M.setflags(write=False)
    if lipschitz is None:
        lipschitz = float(np.linalg.norm(M, 2))
    return LipschitzOperator(Space(M.shape[0]), M.dot, lipschitz, name)


def scaled_identity_operator(space, scale: float) -> LipschitzOperator:
    scale = float(scale)
    return LipschitzOperator(space, lambda x: scale * np.asarray(x, dtype=float), abs(scale), f"{scale}*Id")


# --- sampled property checks ---------------------------------------------

@dataclass(frozen=True)
class MonotoneReport:
    min_inner: float
    max_ratio: float
    lipschitz_constant: float
    worst_inner_pair: tuple | None
    worst_ratio_pair: tuple | None

    @property
    def monotone(self) -> bool:
        return self.min_inner >= -MONOTONE_TOL

    @property
    def lipschitz(self) -> bool:
        return self.max_ratio <= self.lipschitz_constant + MONOTONE_TOL

    @property
    def violation(self) -> str | None:
        if not self.monotone:
            return "monotone"
        if not self.lipschitz:
            return "lipschitz"
        return None

    @property
    def ok(self) -> bool:
        return self.violation is None


def check_monotone(T: LipschitzOperator, samples: int = 100, seed: int = 0) -> MonotoneReport:
    """Sample pairs and record ``min <x-y, Tx-Ty>`` and ``max |Tx-Ty|/|x-y|``.

    The inner products are normalised by ``|x-y|^2`` so the monotonicity
    tolerance does not depend on the sampling scale.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    space = T.space
    min_inner, max_ratio = np.inf, 0.0
    worst_inner = worst_ratio = None
    for _ in range(samples):
        x, y = space.random(rng), space.random(rng)
        d = x - y
        dn2 = space.inner(d, d)
        if dn2 == 0.0:
            continue
        Td = T.apply(x) - T.apply(y)
        ip = space.inner(d, Td) / dn2
        ratio = np.sqrt(space.inner(Td, Td) / dn2)
        if ip < min_inner:
            min_inner, worst_inner = ip, (x, y)
        if ratio > max_ratio:
            max_ratio, worst_ratio = ratio, (x, y)
    return MonotoneReport(float(min_inner), float(max_ratio), T.lipschitz_constant, worst_inner, worst_ratio)


def firm_nonexpansiveness_violation(
    resolvent: Callable[[float, np.ndarray], np.ndarray],
    space,
    gammas=(0.1, 1.0, 10.0),
    samples: int = 100,
    seed: int = 0,
    scale: float = 1.0,
) -> float:
    """Largest ``|Jy - Jy'|^2 - <y - y', Jy - Jy'>`` over random pairs."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for gamma in gammas:
        for _ in range(samples):
            y, y2 = scale * space.random(rng), scale * space.random(rng)
            dJ = resolvent(gamma, y) - resolvent(gamma, y2)
            worst = max(worst, space.inner(dJ, dJ) - space.inner(y - y2, dJ))
    return float(worst)
