"""Finite-dimensional real Hilbert spaces, block vectors and linear maps.

Vectors are plain 1-d float64 numpy arrays; a :class:`Space` only carries
the dimension and validates arrays against it. Elements of a product space
``H + G_1 + ... + G_m`` are :class:`BlockVector` instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import OperatorNormError, ShapeError

NORM_SAFETY = 1.01


@dataclass(frozen=True)
class Space:
    """The coordinate space R^dim."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ShapeError(f"space dimension must be a positive integer, got {self.dim!r}")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim)

    def check(self, x, name="vector") -> np.ndarray:
        """Return ``x`` as a float array, raising ShapeError on a bad shape or non-finite entry."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 and self.dim == 1:
            arr = arr.reshape(1)
        if arr.shape != (self.dim,):
            raise ShapeError(f"{name} has shape {arr.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(arr)):
            raise ShapeError(f"{name} has non-finite entries")
        return arr

    def inner(self, u, v) -> float:
        return inner(u, v)

    def norm(self, u) -> float:
        return float(np.linalg.norm(u))


def inner(u, v) -> float:
    """Euclidean scalar product of two vectors of the same length."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ShapeError(f"inner product of shapes {u.shape} and {v.shape}")
    return float(np.dot(u, v))


class BlockVector:
    """An element ``(u_0, u_1, ..., u_m)`` of a product space.

    Supports addition, subtraction, negation and scalar multiplication
    block by block. Reductions run over blocks in ascending order.
    """

    __slots__ = ("blocks",)

    def __init__(self, blocks: Iterable):
        self.blocks = tuple(np.asarray(b, dtype=float) for b in blocks)

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def __iter__(self):
        return iter(self.blocks)

    def __repr__(self):
        return f"BlockVector({[b.tolist() for b in self.blocks]})"

    def _check_structure(self, other):
        if not isinstance(other, BlockVector):
            raise TypeError(f"expected BlockVector, got {type(other).__name__}")
        if len(self) != len(other) or any(
            a.shape != b.shape for a, b in zip(self.blocks, other.blocks)
        ):
            raise ShapeError("block structures differ")

    def __add__(self, other):
        self._check_structure(other)
        return BlockVector(a + b for a, b in zip(self.blocks, other.blocks))

    def __sub__(self, other):
        self._check_structure(other)
        return BlockVector(a - b for a, b in zip(self.blocks, other.blocks))

    def __neg__(self):
        return BlockVector(-a for a in self.blocks)

    def __mul__(self, scalar):
        return BlockVector(scalar * a for a in self.blocks)

    __rmul__ = __mul__

    def inner(self, other) -> float:
        return block_inner(self, other)

    def norm(self) -> float:
        return math.sqrt(block_inner(self, self))

    def flat(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(b)) for b in self.blocks)


def block_inner(u: BlockVector, v: BlockVector) -> float:
    """Sum of blockwise scalar products, accumulated left to right."""
    u._check_structure(v)
    total = 0.0
    for a, b in zip(u.blocks, v.blocks):
        total += float(np.dot(a, b))
    return total


@dataclass(frozen=True)
class ProductSpace:
    """``factors[0] + factors[1] + ...``; elements are BlockVectors."""

    factors: tuple[Space, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ShapeError("product space needs at least one factor")

    @property
    def dim(self) -> int:
        return sum(s.dim for s in self.factors)

    def zeros(self) -> BlockVector:
        return BlockVector(s.zeros() for s in self.factors)

    def random(self, rng: np.random.Generator) -> BlockVector:
        return BlockVector(s.random(rng) for s in self.factors)

    def check(self, x, name="block vector") -> BlockVector:
        blocks = list(x)
        if len(blocks) != len(self.factors):
            raise ShapeError(f"{name} has {len(blocks)} blocks, expected {len(self.factors)}")
        return BlockVector(
            s.check(b, f"{name}[{i}]") for i, (s, b) in enumerate(zip(self.factors, blocks))
        )

    def split(self, flat) -> BlockVector:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.dim,):
            raise ShapeError(f"flat vector has shape {flat.shape}, expected ({self.dim},)")
        offsets = np.cumsum([0] + [s.dim for s in self.factors])
        return BlockVector(flat[a:b] for a, b in zip(offsets[:-1], offsets[1:]))

    def inner(self, u, v) -> float:
        return block_inner(u, v)

    def norm(self, u) -> float:
        return u.norm()


@dataclass(frozen=True)
class LinearOperator:
    """A bounded linear map ``domain -> codomain`` together with its adjoint.

    ``norm`` is an optional exact value of the operator norm; when absent,
    :func:`operator_norm` estimates it.
    """

    domain: Space
    codomain: Space
    apply: Callable[[np.ndarray], np.ndarray]
    apply_adjoint: Callable[[np.ndarray], np.ndarray]
    norm: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __call__(self, x):
        return self.apply(x)

    @property
    def T(self) -> "LinearOperator":
        return LinearOperator(
            self.codomain,
            self.domain,
            self.apply_adjoint,
            self.apply,
            self.norm,
            None if self.matrix is None else self.matrix.T,
        )

    @classmethod
    def from_matrix(cls, matrix, norm: float | None = None) -> "LinearOperator":
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or 0 in M.shape:
            raise ShapeError(f"matrix must be 2-d and non-empty, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ShapeError("matrix has non-finite entries")
        M.setflags(write=False)
        return cls(Space(M.shape[1]), Space(M.shape[0]), M.dot, M.T.dot, norm, M)

    @classmethod
    def identity(cls, dim: int) -> "LinearOperator":
        ident = lambda x: np.array(x, dtype=float)  # noqa: E731
        return cls(Space(dim), Space(dim), ident, ident, 1.0, np.eye(dim))

    @classmethod
    def scaled_identity(cls, dim: int, scale: float) -> "LinearOperator":
        scale = float(scale)
        f = lambda x: scale * np.asarray(x, dtype=float)  # noqa: E731
        return cls(Space(dim), Space(dim), f, f, abs(scale), scale * np.eye(dim))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix of the map, built column by column if not stored."""
        if self.matrix is not None:
            return np.array(self.matrix)
        cols = [self.apply(e) for e in np.eye(self.domain.dim)]
        return np.column_stack(cols)


def check_adjoint(L: LinearOperator, samples: int = 100, seed: int = 0) -> float:
    """Largest ``|<Lx,y> - <x,L*y>| / (1 + |x||y|)`` over random pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = L.domain.random(rng)
        y = L.codomain.random(rng)
        lhs = inner(L.apply(x), y)
        rhs = inner(x, L.apply_adjoint(y))
        scale = 1.0 + np.linalg.norm(x) * np.linalg.norm(y)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def operator_norm(
    L: LinearOperator,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int = 0,
    safety: float = NORM_SAFETY,
) -> float:
    """Upper-biased estimate of the largest singular value of ``L``.

    Runs power iteration on ``L*L`` until the relative change of the
    Rayleigh-quotient estimate drops below ``tol``, then multiplies the
    square root by ``safety``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    x = L.domain.random(rng)
    x /= np.linalg.norm(x)
    sigma2 = None
    for _ in range(max_iter):
        w = L.apply_adjoint(L.apply(x))
        est = float(np.dot(x, w))
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0
        if sigma2 is not None and abs(est - sigma2) <= tol * abs(est):
            return safety * math.sqrt(max(est, 0.0))
        sigma2 = est
        x = w / wn
    best = safety * math.sqrt(max(sigma2 or 0.0, 0.0))
    raise OperatorNormError(f"power iteration did not converge in {max_iter} iterations", best)


def resolve_norm(L: LinearOperator, **kwargs) -> float:
    """``L.norm`` if supplied, else a power-iteration estimate."""
    if L.norm is not None:
        return float(L.norm)
    return operator_norm(L, **kwargs)


def adjoint_sum(ops: Sequence[LinearOperator], vectors: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_i L_i^* v_i`` accumulated in ascending ``i``."""
    total = ops[0].apply_adjoint(vectors[0])
    for L, v in zip(ops[1:], vectors[1:]):
        total = total + L.apply_adjoint(v)
    return total
