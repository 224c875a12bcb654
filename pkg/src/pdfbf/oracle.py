"""Reference solvers for small problems, used to produce ground truth.

Nothing here imports the splitting solver or the prox catalog; the point
is to have answers computed along a different route.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InfeasibleError

MAX_GRID_DIM = 3
MAX_GRID_RESOLUTION = 401


def soft_threshold_oracle(z, lam: float) -> np.ndarray:
    """Exact minimizer of ``lam*|x|_1 + ½|x - z|^2``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    for j, zj in enumerate(z):
        if zj > lam:
            out[j] = zj - lam
        elif zj < -lam:
            out[j] = zj + lam
    return out


def grid_oracle(
    objective: Callable[[np.ndarray], float],
    box: Sequence[tuple[float, float]],
    resolution: int = 201,
) -> np.ndarray:
    """Exhaustive grid search followed by one golden-section pass per axis.

    ``box`` lists ``(low, high)`` per coordinate. Objective values may be
    ``+inf``; the refinement never leaves the grid cell around the best
    node.
    """
    dim = len(box)
    if not 1 <= dim <= MAX_GRID_DIM:
        raise ValueError(f"grid oracle supports 1 to {MAX_GRID_DIM} dimensions")
    if not 2 <= resolution <= MAX_GRID_RESOLUTION:
        raise ValueError(f"resolution must lie in [2, {MAX_GRID_RESOLUTION}]")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
    best_val, best = math.inf, None
    for point in itertools.product(*axes):
        val = objective(np.array(point))
        if val < best_val:
            best_val, best = val, np.array(point)
    if best is None:
        raise InfeasibleError("objective is +inf on every grid node")

    steps = [(hi - lo) / (resolution - 1) for lo, hi in box]
    x = best.copy()
    for j in range(dim):
        lo = max(box[j][0], x[j] - steps[j])
        hi = min(box[j][1], x[j] + steps[j])
        if hi <= lo:
            continue

        def along(t, j=j):
            trial = x.copy()
            trial[j] = t
            val = objective(trial)
            return 1e300 if math.isinf(val) else val

        res = minimize_scalar(along, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if res.fun <= along(x[j]):
            x[j] = res.x
    return x


def subgradient_oracle(
    objective: Callable[[np.ndarray], float],
    subgradient: Callable[[np.ndarray], np.ndarray],
    x0,
    iterations: int = 100_000,
    c: float = 1.0,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Subgradient descent with steps ``c/sqrt(n+1)``; returns the best iterate.

    ``project``, if given, maps each iterate back onto a closed convex set
    (projected subgradient method).
    """
    x = np.array(x0, dtype=float)
    if project is not None:
        x = project(x)
    best, best_val = x.copy(), objective(x)
    for n in range(iterations):
        x = x - (c / math.sqrt(n + 1)) * subgradient(x)
        if project is not None:
            x = project(x)
        val = objective(x)
        if val < best_val:
            best, best_val = x.copy(), val
    return best


def ellipsoid_projector(L, center, radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Euclidean projection onto ``{x : |L x - center| <= radius}``.

    With ``L^T L = Q diag(lam) Q^T`` and ``u = Q^T x`` the KKT point is
    ``u(t) = (Q^T y + t s) / (1 + t lam)``, ``s = Q^T L^T c``, for the
    multiplier ``t >= 0`` solving ``|L x(t) - c| = radius``. The root is
    found by Newton's method on ``1/radius - 1/|L x(t) - c|`` safeguarded
    by bisection.
    """
    L = np.asarray(L, dtype=float)
    c = np.asarray(center, dtype=float)
    lam, Q = np.linalg.eigh(L.T @ L)
    lam = np.maximum(lam, 0.0)
    s = Q.T @ (L.T @ c)
    LQ = L @ Q

    def dist_and_slope(t, w):
        denom = 1.0 + t * lam
        u = (w + t * s) / denom
        du = (s - lam * w) / denom ** 2
        d = float(np.linalg.norm(LQ @ u - c))
        dsq = float(2 * (lam * u - s) @ du)
        return d, u, (0.5 * dsq / d if d > 0 else 0.0)

    def project(y):
        y = np.asarray(y, dtype=float)
        w = Q.T @ y
        d, u, _ = dist_and_slope(0.0, w)
        if d <= radius:
            return y.copy()
        lo, hi = 0.0, 1.0
        while dist_and_slope(hi, w)[0] > radius:
            lo, hi = hi, 4.0 * hi
            if hi > 1e16:
                raise InfeasibleError("ellipsoid projection: set appears empty")
        t = lo
        for _ in range(100):
            d, u, slope = dist_and_slope(t, w)
            if abs(d - radius) <= 1e-13 * radius or hi - lo <= 1e-15 * hi:
                break
            if d > radius:
                lo = t
            else:
                hi = t
            # Newton step on 1/radius - 1/d(t); d is decreasing in t
            step = (1.0 / radius - 1.0 / d) / (slope / (d * d)) if slope < 0 else math.inf
            t_new = t - step
            t = t_new if lo < t_new < hi else 0.5 * (lo + hi)
        return Q @ u

    return project
