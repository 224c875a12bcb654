"""Ready-to-run problem documents for the standard special cases.

Data are drawn from fixed seeds and rounded to four decimals so that the
emitted files are short and stable.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError


def _rng(seed):
    return np.random.default_rng(seed)


def _r(a):
    return np.round(np.asarray(a, dtype=float), 4).tolist()


def classical_duality() -> dict:
    """Fenchel-Rockafellar pair: ``f(x) + g(Lx - r) - <x, z>`` with one block."""
    rng = _rng(11)
    return {
        "name": "classical_duality",
        "description": "f + g o (L . - r) - <., z>; f strongly convex quadratic, g = 0.5|.|_1",
        "dim": 4,
        "z": _r(rng.standard_normal(4)),
        "f": {"type": "quadratic", "diag": _r(1.0 + rng.random(4)), "b": _r(rng.standard_normal(4))},
        "h": {"type": "zero"},
        "blocks": [
            {
                "dim": 3,
                "g": {"type": "l1", "scale": 0.5},
                "l_star": {"type": "zero"},
                "L": _r(rng.standard_normal((3, 4))),
                "r": _r(rng.standard_normal(3)),
            }
        ],
    }


def yosida() -> dict:
    """``0 in A x + sum_i Yosida_rho_i(B_i) x`` through ``D_i = Id / rho_i``."""
    rng = _rng(12)
    return {
        "name": "yosida",
        "description": "A = grad of a quadratic, two Yosida-regularized subdifferentials, L = Id, z = r = 0",
        "dim": 3,
        "f": {"type": "quadratic", "diag": [1.0, 1.0, 1.0], "b": _r(2.0 * rng.standard_normal(3))},
        "h": {"type": "zero"},
        "blocks": [
            {
                "dim": 3,
                "g": {"type": "l1", "scale": 1.0},
                "l_star": {"type": "squared_distance", "scale": 0.5},
                "L": "identity",
            },
            {
                "dim": 3,
                "g": {"type": "ball", "radius": 0.5, "center": _r(rng.standard_normal(3))},
                "l_star": {"type": "squared_distance", "scale": 1.0},
                "L": "identity",
            },
        ],
    }


def tseng() -> dict:
    """``0 in A x + C x``: the dual block is switched off (``B = D^{-1} = 0``)."""
    rng = _rng(13)
    return {
        "name": "tseng",
        "description": "normal cone of [0,1]^4 plus the gradient of 2|. - c|^2/2; single inactive block",
        "dim": 4,
        "f": {"type": "box", "lower": 0.0, "upper": 1.0},
        "h": {"type": "squared_distance", "scale": 2.0, "center": _r(0.5 + rng.standard_normal(4))},
        "blocks": [
            {"dim": 4, "g": {"type": "zero"}, "l_star": {"type": "zero"}, "L": "identity"},
        ],
    }


def data_fit() -> dict:
    """Quadratic data fit: ``sum_i g_i(L_i x - r_i) + |x - z|^2 / 2`` with ``A = 0``, ``C = Id``."""
    rng = _rng(7)
    z = _r(2.0 * rng.standard_normal(5))
    L2 = _r(rng.standard_normal((3, 5)))
    r2 = _r(rng.standard_normal(3))
    return {
        "name": "data_fit",
        "description": "|x|_1 + indicator of {x : |L2 x - r2| <= 1} + |x - z|^2/2 (up to the constant |z|^2/2)",
        "dim": 5,
        "z": z,
        "f": {"type": "zero"},
        "h": {"type": "squared_distance", "scale": 1.0},
        "blocks": [
            {"dim": 5, "g": {"type": "l1", "scale": 1.0}, "l_star": {"type": "zero"}, "L": "identity"},
            {
                "dim": 3,
                "g": {"type": "ball", "radius": 1.0},
                "l_star": {"type": "zero"},
                "L": L2,
                "r": r2,
            },
        ],
    }


def composite() -> dict:
    """Composite minimization with ``l_i = indicator of {0}`` so that ``g_i □ l_i = g_i``."""
    rng = _rng(14)
    return {
        "name": "composite",
        "description": "box indicator + |L1 x - r1|_1 + |L2 x - r2|_2 + |x - c|^2/2 - <x, z>",
        "dim": 4,
        "z": _r(rng.standard_normal(4)),
        "f": {"type": "box", "lower": -2.0, "upper": 2.0},
        "h": {"type": "squared_distance", "scale": 1.0, "center": _r(rng.standard_normal(4))},
        "blocks": [
            {
                "dim": 3,
                "g": {"type": "l1", "scale": 1.0},
                "l_star": {"type": "zero"},
                "L": _r(rng.standard_normal((3, 4))),
                "r": _r(rng.standard_normal(3)),
            },
            {
                "dim": 2,
                "g": {"type": "l2", "scale": 1.0},
                "l_star": {"type": "zero"},
                "L": _r(rng.standard_normal((2, 4))),
                "r": _r(rng.standard_normal(2)),
            },
        ],
    }


TEMPLATES = {
    "classical_duality": classical_duality,
    "yosida": yosida,
    "tseng": tseng,
    "data_fit": data_fit,
    "composite": composite,
}


def names() -> list[str]:
    return list(TEMPLATES)


def get(name: str) -> dict:
    try:
        return TEMPLATES[name]()
    except KeyError:
        raise ConfigurationError(f"unknown template {name!r}; choose from {', '.join(TEMPLATES)}") from None
