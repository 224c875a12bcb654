"""JSON problem files: schema, loading and property validation.

A problem file composes catalog functions into a minimization problem::

    {
      "name": "lasso",
      "dim": 6,
      "z": [...],                                  # optional, default 0
      "f": {"type": "zero"},
      "h": {"type": "squared_distance", "center": [...]},
      "blocks": [
        {"dim": 6, "g": {"type": "l1", "scale": 0.7},
         "l_star": {"type": "zero"}, "L": "identity", "r": [...]}
      ],
      "solver": {"tol": 1e-8, "max_iter": 100000, "gamma": "max",
                 "seed": 0, "inject": "none"}
    }

A document may instead name a template, ``{"template": "yosida", ...}``,
with any other top-level keys overriding the template's.

``L`` is ``"identity"`` or a row-major dense matrix. Smooth functions accept
a ``lipschitz`` entry overriding the catalog constant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema
import numpy as np

from . import prox, templates
from .linalg import LinearOperator, check_adjoint
from .minimize import MinBlock, MinimizationSpec
from .operators import LipschitzOperator, check_monotone, firm_nonexpansiveness_violation

PROX_TYPES = {
    "zero": (),
    "linear": ("a",),
    "quadratic": ("diag", "?b"),
    "l1": ("?scale",),
    "l2": ("?scale",),
    "box": ("lower", "upper"),
    "ball": ("?radius", "?center"),
    "hyperplane": ("a", "offset"),
    "nonnegative": (),
    "zero_indicator": (),
    "huber": ("?rho",),
}

SMOOTH_TYPES = {
    "zero": (),
    "linear": ("a",),
    "squared_distance": ("?scale", "?center"),
    "quadratic": ("diag", "?b"),
    "huber": ("?rho",),
}

INJECT_PRESETS = ("none", "spike", "decay")

_number = {"type": "number"}
_vector = {"type": "array", "items": _number, "minItems": 1}
_scalar_or_vector = {"oneOf": [_number, _vector]}


def _function_schema(types):
    return {
        "type": "object",
        "required": ["type"],
        "properties": {
            "type": {"enum": sorted(types)},
            "a": _vector,
            "b": _scalar_or_vector,
            "diag": _vector,
            "scale": _number,
            "radius": {"type": "number", "minimum": 0},
            "center": _scalar_or_vector,
            "lower": _scalar_or_vector,
            "upper": _scalar_or_vector,
            "offset": _number,
            "rho": {"type": "number", "exclusiveMinimum": 0},
            "lipschitz": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    }


SCHEMA = {
    "type": "object",
    "required": ["dim", "f", "h", "blocks"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "z": _vector,
        "f": _function_schema(PROX_TYPES),
        "h": _function_schema(SMOOTH_TYPES),
        "blocks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["dim", "g", "l_star", "L"],
                "properties": {
                    "dim": {"type": "integer", "minimum": 1},
                    "g": _function_schema(PROX_TYPES),
                    "l_star": _function_schema(SMOOTH_TYPES),
                    "L": {
                        "oneOf": [
                            {"const": "identity"},
                            {"type": "array", "minItems": 1, "items": _vector},
                        ]
                    },
                    "L_norm": {"type": "number", "exclusiveMinimum": 0},
                    "r": _vector,
                },
                "additionalProperties": False,
            },
        },
        "solver": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "minimum": 0},
                "max_iter": {"type": "integer", "minimum": 0},
                "gamma": {"oneOf": [{"const": "max"}, {"type": "number", "exclusiveMinimum": 0}]},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer"},
                "inject": {"enum": list(INJECT_PRESETS)},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ProblemFileError(ValueError):
    """Schema or consistency violation, with a JSON path to the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 100_000
    gamma: float | None = None
    epsilon: float | None = None
    seed: int = 0
    inject: str = "none"


@dataclass(frozen=True)
class LoadedProblem:
    spec: MinimizationSpec
    options: SolverOptions
    name: str
    document: dict


def read_document(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError("$", f"cannot read file: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError("$", f"invalid JSON: {exc}") from exc


def _json_path(error) -> str:
    path = "$"
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def check_schema(doc) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ProblemFileError(_json_path(err), err.message)


def _vec(node, key, dim, path, default=None):
    if key not in node:
        if default is None:
            raise ProblemFileError(f"{path}.{key}", "required field missing")
        return np.full(dim, float(default))
    val = np.asarray(node[key], dtype=float)
    if val.ndim == 0:
        return np.full(dim, float(val))
    if val.shape != (dim,):
        raise ProblemFileError(f"{path}.{key}", f"length {val.size}, expected {dim}")
    return val


def _check_params(node, table, path):
    allowed = {p.lstrip("?") for p in table[node["type"]]} | {"type", "lipschitz"}
    for key in node:
        if key not in allowed:
            raise ProblemFileError(f"{path}.{key}", f"not a parameter of {node['type']!r}")
    for p in table[node["type"]]:
        if not p.startswith("?") and p not in node:
            raise ProblemFileError(f"{path}.{p}", f"required by {node['type']!r}")


def build_prox(node, dim, path) -> prox.ProxFunction:
    _check_params(node, PROX_TYPES, path)
    if "lipschitz" in node:
        raise ProblemFileError(f"{path}.lipschitz", "only smooth functions take a Lipschitz constant")
    kind = node["type"]
    if kind == "zero":
        return prox.zero(dim)
    if kind == "linear":
        return prox.linear(_vec(node, "a", dim, path))
    if kind == "quadratic":
        return prox.quadratic(_vec(node, "diag", dim, path), _vec(node, "b", dim, path, 0.0))
    if kind == "l1":
        return prox.l1_norm(dim, node.get("scale", 1.0))
    if kind == "l2":
        return prox.l2_norm(dim, node.get("scale", 1.0))
    if kind == "box":
        lo, hi = _vec(node, "lower", dim, path), _vec(node, "upper", dim, path)
        if np.any(lo > hi):
            raise ProblemFileError(path, "lower exceeds upper")
        return prox.box(dim, lo, hi)
    if kind == "ball":
        return prox.ball(dim, node.get("radius", 1.0), _vec(node, "center", dim, path, 0.0))
    if kind == "hyperplane":
        a = _vec(node, "a", dim, path)
        if not np.any(a):
            raise ProblemFileError(f"{path}.a", "normal vector must be nonzero")
        return prox.hyperplane(a, node["offset"])
    if kind == "nonnegative":
        return prox.nonnegative(dim)
    if kind == "zero_indicator":
        return prox.zero_indicator(dim)
    if kind == "huber":
        return prox.huber(dim, node.get("rho", 1.0))
    raise ProblemFileError(f"{path}.type", f"unknown function {kind!r}")


def build_smooth(node, dim, path) -> prox.SmoothFunction:
    _check_params(node, SMOOTH_TYPES, path)
    kind = node["type"]
    if kind == "zero":
        fn = prox.smooth_zero(dim)
    elif kind == "linear":
        fn = prox.smooth_linear(_vec(node, "a", dim, path))
    elif kind == "squared_distance":
        scale = node.get("scale", 1.0)
        if not scale > 0:
            raise ProblemFileError(f"{path}.scale", "must be positive")
        fn = prox.squared_distance(dim, scale, _vec(node, "center", dim, path, 0.0))
    elif kind == "quadratic":
        fn = prox.smooth_quadratic(_vec(node, "diag", dim, path), _vec(node, "b", dim, path, 0.0))
    elif kind == "huber":
        fn = prox.smooth_huber(dim, node.get("rho", 1.0))
    else:
        raise ProblemFileError(f"{path}.type", f"unknown function {kind!r}")
    if "lipschitz" in node:
        fn = replace(fn, lipschitz_constant=float(node["lipschitz"]))
    return fn


def _build_L(node, dim, gdim, path) -> LinearOperator:
    L = node["L"]
    if L == "identity":
        if gdim != dim:
            raise ProblemFileError(f"{path}.L", f"identity needs block dim {dim}, got {gdim}")
        return LinearOperator.identity(dim)
    rows = [len(r) for r in L]
    if len(rows) != gdim or any(c != dim for c in rows):
        raise ProblemFileError(f"{path}.L", f"matrix must be {gdim}x{dim}")
    M = np.asarray(L, dtype=float)
    if not np.any(M):
        raise ProblemFileError(f"{path}.L", "linear operator must be nonzero")
    return LinearOperator.from_matrix(M, node.get("L_norm"))


def expand_template(doc):
    """Replace ``{"template": name, ...}`` by the named template, other keys overriding."""
    if not isinstance(doc, dict) or "template" not in doc:
        return doc
    name = doc["template"]
    if not isinstance(name, str) or name not in templates.TEMPLATES:
        raise ProblemFileError("$.template", f"unknown template {name!r}")
    base = templates.get(name)
    base.update({k: v for k, v in doc.items() if k != "template"})
    return base


def build(doc: dict) -> LoadedProblem:
    """Validate a parsed document and build the minimization problem."""
    doc = expand_template(doc)
    check_schema(doc)
    dim = doc["dim"]
    z = _vec(doc, "z", dim, "$", 0.0)
    f = build_prox(doc["f"], dim, "$.f")
    h = build_smooth(doc["h"], dim, "$.h")
    blocks = []
    for i, node in enumerate(doc["blocks"]):
        path = f"$.blocks[{i}]"
        gdim = node["dim"]
        blocks.append(
            MinBlock(
                build_prox(node["g"], gdim, f"{path}.g"),
                build_smooth(node["l_star"], gdim, f"{path}.l_star"),
                _build_L(node, dim, gdim, path),
                _vec(node, "r", gdim, path, 0.0),
                node.get("L_norm"),
            )
        )
    s = doc.get("solver", {})
    gamma = s.get("gamma", "max")
    options = SolverOptions(
        tol=float(s.get("tol", 1e-8)),
        max_iter=int(s.get("max_iter", 100_000)),
        gamma=None if gamma == "max" else float(gamma),
        epsilon=s.get("epsilon"),
        seed=int(s.get("seed", 0)),
        inject=s.get("inject", "none"),
    )
    spec = MinimizationSpec(z, f, h, tuple(blocks))
    return LoadedProblem(spec, options, doc.get("name", "problem"), doc)


def load(path) -> LoadedProblem:
    return build(read_document(path))


# --- property sampling ---------------------------------------------------

@dataclass(frozen=True)
class PropertyResult:
    where: str
    prop: str
    worst: float
    limit: float
    ok: bool

    def describe(self) -> str:
        status = "ok" if self.ok else "FAILED"
        return f"{status:6s} {self.prop:18s} {self.where:24s} worst={self.worst:.3e} limit={self.limit:.1e}"


MOREAU_TOL = 1e-9
FIRM_TOL = 1e-9
ADJOINT_TOL = 1e-10


def check_properties(spec: MinimizationSpec, seed: int = 0, samples: int = 100) -> list[PropertyResult]:
    """Sample the operator properties the convergence theory relies on."""
    results = []

    def smooth_checks(fn, where):
        op = LipschitzOperator(fn.space, fn.gradient, fn.lipschitz_constant, fn.name)
        rep = check_monotone(op, samples, seed)
        results.append(PropertyResult(where, "monotone", -rep.min_inner, 1e-9, rep.monotone))
        results.append(PropertyResult(where, "lipschitz", rep.max_ratio, fn.lipschitz_constant + 1e-9, rep.lipschitz))
        if fn.value is not None:
            g = prox.gradient_check(fn, samples=10, seed=seed)
            results.append(PropertyResult(where, "gradient", g.max_relative_error, g.tolerance, g.ok))

    def prox_checks(fn, where):
        rng = np.random.default_rng(seed)
        worst = 0.0
        if fn.conjugate_prox is not None:
            for gamma in (0.1, 1.0, 10.0):
                for _ in range(samples):
                    y = 3.0 * rng.standard_normal(fn.space.dim)
                    worst = max(worst, prox.moreau_residual(fn, gamma, y) / (1 + np.linalg.norm(y)))
            results.append(PropertyResult(where, "moreau", worst, MOREAU_TOL, worst <= MOREAU_TOL))
        fne = firm_nonexpansiveness_violation(fn.prox, fn.space, samples=samples, seed=seed, scale=3.0)
        results.append(PropertyResult(where, "firm_nonexpansive", fne, FIRM_TOL, fne <= FIRM_TOL))

    prox_checks(spec.f, "f")
    smooth_checks(spec.h, "h")
    for i, b in enumerate(spec.blocks, start=1):
        prox_checks(b.g, f"blocks[{i - 1}].g")
        smooth_checks(b.l_star, f"blocks[{i - 1}].l_star")
        adj = check_adjoint(b.L, samples, seed)
        results.append(PropertyResult(f"blocks[{i - 1}].L", "adjoint", adj, ADJOINT_TOL, adj <= ADJOINT_TOL))
    return results


def dump(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"
