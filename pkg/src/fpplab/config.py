"""Experiment configuration: a flat key = value format (TOML subset).

Grammar, per line:

    key = value          # comment
    value := integer | float | true | false | "string" | [v, v, ...]

Unknown keys are rejected; every violation names the key and the rule it
breaks.  See the README for the per-experiment key tables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import groups
from .errors import ConfigError
from .weights import (DistributionSpec, shifted_exponential, two_point,
                      uniform, validate_distribution)

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")

GROUP_KEYS = ("group", "d", "r_reg", "left", "left_d", "left_r_reg",
              "right", "right_d", "right_r_reg")
DIST_KEYS = ("dist", "a", "b", "p_a", "rate")
COMMON_OPTIONAL = {"workers": int, "out": str, "experiment": str}

#: experiment name -> (required params, optional params); values are types,
#: where "element" means a coordinate array and "grid" an integer array
EXPERIMENT_PARAMS: Dict[str, Tuple[Dict[str, object], Dict[str, object]]] = {
    "ball": ({"radius": int}, {"horizon": float}),
    "distance": ({"x": "element", "y": "element"}, {}),
    "mean": ({"x": "element", "y": "element", "replicas": int}, {}),
    "tail": ({"x": "element", "y": "element", "replicas": int},
             {"u_grid": "float_grid"}),
    "variance-scan": ({"g": "element", "n_grid": "grid", "replicas": int}, {}),
    "fluctuation-scan": ({"r_grid": "grid", "pair_samples": int,
                          "replicas": int}, {}),
    "midpoint": ({"x": "element", "y": "element", "lam": float,
                  "replicas": int}, {}),
    "subdivision": ({"x": "element", "y": "element", "k": int,
                     "replicas": int}, {"alpha0": float}),
    "tree-search": ({"radius": int, "budget": int, "eps": float},
                    {"segment_len": int}),
    "shape-scan": ({"r": float, "n_grid": "grid"}, {"control": bool}),
    "l1-compare": ({"weight": float, "n": int}, {}),
    "gh-check": ({"n": int, "eps": float, "pair_samples": int,
                  "replicas": int}, {}),
    "direction": ({"g": "element", "n_grid": "grid", "replicas": int}, {}),
}

#: experiments that run without an edge-length law
NO_DIST = frozenset({"ball", "l1-compare"})

EXPERIMENTS = tuple(EXPERIMENT_PARAMS)


@dataclass
class ExperimentConfig:
    experiment: str
    group: groups.GroupSpec
    dist: Optional[DistributionSpec]
    seed: int
    workers: int
    out: str
    params: Dict[str, object]
    echo: Dict[str, object] = field(default_factory=dict)


def parse_value(text: str, path: str, lineno: int, key: str):
    text = text.strip()
    if _INT_RE.match(text):
        return int(text)
    if _FLOAT_RE.match(text):
        return float(text)
    if text in ("true", "false"):
        return text == "true"
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        items = [s.strip() for s in inner.split(",")]
        out = []
        for item in items:
            if _INT_RE.match(item):
                out.append(int(item))
            elif _FLOAT_RE.match(item):
                out.append(float(item))
            else:
                raise ConfigError(
                    f"{path}:{lineno}: key {key!r}: array entries must be numbers, got {item!r}")
        return out
    raise ConfigError(
        f"{path}:{lineno}: key {key!r}: cannot parse value {text!r} "
        "(expected integer, float, true/false, \"string\", or [numbers])")


def _split_comment(line: str) -> str:
    out = []
    quoted = False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out)


def parse_file(path: str) -> Dict[str, object]:
    """Raw key -> value mapping with duplicate and syntax checks."""
    values: Dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = _split_comment(raw).strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if not _KEY_RE.match(key):
                raise ConfigError(f"{path}:{lineno}: bad key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = parse_value(value, path, lineno, key)
    return values


def _build_group(values: Dict[str, object], violations: List[str],
                 prefix: str = "") -> Optional[groups.GroupSpec]:
    key_kind = "group" if not prefix else prefix.rstrip("_")
    kind = values.get(key_kind)
    if kind is None:
        violations.append(f"{key_kind}: required key is missing")
        return None
    if kind == "z":
        d = values.get(prefix + "d")
        if not isinstance(d, int) or d < 1:
            violations.append(f"{prefix}d: lattice dimension must be a positive integer")
            return None
        return groups.integer_lattice(d)
    if kind == "heisenberg":
        return groups.heisenberg()
    if kind == "tree":
        r = values.get(prefix + "r_reg")
        if not isinstance(r, int) or r < 3:
            violations.append(f"{prefix}r_reg: tree degree must be an integer >= 3")
            return None
        return groups.regular_tree(r)
    if kind == "product" and not prefix:
        left = _build_group(values, violations, "left_")
        right = _build_group(values, violations, "right_")
        if left is None or right is None:
            return None
        return groups.product(left, right)
    violations.append(f"{key_kind}: unknown group {kind!r} "
                      "(expected \"z\", \"heisenberg\", \"tree\", or \"product\")")
    return None


def _build_dist(values: Dict[str, object], violations: List[str]) -> Optional[DistributionSpec]:
    kind = values.get("dist")
    if kind is None:
        violations.append("dist: required key is missing")
        return None
    try:
        if kind == "two_point":
            missing = [k for k in ("a", "b", "p_a") if k not in values]
            if missing:
                violations.append(f"{missing[0]}: required for dist \"two_point\"")
                return None
            return two_point(float(values["a"]), float(values["b"]), float(values["p_a"]))
        if kind == "uniform":
            missing = [k for k in ("a", "b") if k not in values]
            if missing:
                violations.append(f"{missing[0]}: required for dist \"uniform\"")
                return None
            return uniform(float(values["a"]), float(values["b"]))
        if kind == "shifted_exponential":
            missing = [k for k in ("a", "rate") if k not in values]
            if missing:
                violations.append(f"{missing[0]}: required for dist \"shifted_exponential\"")
                return None
            return shifted_exponential(float(values["a"]), float(values["rate"]))
    except Exception as exc:  # parameter sanity failures carry the rule text
        violations.append(f"dist: {exc}")
        return None
    violations.append(f"dist: unknown kind {kind!r}")
    return None


def _check_element(spec: groups.GroupSpec, value, key: str,
                   violations: List[str]) -> Optional[tuple]:
    if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
        violations.append(f"{key}: elements are arrays of integers")
        return None
    g = tuple(value)
    try:
        groups.validate_element(spec, g)
    except Exception as exc:
        violations.append(f"{key}: {exc}")
        return None
    return g


def interpret(values: Dict[str, object], experiment: Optional[str] = None):
    """(config, violations): full validation without execution."""
    violations: List[str] = []
    values = dict(values)
    stated = values.get("experiment")
    if stated is not None and experiment is not None and stated != experiment:
        violations.append(
            f"experiment: config says {stated!r} but the command line says {experiment!r}")
    experiment = experiment or stated
    if experiment is None:
        violations.append("experiment: required key is missing")
        return None, violations
    if experiment not in EXPERIMENT_PARAMS:
        violations.append(f"experiment: unknown experiment {experiment!r}")
        return None, violations
    required, optional = EXPERIMENT_PARAMS[experiment]

    group = _build_group(values, violations)
    control_scan = experiment == "shape-scan" and values.get("control") is True
    if experiment in NO_DIST or control_scan:
        needs_dist = "dist" in values
    else:
        needs_dist = True
    dist = _build_dist(values, violations) if needs_dist else None
    if group is not None and dist is not None:
        reason = validate_distribution(dist, group.degree)
        if reason is not None:
            violations.append(f"dist: {reason}")
    if experiment == "ball" and "horizon" in values and dist is None:
        violations.append("horizon: an FPP ball needs a distribution")

    seed = values.get("seed")
    if not isinstance(seed, int):
        violations.append("seed: required integer key is missing")
        seed = 0
    workers = values.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        violations.append("workers: must be a positive integer")
        workers = 1
    out = values.get("out", "fpp-run")
    if not isinstance(out, str) or not out:
        violations.append("out: must be a non-empty string")
        out = "fpp-run"

    params: Dict[str, object] = {}
    for key, kind in {**required, **optional}.items():
        if key not in values:
            if key in required:
                violations.append(f"{key}: required for experiment \"{experiment}\"")
            continue
        value = values[key]
        if kind == "element":
            if group is not None:
                element = _check_element(group, value, key, violations)
                if element is not None:
                    params[key] = element
        elif kind == "grid":
            if (not isinstance(value, list) or not value
                    or not all(isinstance(v, int) for v in value)):
                violations.append(f"{key}: must be a non-empty array of integers")
            else:
                params[key] = list(value)
        elif kind == "float_grid":
            if not isinstance(value, list) or not value:
                violations.append(f"{key}: must be a non-empty array of numbers")
            else:
                params[key] = [float(v) for v in value]
        elif kind is int:
            if not isinstance(value, int):
                violations.append(f"{key}: must be an integer")
            else:
                params[key] = value
        elif kind is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                violations.append(f"{key}: must be a number")
            else:
                params[key] = float(value)
        elif kind is bool:
            if not isinstance(value, bool):
                violations.append(f"{key}: must be true or false")
            else:
                params[key] = value
        else:
            params[key] = value

    recognized = set(required) | set(optional) | set(GROUP_KEYS) | set(DIST_KEYS) \
        | set(COMMON_OPTIONAL) | {"seed"}
    if experiment in NO_DIST and "dist" not in values:
        recognized -= {"a", "b", "p_a", "rate"}
    for key in values:
        if key not in recognized:
            violations.append(f"{key}: unknown key for experiment \"{experiment}\"")

    _validate_params(experiment, params, violations)

    if violations:
        return None, violations
    echo = dict(sorted(values.items()))
    echo["experiment"] = experiment
    return ExperimentConfig(experiment, group, dist, seed, workers, out,
                            params, echo), violations


def _validate_params(experiment: str, params: Dict[str, object],
                     violations: List[str]) -> None:
    def positive(key, strict_min=0):
        if key in params and params[key] <= strict_min:
            violations.append(f"{key}: must be > {strict_min}")

    if "radius" in params and params["radius"] < 0:
        violations.append("radius: must be >= 0")
    positive("replicas", 1)
    positive("pair_samples", 0)
    positive("budget", 0)
    positive("n", 0)
    positive("weight", 0)
    positive("horizon", 0)
    if "lam" in params and not 0.0 <= params["lam"] <= 1.0:
        violations.append("lam: must lie in [0, 1]")
    if "eps" in params and params["eps"] < 0:
        violations.append("eps: must be >= 0")
    if "k" in params and params["k"] < 0:
        violations.append("k: must be >= 0")
    for key in ("n_grid", "r_grid"):
        if key in params:
            grid = params[key]
            if any(v < 0 for v in grid):
                violations.append(f"{key}: entries must be >= 0")
            if key == "n_grid" and any(b <= a for a, b in zip(grid, grid[1:])):
                violations.append(f"{key}: must be strictly increasing")
    if "u_grid" in params and any(v < 0 for v in params["u_grid"]):
        violations.append("u_grid: entries must be >= 0")


def load(path: str, experiment: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing all violations."""
    values = parse_file(path)
    config, violations = interpret(values, experiment)
    if violations:
        raise ConfigError("; ".join(violations))
    return config
