"""
Run configuration: plain-text `key = value` files and the builders that turn a
resolved config into grids, measures, operators, coefficients and sources.

    # 1D mixed problem
    dimension = 1
    problem = solve
    operator.s = 0.5
    measure.kind = uniform
    coef.kind = constant
"""
import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from modules import measure as measures
from modules.errors import ConfigError, ConfigIssue, ValidationError
from modules.grid import Field, GridDomain
from modules.local_operator import COEFFICIENT_KINDS, make_coefficient, weierstrass_profile
from modules.nonlocal_operator import MAX_POINTS
from modules.solve import MixedProblem

logger = logging.getLogger(__name__)

PROBLEMS = ("symbol", "apply", "solve", "picard", "heatkernel", "maxprin", "regularity", "boundary", "liouville",
            "barrier")
MEASURE_KINDS = ("atomic", "axes", "uniform", "density", "none")
SOURCE_KINDS = ("constant", "bump", "weierstrass", "zero", "sign-change")
SOLVER_METHODS = ("direct", "picard", "proximal")


# =====================================================
# Value parsers / constraints
# =====================================================
def _float_list(text):
    text = text.strip().strip("()[]")
    return [float(part) for part in text.split(",") if part.strip()] if text else []


def _optional_float(text):
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text
    return parse


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be true or false")


def _positive(value):
    return None if value > 0 else "must be positive"


def _nonnegative(value):
    return None if value >= 0 else "must be nonnegative"


def _open_unit(name):
    return lambda value: None if 0.0 < value < 1.0 else f"{name} must lie in (0,1)"


def _at_least(bound):
    return lambda value: None if value >= bound else f"must be at least {bound}"


def _all_positive(values):
    return None if all(v > 0 for v in values) else "all entries must be positive"


def _s_values(values):
    return None if all(0.0 < v < 1.0 for v in values) else "s must lie in (0,1)"


# key -> (parser, default, constraint)
SCHEMA = {
    "dimension": (int, 1, lambda v: None if v in (1, 2) else "dimension must be 1 or 2"),
    "problem": (_choice(PROBLEMS), "solve", None),
    "grid.halfwidth": (float, 2.0, _positive),
    "grid.points": (int, 257, _at_least(3)),
    "domain.kind": (_choice(("ball", "box")), "ball", None),
    "domain.radius": (float, 1.0, _positive),
    "domain.center": (_float_list, [], None),
    "operator.s": (float, 0.5, _open_unit("s")),
    "operator.inner_cut": (float, 4.0, _positive),
    "operator.tail_radius": (_optional_float, None, lambda v: None if v is None or v > 0 else "must be positive"),
    "operator.points_per_decade": (int, 0, _nonnegative),
    "apply.padding": (int, 0, _nonnegative),
    "measure.kind": (_choice(MEASURE_KINDS), None, None),
    "measure.atom": (str, [], None),
    "measure.weight": (float, 1.0, _positive),
    "measure.density": (_choice(tuple(measures.DENSITY_CATALOG)), "constant", None),
    "measure.angles": (int, 64, _at_least(4)),
    "coef.kind": (_choice(COEFFICIENT_KINDS + ("none",)), "constant", None),
    "coef.alpha": (float, 0.5, _open_unit("alpha")),
    "coef.min": (float, 1.0, _positive),
    "coef.max": (float, 1.0, _positive),
    "source.kind": (_choice(SOURCE_KINDS), "constant", None),
    "source.amplitude": (float, 1.0, None),
    "source.gamma": (float, 0.5, _open_unit("gamma")),
    "solver.method": (_choice(SOLVER_METHODS), "direct", None),
    "solver.tol": (float, 1e-10, _positive),
    "solver.max_iter": (int, 5000, _at_least(1)),
    "picard.tol": (float, 1e-8, _positive),
    "picard.max_iter": (int, 500, _at_least(1)),
    "picard.lambda": (float, 0.0, _nonnegative),
    "heat.t": (float, 1.0, _positive),
    "heat.a": (float, 1.0, _nonnegative),
    "heat.delta": (_optional_float, None, lambda v: None if v is None or v > 0 else "must be positive"),
    "heat.box_factor": (int, 4, _at_least(1)),
    "maxprin.trials": (int, 20, _at_least(1)),
    "maxprin.signed": (_bool, False, None),
    "vlambda.lambdas": (_float_list, [10.0, 40.0, 160.0], _all_positive),
    "barrier.beta": (float, 1.0, _positive),
    "regularity.s_values": (_float_list, [0.3, 0.5, 0.7], _s_values),
    "stencil.max_points_1d": (int, MAX_POINTS[1], _at_least(3)),
    "stencil.max_points_2d": (int, MAX_POINTS[2], _at_least(3)),
    "seed": (int, 0, _nonnegative),
    "threads": (int, 1, _at_least(1)),
    "output": (str, "out", None),
}
REPEATABLE = ("measure.atom",)


# =====================================================
# RunConfig
# =====================================================
class RunConfig:
    """
    Resolved configuration: every schema key with its value (defaults filled),
    plus the line each explicit key came from.
    """

    def __init__(self, values, lines=None, path=None):
        self._values = dict(values)
        self.lines = dict(lines or {})
        self.path = str(path) if path is not None else None

    def __getitem__(self, key):
        return self._values[key]

    def __contains__(self, key):
        return key in self._values

    def get(self, key, default=None):
        return self._values.get(key, default)

    @property
    def problem(self):
        return self._values["problem"]

    def override(self, **changes):
        """New config with `changes` (dotted keys as `a__b`) applied and revalidated."""
        values = dict(self._values)
        for name, value in changes.items():
            key = name.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError([ConfigIssue(None, key, "unknown key")])
            values[key] = value
        issues = _check_values(values, self.lines)
        if issues:
            raise ConfigError(issues)
        return RunConfig(values, self.lines, self.path)

    def resolved(self):
        """JSON-ready dict of every key, sorted."""
        return {key: (list(value) if isinstance(value, (list, tuple)) else value)
                for key, value in sorted(self._values.items())}

    def digest(self):
        payload = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def max_points(self):
        return self._values[f"stencil.max_points_{self._values['dimension']}d"]

    def __repr__(self):
        return f"RunConfig(problem={self.problem!r}, dimension={self['dimension']}, path={self.path!r})"


def _check_values(values, lines):
    issues = []
    for key, (_, _, constraint) in SCHEMA.items():
        value = values.get(key)
        if constraint is None or value is None or key in REPEATABLE:
            continue
        message = constraint(value)
        if message:
            issues.append(ConfigIssue(lines.get(key), key, message))

    if values.get("coef.max", 1.0) < values.get("coef.min", 1.0):
        issues.append(ConfigIssue(lines.get("coef.max"), "coef.max", "coef.max must be at least coef.min"))
    if values.get("measure.kind") is None and not values.get("measure.atom"):
        issues.append(ConfigIssue(None, "measure.kind", "measure required"))
    if values.get("measure.kind") == "none" and values.get("coef.kind") == "none" and values.get("problem") not in (
            "symbol", "apply"):
        issues.append(ConfigIssue(lines.get("coef.kind"), "coef.kind", "a nonlocal or a local term is required"))
    center = values.get("domain.center") or []
    if center and len(center) != values.get("dimension"):
        issues.append(ConfigIssue(lines.get("domain.center"), "domain.center",
                                  f"needs {values.get('dimension')} coordinates"))
    return issues


def _defaults():
    return {key: (list(default) if isinstance(default, list) else default)
            for key, (_, default, _) in SCHEMA.items()}


def config_from_dict(values):
    """RunConfig from a mapping of key -> already-typed value (tests, overrides)."""
    resolved = _defaults()
    issues = []
    for key, value in values.items():
        if key not in SCHEMA:
            issues.append(ConfigIssue(None, key, "unknown key"))
            continue
        resolved[key] = value
    if resolved["measure.kind"] is None and resolved["measure.atom"]:
        resolved["measure.kind"] = "atomic"
    issues += _check_values(resolved, {})
    if issues:
        raise ConfigError(issues)
    return RunConfig(resolved)


def parse_config(path):
    """
    Parse and validate a config file.

    All problems are collected with their line numbers before a single
    ConfigError is raised.

    Returns:
        RunConfig with every default filled in.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError([ConfigIssue(None, "config", f"config file not found: {path}")])

    values, lines, issues = _defaults(), {}, []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            issues.append(ConfigIssue(lineno, line, "expected 'key = value'"))
            continue
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            issues.append(ConfigIssue(lineno, key, "unknown key"))
            continue
        parser = SCHEMA[key][0]
        try:
            value = parser(text)
        except ValueError as e:
            issues.append(ConfigIssue(lineno, key, f"invalid value '{text}': {e}"))
            continue
        if key in REPEATABLE:
            values[key].append(value)
        else:
            if key in lines:
                issues.append(ConfigIssue(lineno, key, f"duplicate key (first set on line {lines[key]})"))
            values[key] = value
        lines[key] = lineno

    if values["measure.kind"] is None and values["measure.atom"]:
        values["measure.kind"] = "atomic"
    issues += _check_values(values, lines)
    if issues:
        for issue in issues:
            logger.error("Config issue: %s", issue)
        raise ConfigError(issues)

    logger.info("Loaded config %s (problem=%s, dimension=%d)", path, values["problem"], values["dimension"])
    return RunConfig(values, lines, path)


# =====================================================
# Builders
# =====================================================
def build_grid(config, points=None):
    return GridDomain(
        config["dimension"],
        config["grid.halfwidth"],
        points or config["grid.points"],
        config["domain.kind"],
        config["domain.radius"],
        tuple(config["domain.center"]),
    )


def build_measure(config):
    """SpectralMeasure for the config, or None for `measure.kind = none`."""
    n, kind = config["dimension"], config["measure.kind"]
    if kind == "none":
        return None
    if kind == "atomic":
        issues, atoms = [], []
        for text in config["measure.atom"]:
            try:
                atoms.append(measures.atom_from_text(n, text))
            except ValueError as e:
                issues.append(ConfigIssue(config.lines.get("measure.atom"), "measure.atom", str(e)))
        if not atoms:
            issues.append(ConfigIssue(config.lines.get("measure.kind"), "measure.atom", "measure required"))
        if issues:
            raise ConfigError(issues)
        m = measures.atomic(n, atoms)
    elif kind == "axes":
        m = measures.axes(n, config["measure.weight"])
    elif kind == "uniform":
        m = measures.uniform(n, config["measure.weight"], config["measure.angles"])
    else:
        m = measures.from_density(n, config["measure.density"], config["measure.weight"], config["measure.angles"])

    problems = measures.validate(m)
    if problems:
        raise ConfigError([ConfigIssue(config.lines.get("measure.kind"), "measure", p) for p in problems])
    return m


def build_operator(config):
    m = build_measure(config)
    if m is None:
        return None
    return measures.OperatorSpec(
        config["operator.s"],
        m,
        config["operator.inner_cut"],
        config["operator.tail_radius"],
        config["operator.points_per_decade"],
    )


def build_coefficient(config, grid):
    if config["coef.kind"] == "none":
        return None
    return make_coefficient(config["coef.kind"], config["coef.alpha"], config["coef.min"], config["coef.max"], grid,
                            config["seed"])


def build_source(config, grid):
    """
    Source on Ω (zero outside).

    constant: amplitude; bump: Gaussian of width radius/4 at the Ω centre;
    weierstrass: Weierstrass-γ profile in [0, amplitude]; sign-change:
    amplitude·sin(π(x - c)/radius) along the first axis.
    """
    kind, amplitude = config["source.kind"], config["source.amplitude"]
    offsets = [c - c0 for c, c0 in zip(grid.coordinates, grid.omega_center)]
    if kind == "constant":
        values = np.full(grid.shape, amplitude)
    elif kind == "bump":
        width = 0.25 * grid.omega_radius
        values = amplitude * np.exp(-sum(o ** 2 for o in offsets) / (2.0 * width ** 2))
    elif kind == "weierstrass":
        values = amplitude * weierstrass_profile(grid, config["source.gamma"], config["seed"])
    elif kind == "sign-change":
        values = amplitude * np.sin(np.pi * offsets[0] / grid.omega_radius)
    else:
        values = np.zeros(grid.shape)
    return Field(grid, np.where(grid.omega_mask, values, 0.0))


def build_problem(config, grid=None):
    grid = grid or build_grid(config)
    spec = build_operator(config)
    coefficient = build_coefficient(config, grid)
    if spec is None and coefficient is None:
        raise ValidationError("problem needs a nonlocal term, a local term, or both")
    return MixedProblem(spec, coefficient, grid, build_source(config, grid), 0.0)
