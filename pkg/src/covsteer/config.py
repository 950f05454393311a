"""Experiment configuration documents (TOML).

A configuration has five tables; every key not given takes the default in
:data:`DEFAULTS`. Matrices are row-major nested arrays. Index pairs in
``problem.support`` and ``solver.u0_entries`` are 1-based, as in the usual
``U_pq`` notation::

    [problem]
    A = [[0.5, 0.0], [0.1, 0.4]]
    B = [[0.1, 0.0], [0.0, 0.1]]
    sigma_ref = [[0.02, 0.0], [0.0, 0.02]]
    support = "full"            # or [[1, 1], [2, 1]]
    l1_budget = 4.0

    [solver]
    eta = 0.1
    lambda = 0.5
    u0_entries = [[2, 2, 1e-3]] # (row, col, value) triplets; or a dense u0
"""

import copy
import dataclasses
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, CovSteerError
from .steering import SolverConfig, SteeringProblem

__all__ = [
    "DEFAULTS",
    "SamplingConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "apply_override",
    "bundled_config",
]

DEFAULT_LAMBDA_GRID = [round(0.1 * k, 1) for k in range(11)]

DEFAULTS = {
    "problem": {
        "A": None,
        "B": None,
        "sigma_ref": None,
        "support": "full",
        "l1_budget": math.inf,
    },
    "solver": {
        "eta": 0.1,
        "lambda": 0.5,
        "epsilon": 1e-6,
        "max_iter": 100,
        "u0": None,
        "u0_entries": [],
        "stability_margin": 1e-6,
        "backtrack_factor": 0.5,
        "max_backtracks": 30,
    },
    "sampling": {
        "num_trajectories": 1000,
        "horizon": 50,
        "rng_seed": 0,
        "coverage": 0.99,
    },
    "sweep": {
        "lambda_values": DEFAULT_LAMBDA_GRID,
    },
    "check_grad": {
        "step": 1e-5,
        "tolerance": 1e-5,
    },
}

REQUIRED = [("problem", "A"), ("problem", "B"), ("problem", "sigma_ref")]


@dataclass
class SamplingConfig:
    num_trajectories: int = 1000
    horizon: int = 50
    rng_seed: int = 0
    coverage: float = 0.99


@dataclass
class ExperimentConfig:
    """Everything one CLI run needs. ``document`` is the default-filled dict."""

    problem: SteeringProblem
    solver: SolverConfig
    sampling: SamplingConfig
    lambda_values: list
    fd_step: float
    fd_tolerance: float
    document: dict

    def with_lambda(self, lam):
        return dataclasses.replace(self.solver, lam=float(lam))


def bundled_config(name):
    """Path of a configuration shipped with the package (``"five_state"``, ``"random3"``)."""
    path = resources.files("covsteer") / "configs" / f"{name}.toml"
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return Path(str(path))


def _merge(defaults, given, where=""):
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        dotted = f"{where}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key {dotted!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{dotted!r} must be a table")
            out[key] = _merge(defaults[key], value, dotted + ".")
        else:
            out[key] = value
    return out


def _parse_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(document, assignment):
    """Apply one ``dotted.key=value`` override in place.

    The value is parsed as a TOML literal (``0.3``, ``[1, 2]``, ``"full"``);
    anything unparsable is kept as a bare string. The key must already exist
    in the default-filled document.
    """
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form KEY=VALUE")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = document
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"override key {key!r} does not name a config entry")
        node = node[part]
    if parts[-1] not in node or isinstance(node[parts[-1]], dict):
        raise ConfigError(f"override key {key!r} does not name a config entry")
    node[parts[-1]] = _parse_value(text.strip())


def _pairs(value, name, n):
    try:
        pairs = [(int(p[0]) - 1, int(p[1]) - 1) for p in value]
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"{name} must be a list of [row, col] pairs") from exc
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError(f"{name} pair ({i + 1}, {j + 1}) out of range 1..{n}")
    return pairs


def _matrix(value, name):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a rectangular numeric array") from exc
    if M.ndim != 2:
        raise ConfigError(f"{name} must be a 2-D array")
    return M


def _build(doc):
    for table, key in REQUIRED:
        if doc[table][key] is None:
            raise ConfigError(f"missing required key '{table}.{key}'")
    p, s, smp = doc["problem"], doc["solver"], doc["sampling"]
    A = _matrix(p["A"], "problem.A")
    n = A.shape[0]
    support = p["support"]
    if support == "full":
        support = None
    elif isinstance(support, str):
        raise ConfigError("problem.support must be \"full\" or a list of pairs")
    else:
        support = _pairs(support, "problem.support", n)
    try:
        problem = SteeringProblem(
            A=A,
            B=_matrix(p["B"], "problem.B"),
            sigma_ref=_matrix(p["sigma_ref"], "problem.sigma_ref"),
            support=support,
            l1_budget=float(p["l1_budget"]),
        )
    except (CovSteerError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid problem: {exc}") from exc

    if s["u0"] is not None and s["u0_entries"]:
        raise ConfigError("give either solver.u0 or solver.u0_entries, not both")
    u0 = None
    if s["u0"] is not None:
        u0 = _matrix(s["u0"], "solver.u0")
    elif s["u0_entries"]:
        u0 = np.zeros((n, n))
        for entry in s["u0_entries"]:
            if len(entry) != 3:
                raise ConfigError("solver.u0_entries items must be [row, col, value]")
            (i, j), = _pairs([entry[:2]], "solver.u0_entries", n)
            u0[i, j] = float(entry[2])
    try:
        solver = SolverConfig(
            eta=float(s["eta"]),
            lam=float(s["lambda"]),
            epsilon=float(s["epsilon"]),
            max_iter=s["max_iter"],
            u0=u0,
            stability_margin=float(s["stability_margin"]),
            backtrack_factor=float(s["backtrack_factor"]),
            max_backtracks=s["max_backtracks"],
        )
    except (CovSteerError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid solver settings: {exc}") from exc
    if u0 is not None and (u0.shape != (n, n) or np.any(u0[~problem.support] != 0)):
        raise ConfigError("initial intervention must be n x n and zero outside problem.support")

    try:
        sampling = SamplingConfig(
            num_trajectories=int(smp["num_trajectories"]),
            horizon=int(smp["horizon"]),
            rng_seed=int(smp["rng_seed"]),
            coverage=float(smp["coverage"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid sampling settings: {exc}") from exc
    if sampling.num_trajectories < 1 or sampling.horizon < 1:
        raise ConfigError("sampling.num_trajectories and sampling.horizon must be >= 1")
    if not 0 <= sampling.rng_seed < 2**64:
        raise ConfigError("sampling.rng_seed must be a 64-bit unsigned integer")
    if not 0 < sampling.coverage < 1:
        raise ConfigError("sampling.coverage must lie in (0, 1)")

    try:
        lambdas = [float(v) for v in doc["sweep"]["lambda_values"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError("sweep.lambda_values must be a list of numbers") from exc
    if any(v < 0 for v in lambdas) or any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ConfigError("sweep.lambda_values must be nonnegative and strictly increasing")

    cg = doc["check_grad"]
    return ExperimentConfig(
        problem=problem,
        solver=solver,
        sampling=sampling,
        lambda_values=lambdas,
        fd_step=float(cg["step"]),
        fd_tolerance=float(cg["tolerance"]),
        document=doc,
    )


def parse_config(text, overrides=(), seed=None):
    """Build an :class:`ExperimentConfig` from TOML text.

    Raises :class:`ConfigError`; TOML syntax errors carry the line and column.
    """
    try:
        given = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        where = f"line {line}, column {col}: " if line is not None else ""
        raise ConfigError(f"{where}{msg}") from exc
    doc = _merge(DEFAULTS, given)
    for assignment in overrides:
        apply_override(doc, assignment)
    if seed is not None:
        doc["sampling"]["rng_seed"] = int(seed)
    return _build(doc)


def load_config(path, overrides=(), seed=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        return parse_config(text, overrides, seed)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
