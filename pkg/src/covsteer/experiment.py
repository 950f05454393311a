"""End-to-end runs: solve, sample trajectories, project, sweep, and emit files.

Every ``run_*`` function returns the data it computed together with a
``files`` mapping ``{filename: text}``; nothing touches the filesystem until
:func:`write_artifacts` is called, so a failed run never leaves a partial
output set behind. All floats are written with 17 significant digits.
"""

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import CovSteerError, DegenerateCovarianceError, UnstableMatrixError
from .linalg import as_matrix, as_square, spectral_radius, symmetrize
from .steering import SolveStatus, finite_difference_gradient, gradient_wrt_u, solve

__all__ = [
    "RNG_ALGORITHM",
    "SampleCloud",
    "PcaProjection",
    "Reproduction",
    "SweepRow",
    "GradientAudit",
    "empirical_covariance",
    "simulate_terminal_states",
    "pca_project",
    "run_reproduction",
    "run_lambda_sweep",
    "run_gradient_check",
    "write_artifacts",
    "format_float",
    "dumps_json",
]

RNG_ALGORITHM = "numpy.random.PCG64"


# --- emission helpers -------------------------------------------------------

def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_scalar(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # non-finite values become strings so the document stays valid JSON
        return format_float(x) if math.isfinite(x) else json.dumps(format_float(x))
    if x is None:
        return "null"
    return json.dumps(str(x))


def _is_flat(seq):
    return all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in seq)


def dumps_json(obj, indent=0):
    """JSON text with floats at 17 significant digits; numeric rows stay on one line."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if _is_flat(obj):
            return "[" + ", ".join(_json_scalar(v) for v in obj) + "]"
        items = [pad + dumps_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _json_scalar(obj)


def _csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_artifacts(files, out_dir):
    """Write ``{name: text}`` into ``out_dir``; on any failure remove what was written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    tmp = None
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.")
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            target = out / name
            os.replace(tmp, target)
            tmp = None
            written.append(target)
    except BaseException:
        if tmp is not None:
            Path(tmp).unlink(missing_ok=True)
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


# --- sampling and projection -----------------------------------------------

def empirical_covariance(states):
    """Second moment ``X^T X / N`` about the known zero mean."""
    states = np.asarray(states, dtype=float)
    return symmetrize(states.T @ states / states.shape[0])


@dataclass(frozen=True)
class SampleCloud:
    """Terminal states of many independent trajectories (one row per trajectory)."""

    states: np.ndarray
    label: str
    empirical_cov: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "empirical_cov", empirical_covariance(self.states))


def simulate_terminal_states(A_eff, B, horizon, num_trajectories, rng_seed, label="without_control"):
    """Sample ``x(horizon)`` of ``x+ = A_eff x + B w`` started at ``x(0) = 0``.

    ``w`` is i.i.d. standard normal. All trajectories advance together; at each
    step one ``(num_trajectories, m)`` block of normals is drawn from a PCG64
    generator seeded with ``rng_seed`` (an int or ``numpy.random.SeedSequence``).
    """
    A_eff = as_square(A_eff, "A_eff")
    B = as_matrix(B, "B")
    if horizon < 1 or num_trajectories < 1:
        raise ValueError("horizon and num_trajectories must be >= 1")
    rho = spectral_radius(A_eff)
    if rho >= 1.0:
        raise UnstableMatrixError(rho)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    x = np.zeros((num_trajectories, A_eff.shape[0]))
    for _ in range(horizon):
        x = x @ A_eff.T + rng.standard_normal((num_trajectories, B.shape[1])) @ B.T
    return SampleCloud(x, label)


@dataclass
class PcaProjection:
    """Three leading principal directions of a reference cloud, plus an ellipsoid.

    ``basis`` holds the directions as columns. The ellipsoid is
    ``{y : y^T ellipsoid_cov^-1 y <= chi2_quantile}`` where ``ellipsoid_cov``
    is the reference covariance seen in the projected space; its principal
    axes are the columns of ``ellipsoid_axes`` with half-lengths
    ``ellipsoid_radii``.
    """

    basis: np.ndarray
    explained_variance: np.ndarray
    projected: dict
    ellipsoid_cov: np.ndarray
    ellipsoid_axes: np.ndarray
    ellipsoid_radii: np.ndarray
    chi2_quantile: float
    coverage: float

    def contains(self, points):
        points = np.atleast_2d(points)
        sol = np.linalg.solve(self.ellipsoid_cov, points.T).T
        return np.einsum("ij,ij->i", points, sol) <= self.chi2_quantile

    def inside_fraction(self, label):
        return float(np.mean(self.contains(self.projected[label])))


def _orient(vectors):
    # largest-magnitude component of each column made positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def pca_project(reference_cloud, clouds, sigma_ref, coverage=0.99):
    """Project clouds onto the top three principal directions of ``reference_cloud``.

    The ellipsoid is the ``coverage`` confidence region of ``N(0, sigma_ref)``
    pushed into the same three-dimensional space (chi-square, 3 dof).
    """
    n = reference_cloud.states.shape[1]
    if n < 3 or reference_cloud.states.shape[0] < 4:
        raise DegenerateCovarianceError("PCA projection needs n >= 3 and at least 4 points")
    if not 0 < coverage < 1:
        raise ValueError("coverage must lie in (0, 1)")
    evals, evecs = np.linalg.eigh(reference_cloud.empirical_cov)
    order = np.argsort(evals)[::-1][:3]
    evals, basis = evals[order], _orient(evecs[:, order])
    if evals[2] <= 1e-12 * max(evals[0], np.finfo(float).tiny):
        raise DegenerateCovarianceError("reference cloud covariance has rank < 3")

    projected = {reference_cloud.label: reference_cloud.states @ basis}
    for cloud in clouds:
        projected[cloud.label] = cloud.states @ basis

    ell_cov = symmetrize(basis.T @ as_square(sigma_ref, "sigma_ref") @ basis)
    q = float(stats.chi2.ppf(coverage, df=3))
    ev, axes = np.linalg.eigh(ell_cov)
    order = np.argsort(ev)[::-1]
    return PcaProjection(
        basis=basis,
        explained_variance=evals,
        projected=projected,
        ellipsoid_cov=ell_cov,
        ellipsoid_axes=_orient(axes[:, order]),
        ellipsoid_radii=np.sqrt(ev[order] * q),
        chi2_quantile=q,
        coverage=coverage,
    )


# --- runs -------------------------------------------------------------------

def _pairs_1based(mask):
    return [[int(i) + 1, int(j) + 1] for i, j in zip(*np.nonzero(mask))]


def _trace_csv(trace):
    rows = [(r.iteration, r.j, r.grad_fro, r.step, r.nnz, r.l1_norm) for r in trace]
    return _csv(["iter", "J", "grad_fro", "step", "nnz", "l1_norm"], rows)


def _scatter_csv(points, label):
    return _csv(["pc1", "pc2", "pc3", "label"], [(*map(float, p), label) for p in points])


@dataclass
class Reproduction:
    result: object
    files: dict
    clouds: dict = field(default_factory=dict)
    projection: PcaProjection = None

    @property
    def ok(self):
        return self.result.status is not SolveStatus.STALLED_UNSTABLE


def run_reproduction(config, sample=True):
    """Solve the configured problem and build the output file set.

    With ``sample=True`` it also simulates trajectories with and without the
    intervention, projects them, and adds the scatter files.

    Files: ``trace.csv``, ``result.json`` and, when sampling,
    ``scatter_without_control.csv`` and ``scatter_with_control.csv``.
    """
    problem = config.problem
    result = solve(problem, config.solver)
    doc = {
        "status": result.status.value,
        "iterations": len(result.trace),
        "j_initial": result.j_initial,
        "j_final": result.j_final,
        "grad_fro_final": float(np.linalg.norm(result.grad_final)),
        "nnz": result.nnz,
        "nonzero_entries": _pairs_1based(result.u_final != 0),
        "l1_norm": result.l1_norm,
        "l1_budget": problem.l1_budget,
        "budget_satisfied": result.budget_satisfied,
        "spectral_radius_final": spectral_radius(problem.A + result.u_final),
        "u_final": result.u_final,
        "sigma_final": result.sigma_final,
    }
    files = {"trace.csv": _trace_csv(result.trace)}
    rep = Reproduction(result=result, files=files)

    if sample:
        smp = config.sampling
        seeds = np.random.SeedSequence(smp.rng_seed).spawn(2)
        without = simulate_terminal_states(
            problem.A, problem.B, smp.horizon, smp.num_trajectories, seeds[0], "without_control")
        with_u = simulate_terminal_states(
            problem.A + result.u_final, problem.B, smp.horizon, smp.num_trajectories, seeds[1], "with_control")
        proj = pca_project(without, [with_u], problem.sigma_ref, smp.coverage)
        rep.clouds = {c.label: c for c in (without, with_u)}
        rep.projection = proj
        for label, pts in proj.projected.items():
            files[f"scatter_{label}.csv"] = _scatter_csv(pts, label)
        doc["rng"] = {
            "algorithm": RNG_ALGORITHM,
            "seed": smp.rng_seed,
            "streams": "SeedSequence(seed).spawn(2): [without_control, with_control]",
            "numpy_version": np.__version__,
        }
        doc["sampling"] = {
            "num_trajectories": smp.num_trajectories,
            "horizon": smp.horizon,
            "empirical_cov_with_control": with_u.empirical_cov,
            "cov_rel_error_with_control": float(
                np.linalg.norm(with_u.empirical_cov - result.sigma_final) / np.linalg.norm(result.sigma_final)),
        }
        doc["projection"] = {
            "basis": proj.basis,
            "explained_variance": proj.explained_variance,
            "coverage": proj.coverage,
            "chi2_quantile": proj.chi2_quantile,
            "ellipsoid_cov": proj.ellipsoid_cov,
            "ellipsoid_axes": proj.ellipsoid_axes,
            "ellipsoid_radii": proj.ellipsoid_radii,
            "inside_fraction": {label: proj.inside_fraction(label) for label in proj.projected},
        }
    doc["config"] = config.document
    files["result.json"] = dumps_json(doc) + "\n"
    return rep


@dataclass(frozen=True)
class SweepRow:
    lam: float
    nnz: int
    j: float
    status: str
    l1_norm: float


def _sweep_one(config, lam):
    try:
        res = solve(config.problem, config.with_lambda(lam))
    except CovSteerError as exc:
        return SweepRow(lam, -1, math.nan, f"error: {type(exc).__name__}", math.nan)
    return SweepRow(lam, res.nnz, res.j_final, res.status.value, res.l1_norm)


def run_lambda_sweep(config, jobs=1):
    """One independent solve per value in ``config.lambda_values``.

    Failed solves are recorded in their row instead of aborting the sweep.
    Returns ``(rows, files)`` with ``files = {"sweep.csv": ...}``.
    """
    lambdas = list(config.lambda_values)
    if len(lambdas) < 2:
        raise ValueError("a sweep needs at least two lambda values")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda lam: _sweep_one(config, lam), lambdas))
    else:
        rows = [_sweep_one(config, lam) for lam in lambdas]
    text = _csv(["lambda", "nnz", "J", "status", "l1_norm"],
                [(r.lam, r.nnz, r.j, r.status, r.l1_norm) for r in rows])
    return rows, {"sweep.csv": text}


@dataclass
class GradientAudit:
    analytic: np.ndarray
    finite_difference: np.ndarray
    max_rel_deviation: float
    tolerance: float
    files: dict

    @property
    def passed(self):
        return self.max_rel_deviation < self.tolerance


def run_gradient_check(config):
    """Compare the adjoint gradient with central differences at the initial U."""
    problem = config.problem
    u = np.zeros((problem.n, problem.n)) if config.solver.u0 is None else config.solver.u0
    analytic = np.where(problem.support, gradient_wrt_u(problem, u).grad, 0.0)
    fd = finite_difference_gradient(problem, u, config.fd_step)
    mask = np.abs(analytic) > 1e-8
    dev = float(np.max(np.abs(analytic - fd)[mask] / np.abs(analytic)[mask])) if mask.any() else 0.0
    doc = {
        "max_rel_deviation": dev,
        "tolerance": config.fd_tolerance,
        "passed": dev < config.fd_tolerance,
        "step": config.fd_step,
        "entries_checked": int(mask.sum()),
        "analytic": analytic,
        "finite_difference": fd,
        "config": config.document,
    }
    return GradientAudit(analytic, fd, dev, config.fd_tolerance, {"check_grad.json": dumps_json(doc) + "\n"})
