"""
Dirichlet solvers for the mixed operator

    𝓔u = -Lu - div(a∇u)      (L the defining integral, so 𝓔 is positive)

with u = 0 outside Ω, plus the contraction (Picard) construction, the
barrier and comparison functions, and the maximum-principle checker.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse import linalg as splinalg

from modules.errors import (
    BarrierError,
    GridError,
    NoContractionError,
    NumericError,
    SolverError,
    ValidationError,
)
from modules.grid import Field
from modules.local_operator import assemble_div_a_grad, make_coefficient
from modules.nonlocal_operator import apply_stencil, assemble_stencil, folded_directions

logger = logging.getLogger(__name__)

CG_TOLERANCE = 1e-10
RESIDUAL_FACTOR = 1e-8
PICARD_STALL = 5
LAMBDA_TRIAL_STEPS = 5
LAMBDA_TARGET_RATIO = 0.9
LAMBDA_MAX_DOUBLINGS = 40
BARRIER_MAX_DOUBLINGS = 20


# =====================================================
# Problem / report types
# =====================================================
@dataclass
class MixedProblem:
    spec: object
    a: object
    grid: object
    f: Field
    lambda_shift: float = 0.0

    def __post_init__(self):
        if self.spec is None and self.a is None:
            raise ValidationError("problem needs a nonlocal term, a local term, or both")
        if self.f.grid != self.grid:
            raise GridError("source field lives on a different grid")
        if self.a is not None and self.a.grid != self.grid:
            raise GridError("coefficient field lives on a different grid")
        if self.spec is not None and self.spec.n != self.grid.n:
            raise GridError("operator and grid dimensions differ")
        if self.lambda_shift < 0:
            raise ValidationError("lambda_shift must be nonnegative")

    def with_source(self, f):
        return replace(self, f=f)

    def with_shift(self, lambda_shift):
        return replace(self, lambda_shift=float(lambda_shift))


@dataclass
class SolveReport:
    u: Field
    residual_sup: float
    iterations: int
    method: str
    contraction_ratios: list = field(default_factory=list)
    lambda_shift: float = 0.0
    metadata: dict = field(default_factory=dict)

    def summary(self):
        return {
            "method": self.method,
            "residual_sup": self.residual_sup,
            "iterations": self.iterations,
            "lambda_shift": self.lambda_shift,
            "max_ratio": max(self.contraction_ratios) if self.contraction_ratios else None,
            **self.metadata,
        }


# =====================================================
# Assembled operators
# =====================================================
class MixedSystem:
    """
    Operators of one problem restricted to Ω (row/column set = Ω points).

    nonlocal part: S|Ω (stencil, nonpositive)      local part: D|Ω (sparse, nonpositive)
    system matrix: -S|Ω - D|Ω + λI
    """

    def __init__(self, problem, max_points=None):
        self.problem = problem
        self.grid = problem.grid
        self.omega = self.grid.omega_indices
        self.size = self.omega.size
        self._preconditioners = {}
        self._local_factors = {}

        self.stencil = None
        if problem.spec is not None:
            full = assemble_stencil(problem.spec, self.grid, max_points)
            # Ω 안의 두 점 사이 거리까지만 필요
            reach = int(np.ceil(self.grid.omega_diameter / self.grid.h)) + 1
            self.stencil = full.cropped(reach)

        if problem.a is not None:
            matrix = assemble_div_a_grad(problem.a, self.grid)
            self.local = -matrix[self.omega][:, self.omega].tocsc()
        else:
            self.local = sparse.csc_matrix((self.size, self.size))
        logger.info("Mixed system: %d unknowns (nonlocal=%s, local=%s)", self.size,
                    self.stencil is not None, problem.a is not None)

    # --- embedding ---
    def embed(self, vector):
        values = np.zeros(self.grid.size)
        values[self.omega] = vector
        return values.reshape(self.grid.shape)

    def restrict(self, u):
        return u.values.ravel()[self.omega]

    def to_field(self, vector):
        return Field(self.grid, self.embed(vector), 0.0)

    # --- operators ---
    def nonlocal_apply(self, vector):
        """S|Ω applied to an Ω vector (the defining integral, nonpositive)."""
        if self.stencil is None:
            return np.zeros_like(vector)
        applied = apply_stencil(self.stencil, Field(self.grid, self.embed(vector)))
        return applied.values.ravel()[self.omega]

    def matvec(self, vector, lam=0.0):
        return -self.nonlocal_apply(vector) + self.local @ vector + lam * vector

    def operator(self, lam=0.0):
        return splinalg.LinearOperator((self.size, self.size), matvec=lambda v: self.matvec(v, lam), dtype=float)

    def preconditioner(self, lam=0.0):
        """Exact inverse of the local part plus the nonlocal diagonal."""
        if lam not in self._preconditioners:
            shift = lam - (self.stencil.diagonal if self.stencil is not None else 0.0)
            factor = splinalg.splu((self.local + shift * sparse.identity(self.size, format="csc")).tocsc())
            self._preconditioners[lam] = splinalg.LinearOperator((self.size, self.size), matvec=factor.solve,
                                                                 dtype=float)
        return self._preconditioners[lam]

    def local_solve(self, rhs, lam):
        """(-D|Ω + λI)^{-1} rhs."""
        if self.problem.a is None:
            return rhs / lam
        if lam not in self._local_factors:
            self._local_factors[lam] = splinalg.splu(
                (self.local + lam * sparse.identity(self.size, format="csc")).tocsc()
            )
        return self._local_factors[lam].solve(rhs)

    def residual_sup(self, u_vector, f_vector, lam=0.0):
        residual = self.matvec(u_vector, lam) - f_vector
        return float(np.max(np.abs(residual))) if residual.size else 0.0

    def solve(self, f_vector, lam=0.0, tol=CG_TOLERANCE, max_iter=5000):
        """
        Preconditioned CG on the SPD system.

        Returns:
            (u_vector, iterations)
        """
        scale = float(np.max(np.abs(f_vector))) if f_vector.size else 0.0
        if scale == 0.0:
            return np.zeros(self.size), 0

        counter = {"iterations": 0}

        def count(_):
            counter["iterations"] += 1

        solution, info = splinalg.cg(
            self.operator(lam), f_vector, rtol=0.0, atol=tol * (scale + 1.0), maxiter=max_iter,
            M=self.preconditioner(lam), callback=count,
        )
        if info != 0:
            last = self.residual_sup(solution, f_vector, lam)
            raise SolverError(f"CG did not converge in {max_iter} iterations (residual {last:.3e})", last)
        logger.debug("CG converged in %d iterations (lambda=%g)", counter["iterations"], lam)
        return solution, counter["iterations"]


def _metadata(problem):
    metadata = {}
    spec = problem.spec
    if spec is not None and spec.s > 0.5:
        # W^{2,p} theory needs n < p < n/(2s-1); recorded only
        metadata["p_range"] = [problem.grid.n, problem.grid.n / (2.0 * spec.s - 1.0)]
    return metadata


# =====================================================
# Direct solve
# =====================================================
def solve_direct(p, tol=CG_TOLERANCE, max_iter=5000, system=None):
    """
    Solve (𝓔 + λ)u = f in Ω, u = 0 outside Ω.

    Returns:
        SolveReport with residual_sup = sup_Ω |𝓔u + λu - f|.
    """
    system = system if system is not None else MixedSystem(p)
    f_vector = system.restrict(p.f)
    u_vector, iterations = system.solve(f_vector, p.lambda_shift, tol, max_iter)
    residual = system.residual_sup(u_vector, f_vector, p.lambda_shift)
    logger.info("Direct solve: %d CG iterations, residual %.3e", iterations, residual)
    return SolveReport(system.to_field(u_vector), residual, iterations, "direct",
                       lambda_shift=p.lambda_shift, metadata=_metadata(p))


# =====================================================
# Contraction map and Picard iteration
# =====================================================
def _is_unit_coefficient(a):
    return a is not None and a.constant_value is not None and abs(a.constant_value - 1.0) < 1e-12


def contraction_map(p, w, system=None):
    """
    T_λ(w) = u solving -div(a∇u) + λu = f + Lw in Ω, u = 0 outside Ω.

    w is read on Ω only (Picard iterates vanish outside Ω).
    """
    if not p.lambda_shift > 0:
        raise ValidationError("contraction_map needs lambda_shift > 0")
    system = system if system is not None else MixedSystem(p)
    return system.to_field(_contract(system, system.restrict(p.f), system.restrict(w), p.lambda_shift))


def _contract(system, f_vector, w_vector, lam):
    return system.local_solve(f_vector + system.nonlocal_apply(w_vector), lam)


def _picard_run(system, f_vector, lam, tol, max_iter, raise_on_stall=True):
    """
    u_0 = T(0), u_k = T(u_{k-1}) until ‖u_k - u_{k-1}‖∞ <= tol.

    Returns:
        (u_vector, iterations, ratios)
    """
    u = _contract(system, f_vector, np.zeros(system.size), lam)
    ratios = []
    previous = None
    stalled = 0
    for iteration in range(1, max_iter + 1):
        nxt = _contract(system, f_vector, u, lam)
        increment = float(np.max(np.abs(nxt - u))) if nxt.size else 0.0
        u = nxt
        if previous is not None:
            ratio = increment / previous if previous > 0 else 0.0
            ratios.append(ratio)
            stalled = stalled + 1 if ratio >= 1.0 else 0
            if stalled >= PICARD_STALL and raise_on_stall:
                raise NoContractionError("no contraction at this λ", ratios)
        if increment <= tol:
            return u, iteration, ratios
        previous = increment
    raise SolverError(f"Picard iteration did not reach tol {tol:g} in {max_iter} steps", previous)


def select_lambda(p, system=None, start=1.0):
    """
    Double λ from `start` until five Picard steps contract with ratio < 0.9.
    """
    system = system if system is not None else MixedSystem(p)
    f_vector = system.restrict(p.f)
    lam = start
    for _ in range(LAMBDA_MAX_DOUBLINGS):
        ratios = _trial_ratios(system, f_vector, lam)
        worst = max(ratios) if ratios else 0.0
        logger.info("Lambda trial: lambda=%g, max ratio %.4f", lam, worst)
        if worst < LAMBDA_TARGET_RATIO:
            return lam
        lam *= 2.0
    raise NoContractionError(f"no contraction up to λ = {lam:g}")


def _trial_ratios(system, f_vector, lam):
    u = _contract(system, f_vector, np.zeros(system.size), lam)
    ratios, previous = [], None
    for _ in range(LAMBDA_TRIAL_STEPS):
        nxt = _contract(system, f_vector, u, lam)
        increment = float(np.max(np.abs(nxt - u))) if nxt.size else 0.0
        if previous is not None:
            ratios.append(increment / previous if previous > 0 else 0.0)
        u, previous = nxt, increment
    return ratios


def solve_picard(p, tol=1e-8, max_iter=500, system=None):
    """
    Fixed point of T_λ; the limit solves the SHIFTED problem (𝓔 + λ)u = f.
    λ = 0 in the problem triggers select_lambda.
    """
    system = system if system is not None else MixedSystem(p)
    metadata = _metadata(p)
    if not _is_unit_coefficient(p.a):
        metadata["extension"] = True
        logger.warning("Picard iteration with a != 1 runs as an extension of the constant-coefficient construction")

    lam = p.lambda_shift
    if lam <= 0:
        lam = select_lambda(p, system)
        metadata["lambda_auto"] = True
    f_vector = system.restrict(p.f)
    u, iterations, ratios = _picard_run(system, f_vector, lam, tol, max_iter)
    residual = system.residual_sup(u, f_vector, lam)
    logger.info("Picard: lambda=%g, %d steps, max ratio %s", lam, iterations,
                f"{max(ratios):.4f}" if ratios else "n/a")
    return SolveReport(system.to_field(u), residual, iterations, "picard", ratios, lam, metadata)


def solve_proximal(p, lam, tol=1e-8, max_iter=500, system=None, cg_tol=CG_TOLERANCE):
    """
    (𝓔 + λ)u_k = f + λu_{k-1}; the limit solves the UNSHIFTED problem 𝓔u = f.
    """
    if not lam > 0:
        raise ValidationError("proximal iteration needs λ > 0")
    system = system if system is not None else MixedSystem(p)
    f_vector = system.restrict(p.f)
    u, _ = system.solve(f_vector, lam, cg_tol)
    ratios, previous = [], None
    for iteration in range(1, max_iter + 1):
        nxt, _ = system.solve(f_vector + lam * u, lam, cg_tol)
        increment = float(np.max(np.abs(nxt - u))) if nxt.size else 0.0
        u = nxt
        if previous is not None:
            ratios.append(increment / previous if previous > 0 else 0.0)
        if increment <= tol:
            residual = system.residual_sup(u, f_vector, 0.0)
            return SolveReport(system.to_field(u), residual, iteration, "proximal", ratios, lam, _metadata(p))
        previous = increment
    raise SolverError(f"proximal iteration did not reach tol {tol:g} in {max_iter} steps", previous)


def residual_target(report, system, f_sup, tol=0.0):
    """
    Largest acceptable residual_sup of a converged report.

    direct:   1e-8·(‖f‖∞ + 1)
    proximal: λ·tol on top, since 𝓔u_k - f = λ(u_{k-1} - u_k)
    picard:   ‖S|Ω‖∞·tol on top, since the shifted residual is S(u_k - u_{k-1})
    """
    target = RESIDUAL_FACTOR * (f_sup + 1.0)
    if report.method == "proximal":
        return target + RESIDUAL_FACTOR * report.lambda_shift * report.u.sup_norm() + report.lambda_shift * tol
    if report.method == "picard":
        # 행 합 보존: 비대각 합 = -대각
        nonlocal_norm = 2.0 * abs(system.stencil.diagonal) if system.stencil is not None else 0.0
        return target + nonlocal_norm * tol
    return target


# =====================================================
# Barrier
# =====================================================
@dataclass
class Barrier:
    R: float
    center: np.ndarray
    beta: float
    w: Field
    max_residual: float = float("nan")

    def profile(self, points):
        return barrier_profile(points, self.center, self.R, self.beta)


def barrier_profile(points, center, R, beta):
    """w(x) = max(0, 1 - exp(β(|x - x0|² - R²))) at physical points (..., n)."""
    points = np.asarray(points, dtype=float)
    radius2 = np.sum((points - center) ** 2, axis=-1)
    return np.maximum(0.0, 1.0 - np.exp(beta * (radius2 - R ** 2)))


def fit_annulus(grid):
    """
    Center x0 and radius R with Ω̄ ⊂ {R/4 <= |x - x0| <= 3R/4}.
    """
    points = np.column_stack([c[grid.omega_mask] for c in grid.coordinates])
    origin = np.zeros(grid.n)
    distances = np.linalg.norm(points - origin, axis=1)
    R = 4.0 / 3.0 * (distances.max() + grid.h)
    if distances.min() - grid.h >= R / 4.0:
        return origin, R
    centroid = points.mean(axis=0)
    rho = np.linalg.norm(points - centroid, axis=1).max() + grid.h
    R = 20.0 * rho / 3.0
    shift = np.zeros(grid.n)
    shift[0] = 0.6 * R
    logger.info("Barrier annulus: Ω centered, shifting center by 0.6R along the first axis")
    return centroid - shift, R


def build_barrier(grid, spec, beta_init=1.0, center=None, radius=None, max_points=None):
    """
    Smallest β = beta_init·2^k with max_Ω (Lw - Δw) <= 1.
    """
    if center is None or radius is None:
        fitted_center, fitted_radius = fit_annulus(grid)
        center = fitted_center if center is None else np.asarray(center, dtype=float)
        radius = fitted_radius if radius is None else float(radius)
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if np.any(np.abs(center) + radius >= grid.box_halfwidth):
        raise BarrierError(
            f"barrier ball (center {center.tolist()}, R {radius:.4g}) leaves the grid box; increase grid.halfwidth"
        )
    logger.info("Barrier: center %s, R = %.4g", center.tolist(), radius)

    stencil = assemble_stencil(spec, grid, max_points) if spec is not None else None
    unit = make_coefficient("constant", 0.5, 1.0, 1.0, grid)
    laplacian = assemble_div_a_grad(unit, grid)
    points = np.stack(grid.coordinates, axis=-1)
    mask = grid.omega_mask

    beta = beta_init
    for _ in range(BARRIER_MAX_DOUBLINGS + 1):
        barrier = Barrier(radius, center, beta, Field(grid, barrier_profile(points, center, radius, beta)))
        residual = -(laplacian @ barrier.w.values.ravel()).reshape(grid.shape)
        if stencil is not None:
            residual = residual + apply_stencil(stencil, barrier.w).values
        barrier.max_residual = float(residual[mask].max())
        logger.debug("Barrier beta=%g: max(Lw - Δw) = %.4g", beta, barrier.max_residual)
        if barrier.max_residual <= 1.0:
            logger.info("Barrier found: beta=%g, max(Lw - Δw)=%.4g", beta, barrier.max_residual)
            return barrier
        beta *= 2.0
    raise BarrierError(f"barrier search failed (beta up to {beta / 2.0:g})")


def check_concavity(barrier, spec, grid):
    """
    Largest δ(w, x, θr) over x in Ω, measure directions θ, 0 < r <= R/4
    (lattice multiples of h). Concavity means the value is <= 0.
    """
    points = np.column_stack([c[grid.omega_mask] for c in grid.coordinates])
    radii = grid.h * np.arange(1, int(np.floor(barrier.R / 4.0 / grid.h)) + 1)
    directions = [d for d, _ in folded_directions(spec.measure)] if spec is not None else list(np.eye(grid.n))
    centre = barrier.profile(points)
    worst = -np.inf
    for direction in directions:
        shifts = radii[:, None] * direction[None, :]
        plus = barrier.profile(points[:, None, :] + shifts[None, :, :])
        minus = barrier.profile(points[:, None, :] - shifts[None, :, :])
        worst = max(worst, float(np.max(plus + minus - 2.0 * centre[:, None])))
    return worst


# =====================================================
# Maximum principle
# =====================================================
def random_bumps(grid, rng, count=3, signed=False):
    """Sum of Gaussian bumps centred in Ω; nonnegative unless `signed`."""
    points = np.column_stack([c[grid.omega_mask] for c in grid.coordinates])
    values = np.zeros(grid.shape)
    for _ in range(count):
        centre = points[rng.integers(len(points))]
        width = rng.uniform(0.05, 0.2) * grid.omega_radius
        amplitude = rng.uniform(0.5, 1.5)
        if signed:
            amplitude *= rng.choice([-1.0, 1.0])
        radius2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coordinates, centre))
        values += amplitude * np.exp(-radius2 / (2.0 * width ** 2))
    return Field(grid, np.where(grid.omega_mask, values, 0.0))


@dataclass
class MaxPrincipleReport:
    trials: pd.DataFrame
    passed: bool
    applicable: bool = True

    def summary(self):
        return {
            "trials": len(self.trials),
            "passed_trials": int(self.trials["passed"].sum()) if len(self.trials) else 0,
            "passed": self.passed,
            "applicable": self.applicable,
            "min_u": float(self.trials["min_u"].min()) if len(self.trials) else 0.0,
        }


def check_max_principle(p, trials=20, seed=0, signed=False, sources=None, system=None):
    """
    Solve with random nonnegative sources and record min u per trial.
    PASS iff min u >= -1e-8·‖f‖∞ in every trial. signed=True runs the
    sign-changing control, for which the principle does not apply.
    """
    system = system if system is not None else MixedSystem(p)
    rng = np.random.default_rng(seed)
    if sources is None:
        sources = [random_bumps(p.grid, rng, count=int(rng.integers(1, 5)), signed=signed) for _ in range(trials)]

    rows = []
    for trial, f in enumerate(sources):
        f_sup = f.sup_norm()
        try:
            report = solve_direct(p.with_source(f), system=system)
            min_u = float(report.u.values[p.grid.omega_mask].min())
            rows.append({
                "trial": trial, "f_sup": f_sup, "f_min": float(f.values.min()), "min_u": min_u,
                "residual_sup": report.residual_sup, "passed": min_u >= -1e-8 * f_sup, "error": "",
            })
        except NumericError as e:
            logger.warning("Max-principle trial %d failed: %s", trial, e)
            rows.append({
                "trial": trial, "f_sup": f_sup, "f_min": float(f.values.min()), "min_u": np.nan,
                "residual_sup": np.nan, "passed": False, "error": str(e),
            })
    frame = pd.DataFrame(rows, columns=["trial", "f_sup", "f_min", "min_u", "residual_sup", "passed", "error"])
    applicable = not any(f.values.min() < 0 for f in sources)
    if not applicable:
        logger.info("Sign-changing sources: maximum principle not applicable, negative minima are expected")
    return MaxPrincipleReport(frame, bool(frame["passed"].all()) if len(frame) else True, applicable)


def m_matrix_report(system, lam=0.0):
    """Sign structure of the system matrix: off-diagonals <= 0, row sums >= 0."""
    row_sums = system.matvec(np.ones(system.size), lam)
    local_offdiag = system.local - sparse.diags(system.local.diagonal())
    offdiag_ok = bool(local_offdiag.max() <= 0 if local_offdiag.nnz else True)
    if system.stencil is not None:
        offdiag_ok = offdiag_ok and bool(np.all(system.stencil.weights >= 0))

    # 외부와 맞닿은 행: Ω 밖 이웃이 있거나 비국소 꼬리가 있는 행
    touching = np.zeros(system.size, dtype=bool)
    if system.stencil is not None and system.stencil.tail_coefficient > 0:
        touching[:] = True
    else:
        exterior = np.ones(system.grid.shape, dtype=bool)
        exterior[system.grid.omega_mask] = False
        padded = np.pad(exterior, 1, constant_values=True)
        for axis in range(system.grid.n):
            for sign in (1, -1):
                rolled = np.roll(padded, sign, axis=axis)[(slice(1, -1),) * system.grid.n]
                touching |= rolled.ravel()[system.omega]
    scale = float(np.max(np.abs(system.local.diagonal()))) if system.local.nnz else 1.0
    if system.stencil is not None:
        scale = max(scale, abs(system.stencil.diagonal))
    return {
        "offdiagonal_nonpositive": offdiag_ok,
        "min_row_sum": float(row_sums.min()),
        "row_sums_nonnegative": bool(row_sums.min() >= -1e-12 * scale),
        "boundary_rows_positive": bool(np.all(row_sums[touching] > 0)),
    }


# =====================================================
# Comparison function v_λ
# =====================================================
@dataclass
class VLambdaReport:
    lam: float
    v_sup: float
    bound: float
    passed: bool
    phi_at_zero: float
    dominated: bool | None
    v: Field = field(repr=False, default=None)

    def summary(self):
        return {
            "lambda": self.lam, "v_sup": self.v_sup, "bound": self.bound, "passed": self.passed,
            "phi_at_zero": self.phi_at_zero, "dominated": self.dominated,
        }


def phi(t, lam):
    """φ(t) = (1 + e^{-λt})/λ."""
    return (1.0 + np.exp(-lam * np.asarray(t, dtype=float))) / lam


def comparison_vlambda(grid, spec, lam, barrier=None, max_points=None):
    """
    Solve (𝓔 + λ)v = 1 in Ω with a ≡ 1 and check ‖v‖∞ <= 2/λ and v <= φ(w).
    """
    if not lam > 0:
        raise ValidationError("comparison_vlambda needs λ > 0")
    unit = make_coefficient("constant", 0.5, 1.0, 1.0, grid)
    ones = Field(grid, grid.omega_mask.astype(float))
    problem = MixedProblem(spec, unit, grid, ones, lam)
    v = solve_direct(problem, system=MixedSystem(problem, max_points)).u
    v_sup = v.sup_norm(grid.omega_mask)
    bound = 2.0 / lam

    dominated = None
    if barrier is not None:
        gap = v.values - phi(barrier.w.values, lam)
        dominated = bool(np.max(gap[grid.omega_mask]) <= 1e-8)
    return VLambdaReport(lam, v_sup, bound, v_sup <= bound + 1e-8, float(phi(0.0, lam)), dominated, v)


def vlambda_sweep(grid, spec, lambdas, barrier=None, max_points=None):
    reports = [comparison_vlambda(grid, spec, lam, barrier, max_points) for lam in sorted(lambdas)]
    frame = pd.DataFrame([r.summary() for r in reports])
    monotone = bool(np.all(np.diff(frame["v_sup"].to_numpy()) <= 0)) if len(frame) > 1 else True
    return frame, monotone


def resolvent_bound(p, lam, g=None, system=None):
    """
    (𝓔 + λ)u = g gives ‖u‖∞ <= ‖v_λ‖∞·‖g‖∞ < 2‖g‖∞/λ.
    """
    system = system if system is not None else MixedSystem(p)
    g = g if g is not None else p.f
    g_vector = system.restrict(g)
    u, _ = system.solve(g_vector, lam)
    v, _ = system.solve(np.ones(system.size), lam)
    g_sup = float(np.max(np.abs(g_vector))) if g_vector.size else 0.0
    u_sup = float(np.max(np.abs(u))) if u.size else 0.0
    v_sup = float(np.max(np.abs(v))) if v.size else 0.0
    return {
        "lambda": lam,
        "u_sup": u_sup,
        "g_sup": g_sup,
        "v_sup": v_sup,
        "passed": u_sup <= v_sup * g_sup * (1.0 + 1e-8) + 1e-12 and v_sup <= 2.0 / lam + 1e-8,
    }
