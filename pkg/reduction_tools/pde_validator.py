"""
Desk-scale solution of -Delta u = |u|^(p-1-eps) u in the unit ball, u = 0 on the sphere,
p = (N+2)/(N-2), within the class of functions invariant under rotations about the x_1-axis
and even in x_1.

Such a u is a function v(s, r) on the meridian half-disk, s = x_1, r = |x'|, with

    Delta u = v_ss + v_rr + (N-2)/r v_r,      and  v_ss + (N-1) v_rr  on the axis r = 0.

The discrete problem lives on the quarter disk s >= 0 (reflection at s = 0, ghost value at
r = 0) of a tensor grid that may be graded toward the bubble centers, and the Dirichlet
condition is imposed on the true circle with Shortley-Weller arms. Newton iterates are
kept in extended precision and the linear solves in double (mixed-precision refinement),
so the absolute residual can go well below what a double-precision spike allows. A
Newton homotopy starts the eps ladder from the bubble ansatz; later rungs use a tangent
predictor with step halving.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from .ball_geometry import alpha_n, check_dimension, sphere_area
from .boundary_profile import ProfileSpec, ansatz_field, ansatz_on
from .critical_finder import count_sign_changes, find_critical_rhos
from .errors import DomainError, ExtractionError, NonConvergenceError, SignStructureLostError
from .fields import Field2D, graded_axis, half_disk_mask
from .reduced_energy import FiberedPoint, ReducedConfig, bubble_energy_constant, fibered_point

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 30
DEFAULT_BACKTRACKS = 8
TRIVIAL_AMPLITUDE = 1e-6
BOUNDARY_LATITUDES = np.linspace(-1.0, 1.0, 21)

EXTENDED = np.longdouble
ARMIJO = 1e-4
FLOOR_FACTOR = 8.0

CELLS_PER_BUBBLE = 3.0
GRADING_GROWTH = 0.25
COARSE_WIDTH = 0.05

HOMOTOPY_FIRST_STEP = 0.125
HOMOTOPY_MIN_STEP = 1.0 / 1024
HOMOTOPY_STAGE_TOL = 1e-6
MAX_HALVINGS = 6


class Branch(str, Enum):
    RHO1 = "RHO1"
    RHO2 = "RHO2"

    @property
    def index(self) -> int:
        return 0 if self is Branch.RHO1 else 1


def critical_exponent(N: int) -> float:
    """p = 2* - 1 = (N+2)/(N-2)."""
    N = check_dimension(N)
    return (N + 2) / (N - 2)


@dataclass(frozen=True, eq=False)
class AxiGrid:
    """
    The quarter-disk part of a tensor grid, carrying the unknowns and the discrete Laplacian.

    ``s_grid`` runs over [-1, 1] symmetric about 0 with s = 0 a node, ``r_grid`` over [0, 1];
    both may be graded. ``nodes`` holds the (i, j) indices with s >= 0 and s^2 + r^2 < 1;
    ``near_boundary`` flags those whose stencil has an arm cut at the circle.
    """

    s_grid: np.ndarray
    r_grid: np.ndarray
    dimension: int
    nodes: np.ndarray
    near_boundary: np.ndarray
    laplacian: sp.csr_matrix
    laplacian_extended: sp.csr_matrix

    @property
    def n_s(self) -> int:
        return len(self.s_grid)

    @property
    def n_r(self) -> int:
        return len(self.r_grid)

    @property
    def center_index(self) -> int:
        return (self.n_s - 1) // 2

    @property
    def size(self) -> int:
        return len(self.nodes)

    @classmethod
    def build(cls, n_s: int, n_r: int, N: int) -> "AxiGrid":
        """Uniform lattice of n_s x n_r nodes."""
        if n_s < 5 or n_r < 3:
            raise DomainError(f"grid too small: {n_s} x {n_r}")
        return cls.from_coordinates(np.linspace(-1.0, 1.0, int(n_s)), np.linspace(0.0, 1.0, int(n_r)), N)

    @classmethod
    def from_coordinates(cls, s_grid: Sequence[float], r_grid: Sequence[float], N: int) -> "AxiGrid":
        return _build_grid(tuple(float(s) for s in s_grid), tuple(float(r) for r in r_grid), check_dimension(N))

    def to_vector(self, field2d: Field2D) -> np.ndarray:
        """Values at the unknown nodes; extended precision survives, anything else becomes float64."""
        if field2d.shape != (self.n_s, self.n_r):
            raise DomainError(f"field shape {field2d.shape} does not match grid {self.n_s} x {self.n_r}")
        values = np.asarray(field2d.values[self.nodes[:, 0], self.nodes[:, 1]])
        return values.astype(np.promote_types(values.dtype, np.float64))

    def to_field(self, vector: np.ndarray) -> Field2D:
        """Full half-disk field from quarter values, mirrored in s."""
        values = np.zeros((self.n_s, self.n_r), dtype=np.asarray(vector).dtype)
        i, j = self.nodes[:, 0], self.nodes[:, 1]
        values[i, j] = vector
        values[self.n_s - 1 - i, j] = vector
        return Field2D(self.s_grid, self.r_grid, values, half_disk_mask(self.s_grid, self.r_grid))


def _check_coordinates(s_grid: np.ndarray, r_grid: np.ndarray):
    n_s, n_r = len(s_grid), len(r_grid)
    if n_s < 5 or n_r < 3:
        raise DomainError(f"grid too small: {n_s} x {n_r}")
    if n_s % 2 == 0:
        raise DomainError(f"n_s must be odd so that s = 0 is a grid line, got {n_s}")
    if np.any(np.diff(s_grid) <= 0) or np.any(np.diff(r_grid) <= 0):
        raise DomainError("grid coordinates must increase strictly")
    ends = (s_grid[0] + 1.0, s_grid[-1] - 1.0, r_grid[0], r_grid[-1] - 1.0)
    if max(abs(e) for e in ends) > 1e-12:
        raise DomainError("grid must span [-1, 1] x [0, 1]")
    if np.max(np.abs(s_grid + s_grid[::-1])) > 1e-12:
        raise DomainError("s-coordinates must be symmetric about s = 0")


@lru_cache(maxsize=16)
def _build_grid(s_coords: Tuple[float, ...], r_coords: Tuple[float, ...], N: int) -> AxiGrid:
    s_grid, r_grid = np.array(s_coords), np.array(r_coords)
    _check_coordinates(s_grid, r_grid)
    n_s, n_r = len(s_grid), len(r_grid)
    c = (n_s - 1) // 2
    s_grid[c] = 0.0

    def inside(i: int, j: int) -> bool:
        return i < n_s and j < n_r and s_grid[i] ** 2 + r_grid[j] ** 2 < 1.0

    nodes = [(i, j) for i in range(c, n_s) for j in range(n_r) if inside(i, j)]
    index = {node: k for k, node in enumerate(nodes)}
    rows, cols, vals = [], [], []
    near = np.zeros(len(nodes), dtype=bool)

    def add(k: int, node: Tuple[int, int], coef: float):
        if node in index:
            rows.append(k)
            cols.append(index[node])
            vals.append(coef)

    for k, (i, j) in enumerate(nodes):
        s, r = s_grid[i], r_grid[j]

        # s-direction; the east arm is cut at the circle, the west mirrors it at s = 0
        east_inside = inside(i + 1, j)
        h_e = s_grid[i + 1] - s if east_inside else math.sqrt(1.0 - r * r) - s
        h_w = h_e if i == c else s - s_grid[i - 1]
        west = (i + 1, j) if i == c else (i - 1, j)
        c_e = 2.0 / ((h_w + h_e) * h_e)
        c_w = 2.0 / ((h_w + h_e) * h_w)
        add(k, (i + 1, j), c_e)
        add(k, west, c_w)
        diag = -(c_e + c_w)

        north_inside = inside(i, j + 1)
        h_n = r_grid[j + 1] - r if north_inside else math.sqrt(1.0 - s * s) - r
        if j == 0:
            # v_r = 0 on the axis, (N-2)/r v_r -> (N-2) v_rr
            c_n = 2.0 * (N - 1) / (h_n * h_n)
            add(k, (i, j + 1), c_n)
            diag -= c_n
        else:
            h_b = r - r_grid[j - 1]
            c_n = 2.0 / ((h_b + h_n) * h_n)
            c_b = 2.0 / ((h_b + h_n) * h_b)
            denom = h_n * h_b * (h_n + h_b)
            drift = (N - 2) / r
            add(k, (i, j + 1), c_n + drift * h_b * h_b / denom)
            add(k, (i, j - 1), c_b - drift * h_n * h_n / denom)
            diag -= c_n + c_b
            diag += drift * (h_n * h_n - h_b * h_b) / denom
        near[k] = not (east_inside and north_inside)
        rows.append(k)
        cols.append(k)
        vals.append(diag)

    size = len(nodes)
    laplacian = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    s_grid.setflags(write=False)
    r_grid.setflags(write=False)
    logger.debug(f"built {n_s}x{n_r} grid for N={N}: {size} unknowns, {int(near.sum())} near the circle, "
                 f"mesh widths {np.min(np.diff(s_grid)):.3e} .. {np.max(np.diff(s_grid)):.3e} in s")
    return AxiGrid(s_grid=s_grid, r_grid=r_grid, dimension=N, nodes=np.array(nodes, dtype=int),
                   near_boundary=near, laplacian=laplacian, laplacian_extended=laplacian.astype(EXTENDED))


def grid_for(field2d: Field2D, N: int) -> AxiGrid:
    """The AxiGrid on the coordinates of ``field2d``."""
    return AxiGrid.from_coordinates(field2d.s_grid, field2d.r_grid, N)


def _ansatz_config(N: int, c_n: Optional[float]) -> ReducedConfig:
    return ReducedConfig(dimension=N, c_n=c_n if c_n is not None else bubble_energy_constant(N))


def resolving_grid(branch: Branch, epsilon: float, N: int, shape: Tuple[int, int], c_n: Optional[float] = None,
                   cells: float = CELLS_PER_BUBBLE) -> AxiGrid:
    """
    An n_s x n_r grid graded toward the bubble centers of ``branch``.

    The mesh width is about scale / cells at the center (scale lambda^2 eps), at s = +-rho
    (scale mu^2 eps) and along the axis, and grows by GRADING_GROWTH per unit distance up to
    COARSE_WIDTH. Build it for the smallest eps of a ladder; larger bubbles are then resolved too.
    """
    n_s, n_r = shape
    if n_s < 5 or n_r < 3 or n_s % 2 == 0:
        raise DomainError(f"need an odd n_s >= 5 and n_r >= 3, got {n_s} x {n_r}")
    if not epsilon > 0 or not cells > 0:
        raise DomainError(f"epsilon and cells must be positive, got {epsilon}, {cells}")
    rho = find_critical_rhos(N)[Branch(branch).index]
    point = fibered_point(rho, _ansatz_config(N, c_n))
    delta_0, delta_1 = point.lam ** 2 * epsilon, point.mu ** 2 * epsilon
    half = graded_axis((n_s - 1) // 2, (0.0, rho), (delta_0 / cells, delta_1 / cells), GRADING_GROWTH, COARSE_WIDTH)
    r_grid = graded_axis(n_r - 1, (0.0,), (min(delta_0, delta_1) / cells,), GRADING_GROWTH, COARSE_WIDTH)
    s_grid = np.concatenate((-half[:0:-1], half))
    logger.info(f"{Branch(branch).value}: grid {n_s}x{n_r} graded for bubble scales {delta_0:.3e}, {delta_1:.3e} "
                f"(finest widths {np.min(np.diff(s_grid)):.3e} in s, {np.min(np.diff(r_grid)):.3e} in r)")
    return AxiGrid.from_coordinates(s_grid, r_grid, N)


def _nonlinearity(v: np.ndarray, epsilon: float, N: int) -> np.ndarray:
    return np.abs(v) ** (critical_exponent(N) - 1.0 - epsilon) * v


def _residual_vector(grid: AxiGrid, v: np.ndarray, epsilon: float) -> np.ndarray:
    operator = grid.laplacian_extended if v.dtype == EXTENDED else grid.laplacian
    return -(operator @ v) - _nonlinearity(v, epsilon, grid.dimension)


def _jacobian(grid: AxiGrid, v: np.ndarray, epsilon: float) -> sp.csc_matrix:
    exponent = critical_exponent(grid.dimension) - epsilon
    diag = exponent * np.abs(np.asarray(v, dtype=float)) ** (exponent - 1.0)
    return (-grid.laplacian - sp.diags(diag)).tocsc()


def _epsilon_derivative(grid: AxiGrid, v: np.ndarray, epsilon: float) -> np.ndarray:
    """d/d eps of the residual: log|v| |v|^(p-1-eps) v, zero where v = 0."""
    v = np.asarray(v, dtype=float)
    logs = np.log(np.where(v == 0.0, 1.0, np.abs(v)))
    return logs * _nonlinearity(v, epsilon, grid.dimension)


def _check_epsilon(epsilon: float, N: int):
    if not 0 <= epsilon < critical_exponent(N) - 1.0:
        raise DomainError(f"epsilon must lie in [0, p - 1) = [0, {critical_exponent(N) - 1.0:.6g}), got {epsilon}")


def assemble_residual(v: Field2D, epsilon: float, N: int) -> Field2D:
    """-Delta_h v - |v|^(p-1-eps) v on the unknown nodes, mirrored to the full half-disk."""
    _check_epsilon(epsilon, N)
    grid = grid_for(v, N)
    return grid.to_field(_residual_vector(grid, grid.to_vector(v), epsilon))


def _max_norm(residual: np.ndarray) -> float:
    return float(np.max(np.abs(residual))) if residual.size else 0.0


def _l2_norm(residual: np.ndarray) -> float:
    return float(np.sqrt(np.sum(residual * residual)))


def residual_floor(grid: AxiGrid, v: np.ndarray, epsilon: float) -> float:
    """
    Round-off level of the residual at v: FLOOR_FACTOR unit roundoffs of v's precision times
    the largest row sum of |L_kj v_j| + |f(v_k)|. No iterate can be certified below it.
    """
    v = np.asarray(v)
    if v.size == 0:
        return 0.0
    magnitude = abs(grid.laplacian) @ np.abs(v.astype(float))
    magnitude += np.abs(_nonlinearity(v.astype(float), epsilon, grid.dimension))
    return float(FLOOR_FACTOR * np.finfo(v.dtype).eps * np.max(magnitude))


@dataclass
class SolveResult:
    field: Field2D
    epsilon: float
    newton_iterations: int
    final_residual: float
    residual_history: List[float]
    peak_positive: Tuple[float, float]
    peaks_negative: Tuple[Tuple[float, float], ...]
    boundary_normal_derivative: List[Tuple[float, float]]
    discrete_energy: float
    predicted: Optional[FiberedPoint] = None
    residual_floor: float = 0.0

    @property
    def is_trivial(self) -> bool:
        return float(np.max(np.abs(self.field.values))) < TRIVIAL_AMPLITUDE


@dataclass(frozen=True)
class LadderDiagnostics:
    epsilon: float
    rho_hat: float
    height_scaling: Optional[float]
    residual: float
    iterations: int
    energy: float
    sign_pattern: Tuple[int, ...]

    def to_dict(self) -> Dict:
        return {
            "epsilon": self.epsilon,
            "rho_hat": self.rho_hat,
            "height_scaling": self.height_scaling,
            "residual": self.residual,
            "iterations": self.iterations,
            "energy": self.energy,
            "sign_pattern": list(self.sign_pattern),
        }


def _axis_sign_changes(field2d: Field2D) -> int:
    _, values = field2d.axis_profile()
    if values.size == 0 or np.max(np.abs(values)) < TRIVIAL_AMPLITUDE:
        return 0
    return count_sign_changes(np.asarray(values, dtype=float))


def _peaks(field2d: Field2D) -> Tuple[Tuple[float, float], Tuple[Tuple[float, float], ...]]:
    s, values = field2d.axis_profile()
    values = np.asarray(values, dtype=float)
    top = int(np.argmax(values))
    negatives = []
    for side in (s < 0, s > 0):
        if np.any(side) and np.min(values[side]) < 0:
            k = int(np.argmin(np.where(side, values, np.inf)))
            negatives.append((float(s[k]), float(values[k])))
    return (float(s[top]), float(values[top])), tuple(negatives)


def _newton(grid: AxiGrid, v: np.ndarray, epsilon: float, tol: float, max_iter: int, max_backtracks: int,
            shift: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float, List[float], int]:
    """
    Damped Newton on R(v) - shift = 0 until max |R(v) - shift| < tol, with Armijo backtracking
    on the l2 norm. v is kept in extended precision.

    Returns (v, max-norm residual, residual history, iterations).
    """
    v = np.asarray(v, dtype=EXTENDED)

    def evaluate(x: np.ndarray) -> np.ndarray:
        residual = _residual_vector(grid, x, epsilon)
        return residual if shift is None else residual - shift

    residual = evaluate(v)
    norm = _max_norm(residual)
    history = [norm]
    iterations = 0
    if not math.isfinite(norm):
        raise NonConvergenceError(f"non-finite residual at eps = {epsilon}", residual_history=history)

    while norm >= tol:
        if iterations == max_iter:
            floor = residual_floor(grid, v, epsilon)
            hint = f"; the round-off floor there is {floor:.1e}" if norm < 100 * floor else ""
            raise NonConvergenceError(
                f"Newton did not converge in {max_iter} steps at eps = {epsilon} (residual {norm:.3e}{hint})",
                residual_history=history,
            )
        step = spsolve(_jacobian(grid, v, epsilon), -np.asarray(residual, dtype=float))
        if not np.all(np.isfinite(step)):
            raise NonConvergenceError(f"singular Jacobian at eps = {epsilon}", residual_history=history)

        merit = _l2_norm(residual)
        t = 1.0
        for _ in range(max_backtracks + 1):
            trial = v + t * step
            trial_residual = evaluate(trial)
            trial_merit = _l2_norm(trial_residual)
            if math.isfinite(trial_merit) and trial_merit <= (1.0 - ARMIJO * t) * merit:
                break
            t *= 0.5
        else:
            t *= 2.0
            if not math.isfinite(trial_merit):
                raise NonConvergenceError(f"Newton step overflowed at eps = {epsilon}", residual_history=history)
            logger.debug(f"eps={epsilon}: no sufficient decrease after {max_backtracks} backtracks, taking step {t:.3e}")
        v, residual = trial, trial_residual
        norm = _max_norm(residual)
        iterations += 1
        history.append(norm)
        logger.debug(f"eps={epsilon}: Newton step {iterations}, damping {t:.3g}, residual {norm:.3e}")
    return v, norm, history, iterations


def _solve_result(grid: AxiGrid, v: np.ndarray, epsilon: float, norm: float, history: List[float],
                  iterations: int, seeded: bool, predicted: Optional[FiberedPoint]) -> SolveResult:
    solution = grid.to_field(v)
    if seeded and _axis_sign_changes(solution) < 2:
        raise SignStructureLostError(
            f"eps = {epsilon}: the bubble-seeded run converged to a solution with "
            f"{_axis_sign_changes(solution)} sign changes on the axis"
        )
    peak_positive, peaks_negative = _peaks(solution)
    return SolveResult(
        field=solution,
        epsilon=float(epsilon),
        newton_iterations=iterations,
        final_residual=norm,
        residual_history=history,
        peak_positive=peak_positive,
        peaks_negative=peaks_negative,
        boundary_normal_derivative=boundary_normal_derivative(solution, BOUNDARY_LATITUDES),
        discrete_energy=discrete_energy(solution, epsilon, grid.dimension),
        predicted=predicted,
        residual_floor=residual_floor(grid, v, epsilon),
    )


def _check_newton_parameters(tol: float, max_iter: int):
    if tol <= 0 or max_iter < 1:
        raise DomainError(f"need tol > 0 and max_iter >= 1, got {tol}, {max_iter}")


def newton_solve(initial: Field2D, epsilon: float, N: int, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER, max_backtracks: int = DEFAULT_BACKTRACKS,
                 predicted: Optional[FiberedPoint] = None) -> SolveResult:
    """
    Damped Newton iteration for the discrete problem starting from ``initial``.

    Converged means max |residual| < tol, absolute, evaluated on the extended-precision
    iterate; the returned field keeps that precision. A guess with at least two sign
    changes along the axis is bubble-seeded; such a run must keep them.

    Raises:
        NonConvergenceError: after max_iter steps, with the residual history
        SignStructureLostError: if a bubble-seeded run lands on a solution with fewer than
            two sign changes on the axis (the trivial one included)
    """
    _check_epsilon(epsilon, N)
    _check_newton_parameters(tol, max_iter)
    grid = grid_for(initial, N)
    seeded = _axis_sign_changes(initial) >= 2
    v, norm, history, iterations = _newton(grid, grid.to_vector(initial), epsilon, tol, max_iter, max_backtracks)
    return _solve_result(grid, v, epsilon, norm, history, iterations, seeded, predicted)


def homotopy_solve(initial: Field2D, epsilon: float, N: int, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER, max_backtracks: int = DEFAULT_BACKTRACKS,
                   predicted: Optional[FiberedPoint] = None) -> SolveResult:
    """
    Newton homotopy from ``initial``: follow R(v) = (1 - tau) R(v_0) from tau = 0 to 1.

    Each stage takes a tangent predictor and is corrected by Newton to HOMOTOPY_STAGE_TOL
    relative to |R(v_0)|; a failed stage halves the tau step, which doubles again after each
    success. The last stage is plain Newton to ``tol``.

    Raises:
        NonConvergenceError: when the tau step falls below HOMOTOPY_MIN_STEP
        SignStructureLostError: as in newton_solve
    """
    _check_epsilon(epsilon, N)
    _check_newton_parameters(tol, max_iter)
    grid = grid_for(initial, N)
    seeded = _axis_sign_changes(initial) >= 2
    v = np.asarray(grid.to_vector(initial), dtype=EXTENDED)
    start = _residual_vector(grid, v, epsilon)
    stage_tol = max(tol, HOMOTOPY_STAGE_TOL * _max_norm(start))
    tau, step, iterations = 0.0, HOMOTOPY_FIRST_STEP, 0
    history: List[float] = [_max_norm(start)]
    if history[0] < tol:
        return _solve_result(grid, v, epsilon, history[0], history, 0, seeded, predicted)

    while True:
        target = min(1.0, tau + step)
        final = target == 1.0
        try:
            tangent = spsolve(_jacobian(grid, v, epsilon), -np.asarray(start, dtype=float))
            if not np.all(np.isfinite(tangent)):
                raise NonConvergenceError(f"singular Jacobian at tau = {tau:.4g}", residual_history=history)
            shift = None if final else (1.0 - target) * start
            v_new, norm, stage_history, stage_iterations = _newton(
                grid, v + (target - tau) * tangent, epsilon, tol if final else stage_tol, max_iter, max_backtracks,
                shift)
        except NonConvergenceError as e:
            step *= 0.5
            logger.debug(f"eps={epsilon}: homotopy stage to tau = {target:.4g} failed ({e}); step {step:.3g}")
            if step < HOMOTOPY_MIN_STEP:
                raise NonConvergenceError(
                    f"homotopy stalled at tau = {tau:.4g} for eps = {epsilon}: {e}",
                    residual_history=history + e.residual_history,
                ) from e
            continue
        v, tau = v_new, target
        iterations += stage_iterations
        history.extend(stage_history[1:])
        if final:
            break
        step = min(2.0 * step, 0.5)
    logger.debug(f"eps={epsilon}: homotopy done in {iterations} Newton steps")
    return _solve_result(grid, v, epsilon, norm, history, iterations, seeded, predicted)


def _advance(grid: AxiGrid, v: np.ndarray, eps_from: float, eps_to: float, tol: float, max_iter: int,
             max_backtracks: int, max_halvings: int) -> Tuple[np.ndarray, float, List[float], int]:
    """
    Carry a solution at eps_from to eps_to: tangent predictor in eps, Newton corrector, and
    the log-eps step halved after each failed correction.
    """
    log_to = math.log(eps_to)
    log_current, log_step = math.log(eps_from), log_to - math.log(eps_from)
    current, halvings, iterations = eps_from, 0, 0
    history: List[float] = []
    while current != eps_to:
        log_next = log_current + log_step
        target = eps_to if (log_next - log_to) * log_step >= 0 else math.exp(log_next)
        try:
            tangent = spsolve(_jacobian(grid, v, current), -_epsilon_derivative(grid, v, current))
            if not np.all(np.isfinite(tangent)):
                raise NonConvergenceError(f"singular Jacobian at eps = {current}", residual_history=history)
            v_new, norm, stage_history, stage_iterations = _newton(
                grid, v + (target - current) * tangent, target, tol, max_iter, max_backtracks)
        except NonConvergenceError as e:
            halvings += 1
            if halvings > max_halvings:
                raise NonConvergenceError(
                    f"continuation stalled at eps = {current:.6g} after {max_halvings} step halvings: {e}",
                    residual_history=e.residual_history,
                ) from e
            log_step *= 0.5
            logger.debug(f"eps {current:.6g} -> {target:.6g} failed; halving the step")
            continue
        v, current, log_current = v_new, target, math.log(target)
        iterations += stage_iterations
        history = stage_history
    return v, norm, history, iterations


def ansatz_guess(branch: Branch, epsilon: float, N: int, grid: Union[Tuple[int, int], AxiGrid],
                 c_n: Optional[float] = None) -> Tuple[Field2D, FiberedPoint]:
    """
    Bubble ansatz at the critical radius of ``branch`` on a uniform (n_s, n_r) lattice or on
    the coordinates of an AxiGrid; c_n defaults to the bubble energy constant.
    """
    rho = find_critical_rhos(N)[Branch(branch).index]
    cfg = _ansatz_config(N, c_n)
    spec = ProfileSpec.at(rho, N)
    if isinstance(grid, AxiGrid):
        field = ansatz_on(spec, epsilon, cfg, grid.s_grid, grid.r_grid)
    else:
        field = ansatz_field(spec, epsilon, cfg, grid)
    return field, fibered_point(rho, cfg)


def continue_in_epsilon(start_eps: float, end_eps: float, steps: int, which: Branch, N: int,
                        grid: AxiGrid, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                        max_backtracks: int = DEFAULT_BACKTRACKS, c_n: Optional[float] = None,
                        max_halvings: int = MAX_HALVINGS) -> List[SolveResult]:
    """
    Solve along a geometric eps ladder from start_eps down to end_eps, each rung seeded by the
    previous solution and the first by the bubble ansatz (through homotopy_solve).

    Between rungs the solution is carried by a tangent predictor in eps; a failed step is
    split in half in log eps up to ``max_halvings`` times. Every reported rung meets the
    absolute tolerance ``tol``.

    Raises:
        NonConvergenceError: carrying the rung index of the failing solve
        SignStructureLostError: with the rung index in its message
    """
    if not start_eps > end_eps > 0:
        raise DomainError(f"need start_eps > end_eps > 0, got {start_eps}, {end_eps}")
    if steps < 2:
        raise DomainError(f"the ladder needs at least 2 steps, got {steps}")
    _check_epsilon(start_eps, N)
    _check_newton_parameters(tol, max_iter)
    which = Branch(which)
    ladder = np.geomspace(start_eps, end_eps, steps)
    seed, predicted = ansatz_guess(which, float(ladder[0]), N, grid, c_n)

    results = []
    for rung, epsilon in enumerate(ladder):
        epsilon = float(epsilon)
        try:
            if rung == 0:
                result = homotopy_solve(seed, epsilon, N, tol=tol, max_iter=max_iter,
                                        max_backtracks=max_backtracks, predicted=predicted)
            else:
                previous = results[-1]
                v, norm, history, iterations = _advance(grid, grid.to_vector(previous.field), previous.epsilon,
                                                        epsilon, tol, max_iter, max_backtracks, max_halvings)
                result = _solve_result(grid, v, epsilon, norm, history, iterations, True, predicted)
        except NonConvergenceError as e:
            raise NonConvergenceError(f"rung {rung}: {e}", residual_history=e.residual_history, rung=rung) from e
        except SignStructureLostError as e:
            raise SignStructureLostError(f"rung {rung}: {e}") from e
        logger.info(f"{which.value} rung {rung}: eps = {epsilon:.4g}, {result.newton_iterations} Newton steps, "
                    f"residual {result.final_residual:.3e} (round-off floor {result.residual_floor:.1e})")
        results.append(result)
    return results


def _parabolic_vertex(s: np.ndarray, values: np.ndarray, k: int) -> float:
    """Vertex of the parabola through the samples k-1, k, k+1 (any spacing)."""
    if k == 0 or k == len(values) - 1:
        return float(s[k])
    x0, x1, x2 = (float(x) for x in s[k - 1:k + 2])
    f0, f1, f2 = (float(f) for f in values[k - 1:k + 2])
    numerator = (x1 - x0) ** 2 * (f1 - f2) - (x1 - x2) ** 2 * (f1 - f0)
    denominator = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0)
    if denominator == 0:
        return x1
    return x1 - 0.5 * numerator / denominator


def extract_diagnostics(result: SolveResult, N: int) -> LadderDiagnostics:
    """
    rho_hat: refined location of the negative minimum on the positive s-axis; height_scaling:
    u(0) (lambda^2 eps)^((N-2)/2) / alpha_N; sign_pattern: signs of the boundary normal
    derivative at the sample latitudes; energy: discrete J_eps.

    Raises:
        ExtractionError: if the axis has no negative value for s > 0
    """
    s, values = result.field.axis_profile()
    positive_side = s > 0
    if not np.any(positive_side) or np.min(values[positive_side]) >= 0:
        raise ExtractionError(f"eps = {result.epsilon}: no negative extremum on the axis")
    k = int(np.argmin(np.where(positive_side, values, np.inf)))
    rho_hat = _parabolic_vertex(s, values, k)

    mirror = int(np.argmin(np.where(s < 0, values, np.inf)))
    if abs(s[mirror] + s[k]) > 1e-9:
        logger.warning(f"eps = {result.epsilon}: negative peaks at {s[mirror]:.6f} and {s[k]:.6f} are not symmetric")

    height = None
    if result.predicted is not None:
        center = float(values[int(np.argmin(np.abs(s)))])
        height = float(center * (result.predicted.lam ** 2 * result.epsilon) ** ((N - 2) / 2) / alpha_n(N))

    return LadderDiagnostics(
        epsilon=result.epsilon,
        rho_hat=rho_hat,
        height_scaling=height,
        residual=result.final_residual,
        iterations=result.newton_iterations,
        energy=result.discrete_energy,
        sign_pattern=tuple(int(np.sign(value)) for _, value in result.boundary_normal_derivative),
    )


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    dx = np.diff(x)
    weights = np.zeros(len(x))
    weights[:-1] += 0.5 * dx
    weights[1:] += 0.5 * dx
    return weights


def discrete_energy(field2d: Field2D, epsilon: float, N: int) -> float:
    """
    J_eps(v) = 1/2 int |grad v|^2 - 1/(2*-eps) int |v|^(2*-eps) with dx = |S^(N-2)| r^(N-2) ds dr.

    v is extended by zero outside the disk; gradients are one-sided cell differences weighted
    at cell midpoints in r, the potential term uses the trapezoid rule. Mesh widths may vary.
    """
    N = check_dimension(N)
    v = np.where(field2d.mask, np.asarray(field2d.values, dtype=float), 0.0)
    s, r = np.asarray(field2d.s_grid, dtype=float), np.asarray(field2d.r_grid, dtype=float)
    ds, dr = np.diff(s), np.diff(r)
    w_s = _trapezoid_weights(s)
    r_weight = _trapezoid_weights(r) * r ** (N - 2)
    r_mid = 0.5 * (r[1:] + r[:-1])

    grad_s = np.diff(v, axis=0) / ds[:, None]
    grad_r = np.diff(v, axis=1) / dr[None, :]
    dirichlet = 0.5 * (np.sum(grad_s ** 2 * ds[:, None] * r_weight[None, :])
                       + np.sum(grad_r ** 2 * w_s[:, None] * (dr * r_mid ** (N - 2))[None, :]))
    q = 2 * N / (N - 2) - epsilon
    potential = np.sum(np.abs(v) ** q * w_s[:, None] * r_weight[None, :]) / q
    return float(sphere_area(N - 2) * (dirichlet - potential))


def boundary_normal_derivative(field2d: Field2D, latitudes: Sequence[float]) -> List[Tuple[float, float]]:
    """
    Outward normal derivative at the boundary points with first coordinate x_1, from the
    one-sided difference (-4 v(1-d) + v(1-2d)) / (2d) along the radius, d = 2 max(h_s, h_r)
    with the largest mesh widths. Off-node values come from bilinear interpolation inside the disk.
    """
    h_s, h_r = field2d.spacing
    d = 2.0 * max(h_s, h_r)
    interpolate = RegularGridInterpolator((field2d.s_grid, field2d.r_grid),
                                          np.where(field2d.mask, np.asarray(field2d.values, dtype=float), 0.0),
                                          method="linear")
    samples = []
    for x1 in latitudes:
        x1 = float(np.clip(x1, -1.0, 1.0))
        direction = np.array([x1, math.sqrt(max(1.0 - x1 * x1, 0.0))])
        inner, deeper = interpolate([(1.0 - d) * direction, (1.0 - 2.0 * d) * direction])
        samples.append((x1, float((-4.0 * inner + deeper) / (2.0 * d))))
    return samples


def _manufactured(s: np.ndarray, r: np.ndarray, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """u = cos(pi q / 2) with q = s^2 + r^2, and -Delta u = N pi sin(pi q / 2) + pi^2 q cos(pi q / 2)."""
    q = s * s + r * r
    u = np.cos(0.5 * np.pi * q)
    return u, N * np.pi * np.sin(0.5 * np.pi * q) + np.pi ** 2 * q * np.cos(0.5 * np.pi * q)


def truncation_error(N: int, n_s: int, n_r: int, radius: float = 0.8) -> float:
    """Max |-Delta_h u - (-Delta u)| for the manufactured u over nodes with |x| < radius."""
    grid = AxiGrid.build(n_s, n_r, N)
    s = grid.s_grid[grid.nodes[:, 0]]
    r = grid.r_grid[grid.nodes[:, 1]]
    u, minus_laplacian = _manufactured(s, r, N)
    error = np.abs(-(grid.laplacian @ u) - minus_laplacian)
    return float(np.max(error[s * s + r * r < radius ** 2]))


def manufactured_order(N: int, grids: Sequence[Tuple[int, int]] = ((65, 33), (129, 65))) -> float:
    """Observed order log(e_coarse / e_fine) / log(h_coarse / h_fine) of the discrete operator."""
    if len(grids) != 2:
        raise DomainError(f"manufactured_order compares exactly two grids, got {len(grids)}")
    (n1, m1), (n2, m2) = grids
    e1, e2 = truncation_error(N, n1, m1), truncation_error(N, n2, m2)
    h1, h2 = 1.0 / (m1 - 1), 1.0 / (m2 - 1)
    order = math.log(e1 / e2) / math.log(h1 / h2)
    logger.info(f"N={N}: truncation {e1:.3e} -> {e2:.3e}, observed order {order:.3f}")
    return order


def ladder_records(results: Sequence[SolveResult], N: int) -> List[Dict]:
    return [extract_diagnostics(result, N).to_dict() for result in results]
