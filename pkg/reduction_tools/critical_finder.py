"""
Critical points of the reduced energy F.

rho_0 is the zero of alpha; the critical radii are the zeros of chi on (rho_0, 1). The sign
pattern chi > 0 near rho_0, chi(1/2) < 0, chi(golden ratio radius) < 0, chi > 0 near 1 brackets
a local maximum rho_1 < 1/2 and a local minimum rho_2 > (sqrt(5)-1)/2 of f. Each bracket is
bisected and then polished with Newton steps on chi.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect, brentq

from . import reduced_energy as re_
from .ball_geometry import check_dimension
from .errors import BracketFailureError, DegeneracyError, DomainError
from .reduced_energy import GOLDEN_RHO, ReducedConfig

logger = logging.getLogger(__name__)

GUARD_OFFSET = 1e-6
ROOT_TOL = 1e-12
CHI_RESIDUAL_TOL = 1e-10
POLISH_WINDOW = 1e-9
DEGENERACY_RATIO = 1e-8
NEWTON_POLISH_STEPS = 3


class CriticalKind(str, Enum):
    SADDLE = "SADDLE"
    MINIMUM = "MINIMUM"


@dataclass(frozen=True)
class Brackets:
    rho0: float
    rho1_bracket: Tuple[float, float]
    rho2_bracket: Tuple[float, float]


@dataclass(frozen=True)
class CriticalPointRecord:
    """
    One critical point (lambda(rho), mu(rho), rho) of F.

    chi_residual is the absolute |chi| at the radius polished in extended precision.
    nondegeneracy_margin is the smallest |eigenvalue| of the raw Hessian of F.
    """

    which: CriticalKind
    rho: float
    lam: float
    mu: float
    chi_residual: float
    hessian_eigenvalues: Tuple[float, float, float]
    morse_index: int
    degree: int
    nondegeneracy_margin: float
    fiber_trace: float = 0.0
    fiber_determinant: float = 0.0


@dataclass
class CriticalSummary:
    dimension: int
    c_n: float
    rho0: float
    records: List[CriticalPointRecord] = field(default_factory=list)
    sign_changes: int = 0


def find_rho0(N: int, tol: float = ROOT_TOL) -> float:
    """
    Locate the unique zero rho_0 of alpha in (0, 1/2).

    The search runs on a log-domain function with the sign of alpha so large dimensions do
    not overflow near rho = 0.

    Raises:
        BracketFailureError: if alpha(1/2) <= 0 or no negative value is found near 0
    """
    N = check_dimension(N)
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    sign_fn = lambda rho: re_.alpha_sign_function(rho, N)

    if sign_fn(0.5) <= 0:
        raise BracketFailureError(f"alpha(1/2) <= 0 for N = {N}; the closed form of alpha is wrong")
    lo = 0.01
    while sign_fn(lo) >= 0:
        lo /= 10
        if lo < 1e-12:
            raise BracketFailureError(f"alpha stays positive down to rho = {lo} for N = {N}")

    rho0 = brentq(sign_fn, lo, 0.5, xtol=tol)
    logger.debug(f"N={N}: rho_0 = {rho0:.17g}")
    return rho0


def count_sign_changes(values: Sequence[float]) -> int:
    signs = np.sign(np.asarray(values, dtype=float))
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def scan_chi(N: int, mesh: int = 10000, guard: float = GUARD_OFFSET) -> List[Tuple[float, float]]:
    """Uniform mesh of (rho, chi(rho)) on [rho_0 + guard, 1 - guard]."""
    if mesh < 100:
        raise DomainError(f"mesh must have at least 100 points, got {mesh}")
    rho0 = find_rho0(N)
    rhos = np.linspace(rho0 + guard, 1.0 - guard, mesh)
    chis = re_.chi(rhos, N)
    return list(zip(rhos.tolist(), np.asarray(chis).tolist()))


def build_brackets(N: int, guard: float = GUARD_OFFSET) -> Brackets:
    """
    Check the proved sign pattern of chi and return the two brackets.

    Raises:
        BracketFailureError: if any endpoint has the wrong sign
    """
    rho0 = find_rho0(N)
    lo1, hi1 = rho0 + guard, 0.5
    lo2, hi2 = GOLDEN_RHO, 1.0 - guard
    expected = ((lo1, 1), (hi1, -1), (lo2, -1), (hi2, 1))
    for rho, sign in expected:
        value = re_.chi(rho, N)
        if np.sign(value) != sign:
            raise BracketFailureError(
                f"N={N}: chi({rho:.17g}) = {value:.6g} but the bracket needs sign {sign:+d}"
            )
    return Brackets(rho0=rho0, rho1_bracket=(lo1, hi1), rho2_bracket=(lo2, hi2))


def _newton_polish(fn: Callable[[float], float], dfn: Callable[[float], float],
                   x: float, lo: float, hi: float) -> float:
    best, best_val = x, abs(fn(x))
    for _ in range(NEWTON_POLISH_STEPS):
        slope = dfn(best)
        if slope == 0 or not math.isfinite(slope):
            break
        candidate = best - fn(best) / slope
        if not lo <= candidate <= hi:
            break
        value = abs(fn(candidate))
        if value >= best_val:
            break
        best, best_val = candidate, value
    return best


def _refine_root(N: int, lo: float, hi: float, tol: float) -> float:
    fn = lambda rho: re_.chi(rho, N)
    root = bisect(fn, lo, hi, xtol=tol, maxiter=200)
    return _newton_polish(fn, lambda rho: re_.chi_prime(rho, N), root, lo, hi)


def _check_single_root(N: int, bracket: Tuple[float, float], mesh: int) -> int:
    rhos = np.linspace(bracket[0], bracket[1], mesh)
    changes = count_sign_changes(re_.chi(rhos, N))
    if changes > 1:
        logger.warning(f"N={N}: chi changes sign {changes} times inside [{bracket[0]:.6f}, {bracket[1]:.6f}]")
    return changes


def find_critical_rhos(N: int, tol: float = ROOT_TOL, guard: float = GUARD_OFFSET,
                       scan_mesh: int = 2000) -> Tuple[float, float]:
    """
    Return (rho_1, rho_2), the zeros of chi with rho_0 < rho_1 < 1/2 < (sqrt(5)-1)/2 < rho_2 < 1.

    Args:
        N (int): dimension
        tol (float): bisection width
        guard (float): distance kept from rho_0 and from 1
        scan_mesh (int): points used to look for extra sign changes inside each bracket
    """
    brackets = build_brackets(N, guard)
    _check_single_root(N, brackets.rho1_bracket, scan_mesh)
    _check_single_root(N, brackets.rho2_bracket, scan_mesh)
    rho1 = _refine_root(N, *brackets.rho1_bracket, tol)
    rho2 = _refine_root(N, *brackets.rho2_bracket, tol)
    logger.debug(f"N={N}: rho_1 = {rho1:.17g}, rho_2 = {rho2:.17g}")
    return rho1, rho2


def polish_root(rho_star: float, N: int) -> Tuple[float, float]:
    """
    Newton-polish rho_star as a zero of chi in extended precision (np.longdouble), moving it
    by at most POLISH_WINDOW relative, and return (rho, |chi(rho)|) at the polished root.

    For large N, chi changes by ~1e-8 per double-precision step of rho near rho_2, so an
    absolute residual below CHI_RESIDUAL_TOL is only attainable between doubles.
    """
    x = np.longdouble(rho_star)
    width = POLISH_WINDOW * x
    root = _newton_polish(lambda t: re_.chi(t, N), lambda t: re_.chi_prime(t, N), x, x - width, x + width)
    return float(root), float(abs(re_.chi(root, N)))


def _unit_diagonal(hessian: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.maximum(np.abs(np.diag(hessian)), np.finfo(float).tiny))
    return hessian / np.outer(d, d)


def classify(rho_star: float, N: int, cfg: Optional[ReducedConfig] = None) -> CriticalPointRecord:
    """
    Build the CriticalPointRecord of the critical point of F over rho_star.

    rho_star is first polished in extended precision; chi_residual is the absolute |chi| there.
    The Hessian is the raw one at (lambda, mu, rho_star) and nondegeneracy_margin its smallest
    |eigenvalue|. Degeneracy is judged on the Hessian scaled to unit diagonal (same inertia),
    whose spread does not grow with N; the Morse index and degree come from it as well.

    Raises:
        DomainError: if |chi| exceeds CHI_RESIDUAL_TOL at the polished radius
        DegeneracyError: if the scaled Hessian has an eigenvalue below 1e-8 of the largest one,
            or the Morse index does not match the sign of chi'
    """
    cfg = cfg or ReducedConfig(dimension=N)
    if cfg.dimension != N:
        raise DomainError(f"config dimension {cfg.dimension} does not match N = {N}")

    _, residual = polish_root(rho_star, N)
    if residual > CHI_RESIDUAL_TOL:
        raise DomainError(f"rho = {rho_star} is not a critical radius (|chi| = {residual:.3e})")

    point = re_.fibered_point(rho_star, cfg)
    hessian = re_.hess_f(point.as_reduced(), cfg)
    eigenvalues = np.linalg.eigvalsh(hessian)
    scaled = np.linalg.eigvalsh(_unit_diagonal(hessian))
    if np.min(np.abs(scaled)) < DEGENERACY_RATIO * float(np.max(np.abs(scaled))):
        raise DegeneracyError(
            f"N={N}: critical point at rho = {rho_star} is numerically degenerate (scaled eigenvalues {scaled})"
        )
    margin = float(np.min(np.abs(eigenvalues)))

    morse_index = int(np.count_nonzero(scaled < 0))
    degree = 1 if np.prod(np.sign(scaled)) > 0 else -1
    which = CriticalKind.SADDLE if re_.chi_prime(rho_star, N) < 0 else CriticalKind.MINIMUM
    expected_index = 1 if which is CriticalKind.SADDLE else 0
    if morse_index != expected_index:
        raise DegeneracyError(
            f"N={N}: rho = {rho_star} is a {which.value} of f but F has Morse index {morse_index}"
        )

    block = hessian[:2, :2]
    return CriticalPointRecord(
        which=which,
        rho=float(rho_star),
        lam=point.lam,
        mu=point.mu,
        chi_residual=float(residual),
        hessian_eigenvalues=tuple(float(v) for v in eigenvalues),
        morse_index=morse_index,
        degree=degree,
        nondegeneracy_margin=margin,
        fiber_trace=float(np.trace(block)),
        fiber_determinant=float(np.linalg.det(block)),
    )


def locate_critical_points(N: int, cfg: Optional[ReducedConfig] = None, tol: float = ROOT_TOL,
                           guard: float = GUARD_OFFSET, scan_mesh: int = 10000) -> CriticalSummary:
    """Find rho_0, both critical radii and their records, and count chi sign changes on a scan."""
    cfg = cfg or ReducedConfig(dimension=N)
    rho1, rho2 = find_critical_rhos(N, tol=tol, guard=guard)
    records = [classify(rho1, N, cfg), classify(rho2, N, cfg)]
    chis = [value for _, value in scan_chi(N, mesh=scan_mesh, guard=guard)]
    changes = count_sign_changes(chis)
    if changes != 2:
        logger.warning(f"N={N}: chi changes sign {changes} times on a {scan_mesh}-point scan")
    for record in records:
        logger.info(f"N={N}: {record.which.value} at rho = {record.rho:.12f}, Morse index {record.morse_index}")
    return CriticalSummary(dimension=N, c_n=cfg.c_n, rho0=find_rho0(N), records=records, sign_changes=changes)
