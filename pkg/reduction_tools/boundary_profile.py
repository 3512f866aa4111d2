"""
Boundary behaviour of the limit profile and exportable cross-sections of it.

For a critical radius rho the limit profile is

    phi(rho, x) = Lambda(rho) G(x, 0) - G(x, (rho,0)) - G(x, (-rho,0))

and its normal derivative on the sphere is (N-2) psi(rho, x_1). psi is even in x_1 and
increasing in |x_1|, so m(rho) = psi(rho, 0) and M(rho) = psi(rho, 1) decide whether the
normal derivative of the solutions changes sign on the boundary.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.optimize import brentq

from . import reduced_energy as re_
from .ball_geometry import BubbleParams, alpha_n, check_dimension, green_g, meridian_points, projected_bubble_approx
from .contours import Polyline, zero_contours
from .critical_finder import CHI_RESIDUAL_TOL, GUARD_OFFSET, find_rho0, polish_root
from .errors import AmbiguityError, DomainError
from .fields import Field2D, half_disk_grid, half_disk_mask
from .reduced_energy import ReducedConfig

logger = logging.getLogger(__name__)

AMBIGUITY_TOL = 1e-12
MIN_GRID = 16
EXPANSION_RATIO = 0.1

SADDLE_BRANCH_NOTE = (
    "computed: the normal derivative keeps a positive sign at the saddle radius rho_1; "
    "the existence statement pairs the sign change with u_1 instead"
)
MINIMUM_BRANCH_NOTE = (
    "computed: the normal derivative changes sign at the minimum radius rho_2; "
    "the existence statement pairs the strictly positive normal derivative with u_2 instead"
)

_logged_notes: Set[str] = set()


class BoundaryKind(str, Enum):
    NO_SIGN_CHANGE_POSITIVE = "NO_SIGN_CHANGE_POSITIVE"
    NO_SIGN_CHANGE_NEGATIVE = "NO_SIGN_CHANGE_NEGATIVE"
    CHANGES_SIGN = "CHANGES_SIGN"


@dataclass(frozen=True)
class ProfileSpec:
    rho: float
    big_lambda: float
    dimension: int

    def __post_init__(self):
        check_dimension(self.dimension)
        expected = re_.capital_lambda(self.rho, self.dimension)
        if abs(self.big_lambda - expected) > 1e-12 * max(1.0, abs(expected)):
            raise DomainError(f"Lambda = {self.big_lambda} does not match Lambda(rho = {self.rho}) = {expected}")

    @classmethod
    def at(cls, rho: float, N: int) -> "ProfileSpec":
        return cls(rho=float(rho), big_lambda=re_.capital_lambda(rho, N), dimension=N)

    @property
    def centers(self) -> Tuple[float, float, float]:
        """s-coordinates of the positive center and the two negative ones."""
        return 0.0, self.rho, -self.rho


@dataclass(frozen=True)
class BoundaryClassification:
    kind: BoundaryKind
    m_value: float
    big_m_value: float
    zero_latitudes: Tuple[float, ...] = ()
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def changes_sign(self) -> bool:
        return self.kind is BoundaryKind.CHANGES_SIGN


def psi(rho, x1, N: int):
    """psi(rho, x_1) = -Lambda + (1-rho^2)((rho^2+1-2 rho x_1)^(-N/2) + (rho^2+1+2 rho x_1)^(-N/2))."""
    N = check_dimension(N)
    x1 = np.asarray(x1, dtype=float)
    if np.any(np.abs(x1) > 1.0):
        raise DomainError(f"x1 must lie in [-1, 1], got {x1}")
    big = re_.capital_lambda(rho, N)
    rho_sq = rho * rho
    value = -big + (1 - rho_sq) * ((rho_sq + 1 - 2 * rho * x1) ** (-N / 2) + (rho_sq + 1 + 2 * rho * x1) ** (-N / 2))
    return value if np.ndim(value) else float(value)


def little_m(rho, N: int):
    """m(rho) = psi(rho, 0) = -Lambda(rho) + 2(1-rho^2)(1+rho^2)^(-N/2)."""
    N = check_dimension(N)
    rho_arr = np.asarray(rho, dtype=float)
    value = -np.asarray(re_.capital_lambda(rho_arr, N)) + 2 * (1 - rho_arr ** 2) * (1 + rho_arr ** 2) ** (-N / 2)
    return value if np.ndim(value) else float(value)


def big_m(rho, N: int):
    """M(rho) = psi(rho, 1) = -Lambda(rho) + (1-rho^2)((1-rho)^(-N) + (1+rho)^(-N))."""
    N = check_dimension(N)
    rho_arr = np.asarray(rho, dtype=float)
    value = (-np.asarray(re_.capital_lambda(rho_arr, N))
             + (1 - rho_arr ** 2) * ((1 - rho_arr) ** (-N) + (1 + rho_arr) ** (-N)))
    return value if np.ndim(value) else float(value)


def emme_polynomial(rho, N: int):
    """2^(N-1)((1+rho)^N + (1-rho)^N - rho^N) - (1-rho^2)^(N-1), positive on [0, 1]."""
    N = check_dimension(N)
    rho = np.asarray(rho, dtype=float)
    value = 2.0 ** (N - 1) * ((1 + rho) ** N + (1 - rho) ** N - rho ** N) - (1 - rho ** 2) ** (N - 1)
    return value if np.ndim(value) else float(value)


def big_m_at_critical(rho: float, N: int) -> float:
    """
    M(rho) with Lambda replaced by -alpha'/(2 beta'), valid where chi(rho) = 0:

        rho^N / (1+rho^2)^(N-1) + P(rho) / (2^(N-1) (1-rho^2)^(N-1))

    where P is ``emme_polynomial``. Both terms are positive, so M > 0 at every zero of chi.
    """
    N = check_dimension(N)
    return float(rho ** N / (1 + rho ** 2) ** (N - 1)
                 + emme_polynomial(rho, N) / (2.0 ** (N - 1) * (1 - rho ** 2) ** (N - 1)))


def _labeling_notes(rho_star: float, N: int) -> Tuple[str, ...]:
    if polish_root(rho_star, N)[1] > CHI_RESIDUAL_TOL:
        return ()
    note = SADDLE_BRANCH_NOTE if re_.chi_prime(rho_star, N) < 0 else MINIMUM_BRANCH_NOTE
    if note not in _logged_notes:
        _logged_notes.add(note)
        logger.info(f"N={N}, rho={rho_star:.12f}: {note} (reported once per run)")
    return (note,)


def classify_boundary(rho_star: float, N: int) -> BoundaryClassification:
    """
    Sign behaviour of the boundary normal derivative at the solutions concentrating at rho_star.

    m > 0 means no sign change (positive), M < 0 no sign change (negative), m < 0 < M a sign
    change at the latitudes +-x_1* where psi vanishes. At a critical radius the report also
    carries a note on how the computed pairing relates to the stated one.

    Raises:
        AmbiguityError: if |m| or |M| is below 1e-12
    """
    m_value = little_m(rho_star, N)
    big_m_value = big_m(rho_star, N)
    if abs(m_value) < AMBIGUITY_TOL or abs(big_m_value) < AMBIGUITY_TOL:
        raise AmbiguityError(f"N={N}, rho={rho_star}: m = {m_value:.3e}, M = {big_m_value:.3e}; sign undecided")

    notes = _labeling_notes(rho_star, N)
    if m_value > 0:
        return BoundaryClassification(BoundaryKind.NO_SIGN_CHANGE_POSITIVE, m_value, big_m_value, (), notes)
    if big_m_value < 0:
        return BoundaryClassification(BoundaryKind.NO_SIGN_CHANGE_NEGATIVE, m_value, big_m_value, (), notes)

    x_star = brentq(lambda x1: psi(rho_star, x1, N), 0.0, 1.0, xtol=1e-14)
    logger.debug(f"N={N}, rho={rho_star:.12f}: psi vanishes at x_1 = +-{x_star:.12f}")
    return BoundaryClassification(BoundaryKind.CHANGES_SIGN, m_value, big_m_value, (-x_star, x_star), notes)


def zero_crossing_of_m(N: int, guard: float = GUARD_OFFSET) -> float:
    """The radius in (rho_0, 1) where m changes sign; classifications flip there and nowhere else."""
    rho0 = find_rho0(N)
    return brentq(lambda rho: little_m(rho, N), rho0 + guard, 1.0 - guard, xtol=1e-14)


def phi_values(spec: ProfileSpec, s, r):
    """phi(rho, .) at meridian coordinates (s, r); raises SingularityError on a center."""
    N = spec.dimension
    points = meridian_points(s, r, N)
    value = (spec.big_lambda * np.asarray(green_g(points, np.zeros(N), N))
             - np.asarray(green_g(points, _axis(spec.rho, N), N))
             - np.asarray(green_g(points, _axis(-spec.rho, N), N)))
    return value if np.ndim(value) else float(value)


def _axis(s: float, N: int) -> np.ndarray:
    point = np.zeros(N)
    point[0] = s
    return point


def _check_grid(grid: Tuple[int, int]) -> Tuple[int, int]:
    n_s, n_r = grid
    if n_s < MIN_GRID or n_r < MIN_GRID:
        raise DomainError(f"grid must be at least {MIN_GRID} x {MIN_GRID}, got {n_s} x {n_r}")
    return n_s, n_r


def phi_field(spec: ProfileSpec, grid: Tuple[int, int]) -> Field2D:
    """
    Sample phi on the half-disk grid. The node nearest to each center (within half a mesh
    width) is masked along with everything outside the open disk.
    """
    n_s, n_r = _check_grid(grid)
    s_grid, r_grid, mask = half_disk_grid(n_s, n_r)
    s, r = np.meshgrid(s_grid, r_grid, indexing="ij")
    radius = 0.5 * min(s_grid[1] - s_grid[0], r_grid[1] - r_grid[0])
    for center in spec.centers:
        mask &= (s - center) ** 2 + r ** 2 >= radius ** 2

    values = np.zeros_like(s)
    values[mask] = phi_values(spec, s[mask], r[mask])
    return Field2D(s_grid, r_grid, values, mask)


def ansatz_values(spec: ProfileSpec, epsilon: float, cfg: ReducedConfig, s, r):
    """V = PU(lambda^2 eps, 0) - PU(mu^2 eps, (rho,0)) - PU(mu^2 eps, (-rho,0)) at meridian points."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if cfg.dimension != spec.dimension:
        raise DomainError(f"config dimension {cfg.dimension} does not match profile dimension {spec.dimension}")
    N = spec.dimension
    point = re_.fibered_point(spec.rho, cfg)
    delta_0, delta_1 = point.lam ** 2 * epsilon, point.mu ** 2 * epsilon
    _check_expansion_regime(delta_0, 1.0, "0")
    _check_expansion_regime(delta_1, 1.0 - spec.rho, "+-rho")

    x = meridian_points(s, r, N)
    value = (np.asarray(projected_bubble_approx(x, BubbleParams.on_axis(delta_0, 0.0, N)))
             - np.asarray(projected_bubble_approx(x, BubbleParams.on_axis(delta_1, spec.rho, N)))
             - np.asarray(projected_bubble_approx(x, BubbleParams.on_axis(delta_1, -spec.rho, N))))
    return value if np.ndim(value) else float(value)


def _check_expansion_regime(delta: float, distance: float, label: str):
    if delta > EXPANSION_RATIO * distance:
        logger.warning(
            f"bubble scale {delta:.3e} at center {label} exceeds {EXPANSION_RATIO} x distance to the boundary "
            f"({distance:.3e}); the projected-bubble expansion is outside its regime"
        )


def ansatz_field(spec: ProfileSpec, epsilon: float, cfg: ReducedConfig, grid: Tuple[int, int]) -> Field2D:
    """
    Sample the bubble ansatz V^eps on the half-disk grid.

    This is the approximate solution only: the correction term solved for in the reduction is
    not included, so V^eps is accurate to O(eps). Divided by alpha_N mu sqrt(eps) it tends to
    phi away from the centers (for N = 3, where delta = lambda^2 eps gives delta^((N-2)/2) = lambda sqrt(eps)).
    """
    n_s, n_r = _check_grid(grid)
    s_grid, r_grid, _ = half_disk_grid(n_s, n_r)
    return ansatz_on(spec, epsilon, cfg, s_grid, r_grid)


def ansatz_on(spec: ProfileSpec, epsilon: float, cfg: ReducedConfig, s_grid: np.ndarray,
              r_grid: np.ndarray) -> Field2D:
    """The bubble ansatz on any tensor grid of [-1, 1] x [0, 1], graded ones included."""
    mask = half_disk_mask(s_grid, r_grid)
    s, r = np.meshgrid(s_grid, r_grid, indexing="ij")
    values = np.zeros_like(s)
    values[mask] = ansatz_values(spec, epsilon, cfg, s[mask], r[mask])
    return Field2D(np.asarray(s_grid, dtype=float), np.asarray(r_grid, dtype=float), values, mask)


def profile_scale(spec: ProfileSpec, epsilon: float, cfg: ReducedConfig) -> float:
    """alpha_N mu sqrt(eps), the factor relating the ansatz to phi."""
    return alpha_n(spec.dimension) * re_.fibered_point(spec.rho, cfg).mu * float(np.sqrt(epsilon))


def nodal_contours(field2d: Field2D) -> List[Polyline]:
    return zero_contours(field2d)


def boundary_touch_latitudes(polylines: Sequence[Polyline], shell: float) -> List[float]:
    """x_1 latitudes (s / |p|) of polyline endpoints lying within ``shell`` of the unit circle."""
    latitudes = []
    for line in polylines:
        for s, r in (line[0], line[-1]):
            norm = float(np.hypot(s, r))
            if norm >= 1.0 - shell:
                latitudes.append(s / norm)
    return sorted(latitudes)


def boundary_signs(rho: float, N: int, latitudes: Optional[Sequence[float]] = None) -> List[int]:
    """Signs of psi at the given boundary latitudes (default: 21 points from -1 to 1)."""
    if latitudes is None:
        latitudes = np.linspace(-1.0, 1.0, 21)
    return [int(np.sign(v)) for v in np.atleast_1d(psi(rho, np.asarray(latitudes), N))]
