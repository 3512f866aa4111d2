"""
Closed-form Green and Robin functions of the unit ball, the bubbles U_{delta,xi} and their
projections onto H^1_0 of the ball.

Points are numpy arrays whose last axis holds the N coordinates, so every function accepts
a single point of shape (N,) or a stack of points of shape (..., N). The configurations used
by the rest of the toolkit live on the x_1-axis; ``axis_point`` and ``meridian_points`` build
them.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma, roots_jacobi

from .errors import DomainError, QuadratureError, SingularityError

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12
COINCIDENCE_TOL = 1e-12
DEFAULT_QUADRATURE_ORDER = 64

ArrayLike = Union[float, np.ndarray]


def check_dimension(N: int) -> int:
    if int(N) != N or N < 3:
        raise DomainError(f"dimension must be an integer N >= 3, got {N}")
    return int(N)


def alpha_n(N: int) -> float:
    """Normalisation alpha_N = (N(N-2))^((N-2)/4) of the bubbles."""
    N = check_dimension(N)
    return (N * (N - 2)) ** ((N - 2) / 4)


def sphere_area(k: int) -> float:
    """Surface measure of the unit sphere S^k in R^(k+1)."""
    return 2.0 * math.pi ** ((k + 1) / 2) / gamma((k + 1) / 2)


def axis_point(rho: float, N: int) -> np.ndarray:
    """The point (rho, 0, ..., 0) of R^N."""
    point = np.zeros(check_dimension(N))
    point[0] = rho
    return point


def meridian_points(s: ArrayLike, r: ArrayLike, N: int) -> np.ndarray:
    """Embed meridian coordinates (s, r) = (x_1, |x'|) as points (s, r, 0, ..., 0)."""
    s, r = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(r, dtype=float))
    points = np.zeros(s.shape + (check_dimension(N),))
    points[..., 0] = s
    points[..., 1] = r
    return points


def _as_points(x, N: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (N,):
        raise DomainError(f"{name} must have {N} coordinates in its last axis, got shape {x.shape}")
    return x


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def _check_closed_ball(sq_norm: np.ndarray, name: str):
    if np.any(sq_norm > (1.0 + BOUNDARY_TOL) ** 2):
        worst = float(np.sqrt(np.max(sq_norm)))
        raise DomainError(f"{name} lies outside the closed unit ball (|{name}| = {worst:.17g})")


@dataclass(frozen=True)
class BubbleParams:
    """Scale delta, center xi and dimension N of a bubble U_{delta,xi}."""

    delta: float
    center: Tuple[float, ...]
    dimension: int

    def __post_init__(self):
        check_dimension(self.dimension)
        if not self.delta > 0:
            raise DomainError(f"bubble scale delta must be positive, got {self.delta}")
        if len(self.center) != self.dimension:
            raise DomainError(f"center has {len(self.center)} coordinates, expected {self.dimension}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def on_axis(cls, delta: float, rho: float, N: int) -> "BubbleParams":
        return cls(delta=delta, center=tuple(axis_point(rho, N)), dimension=N)

    @property
    def xi(self) -> np.ndarray:
        return np.asarray(self.center)


def robin_h(x, y, N: int) -> ArrayLike:
    """
    Regular part H(x, y) = (|x|^2 |y|^2 + 1 - 2(x, y))^(-(N-2)/2) of the Green's function.

    The radicand is evaluated as |x - y|^2 + (1 - |x|^2)(1 - |y|^2), which is the same
    polynomial and keeps the boundary identity H(x, y) = |x - y|^(2-N) for |x| = 1 exact
    to round-off.

    Args:
        x: point(s) of the closed ball, shape (..., N)
        y: point(s) of the closed ball, broadcastable against x
        N (int): dimension

    Returns:
        H(x, y), positive and symmetric
    """
    N = check_dimension(N)
    x = _as_points(x, N, "x")
    y = _as_points(y, N, "y")
    x_sq = _squared_norm(x)
    y_sq = _squared_norm(y)
    _check_closed_ball(x_sq, "x")
    _check_closed_ball(y_sq, "y")
    diff = x - y
    radicand = _squared_norm(diff) + (1.0 - x_sq) * (1.0 - y_sq)
    if np.any(radicand <= 0.0):
        raise DomainError("radicand |x|^2|y|^2 + 1 - 2(x,y) is not positive; corrupted input points")
    value = radicand ** (-(N - 2) / 2)
    return value if np.ndim(value) else float(value)


def green_g(x, y, N: int) -> ArrayLike:
    """Dirichlet Green's function G(x, y) = |x - y|^(2-N) - H(x, y) of the unit ball."""
    N = check_dimension(N)
    x = _as_points(x, N, "x")
    y = _as_points(y, N, "y")
    dist_sq = _squared_norm(x - y)
    if np.any(dist_sq < COINCIDENCE_TOL ** 2):
        raise SingularityError("Green's function evaluated at coincident points")
    value = dist_sq ** (-(N - 2) / 2) - robin_h(x, y, N)
    return value if np.ndim(value) else float(value)


def bubble(x, p: BubbleParams) -> ArrayLike:
    """U_{delta,xi}(x) = alpha_N (delta / (delta^2 + |x - xi|^2))^((N-2)/2)."""
    N = p.dimension
    x = _as_points(x, N, "x")
    dist_sq = _squared_norm(x - p.xi)
    value = alpha_n(N) * (p.delta / (p.delta ** 2 + dist_sq)) ** ((N - 2) / 2)
    return value if np.ndim(value) else float(value)


def projected_bubble_approx(x, p: BubbleParams) -> ArrayLike:
    """
    Leading-order projection PU = U - gamma_N delta^((N-2)/2) H(x, xi) with gamma_N = alpha_N.

    The neglected remainder is O(delta^((N+2)/2) / dist(xi, boundary)^N); callers keep delta
    small compared with the distance of xi to the boundary.
    """
    N = p.dimension
    correction = alpha_n(N) * p.delta ** ((N - 2) / 2) * robin_h(x, p.xi, N)
    return bubble(x, p) - correction


def _poisson_extension(s: np.ndarray, r: np.ndarray, p: BubbleParams, order: int) -> np.ndarray:
    """Harmonic extension of U|boundary at meridian coordinates (s, r), xi on the x_1-axis."""
    N = p.dimension
    a = p.center[0]

    # polar angle theta in (0, pi) of the boundary point, Gauss-Legendre
    nodes, weights = leggauss(order)
    theta = 0.5 * np.pi * (nodes + 1.0)
    w_theta = 0.5 * np.pi * weights
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    # t = cosine of the angle between x' and y' on S^(N-2), Gauss-Jacobi with weight (1-t^2)^((N-4)/2)
    jac = (N - 4) / 2
    t, w_t = roots_jacobi(order, jac, jac)
    w_t = w_t * sphere_area(N - 3)

    boundary_values = alpha_n(N) * (p.delta / (p.delta ** 2 + 1.0 + a * a - 2.0 * a * cos_t)) ** ((N - 2) / 2)

    s = s[..., None, None]
    r = r[..., None, None]
    x_sq = s * s + r * r
    dist_sq = x_sq + 1.0 - 2.0 * (s * cos_t[:, None] + r * sin_t[:, None] * t[None, :])
    kernel = (1.0 - x_sq) / sphere_area(N - 1) * dist_sq ** (-N / 2)
    integrand = kernel * (w_theta * sin_t ** (N - 2) * boundary_values)[:, None] * w_t[None, :]
    return np.sum(integrand, axis=(-2, -1))


def projected_bubble_exact(x, p: BubbleParams, quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
                           tol: float = 1e-6) -> ArrayLike:
    """
    PU = U - w where w is the Poisson-integral harmonic extension of U restricted to the sphere.

    Only axisymmetric configurations are supported: xi must lie on the x_1-axis. The quadrature
    error is estimated by repeating the rule at half the order.

    Args:
        x: interior point(s), shape (..., N)
        p (BubbleParams): bubble with center on the x_1-axis
        quadrature_order (int): Gauss nodes per direction, at least 8
        tol (float): accepted relative difference between the full and half-order rules

    Returns:
        PU at x

    Raises:
        QuadratureError: if the estimated quadrature error exceeds tol
    """
    N = p.dimension
    if quadrature_order < 8:
        raise DomainError(f"quadrature_order must be at least 8, got {quadrature_order}")
    if np.any(np.abs(p.xi[1:]) > 0.0):
        raise DomainError("projected_bubble_exact supports centers on the x_1-axis only")
    x = _as_points(x, N, "x")
    x_sq = _squared_norm(x)
    if np.any(x_sq >= 1.0):
        raise DomainError("projected_bubble_exact needs interior points")

    s = x[..., 0]
    r = np.sqrt(np.maximum(x_sq - s * s, 0.0))
    w_full = _poisson_extension(s, r, p, quadrature_order)
    w_half = _poisson_extension(s, r, p, quadrature_order // 2)
    error = np.abs(w_full - w_half)
    if np.any(error > tol * np.abs(w_full)):
        worst = float(np.max(error / np.abs(w_full)))
        raise QuadratureError(
            f"Poisson integral relative error estimate {worst:.3e} exceeds tol {tol:.1e} "
            f"at order {quadrature_order}; raise quadrature_order or move x away from the boundary"
        )
    value = bubble(x, p) - w_full
    return value if np.ndim(value) else float(value)


def boundary_normal_derivative_of_g(x_boundary, xi, N: int) -> ArrayLike:
    """Exterior normal derivative of G(., xi) on the sphere: -(N-2)(1-|xi|^2)|x-xi|^(-N)."""
    N = check_dimension(N)
    x_boundary = _as_points(x_boundary, N, "x_boundary")
    xi = _as_points(xi, N, "xi")
    norms = np.sqrt(_squared_norm(x_boundary))
    if np.any(np.abs(norms - 1.0) > BOUNDARY_TOL):
        raise DomainError(f"x_boundary must lie on the unit sphere, got |x| = {norms}")
    xi_sq = _squared_norm(xi)
    if np.any(xi_sq >= 1.0):
        raise DomainError("xi must be an interior point")
    value = -(N - 2) * (1.0 - xi_sq) * _squared_norm(x_boundary - xi) ** (-N / 2)
    return value if np.ndim(value) else float(value)
