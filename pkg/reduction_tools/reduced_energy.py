"""
Closed-form scalar functions of the finite-dimensional reduction on the unit ball.

    F(lambda, mu, rho) = a lambda^2 + 2 mu^2 alpha(rho) + 4 lambda mu beta(rho)
                         - c_N ln(lambda) - 2 c_N ln(mu),          a = H(0, 0) = 1

with alpha(rho) = H((rho,0),(rho,0)) - G((rho,0),(-rho,0)) and beta(rho) = G((rho,0),0).
For rho > rho_0 (the zero of alpha) the (lambda, mu)-gradient of F vanishes on the curve
lambda = Lambda(rho) mu(rho), and f(rho) = F restricted to that curve carries the sign of
chi(rho) = alpha'(rho) + 2 Lambda(rho) beta'(rho) in its derivative.

Functions of rho accept scalars or numpy arrays. Nothing here depends on c_N except the
fibered scales lambda(rho), mu(rho) and the values of F and f.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_function

from .ball_geometry import check_dimension
from .errors import DomainError, ReductionError

logger = logging.getLogger(__name__)

GOLDEN_RHO = (math.sqrt(5.0) - 1.0) / 2.0
A_CONSTANT = 1.0


@dataclass(frozen=True)
class ReducedConfig:
    """Dimension N and the positive constant c_N in front of the logarithms of F."""

    dimension: int
    c_n: float = 1.0

    def __post_init__(self):
        check_dimension(self.dimension)
        if not self.c_n > 0:
            raise DomainError(f"c_n must be positive, got {self.c_n}")


@dataclass(frozen=True)
class ReducedPoint:
    lam: float
    mu: float
    rho: float

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0 and 0 < self.rho < 1):
            raise DomainError(f"({self.lam}, {self.mu}, {self.rho}) is outside (0,inf) x (0,inf) x (0,1)")

    def as_array(self) -> np.ndarray:
        return np.array([self.lam, self.mu, self.rho])


@dataclass(frozen=True)
class FiberedPoint:
    """A point of the curve where the (lambda, mu)-gradient of F vanishes."""

    rho: float
    big_lambda: float
    lam: float
    mu: float

    def as_reduced(self) -> ReducedPoint:
        return ReducedPoint(self.lam, self.mu, self.rho)


def _scalar(value):
    if np.ndim(value) != 0:
        return value
    value = np.asarray(value)
    return value[()] if value.dtype == np.longdouble else float(value)


def _check_rho(rho) -> np.ndarray:
    """rho as an array; extended precision (np.longdouble) is kept, everything else becomes float64."""
    rho = np.asarray(rho)
    rho = rho.astype(np.longdouble if rho.dtype == np.longdouble else float)
    if np.any((rho <= 0.0) | (rho >= 1.0)):
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    return rho


def alpha(rho, N: int):
    """alpha(rho) = (1-rho^2)^(2-N) - (2 rho)^(2-N) + (1+rho^2)^(2-N)."""
    k = check_dimension(N) - 2
    rho = _check_rho(rho)
    value = (1 - rho ** 2) ** (-k) - (2 * rho) ** (-k) + (1 + rho ** 2) ** (-k)
    return _scalar(value)


def beta(rho, N: int):
    """beta(rho) = rho^(2-N) - 1."""
    k = check_dimension(N) - 2
    rho = _check_rho(rho)
    return _scalar(rho ** (-k) - 1.0)


def alpha_prime(rho, N: int):
    k = check_dimension(N) - 2
    rho = _check_rho(rho)
    value = k * (2 * rho * (1 - rho ** 2) ** (-k - 1)
                 + 2 * (2 * rho) ** (-k - 1)
                 - 2 * rho * (1 + rho ** 2) ** (-k - 1))
    return _scalar(value)


def beta_prime(rho, N: int):
    k = check_dimension(N) - 2
    rho = _check_rho(rho)
    return _scalar(-k * rho ** (-k - 1))


def alpha_second(rho, N: int):
    k = check_dimension(N) - 2
    rho = _check_rho(rho)
    rho_sq = rho ** 2
    value = (2 * k * (1 - rho_sq) ** (-k - 1)
             + 4 * k * (k + 1) * rho_sq * (1 - rho_sq) ** (-k - 2)
             - 4 * k * (k + 1) * (2 * rho) ** (-k - 2)
             - 2 * k * (1 + rho_sq) ** (-k - 1)
             + 4 * k * (k + 1) * rho_sq * (1 + rho_sq) ** (-k - 2))
    return _scalar(value)


def beta_second(rho, N: int):
    k = check_dimension(N) - 2
    rho = _check_rho(rho)
    return _scalar(k * (k + 1) * rho ** (-k - 2))


def alpha_sign_function(rho, N: int):
    """
    A function with the sign of alpha, evaluated in the log domain.

    g(rho) = log((1-rho^2)^(-k) + (1+rho^2)^(-k)) + k log(2 rho), k = N - 2; it stays finite
    for large N where the powers in alpha overflow near rho = 0.
    """
    k = check_dimension(N) - 2
    rho = _check_rho(rho)
    value = np.logaddexp(-k * np.log1p(-rho ** 2), -k * np.log1p(rho ** 2)) + k * np.log(2 * rho)
    return _scalar(value)


def _check_fibered(rho, N: int) -> np.ndarray:
    rho = _check_rho(rho)
    if np.any(np.asarray(alpha_sign_function(rho, N)) <= 0.0):
        raise DomainError(f"rho = {rho} is not above rho_0 (alpha(rho) <= 0); the fibration needs alpha > 0")
    return rho


def capital_lambda(rho, N: int):
    """Positive root Lambda = (sqrt(beta^2 + 4 alpha) - beta) / 2 of Lambda^2 + beta Lambda - alpha = 0."""
    rho = _check_fibered(rho, N)
    a, b = alpha(rho, N), beta(rho, N)
    # 2 alpha / (sqrt(beta^2 + 4 alpha) + beta) is the same root without cancellation
    return _scalar(2 * np.asarray(a) / (np.sqrt(np.asarray(b) ** 2 + 4 * np.asarray(a)) + b))


def lambda_prime(rho, N: int):
    """Lambda' = (beta'(beta - sqrt(beta^2 + 4 alpha)) + 2 alpha') / (2 sqrt(beta^2 + 4 alpha))."""
    rho = _check_fibered(rho, N)
    a, b = np.asarray(alpha(rho, N)), np.asarray(beta(rho, N))
    da, db = np.asarray(alpha_prime(rho, N)), np.asarray(beta_prime(rho, N))
    root = np.sqrt(b ** 2 + 4 * a)
    return _scalar((db * (b - root) + 2 * da) / (2 * root))


def chi(rho, N: int):
    """chi(rho) = alpha'(rho) + 2 Lambda(rho) beta'(rho); f'(rho) = 2 mu(rho)^2 chi(rho)."""
    rho = _check_fibered(rho, N)
    value = np.asarray(alpha_prime(rho, N)) + 2 * np.asarray(capital_lambda(rho, N)) * np.asarray(beta_prime(rho, N))
    return _scalar(value)


def chi_prime(rho, N: int):
    rho = _check_fibered(rho, N)
    value = (np.asarray(alpha_second(rho, N))
             + 2 * np.asarray(lambda_prime(rho, N)) * np.asarray(beta_prime(rho, N))
             + 2 * np.asarray(capital_lambda(rho, N)) * np.asarray(beta_second(rho, N)))
    return _scalar(value)


def m_prime(rho, N: int):
    """Derivative of m(rho) = -Lambda(rho) + 2(1-rho^2)(1+rho^2)^(-N/2)."""
    N = check_dimension(N)
    rho = _check_fibered(rho, N)
    rho_sq = rho ** 2
    value = (-np.asarray(lambda_prime(rho, N))
             - 4 * rho * (1 + rho_sq) ** (-N / 2)
             - 2 * N * rho * (1 - rho_sq) * (1 + rho_sq) ** (-N / 2 - 1))
    return _scalar(value)


def fibered_point(rho: float, cfg: ReducedConfig) -> FiberedPoint:
    """
    Critical point of F in (lambda, mu) at fixed rho.

    Args:
        rho (float): radius in (rho_0, 1)
        cfg (ReducedConfig): dimension and c_N

    Returns:
        FiberedPoint: (rho, Lambda, lambda = Lambda mu, mu) with mu = sqrt(c_N / (2 alpha + 2 Lambda beta))
    """
    N = cfg.dimension
    big = capital_lambda(rho, N)
    denom = 2 * alpha(rho, N) + 2 * big * beta(rho, N)
    if not denom > 0:
        raise ReductionError(f"2 alpha + 2 Lambda beta = {denom} is not positive at rho = {rho}")
    mu = math.sqrt(cfg.c_n / denom)
    return FiberedPoint(rho=float(rho), big_lambda=float(big), lam=big * mu, mu=mu)


def big_f(p: ReducedPoint, cfg: ReducedConfig) -> float:
    N = cfg.dimension
    c = cfg.c_n
    return (A_CONSTANT * p.lam ** 2 + 2 * p.mu ** 2 * alpha(p.rho, N) + 4 * p.lam * p.mu * beta(p.rho, N)
            - c * math.log(p.lam) - 2 * c * math.log(p.mu))


def grad_f(p: ReducedPoint, cfg: ReducedConfig) -> np.ndarray:
    N = cfg.dimension
    c = cfg.c_n
    lam, mu, rho = p.lam, p.mu, p.rho
    a, b = alpha(rho, N), beta(rho, N)
    return np.array([
        2 * A_CONSTANT * lam + 4 * mu * b - c / lam,
        4 * mu * a + 4 * lam * b - 2 * c / mu,
        2 * mu ** 2 * alpha_prime(rho, N) + 4 * lam * mu * beta_prime(rho, N),
    ])


def hess_f(p: ReducedPoint, cfg: ReducedConfig) -> np.ndarray:
    N = cfg.dimension
    c = cfg.c_n
    lam, mu, rho = p.lam, p.mu, p.rho
    a, b = alpha(rho, N), beta(rho, N)
    da, db = alpha_prime(rho, N), beta_prime(rho, N)
    f_ll = 2 * A_CONSTANT + c / lam ** 2
    f_lm = 4 * b
    f_lr = 4 * mu * db
    f_mm = 4 * a + 2 * c / mu ** 2
    f_mr = 4 * mu * da + 4 * lam * db
    f_rr = 2 * mu ** 2 * alpha_second(rho, N) + 4 * lam * mu * beta_second(rho, N)
    return np.array([
        [f_ll, f_lm, f_lr],
        [f_lm, f_mm, f_mr],
        [f_lr, f_mr, f_rr],
    ])


def hessian_lambda_mu(rho: float, cfg: ReducedConfig) -> np.ndarray:
    """2x2 block of D^2 F in (lambda, mu) at the fibered point over rho."""
    point = fibered_point(rho, cfg)
    return hess_f(point.as_reduced(), cfg)[:2, :2]


def little_f(rho: float, cfg: ReducedConfig) -> float:
    """f(rho) = F(lambda(rho), mu(rho), rho) = 3/2 c_N - c_N ln(lambda(rho) mu(rho)^2)."""
    point = fibered_point(rho, cfg)
    return 1.5 * cfg.c_n - cfg.c_n * math.log(point.lam * point.mu ** 2)


def bubble_energy_constant(N: int) -> float:
    """
    c_N obtained by expanding J_epsilon on three projected bubbles with delta^(N-2) = lambda^2 epsilon.

    Equals (N-2) B(N/2, N/2) / 2, i.e. pi/16 for N = 3. The reduced-level computations default to
    c_N = 1; this value only seeds desk-scale PDE runs with realistic bubble scales.
    """
    N = check_dimension(N)
    return (N - 2) * beta_function(N / 2, N / 2) / 2
