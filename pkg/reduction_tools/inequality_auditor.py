"""
Numerical re-verification of the inequalities behind the existence and boundary results.

Every check is registered under a fixed label and evaluated once per dimension. A check
records both sides, the relation, a signed margin (positive means satisfied) and, for mesh
sweeps, the point where the margin is smallest. Failures are recorded, never raised.

This is a falsification harness with margins, not a rigorous enclosure: the isolated-point
sign checks are repeated in extended precision and must agree with the double-precision ones.
"""

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property, partial
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import reduced_energy as re_
from .boundary_profile import big_m, big_m_at_critical, emme_polynomial, little_m
from .critical_finder import GUARD_OFFSET, find_critical_rhos, find_rho0
from .errors import DomainError, ReductionError
from .fields import to_json_text
from .reduced_energy import GOLDEN_RHO, ReducedConfig

logger = logging.getLogger(__name__)

NON_STRICT_SLACK = 1e-14
DEFAULT_MESH = 1000
IDENTITY_TOL = 1e-12

AUDIT_LABELS = (
    "one",
    "one_explicit",
    "first",
    "first_auxiliary",
    "ineq",
    "ineq_tangency",
    "sob",
    "sob_reduced",
    "sob_tail",
    "alpha_prime_half",
    "beta_prime_half",
    "two",
    "two_bound",
    "two_bracket",
    "two_tail_term",
    "an0",
    "an0_tangency",
    "an1",
    "an2_identity",
    "an2_chain",
    "an3",
    "lambda_increasing",
    "m_decreasing",
    "mum",
    "mum_lower_bound",
    "mum_auxiliary",
    "m_golden",
    "emme_polynomial",
    "emme_direct_rho1",
    "emme_formula_rho1",
    "emme_direct_rho2",
    "emme_formula_rho2",
    "m_rho1",
    "m_rho2",
    "big_m_rho2",
    "fiber_hessian_rho1",
    "fiber_hessian_rho2",
    "limiti_rho0_monotone",
    "limiti_rho0_rate",
    "limiti_one_monotone",
    "limiti_one_rate",
)


class Relation(str, Enum):
    LT = "LT"
    GT = "GT"
    LE = "LE"
    GE = "GE"

    @property
    def strict(self) -> bool:
        return self in (Relation.LT, Relation.GT)

    def margin(self, lhs: float, rhs: float) -> float:
        return rhs - lhs if self in (Relation.LT, Relation.LE) else lhs - rhs


class CheckStatus(str, Enum):
    PASSED = "PASSED"
    FAILED = "FAILED"
    SKIPPED = "SKIPPED"


class ReportFormat(str, Enum):
    JSON = "JSON"
    TEXT = "TEXT"


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    dimension: int
    lhs: Optional[float]
    rhs: Optional[float]
    relation: Relation
    margin: Optional[float]
    passed: bool
    status: CheckStatus
    witness: Optional[float] = None
    note: Optional[str] = None

    def to_dict(self) -> Dict:
        data = {
            "name": self.name,
            "dimension": self.dimension,
            "lhs": _finite_or_none(self.lhs),
            "rhs": _finite_or_none(self.rhs),
            "relation": self.relation.value,
            "margin": _finite_or_none(self.margin),
            "passed": self.passed,
            "status": self.status.value,
        }
        if self.witness is not None:
            data["witness"] = _finite_or_none(self.witness)
        if self.note is not None:
            data["note"] = self.note
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "InequalityCheck":
        return cls(
            name=data["name"],
            dimension=data["dimension"],
            lhs=_optional_float(data["lhs"]),
            rhs=_optional_float(data["rhs"]),
            relation=Relation(data["relation"]),
            margin=_optional_float(data["margin"]),
            passed=data["passed"],
            status=CheckStatus(data["status"]),
            witness=_optional_float(data.get("witness")),
            note=data.get("note"),
        )


@dataclass
class VerificationReport:
    dimension_range: Tuple[int, int]
    checks: List[InequalityCheck] = field(default_factory=list)
    runtime_ms: int = 0

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed(self) -> List[InequalityCheck]:
        return [check for check in self.checks if not check.passed]

    def by_name(self, name: str, dimension: Optional[int] = None) -> InequalityCheck:
        for check in self.checks:
            if check.name == name and (dimension is None or check.dimension == dimension):
                return check
        raise KeyError(name)


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


def make_check(name: str, N: int, lhs: float, rhs: float, relation: Relation,
               witness: Optional[float] = None, note: Optional[str] = None) -> InequalityCheck:
    """A check of lhs against rhs; a non-finite side fails the check and is stored as None."""
    lhs, rhs = float(lhs), float(rhs)
    margin = relation.margin(lhs, rhs)
    if not math.isfinite(margin):
        passed = False
        note = note or "non-finite value"
        lhs, rhs, margin = _finite_or_none(lhs), _finite_or_none(rhs), None
    elif relation.strict:
        passed = margin > 0
    else:
        passed = margin >= -NON_STRICT_SLACK
    return InequalityCheck(
        name=name, dimension=N, lhs=lhs, rhs=rhs, relation=relation, margin=margin, passed=passed,
        status=CheckStatus.PASSED if passed else CheckStatus.FAILED,
        witness=None if witness is None else _finite_or_none(float(witness)), note=note,
    )


def _skipped(name: str, N: int, relation: Relation, guard: str) -> InequalityCheck:
    return InequalityCheck(name=name, dimension=N, lhs=None, rhs=None, relation=relation, margin=None,
                           passed=True, status=CheckStatus.SKIPPED, note=f"applies for {guard}")


def _errored(name: str, N: int, relation: Relation, error: Exception) -> InequalityCheck:
    return InequalityCheck(name=name, dimension=N, lhs=None, rhs=None, relation=relation, margin=None,
                           passed=False, status=CheckStatus.FAILED, note=f"{type(error).__name__}: {error}")


def _worst_on_mesh(name: str, N: int, xs: np.ndarray, lhs: np.ndarray, rhs: np.ndarray,
                   relation: Relation) -> InequalityCheck:
    margins = np.asarray(relation.margin(np.asarray(lhs), np.asarray(rhs)))
    i = int(np.argmin(margins))
    return make_check(name, N, lhs[i], rhs[i], relation, witness=xs[i])


def _with_extended(check: InequalityCheck, extended_lhs, extended_rhs) -> InequalityCheck:
    """Require the extended-precision margin to have the same sign as the plain one."""
    if check.margin is None:
        return check
    extended_margin = check.relation.margin(extended_lhs, extended_rhs)
    if (extended_margin > 0) == (check.margin > 0):
        return check
    return InequalityCheck(
        name=check.name, dimension=check.dimension, lhs=check.lhs, rhs=check.rhs, relation=check.relation,
        margin=check.margin, passed=False, status=CheckStatus.FAILED, witness=check.witness,
        note=f"extended precision margin {float(extended_margin):.6g} disagrees in sign",
    )


class _Extended:
    """alpha, beta and their first derivatives, Lambda, chi and m evaluated in numpy.longdouble."""

    def __init__(self, rho: float, N: int):
        one = np.longdouble(1)
        r = np.longdouble(rho)
        k = N - 2
        self.N = N
        self.rho = r
        self.alpha = (one - r * r) ** (-k) - (2 * r) ** (-k) + (one + r * r) ** (-k)
        self.beta = r ** (-k) - one
        self.alpha_prime = k * (2 * r * (one - r * r) ** (-k - 1) + 2 * (2 * r) ** (-k - 1)
                                - 2 * r * (one + r * r) ** (-k - 1))
        self.beta_prime = -k * r ** (-k - 1)
        self.big_lambda = 2 * self.alpha / (np.sqrt(self.beta * self.beta + 4 * self.alpha) + self.beta)

    @property
    def chi(self):
        return self.alpha_prime + 2 * self.big_lambda * self.beta_prime

    @property
    def m(self):
        r = self.rho
        return -self.big_lambda + 2 * (1 - r * r) * (1 + r * r) ** (np.longdouble(-self.N) / 2)

    @property
    def big_m(self):
        r = self.rho
        return -self.big_lambda + (1 - r * r) * ((1 - r) ** (-self.N) + (1 + r) ** (-self.N))


class _AuditContext:
    def __init__(self, N: int, mesh: int, guard: float):
        self.N = N
        self.mesh = mesh
        self.guard = guard

    @cached_property
    def rho0(self) -> float:
        return find_rho0(self.N, tol=1e-15)

    @cached_property
    def critical(self) -> Tuple[float, float]:
        return find_critical_rhos(self.N, guard=self.guard)

    @cached_property
    def sweep(self) -> np.ndarray:
        return np.linspace(self.rho0 + self.guard, 1.0 - self.guard, self.mesh)

    def half(self):
        N = self.N
        return re_.alpha(0.5, N), re_.beta(0.5, N), re_.alpha_prime(0.5, N), re_.beta_prime(0.5, N)

    def golden(self):
        N = self.N
        return re_.alpha(GOLDEN_RHO, N), re_.beta(GOLDEN_RHO, N), re_.capital_lambda(GOLDEN_RHO, N)


CheckFn = Callable[[_AuditContext], InequalityCheck]
_REGISTRY: Dict[str, Tuple[Relation, CheckFn]] = {}


def _check(name: str, relation: Relation, min_dimension: int = 3):
    def register(fn: CheckFn) -> CheckFn:
        def guarded(ctx: _AuditContext) -> InequalityCheck:
            if ctx.N < min_dimension:
                return _skipped(name, ctx.N, relation, f"N >= {min_dimension}")
            return fn(ctx)
        _REGISTRY[name] = (relation, guarded)
        return fn
    return register


# ---- f'(1/2) < 0 ----

@_check("one", Relation.LT)
def _one(ctx):
    check = make_check("one", ctx.N, re_.chi(0.5, ctx.N), 0.0, Relation.LT, witness=0.5)
    return _with_extended(check, _Extended(0.5, ctx.N).chi, 0)


@_check("one_explicit", Relation.LT)
def _one_explicit(ctx):
    # at rho = 1/2 all ingredients are rational; chi < 0 iff (alpha'/|beta'| + beta)^2 < beta^2 + 4 alpha
    k = ctx.N - 2
    alpha = Fraction(4, 3) ** k - 1 + Fraction(4, 5) ** k
    beta = Fraction(2) ** k - 1
    ratio = (Fraction(4, 3) ** (k + 1) + 2 - Fraction(4, 5) ** (k + 1)) / Fraction(2) ** (k + 1)
    lhs = (ratio + beta) ** 2
    rhs = beta ** 2 + 4 * alpha
    check = make_check("one_explicit", ctx.N, lhs, rhs, Relation.LT, witness=0.5)
    return _with_extended(check, 0, rhs - lhs)


@_check("first", Relation.LT, min_dimension=4)
def _first(ctx):
    alpha, beta, _, _ = ctx.half()
    return make_check("first", ctx.N, alpha, beta ** 2, Relation.LT, witness=0.5)


@_check("first_auxiliary", Relation.LE, min_dimension=4)
def _first_auxiliary(ctx):
    alpha, beta, _, _ = ctx.half()
    return make_check("first_auxiliary", ctx.N, 4 * alpha, beta ** 2, Relation.LE, witness=0.5)


@_check("ineq", Relation.GE)
def _ineq(ctx):
    x = np.linspace(0.0, 1.0, ctx.mesh + 2)[1:-1]
    return _worst_on_mesh("ineq", ctx.N, x, np.sqrt(1 + x) - 1, 0.4 * x, Relation.GE)


@_check("ineq_tangency", Relation.GT)
def _ineq_tangency(ctx):
    # both sides vanish at x = 0; compare slopes there
    return make_check("ineq_tangency", ctx.N, 0.5, 0.4, Relation.GT, witness=0.0)


@_check("sob", Relation.LE, min_dimension=4)
def _sob(ctx):
    alpha, beta, alpha_p, beta_p = ctx.half()
    bound = alpha_p + 1.6 * (alpha / beta) * beta_p
    return make_check("sob", ctx.N, re_.chi(0.5, ctx.N), bound, Relation.LE, witness=0.5)


def _sob_tail_value(N: int) -> float:
    k = N - 2
    return -(28 / 15) * (4 / 3) ** k - 4 * (4 / 5) ** k + 26 / 5


@_check("sob_reduced", Relation.LE, min_dimension=4)
def _sob_reduced(ctx):
    alpha, beta, alpha_p, beta_p = ctx.half()
    bound = alpha_p + 1.6 * (alpha / beta) * beta_p
    return make_check("sob_reduced", ctx.N, bound / (ctx.N - 2), _sob_tail_value(ctx.N), Relation.LE, witness=0.5)


@_check("sob_tail", Relation.LT, min_dimension=4)
def _sob_tail(ctx):
    return make_check("sob_tail", ctx.N, _sob_tail_value(ctx.N), 0.0, Relation.LT)


@_check("alpha_prime_half", Relation.LE)
def _alpha_prime_half(ctx):
    N = ctx.N
    closed = (N - 2) * ((4 / 3) ** (N - 1) + 2 - (4 / 5) ** (N - 1))
    value = re_.alpha_prime(0.5, N)
    return make_check("alpha_prime_half", N, abs(value - closed), IDENTITY_TOL * abs(closed), Relation.LE, witness=0.5)


@_check("beta_prime_half", Relation.LE)
def _beta_prime_half(ctx):
    N = ctx.N
    closed = -(N - 2) * 2.0 ** (N - 1)
    value = re_.beta_prime(0.5, N)
    return make_check("beta_prime_half", N, abs(value - closed), IDENTITY_TOL * abs(closed), Relation.LE, witness=0.5)


# ---- f'(golden ratio radius) < 0 ----

@_check("two", Relation.LT)
def _two(ctx):
    check = make_check("two", ctx.N, re_.chi(GOLDEN_RHO, ctx.N), 0.0, Relation.LT, witness=GOLDEN_RHO)
    return _with_extended(check, _Extended(GOLDEN_RHO, ctx.N).chi, 0)


@_check("two_bound", Relation.LE, min_dimension=6)
def _two_bound(ctx):
    N = ctx.N
    alpha, _, _ = ctx.golden()
    bound = re_.alpha_prime(GOLDEN_RHO, N) - (4 / 3) * (N - 2) * alpha / GOLDEN_RHO
    return make_check("two_bound", N, re_.chi(GOLDEN_RHO, N), bound, Relation.LE, witness=GOLDEN_RHO)


@_check("two_bracket", Relation.LT, min_dimension=6)
def _two_bracket(ctx):
    N = ctx.N
    g = GOLDEN_RHO
    value = 5 * g * g - 2 + 7 * g / 2 ** (N - 1) - (5 * g * g + 2) * (g / (1 + g * g)) ** (N - 1)
    return make_check("two_bracket", N, value, 0.0, Relation.LT, witness=g)


@_check("two_tail_term", Relation.LT, min_dimension=7)
def _two_tail_term(ctx):
    g = GOLDEN_RHO
    return make_check("two_tail_term", ctx.N, 5 * g * g - 2 + 7 * g / 2 ** (ctx.N - 1), 0.0, Relation.LT, witness=g)


@_check("an0", Relation.GE)
def _an0(ctx):
    t = np.linspace(0.0, 3.0, ctx.mesh)
    return _worst_on_mesh("an0", ctx.N, t, np.sqrt(1 + t) - 1, t / 3, Relation.GE)


@_check("an0_tangency", Relation.GT)
def _an0_tangency(ctx):
    return make_check("an0_tangency", ctx.N, 0.5, 1 / 3, Relation.GT, witness=0.0)


@_check("an1", Relation.GT, min_dimension=6)
def _an1(ctx):
    alpha, _, big_lambda = ctx.golden()
    rhs = (2 / 3) * alpha * GOLDEN_RHO ** (ctx.N - 2)
    return make_check("an1", ctx.N, big_lambda, rhs, Relation.GT, witness=GOLDEN_RHO)


@_check("an2_identity", Relation.LE)
def _an2_identity(ctx):
    g = GOLDEN_RHO
    return make_check("an2_identity", ctx.N, abs(1 - g * g - g), 1e-15, Relation.LE, witness=g)


@_check("an2_chain", Relation.GE)
def _an2_chain(ctx):
    g = GOLDEN_RHO
    chain = [1 + g * g, 2 * g, g * math.sqrt(1 + g * g), 1 - g * g]
    margins = [chain[i] - chain[i + 1] for i in range(3)]
    i = int(np.argmin(margins))
    return make_check("an2_chain", ctx.N, chain[i], chain[i + 1], Relation.GE, witness=float(i))


@_check("an3", Relation.LE, min_dimension=6)
def _an3(ctx):
    alpha, beta, _ = ctx.golden()
    return make_check("an3", ctx.N, 4 * alpha / beta ** 2, 3.0, Relation.LE, witness=GOLDEN_RHO)


# ---- monotonicity on (rho_0, 1) ----

@_check("lambda_increasing", Relation.GT)
def _lambda_increasing(ctx):
    rho = ctx.sweep
    values = np.asarray(re_.lambda_prime(rho, ctx.N))
    return _worst_on_mesh("lambda_increasing", ctx.N, rho, values, np.zeros_like(values), Relation.GT)


@_check("m_decreasing", Relation.LT)
def _m_decreasing(ctx):
    rho = ctx.sweep
    values = np.asarray(re_.m_prime(rho, ctx.N))
    return _worst_on_mesh("m_decreasing", ctx.N, rho, values, np.zeros_like(values), Relation.LT)


# ---- boundary analysis ----

@_check("mum", Relation.GT)
def _mum(ctx):
    check = make_check("mum", ctx.N, little_m(0.5, ctx.N), 0.0, Relation.GT, witness=0.5)
    return _with_extended(check, _Extended(0.5, ctx.N).m, 0)


@_check("mum_lower_bound", Relation.LT)
def _mum_lower_bound(ctx):
    alpha, beta, _, _ = ctx.half()
    return make_check("mum_lower_bound", ctx.N, re_.capital_lambda(0.5, ctx.N), alpha / beta, Relation.LT, witness=0.5)


@_check("mum_auxiliary", Relation.GT, min_dimension=4)
def _mum_auxiliary(ctx):
    N = ctx.N
    lhs = (3 / 8) * (4 / math.sqrt(5)) ** N
    rhs = 1.5 * (2 / math.sqrt(5)) ** N + (4 / 3) ** (N - 2) - 1 + (4 / 5) ** (N - 2)
    return make_check("mum_auxiliary", N, lhs, rhs, Relation.GT)


@_check("m_golden", Relation.LT)
def _m_golden(ctx):
    check = make_check("m_golden", ctx.N, little_m(GOLDEN_RHO, ctx.N), 0.0, Relation.LT, witness=GOLDEN_RHO)
    return _with_extended(check, _Extended(GOLDEN_RHO, ctx.N).m, 0)


@_check("emme_polynomial", Relation.GT)
def _emme_polynomial(ctx):
    rho = np.linspace(0.0, 1.0, ctx.mesh)
    values = np.asarray(emme_polynomial(rho, ctx.N))
    return _worst_on_mesh("emme_polynomial", ctx.N, rho, values, np.zeros_like(values), Relation.GT)


def _critical_check(name: str, relation: Relation, evaluate: Callable[[_AuditContext], InequalityCheck]):
    def run(ctx):
        try:
            return evaluate(ctx)
        except ReductionError as e:
            logger.warning(f"N={ctx.N}: {name} could not be evaluated: {e}")
            return _errored(name, ctx.N, relation, e)
    _check(name, relation)(run)


def _emme_direct(index: int):
    def evaluate(ctx):
        rho = ctx.critical[index]
        return make_check(f"emme_direct_rho{index + 1}", ctx.N, big_m(rho, ctx.N), 0.0, Relation.GT, witness=rho)
    return evaluate


def _emme_formula(index: int):
    def evaluate(ctx):
        rho = ctx.critical[index]
        return make_check(f"emme_formula_rho{index + 1}", ctx.N, big_m_at_critical(rho, ctx.N), 0.0, Relation.GT,
                          witness=rho)
    return evaluate


def _m_rho1(ctx):
    rho = ctx.critical[0]
    check = make_check("m_rho1", ctx.N, little_m(rho, ctx.N), 0.0, Relation.GT, witness=rho)
    return _with_extended(check, _Extended(rho, ctx.N).m, 0)


def _m_rho2(ctx):
    rho = ctx.critical[1]
    check = make_check("m_rho2", ctx.N, little_m(rho, ctx.N), 0.0, Relation.LT, witness=rho)
    return _with_extended(check, _Extended(rho, ctx.N).m, 0)


def _big_m_rho2(ctx):
    rho = ctx.critical[1]
    check = make_check("big_m_rho2", ctx.N, big_m(rho, ctx.N), 0.0, Relation.GT, witness=rho)
    return _with_extended(check, _Extended(rho, ctx.N).big_m, 0)


def _fiber_hessian(index: int):
    def evaluate(ctx):
        rho = ctx.critical[index]
        block = re_.hessian_lambda_mu(rho, ReducedConfig(dimension=ctx.N))
        trace, det = float(np.trace(block)), float(np.linalg.det(block))
        note = None if trace > 0 else f"trace {trace:.6g} is not positive"
        check = make_check(f"fiber_hessian_rho{index + 1}", ctx.N, det, 0.0, Relation.GT, witness=rho, note=note)
        if trace <= 0:
            return replace(check, passed=False, status=CheckStatus.FAILED)
        return check
    return evaluate


_critical_check("emme_direct_rho1", Relation.GT, _emme_direct(0))
_critical_check("emme_formula_rho1", Relation.GT, _emme_formula(0))
_critical_check("emme_direct_rho2", Relation.GT, _emme_direct(1))
_critical_check("emme_formula_rho2", Relation.GT, _emme_formula(1))
_critical_check("m_rho1", Relation.GT, _m_rho1)
_critical_check("m_rho2", Relation.LT, _m_rho2)
_critical_check("big_m_rho2", Relation.GT, _big_m_rho2)
_critical_check("fiber_hessian_rho1", Relation.GT, _fiber_hessian(0))
_critical_check("fiber_hessian_rho2", Relation.GT, _fiber_hessian(1))


# ---- divergence of f at both ends ----
# f grows like (c/2) ln(rho - rho_0) near rho_0 and like -c (N-2) ln(1 - rho) near 1, so fixed
# thresholds are out of reach in double precision; these checks cover monotonicity and the rate.

LIMIT_DECADES = np.arange(4, 11)


def _f_values(rhos: np.ndarray, N: int) -> np.ndarray:
    cfg = ReducedConfig(dimension=N)
    return np.array([re_.little_f(float(rho), cfg) for rho in rhos])


def _toward_rho0(ctx) -> Tuple[np.ndarray, np.ndarray]:
    distances = (0.5 - ctx.rho0) * 10.0 ** (-LIMIT_DECADES.astype(float))
    return distances, _f_values(ctx.rho0 + distances, ctx.N)


def _toward_one(ctx) -> Tuple[np.ndarray, np.ndarray]:
    distances = 10.0 ** (-LIMIT_DECADES.astype(float))
    return distances, _f_values(1.0 - distances, ctx.N)


@_check("limiti_rho0_monotone", Relation.LT)
def _limiti_rho0_monotone(ctx):
    distances, f = _toward_rho0(ctx)
    steps = np.diff(f)
    i = int(np.argmax(steps))
    return make_check("limiti_rho0_monotone", ctx.N, steps[i], 0.0, Relation.LT, witness=ctx.rho0 + distances[i + 1])


@_check("limiti_rho0_rate", Relation.GE)
def _limiti_rho0_rate(ctx):
    distances, f = _toward_rho0(ctx)
    slope = np.polyfit(np.log(distances), f, 1)[0]
    return make_check("limiti_rho0_rate", ctx.N, slope, 0.45, Relation.GE, witness=ctx.rho0 + distances[-1])


@_check("limiti_one_monotone", Relation.GT)
def _limiti_one_monotone(ctx):
    distances, f = _toward_one(ctx)
    steps = np.diff(f)
    i = int(np.argmin(steps))
    return make_check("limiti_one_monotone", ctx.N, steps[i], 0.0, Relation.GT, witness=1.0 - distances[i + 1])


@_check("limiti_one_rate", Relation.GE)
def _limiti_one_rate(ctx):
    distances, f = _toward_one(ctx)
    slope = np.polyfit(-np.log(distances), f, 1)[0]
    return make_check("limiti_one_rate", ctx.N, slope, 0.9 * (ctx.N - 2), Relation.GE, witness=1.0 - distances[-1])


def audit_dimension(N: int, mesh: int = DEFAULT_MESH, guard: float = GUARD_OFFSET) -> VerificationReport:
    """Evaluate every registered check for one dimension, in the order of AUDIT_LABELS."""
    if int(N) != N or N < 3:
        raise DomainError(f"dimension must be an integer N >= 3, got {N}")
    started = time.perf_counter()
    ctx = _AuditContext(int(N), mesh, guard)
    checks = []
    for label in AUDIT_LABELS:
        relation, run = _REGISTRY[label]
        try:
            checks.append(run(ctx))
        except ReductionError as e:
            logger.warning(f"N={N}: check {label} raised {e}")
            checks.append(_errored(label, ctx.N, relation, e))
    report = VerificationReport(dimension_range=(ctx.N, ctx.N), checks=checks,
                                runtime_ms=int(1000 * (time.perf_counter() - started)))
    logger.info(f"N={N}: {len(checks) - len(report.failed())}/{len(checks)} checks passed")
    return report


def audit_range(n_lo: int, n_hi: int, mesh: int = DEFAULT_MESH, guard: float = GUARD_OFFSET,
                workers: int = 1) -> VerificationReport:
    """Audit every dimension of [n_lo, n_hi]; with workers > 1 the dimensions run in separate processes."""
    if not 3 <= n_lo <= n_hi:
        raise DomainError(f"need 3 <= N_lo <= N_hi, got [{n_lo}, {n_hi}]")
    started = time.perf_counter()
    dims = list(range(n_lo, n_hi + 1))
    run = partial(audit_dimension, mesh=mesh, guard=guard)
    if workers > 1 and len(dims) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, dims))
    else:
        reports = [run(N) for N in dims]
    checks = [check for report in reports for check in report.checks]
    return VerificationReport(dimension_range=(n_lo, n_hi), checks=checks,
                              runtime_ms=int(1000 * (time.perf_counter() - started)))


def report_to_dict(report: VerificationReport) -> Dict:
    return {
        "dimension_range": list(report.dimension_range),
        "all_passed": report.all_passed,
        "checks": [check.to_dict() for check in report.checks],
        "runtime_ms": report.runtime_ms,
    }


def parse_report(data: bytes) -> VerificationReport:
    payload = json.loads(data.decode("utf-8"))
    return VerificationReport(
        dimension_range=tuple(payload["dimension_range"]),
        checks=[InequalityCheck.from_dict(item) for item in payload["checks"]],
        runtime_ms=payload["runtime_ms"],
    )


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.6g}"


def emit_report(report: VerificationReport, fmt: ReportFormat = ReportFormat.JSON) -> bytes:
    """Serialize a report; JSON keeps the fixed schema, TEXT is a table for people."""
    if ReportFormat(fmt) is ReportFormat.JSON:
        return to_json_text(report_to_dict(report)).encode("utf-8")

    lo, hi = report.dimension_range
    lines = [f"{'N':>3}  {'check':<22} {'lhs':>13} {'rel':>3} {'rhs':>13} {'margin':>13}  status"]
    for check in report.checks:
        lines.append(
            f"{check.dimension:>3}  {check.name:<22} {_fmt(check.lhs):>13} {check.relation.value:>3} "
            f"{_fmt(check.rhs):>13} {_fmt(check.margin):>13}  {check.status.value}"
        )
    passed = sum(1 for check in report.checks if check.passed)
    lines.append(f"dimensions {lo}..{hi}: {passed}/{len(report.checks)} passed, all_passed={report.all_passed}")
    return ("\n".join(lines) + "\n").encode("utf-8")
