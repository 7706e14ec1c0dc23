"""Certified contraction and perturbation bounds for the fixed-point map.

With u = u0 + v and u0 the solution of the linear problem, candidates v live
in the closed H^4 ball of radius rho <= 1, so every state value u(x) lies in
the ball of radius c_e (|u0|_H4 + 1) in R^N, where c_e is the constant of
the sup-norm embedding of H^4(R^d) for d < 8.  On that ball the fixed-point
map is Lipschitz with constant eps * kappa, where eps = max_m eps_m and

    kappa = c2 (|u0|_H4 + 1) [ l1^2 (|u0|_H4 + 1)^(8/d - 2)
                (S_d / 4)^(4/d) d / ((d - 4) (2 pi)^4) + l2^2 ]^(1/2),

with c2 the C^2 bound on the nonlinearity, l1/l2 the root-sum-square
aggregates of the kernel L^1/L^2 norms, and S_d the unit-sphere measure.
The map contracts strictly for eps below

    eps_max = rho / ((|u0|_H4 + 1) kappa),

and the fixed point v* then satisfies the a-priori bound
|v*|_H4 <= eps kappa (|u0|_H4 + 1).

The exponent 8/d - 2 comes from optimizing the low/high frequency split in
the convolution estimate (:func:`frequency_split_minimum`); a d-independent
8/2 - 2 variant sometimes quoted for this estimate is not used here.

``*_raw`` functions evaluate the formulas on plain numbers with no
preconditions (useful for algebraic checks); the problem-level entry points
validate the data and nonlinearity requirements first and raise
:class:`AssumptionsNotValidated` when they fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    DEFAULT_C2_BUDGET,
    DataReport,
    NonlinearityReport,
    Problem,
    image_ball_radius,
    kernel_aggregates,
    validate_nonlinearity,
    validate_problem_data,
)

_TWO_PI = 2.0 * np.pi


class BadDimension(ValueError):
    """Raised for dimensions outside the range a formula is derived for."""


class NonPositiveAlpha(ValueError):
    """Raised when the frequency-split weight is not positive."""


class ContractionNotStrict(ValueError):
    """Raised when a bound requires eps * kappa < 1 but it is not."""


class AssumptionsNotValidated(RuntimeError):
    """Raised when problem data or nonlinearity requirements fail.

    Carries the failing clause names and the underlying reports.
    """

    def __init__(
        self,
        failures: tuple[str, ...],
        data_report: DataReport | None = None,
        nonlinearity_report: NonlinearityReport | None = None,
    ):
        self.failures = failures
        self.data_report = data_report
        self.nonlinearity_report = nonlinearity_report
        super().__init__(
            "problem requirements failed: " + ", ".join(failures)
        )


# ---------------------------------------------------------------------------
# geometric constants
# ---------------------------------------------------------------------------

def sphere_measure(d: int) -> float:
    """Surface measure of the unit sphere in R^d: 2 pi^(d/2) / Gamma(d/2)."""
    if d < 1:
        raise BadDimension(f"dimension must be >= 1, got {d}")
    return 2.0 * np.pi ** (d / 2.0) / math.gamma(d / 2.0)


def radial_weight_integral(d: int) -> float:
    """Closed form of the integral of r^(d-1) / (1 + r^8) over r > 0.

    Equals (pi / 8) / sin(pi d / 8), finite for 0 < d < 8.
    """
    if not 0 < d < 8:
        raise BadDimension(f"the radial integral diverges unless 0 < d < 8, got {d}")
    return (np.pi / 8.0) / np.sin(np.pi * d / 8.0)


def sobolev_embedding_constant(d: int) -> float:
    """Constant c_e with sup |u| <= c_e |u|_H4, valid for d < 8.

    c_e = (2 pi)^(-d/2) (S_d I_d)^(1/2) where S_d is the unit-sphere measure
    and I_d the radial weight integral; follows from Cauchy-Schwarz against
    the spectral weight 1 + |p|^8.
    """
    if not 0 < d < 8:
        raise BadDimension(f"the sup-norm embedding of H^4 needs d < 8, got {d}")
    return float(
        _TWO_PI ** (-d / 2.0) * np.sqrt(sphere_measure(d) * radial_weight_integral(d))
    )


def frequency_split_minimum(alpha: float, d: int) -> tuple[float, float]:
    """Minimize alpha R^(d-4) + R^(-4) over R > 0, in closed form.

    Returns (R_min, minimum value) with R_min = (4 / (alpha (d - 4)))^(1/d).
    This is the low/high frequency trade-off behind the kernel estimate.
    """
    if alpha <= 0.0 or not np.isfinite(alpha):
        raise NonPositiveAlpha(f"split weight must be positive, got {alpha}")
    if not isinstance(d, (int, np.integer)) or d <= 4:
        raise BadDimension(f"the split optimum needs integer d > 4, got {d}")
    r_star = (4.0 / (alpha * (d - 4.0))) ** (1.0 / d)
    value = alpha * r_star ** (d - 4.0) + r_star ** (-4.0)
    return float(r_star), float(value)


# ---------------------------------------------------------------------------
# raw formula layer (no validation)
# ---------------------------------------------------------------------------

def _kernel_bracket(
    d: int, kernel_l1_rss: float, kernel_l2_rss: float, shifted_norm: float
) -> float:
    """The bracketed kernel factor [ l1^2 b^(8/d-2) ... + l2^2 ]."""
    low = (
        kernel_l1_rss**2
        * shifted_norm ** (8.0 / d - 2.0)
        * (sphere_measure(d) / 4.0) ** (4.0 / d)
        * d
        / ((d - 4.0) * _TWO_PI**4)
    )
    return low + kernel_l2_rss**2


def lipschitz_coefficient_raw(
    d: int,
    c2_bound: float,
    kernel_l1_rss: float,
    kernel_l2_rss: float,
    background_h4: float,
) -> float:
    """Lipschitz constant of the fixed-point map per unit coupling."""
    if d not in (5, 6, 7):
        raise BadDimension(f"bounds are derived for d in (5, 6, 7), got {d}")
    b = background_h4 + 1.0
    return c2_bound * b * math.sqrt(
        _kernel_bracket(d, kernel_l1_rss, kernel_l2_rss, b)
    )


def coupling_threshold_raw(
    d: int,
    rho: float,
    c2_bound: float,
    kernel_l1_rss: float,
    kernel_l2_rss: float,
    background_h4: float,
) -> float:
    """Largest coupling for which the map contracts the radius-rho ball."""
    b = background_h4 + 1.0
    kappa = lipschitz_coefficient_raw(
        d, c2_bound, kernel_l1_rss, kernel_l2_rss, background_h4
    )
    return rho / (b * kappa)


def apriori_bound_raw(
    d: int,
    eps: float,
    c2_bound: float,
    kernel_l1_rss: float,
    kernel_l2_rss: float,
    background_h4: float,
) -> float:
    """A-priori H^4 bound eps kappa (|u0| + 1) on the fixed-point perturbation."""
    b = background_h4 + 1.0
    kappa = lipschitz_coefficient_raw(
        d, c2_bound, kernel_l1_rss, kernel_l2_rss, background_h4
    )
    return eps * kappa * b


def continuity_bound_raw(
    eps: float,
    lipschitz_coeff: float,
    c2_bound: float,
    background_h4: float,
    nonlinearity_gap: float,
) -> float:
    """Bound on the fixed-point shift under a nonlinearity perturbation.

    |u1 - u2|_H4 <= eps kappa / (c2 (1 - eps kappa)) (|u0| + 1) |g1 - g2|_C2,
    requiring the shared contraction constant eps kappa < 1.
    """
    ek = eps * lipschitz_coeff
    if not ek < 1.0:
        raise ContractionNotStrict(
            f"continuity bound needs eps * kappa < 1, got {ek:.6g}"
        )
    return ek / (c2_bound * (1.0 - ek)) * (background_h4 + 1.0) * nonlinearity_gap


# ---------------------------------------------------------------------------
# validated problem-level layer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundsReport:
    """Every certified constant for one problem instance."""

    d: int
    rho: float
    c2_bound: float
    kernel_l1_rss: float
    kernel_l2_rss: float
    background_h4: float
    sobolev_constant: float
    state_ball_radius: float
    eps: tuple[float, ...]
    eps_used: float
    eps_max: float
    lipschitz_coeff: float
    contraction_constant: float
    contractive: bool
    apriori_bound: float

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "rho": self.rho,
            "c2_bound": self.c2_bound,
            "kernel_l1_rss": self.kernel_l1_rss,
            "kernel_l2_rss": self.kernel_l2_rss,
            "background_h4": self.background_h4,
            "sobolev_constant": self.sobolev_constant,
            "state_ball_radius": self.state_ball_radius,
            "eps": list(self.eps),
            "eps_used": self.eps_used,
            "eps_max": self.eps_max,
            "lipschitz_coeff": self.lipschitz_coeff,
            "contraction_constant": self.contraction_constant,
            "contractive": self.contractive,
            "apriori_bound": self.apriori_bound,
        }


def validate_problem(
    problem: Problem,
    background_h4: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> tuple[DataReport, NonlinearityReport]:
    """Run both validators for a problem around a given background norm."""
    data = validate_problem_data(problem)
    radius = image_ball_radius(
        background_h4, sobolev_embedding_constant(problem.d)
    )
    nl = validate_nonlinearity(
        problem.nonlinearity, radius, problem.c2_bound, budget=budget, seed=seed
    )
    return data, nl


def _require_valid(
    problem: Problem, background_h4: float, budget: int, seed: int
) -> tuple[DataReport, NonlinearityReport]:
    data, nl = validate_problem(problem, background_h4, budget=budget, seed=seed)
    if not (data.passed and nl.passed):
        raise AssumptionsNotValidated(
            tuple(data.failures) + tuple(nl.failures), data, nl
        )
    return data, nl


def coupling_threshold(
    problem: Problem,
    background_h4: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> float:
    """Validated eps_max for the problem around the given background norm."""
    _require_valid(problem, background_h4, budget, seed)
    l1_rss, l2_rss = kernel_aggregates(problem.kernels)
    return coupling_threshold_raw(
        problem.d, problem.rho, problem.c2_bound, l1_rss, l2_rss, background_h4
    )


def lipschitz_coefficient(
    problem: Problem,
    background_h4: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> float:
    """Validated kappa for the problem around the given background norm."""
    _require_valid(problem, background_h4, budget, seed)
    l1_rss, l2_rss = kernel_aggregates(problem.kernels)
    return lipschitz_coefficient_raw(
        problem.d, problem.c2_bound, l1_rss, l2_rss, background_h4
    )


def apriori_bound(
    problem: Problem,
    background_h4: float,
    eps: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> float:
    """Validated a-priori perturbation bound at coupling eps."""
    _require_valid(problem, background_h4, budget, seed)
    l1_rss, l2_rss = kernel_aggregates(problem.kernels)
    return apriori_bound_raw(
        problem.d, eps, problem.c2_bound, l1_rss, l2_rss, background_h4
    )


def compute_bounds(
    problem: Problem,
    background_h4: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
    validate: bool = True,
) -> BoundsReport:
    """Assemble the full certified-bounds report for a problem.

    Validates the data and nonlinearity requirements first (unless
    ``validate=False``, for diagnostic use) and evaluates every constant at
    eps_used = max_m eps_m, the coupling the contraction argument sees.
    """
    if validate:
        _require_valid(problem, background_h4, budget, seed)
    l1_rss, l2_rss = kernel_aggregates(problem.kernels)
    d = problem.d
    kappa = lipschitz_coefficient_raw(
        d, problem.c2_bound, l1_rss, l2_rss, background_h4
    )
    b = background_h4 + 1.0
    eps_max = problem.rho / (b * kappa)
    eps_used = problem.eps_max_component
    return BoundsReport(
        d=d,
        rho=problem.rho,
        c2_bound=problem.c2_bound,
        kernel_l1_rss=l1_rss,
        kernel_l2_rss=l2_rss,
        background_h4=float(background_h4),
        sobolev_constant=sobolev_embedding_constant(d),
        state_ball_radius=image_ball_radius(
            background_h4, sobolev_embedding_constant(d)
        ),
        eps=problem.eps,
        eps_used=eps_used,
        eps_max=eps_max,
        lipschitz_coeff=kappa,
        contraction_constant=eps_used * kappa,
        contractive=bool(eps_used * kappa < 1.0),
        apriori_bound=eps_used * kappa * b,
    )


def continuity_bound(
    problem: Problem,
    background_h4: float,
    nonlinearity_gap: float,
    eps: float | None = None,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> float:
    """Validated fixed-point shift bound for a perturbed nonlinearity."""
    _require_valid(problem, background_h4, budget, seed)
    l1_rss, l2_rss = kernel_aggregates(problem.kernels)
    kappa = lipschitz_coefficient_raw(
        problem.d, problem.c2_bound, l1_rss, l2_rss, background_h4
    )
    if eps is None:
        eps = problem.eps_max_component
    return continuity_bound_raw(
        eps, kappa, problem.c2_bound, background_h4, nonlinearity_gap
    )
