"""Problem data: kernels, forcings, nonlinearities, and their validation.

A :class:`Problem` bundles everything that defines one instance of the
stationary nonlocal reaction-diffusion system

    (-Laplacian + Laplacian^2) u_m = eps_m (H_m * g_m(u)) + f_m,
        m = 1 .. N,  x in R^d,  d in {5, 6, 7},

truncated to the periodic box carried by its grid: the coupling amplitudes
eps_m, the convolution kernels H_m, the forcings f_m, and the nonlinearity
g.  The certified-bounds layer (:mod:`nlrd.bounds`) consumes these through
the validators defined here:

* ``validate_problem_data`` checks integrability and nontriviality of the
  kernels and forcings and reports the aggregate kernel norms.
* ``validate_nonlinearity`` checks g(0) = 0, grad g(0) = 0, and that the
  C^2 norm of g over the relevant ball of state values stays within the
  declared bound.

C^2 ball norms come either from a closed form (the quadratic family ships
one) or from a seeded boundary-biased Monte Carlo estimate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .lattice import Grid, RealField, norm_l1, norm_l2

#: dimensions for which the certified bounds are derived
SUPPORTED_DIMENSIONS = (5, 6, 7)

#: absolute tolerance for "vanishes at the origin" checks
ZERO_POINT_TOL = 1e-12

#: default sample budget for Monte Carlo C^2 estimates
DEFAULT_C2_BUDGET = 100_000


# ---------------------------------------------------------------------------
# Gaussian library fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic Gaussian bump a * exp(-|x - c|^2 / (2 w^2)).

    Carries closed-form norms of the untruncated profile on R^d, which the
    discrete norms of a sampled field approach when the box is wide and the
    lattice fine relative to the width.
    """

    width: float = 1.0
    amplitude: float = 1.0
    center: tuple[float, ...] | float = 0.0

    def __post_init__(self) -> None:
        if not (self.width > 0.0 and np.isfinite(self.width)):
            raise ValueError(f"gaussian width must be positive, got {self.width}")
        if not np.isfinite(self.amplitude):
            raise ValueError("gaussian amplitude must be finite")

    def _center_for(self, d: int) -> np.ndarray:
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if c.size == 1:
            return np.full(d, c[0])
        if c.size != d:
            raise ValueError(f"center has {c.size} entries for dimension {d}")
        return c

    def sample(self, grid: Grid) -> RealField:
        c = self._center_for(grid.d)
        coords = grid.coordinate_arrays()
        r2 = np.zeros(grid.shape)
        for axis, x in enumerate(coords):
            r2 = r2 + (x - c[axis]) ** 2
        vals = self.amplitude * np.exp(-r2 / (2.0 * self.width**2))
        return RealField(grid, vals.reshape(-1))

    def l1(self, d: int) -> float:
        """Exact L^1 norm on R^d: |a| (2 pi)^(d/2) w^d."""
        return abs(self.amplitude) * (2.0 * np.pi) ** (d / 2.0) * self.width**d

    def l2(self, d: int) -> float:
        """Exact L^2 norm on R^d: |a| pi^(d/4) w^(d/2)."""
        return abs(self.amplitude) * np.pi ** (d / 4.0) * self.width ** (d / 2.0)

    def linf(self) -> float:
        return abs(self.amplitude)


def gaussian_field(
    grid: Grid,
    width: float = 1.0,
    amplitude: float = 1.0,
    center: tuple[float, ...] | float = 0.0,
) -> RealField:
    """Sample an isotropic Gaussian bump on the grid."""
    return GaussianSpec(width=width, amplitude=amplitude, center=center).sample(grid)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Nonlinearity:
    """Vector nonlinearity g: R^N -> R^N with batched derivatives.

    ``eval`` maps (P, N) -> (P, N); ``grad`` maps (P, N) -> (P, N, N) with
    grad[p, m, i] = d g_m / d z_i; ``hess`` maps (P, N) -> (P, N, N, N).
    ``c2_ball_norm``, when present, returns the exact C^2 norm over the
    closed ball |z| <= r.  ``matrices`` is set for the quadratic family and
    enables exact difference/scaling arithmetic.
    """

    N: int
    eval: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    grad: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    hess: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    c2_ball_norm: Callable[[float], float] | None = field(default=None, repr=False)
    matrices: tuple[np.ndarray, ...] | None = field(default=None, repr=False)
    label: str = "custom"

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("a nonlinearity needs at least one component")


def _quadratic_c2_ball_norm(mats: np.ndarray, radius: float) -> float:
    """Exact C^2 norm of z -> (z^T A_m z)_m over the ball |z| <= radius."""
    r = float(radius)
    total = 0.0
    for A in mats:
        eig = np.linalg.eigvalsh(A)
        row_norms = np.sqrt(np.sum(A**2, axis=1))
        total += (
            r**2 * float(np.max(np.abs(eig)))
            + 2.0 * r * float(np.sum(row_norms))
            + 2.0 * float(np.sum(np.abs(A)))
        )
    return total


def quadratic_nonlinearity(
    matrices: Sequence[np.ndarray], label: str = "quadratic"
) -> Nonlinearity:
    """Quadratic family g_m(z) = z^T A_m z with symmetric A_m.

    Asymmetric input matrices are replaced by their symmetric part, which
    leaves the quadratic forms unchanged and makes the derivative formulas
    (grad = 2 A z, hess = 2 A) exact.
    """
    mats = np.stack([np.asarray(A, dtype=np.float64) for A in matrices])
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {mats.shape}")
    N = mats.shape[0]
    if mats.shape[1] != N:
        raise ValueError(
            f"need one {N}x{N} matrix per component, got {mats.shape[1]}x{mats.shape[2]}"
        )
    mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
    mats.setflags(write=False)

    def _eval(z: np.ndarray) -> np.ndarray:
        z2 = np.atleast_2d(np.asarray(z, dtype=np.float64))
        return _kernels.quadratic_values(z2, mats).reshape(*np.shape(z)[:-1], N)

    def _grad(z: np.ndarray) -> np.ndarray:
        z2 = np.atleast_2d(np.asarray(z, dtype=np.float64))
        return _kernels.quadratic_gradients(z2, mats).reshape(*np.shape(z)[:-1], N, N)

    def _hess(z: np.ndarray) -> np.ndarray:
        z2 = np.atleast_2d(np.asarray(z, dtype=np.float64))
        out = np.broadcast_to(2.0 * mats, (z2.shape[0], N, N, N))
        return out.reshape(*np.shape(z)[:-1], N, N, N)

    return Nonlinearity(
        N=N,
        eval=_eval,
        grad=_grad,
        hess=_hess,
        c2_ball_norm=lambda r: _quadratic_c2_ball_norm(mats, r),
        matrices=tuple(mats[m] for m in range(N)),
        label=label,
    )


def scale_nonlinearity(g: Nonlinearity, factor: float) -> Nonlinearity:
    """Pointwise rescaling factor * g; C^2 norms scale by |factor|."""
    s = float(factor)
    if g.matrices is not None:
        return quadratic_nonlinearity(
            [s * A for A in g.matrices], label=f"{g.label}*{s:g}"
        )
    c2 = None
    if g.c2_ball_norm is not None:
        base = g.c2_ball_norm
        c2 = lambda r: abs(s) * base(r)  # noqa: E731
    return Nonlinearity(
        N=g.N,
        eval=lambda z: s * g.eval(z),
        grad=lambda z: s * g.grad(z),
        hess=lambda z: s * g.hess(z),
        c2_ball_norm=c2,
        label=f"{g.label}*{s:g}",
    )


# ---------------------------------------------------------------------------
# C^2 ball norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class C2Norm:
    """A C^2 ball norm together with how it was obtained."""

    value: float
    radius: float
    method: str  # "analytic" or "sampled"
    samples: int = 0


def ball_samples(
    n_components: int, radius: float, budget: int, seed: int
) -> np.ndarray:
    """Seeded points in the closed ball |z| <= radius, biased to the boundary.

    Directions are isotropic; radii are radius * U^(1/N) so the sup estimates
    concentrate where quadratic-like quantities attain their maxima.
    """
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((budget, n_components))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random(budget) ** (1.0 / n_components)
    return dirs / norms[:, None] * radii[:, None]


def _sampled_c2(
    g: Nonlinearity, radius: float, budget: int, seed: int
) -> float:
    z = ball_samples(g.N, radius, budget, seed)
    vals = np.max(np.abs(g.eval(z)), axis=0)
    grads = np.max(np.abs(g.grad(z)), axis=0)
    hesses = np.max(np.abs(g.hess(z)), axis=0)
    return float(np.sum(vals) + np.sum(grads) + np.sum(hesses))


def c2_norm(
    g: Nonlinearity,
    radius: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> C2Norm:
    """C^2 norm of g over the ball |z| <= radius.

    Uses the closed form when the nonlinearity carries one; otherwise sums
    per-term sampled suprema of |g_m|, |d g_m / d z_i| and the second
    derivatives over a seeded ball sample.  The sampled estimate is a lower
    bound that converges from below as the budget grows.
    """
    if radius < 0.0 or not np.isfinite(radius):
        raise ValueError(f"ball radius must be finite and nonnegative, got {radius}")
    if g.c2_ball_norm is not None:
        return C2Norm(float(g.c2_ball_norm(radius)), float(radius), "analytic")
    if budget < 1:
        raise ValueError("sample budget must be positive")
    value = _sampled_c2(g, radius, budget, seed)
    return C2Norm(value, float(radius), "sampled", samples=budget)


def c2_gap(
    g1: Nonlinearity,
    g2: Nonlinearity,
    radius: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> C2Norm:
    """C^2 norm of the difference g1 - g2 over the ball |z| <= radius."""
    if g1.N != g2.N:
        raise ValueError("nonlinearities act on different numbers of components")
    if g1.matrices is not None and g2.matrices is not None:
        diff = quadratic_nonlinearity(
            [A - B for A, B in zip(g1.matrices, g2.matrices)],
            label=f"{g1.label}-{g2.label}",
        )
        return c2_norm(diff, radius)
    diff = Nonlinearity(
        N=g1.N,
        eval=lambda z: g1.eval(z) - g2.eval(z),
        grad=lambda z: g1.grad(z) - g2.grad(z),
        hess=lambda z: g1.hess(z) - g2.hess(z),
        label=f"{g1.label}-{g2.label}",
    )
    return c2_norm(diff, radius, budget=budget, seed=seed)


def image_ball_radius(background_h4: float, embedding_constant: float) -> float:
    """Radius c_e (|u0|_H4 + 1) of the ball of state values seen by g.

    Solution candidates live in the H^4 ball of radius 1 around the
    background u0; the sup-norm embedding maps them into this ball in R^N.
    """
    if background_h4 < 0.0 or not np.isfinite(background_h4):
        raise ValueError("background norm must be finite and nonnegative")
    if embedding_constant <= 0.0:
        raise ValueError("embedding constant must be positive")
    return embedding_constant * (background_h4 + 1.0)


# ---------------------------------------------------------------------------
# problem container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    """One instance of the truncated nonlocal reaction-diffusion system."""

    grid: Grid
    eps: tuple[float, ...]
    kernels: tuple[RealField, ...]
    forcings: tuple[RealField, ...]
    nonlinearity: Nonlinearity
    rho: float = 1.0
    c2_bound: float = 1.0

    def __post_init__(self) -> None:
        if self.grid.d not in SUPPORTED_DIMENSIONS:
            raise ValueError(
                f"certified bounds require d in {SUPPORTED_DIMENSIONS}, "
                f"got d = {self.grid.d}"
            )
        eps = tuple(float(e) for e in self.eps)
        kernels = tuple(self.kernels)
        forcings = tuple(self.forcings)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "forcings", forcings)
        N = self.nonlinearity.N
        if not (len(eps) == len(kernels) == len(forcings) == N):
            raise ValueError(
                f"component counts disagree: eps={len(eps)}, kernels={len(kernels)}, "
                f"forcings={len(forcings)}, nonlinearity={N}"
            )
        if N < 2:
            warnings.warn(
                "the system is intended for N >= 2 components; N = 1 is untested "
                "territory for the certified bounds",
                UserWarning,
                stacklevel=2,
            )
        for e in eps:
            if e < 0.0 or not np.isfinite(e):
                raise ValueError(f"coupling amplitudes must be >= 0, got {e}")
        for f in (*kernels, *forcings):
            if f.grid != self.grid:
                raise ValueError("kernels and forcings must live on the problem grid")
        if not (0.0 < self.rho and np.isfinite(self.rho)):
            raise ValueError(f"perturbation ball radius must be positive, got {self.rho}")
        if self.rho > 1.0:
            raise ValueError(
                f"perturbation ball radius must be <= 1, got {self.rho}"
            )
        if not (self.c2_bound > 0.0 and np.isfinite(self.c2_bound)):
            raise ValueError(f"C^2 bound must be positive, got {self.c2_bound}")

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def n_components(self) -> int:
        return self.nonlinearity.N

    @property
    def eps_max_component(self) -> float:
        return max(self.eps)

    def with_eps(self, eps: Sequence[float] | float) -> "Problem":
        if np.isscalar(eps):
            eps = (float(eps),) * self.n_components
        return replace(self, eps=tuple(float(e) for e in eps))

    def with_nonlinearity(self, g: Nonlinearity) -> "Problem":
        return replace(self, nonlinearity=g)


def kernel_aggregates(kernels: Sequence[RealField]) -> tuple[float, float]:
    """Root-sum-square aggregates of kernel norms.

    Returns (l1_rss, l2_rss) with l1_rss = (sum_m |H_m|_L1^2)^(1/2) and
    l2_rss = (sum_m |H_m|_L2^2)^(1/2); these are the two kernel constants
    entering every certified bound.
    """
    l1_sq = sum(norm_l1(H) ** 2 for H in kernels)
    l2_sq = sum(norm_l2(H) ** 2 for H in kernels)
    return float(np.sqrt(l1_sq)), float(np.sqrt(l2_sq))


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataReport:
    """Integrability/nontriviality report for kernels and forcings."""

    passed: bool
    failures: tuple[str, ...]
    forcing_l1: tuple[float, ...]
    forcing_l2: tuple[float, ...]
    kernel_l1: tuple[float, ...]
    kernel_l2: tuple[float, ...]
    kernel_l1_rss: float
    kernel_l2_rss: float

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failures": list(self.failures),
            "forcing_l1": list(self.forcing_l1),
            "forcing_l2": list(self.forcing_l2),
            "kernel_l1": list(self.kernel_l1),
            "kernel_l2": list(self.kernel_l2),
            "kernel_l1_rss": self.kernel_l1_rss,
            "kernel_l2_rss": self.kernel_l2_rss,
        }


def validate_problem_data(problem: Problem) -> DataReport:
    """Check the integrability and nontriviality requirements on the data.

    Every kernel and forcing must have finite L^1 and L^2 norms (guaranteed
    for sampled fields, but recorded), at least one forcing and at least one
    kernel must be nontrivial, and the aggregate kernel norms must be
    positive so the certified-bound formulas are meaningful.
    """
    f_l1 = tuple(norm_l1(f) for f in problem.forcings)
    f_l2 = tuple(norm_l2(f) for f in problem.forcings)
    k_l1 = tuple(norm_l1(H) for H in problem.kernels)
    k_l2 = tuple(norm_l2(H) for H in problem.kernels)
    l1_rss, l2_rss = kernel_aggregates(problem.kernels)

    failures: list[str] = []
    if not all(np.isfinite(v) for v in (*f_l1, *f_l2, *k_l1, *k_l2)):
        failures.append("norms_finite")
    if max(f_l2, default=0.0) == 0.0:
        failures.append("forcing_nontrivial")
    if max(k_l2, default=0.0) == 0.0:
        failures.append("kernel_nontrivial")
    return DataReport(
        passed=not failures,
        failures=tuple(failures),
        forcing_l1=f_l1,
        forcing_l2=f_l2,
        kernel_l1=k_l1,
        kernel_l2=k_l2,
        kernel_l1_rss=l1_rss,
        kernel_l2_rss=l2_rss,
    )


@dataclass(frozen=True)
class NonlinearityReport:
    """Origin and C^2-bound report for a nonlinearity on a state ball."""

    passed: bool
    failures: tuple[str, ...]
    value_at_zero: float
    gradient_at_zero: float
    c2: C2Norm
    c2_bound: float
    sampled_sup: float

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failures": list(self.failures),
            "value_at_zero": self.value_at_zero,
            "gradient_at_zero": self.gradient_at_zero,
            "c2_norm": self.c2.value,
            "c2_method": self.c2.method,
            "c2_samples": self.c2.samples,
            "ball_radius": self.c2.radius,
            "c2_bound": self.c2_bound,
            "sampled_sup": self.sampled_sup,
        }


def validate_nonlinearity(
    g: Nonlinearity,
    radius: float,
    c2_bound: float,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> NonlinearityReport:
    """Check g(0) = 0, grad g(0) = 0, nontriviality, and the C^2 bound.

    ``radius`` is the state-ball radius (see :func:`image_ball_radius`) and
    ``c2_bound`` the declared bound the C^2 norm must not exceed.
    """
    zero = np.zeros((1, g.N))
    v0 = float(np.max(np.abs(g.eval(zero))))
    g0 = float(np.max(np.abs(g.grad(zero))))
    c2 = c2_norm(g, radius, budget=budget, seed=seed)
    probe = ball_samples(g.N, radius, min(budget, 4096), seed + 1)
    sup = float(np.max(np.abs(g.eval(probe)))) if radius > 0 else 0.0

    failures: list[str] = []
    if v0 > ZERO_POINT_TOL:
        failures.append("vanishes_at_origin")
    if g0 > ZERO_POINT_TOL:
        failures.append("gradient_vanishes_at_origin")
    if sup == 0.0:
        failures.append("nontrivial_on_ball")
    if not (c2.value <= c2_bound):
        failures.append("c2_within_bound")
    return NonlinearityReport(
        passed=not failures,
        failures=tuple(failures),
        value_at_zero=v0,
        gradient_at_zero=g0,
        c2=c2,
        c2_bound=float(c2_bound),
        sampled_sup=sup,
    )
