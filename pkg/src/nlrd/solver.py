"""Picard iteration for the nonlocal fixed-point problem, with diagnostics.

The solve splits u = u0 + v: the background u0 solves the linear problem
(-Laplacian + Laplacian^2) u0_m = f_m componentwise, and the perturbation v
is the fixed point of

    T(v)_m = L^(-1) [ eps_m (H_m * g_m(u0 + v)) ],

iterated from v = 0.  Each application fuses the convolution and the
inverse of the diffusion operator in Fourier space (two FFTs per component
per step; kernel transforms are cached), projecting out the zero mode of
the right-hand side and recording the dropped mass.

The iteration stops when the H^4 step norm falls below
tol * max(1, |v|_H4); it aborts with :class:`DivergenceDetected` when a
step exceeds 10x the first step, and with :class:`MaxIterExceeded` when the
budget runs out.  Both carry the partial report.

``contraction_probe`` measures empirical Lipschitz ratios of T on random
ball pairs; ``continuity_experiment`` compares the fixed-point shift under
a nonlinearity perturbation against its certified bound.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    AssumptionsNotValidated,
    BoundsReport,
    compute_bounds,
    continuity_bound_raw,
)
from .lattice import (
    Grid,
    RealField,
    VectorField,
    forward_coeffs,
    h4_norm_sq_coeffs,
    h4_weight,
    inverse_values,
    norm_h4_vector,
    norm_l2_vector,
)
from .model import DEFAULT_C2_BUDGET, Nonlinearity, Problem, c2_gap
from .spectral import inverse_symbol, operator_symbol, solve_linear

_TWO_PI = 2.0 * np.pi

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

#: a step this many times larger than the first step aborts the iteration
DIVERGENCE_FACTOR = 10.0


class MaxIterExceeded(RuntimeError):
    """Iteration budget exhausted; carries the partial report."""

    def __init__(self, report: "SolveReport"):
        self.report = report
        super().__init__(
            f"no convergence after {report.iterations} iterations "
            f"(last step {report.trace.steps[-1].step_h4:.3e})"
        )


class DivergenceDetected(RuntimeError):
    """Step norms blew up; carries the partial report."""

    def __init__(self, report: "SolveReport"):
        self.report = report
        super().__init__(
            f"iteration diverging at step {report.iterations} "
            f"(step norm {report.trace.steps[-1].step_h4:.3e})"
        )


@dataclass(frozen=True)
class IterationStep:
    """One Picard step: norms, contraction ratio, projected mass, timing."""

    k: int
    norm_h4: float
    step_h4: float
    ratio: float | None
    dropped_mass: tuple[float, ...]
    wall_time: float


@dataclass(frozen=True)
class IterationTrace:
    steps: tuple[IterationStep, ...]

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(s.ratio for s in self.steps if s.ratio is not None)

    @property
    def max_ratio(self) -> float | None:
        r = self.ratios
        return max(r) if r else None

    def rows(self) -> list[dict]:
        return [
            {
                "k": s.k,
                "norm_h4": s.norm_h4,
                "step_h4": s.step_h4,
                "ratio": s.ratio,
                "dropped_mass": max(s.dropped_mass),
                "wall_time": s.wall_time,
            }
            for s in self.steps
        ]


@dataclass(frozen=True)
class ResidualReport:
    """L^2 residual of the full equation, zero mode excluded."""

    absolute: float
    relative: float
    forcing_l2: float


@dataclass(frozen=True)
class SolveReport:
    """Everything one solve produced."""

    background: VectorField = field(repr=False)
    perturbation: VectorField = field(repr=False)
    solution: VectorField = field(repr=False)
    background_h4: float
    perturbation_h4: float
    solution_h4: float
    background_dropped: tuple[float, ...]
    converged: bool
    iterations: int
    tol: float
    residual: ResidualReport | None
    trace: IterationTrace
    bounds: BoundsReport
    warnings: tuple[str, ...]


# ---------------------------------------------------------------------------
# fixed-point map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Context:
    """Cached spectral data for repeated applications of the map."""

    problem: Problem
    background: VectorField
    background_values: np.ndarray = field(repr=False)  # (P, N)
    background_dropped: tuple[float, ...]
    kernel_hats: tuple[np.ndarray, ...] = field(repr=False)
    inv_sym: np.ndarray = field(repr=False)
    conv_factor: float


def solve_background(problem: Problem) -> tuple[VectorField, tuple[float, ...]]:
    """Solve the linear problem componentwise; returns (u0, dropped masses)."""
    comps = []
    dropped = []
    for f in problem.forcings:
        u, mass = solve_linear(f, zero_mode_policy="project")
        comps.append(u)
        dropped.append(mass)
    return VectorField(tuple(comps)), tuple(dropped)


def _make_context(
    problem: Problem, background: VectorField | None = None
) -> _Context:
    if background is None:
        background, dropped = solve_background(problem)
    else:
        if background.grid != problem.grid:
            raise ValueError("background lives on the wrong grid")
        dropped = (0.0,) * problem.n_components
    grid = problem.grid
    kernel_hats = tuple(forward_coeffs(grid, H.values) for H in problem.kernels)
    return _Context(
        problem=problem,
        background=background,
        background_values=background.stacked(),
        background_dropped=dropped,
        kernel_hats=kernel_hats,
        inv_sym=inverse_symbol(grid),
        conv_factor=_TWO_PI ** (grid.d / 2.0),
    )


def _apply(
    ctx: _Context, v_values: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray], tuple[float, ...]]:
    """One application of T; returns (values, per-component coeffs, dropped)."""
    p = ctx.problem
    grid = p.grid
    z = ctx.background_values + v_values
    gz = p.nonlinearity.eval(z)
    out_values = np.empty_like(v_values)
    out_hats: list[np.ndarray] = []
    dropped: list[float] = []
    zero = (0,) * grid.d
    for m in range(p.n_components):
        g_hat = forward_coeffs(grid, gz[:, m])
        rhs_hat = p.eps[m] * ctx.conv_factor * ctx.kernel_hats[m] * g_hat
        dropped.append(float(np.abs(rhs_hat[zero])))
        u_hat = rhs_hat * ctx.inv_sym
        out_hats.append(u_hat)
        out_values[:, m] = inverse_values(grid, u_hat)
    return out_values, out_hats, tuple(dropped)


def apply_fixed_point_map(
    problem: Problem, background: VectorField, v: VectorField
) -> VectorField:
    """Apply T to a perturbation v around the given background.

    Points outside the radius-rho ball are accepted (probes need nearby
    points too) but flagged with a warning, since the certified bounds only
    speak about the ball.
    """
    if v.grid != problem.grid or v.n_components != problem.n_components:
        raise ValueError("perturbation shape does not match the problem")
    v_norm = norm_h4_vector(v)
    if v_norm > problem.rho * (1.0 + 1e-12):
        warnings.warn(
            f"perturbation norm {v_norm:.6g} lies outside the radius-"
            f"{problem.rho:g} ball the bounds certify",
            UserWarning,
            stacklevel=2,
        )
    ctx = _make_context(problem, background)
    out_values, _, _ = _apply(ctx, v.stacked())
    return VectorField.from_stack(problem.grid, out_values)


# ---------------------------------------------------------------------------
# residual
# ---------------------------------------------------------------------------

def residual(problem: Problem, u: VectorField) -> ResidualReport:
    """L^2 residual of the full equation at u, zero mode excluded.

    The residual of component m is
    -(L u)_m + eps_m (H_m * g_m(u)) + f_m, evaluated spectrally with the
    p = 0 mode removed (the solve is defined modulo that mode).  The
    relative value is against the L^2 norm of the forcing vector, or
    absolute when the forcing vanishes.
    """
    if u.grid != problem.grid or u.n_components != problem.n_components:
        raise ValueError("candidate solution shape does not match the problem")
    grid = problem.grid
    sym = operator_symbol(grid)
    conv = _TWO_PI ** (grid.d / 2.0)
    gz = problem.nonlinearity.eval(u.stacked())
    zero = (0,) * grid.d
    total_sq = 0.0
    for m in range(problem.n_components):
        u_hat = forward_coeffs(grid, u.components[m].values)
        g_hat = forward_coeffs(grid, gz[:, m])
        k_hat = forward_coeffs(grid, problem.kernels[m].values)
        f_hat = forward_coeffs(grid, problem.forcings[m].values)
        r_hat = -sym * u_hat + problem.eps[m] * conv * k_hat * g_hat + f_hat
        r_hat[zero] = 0.0
        total_sq += float(
            grid.dp**grid.d * np.sum(r_hat.real**2 + r_hat.imag**2)
        )
    absolute = float(np.sqrt(total_sq))
    f_l2 = norm_l2_vector(VectorField(problem.forcings))
    relative = absolute / f_l2 if f_l2 > 0.0 else absolute
    return ResidualReport(absolute=absolute, relative=relative, forcing_l2=f_l2)


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------

def _bounds_with_warnings(
    problem: Problem, background_h4: float, budget: int, seed: int
) -> tuple[BoundsReport, list[str]]:
    warnings: list[str] = []
    try:
        report = compute_bounds(problem, background_h4, budget=budget, seed=seed)
    except AssumptionsNotValidated as err:
        warnings.append(
            "requirements failed (" + ", ".join(err.failures) + "); "
            "bounds reported without certification"
        )
        report = compute_bounds(
            problem, background_h4, budget=budget, seed=seed, validate=False
        )
    if report.eps_used > report.eps_max:
        warnings.append(
            f"coupling {report.eps_used:.6g} exceeds the certified threshold "
            f"{report.eps_max:.6g}; contraction is not guaranteed"
        )
    return report, warnings


def picard(
    problem: Problem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: VectorField | None = None,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> SolveReport:
    """Iterate T from v = 0 (or ``initial``) to the fixed point.

    Returns the full report on convergence; raises
    :class:`DivergenceDetected` / :class:`MaxIterExceeded` (each carrying
    the partial report) otherwise.  A coupling above the certified
    threshold downgrades to a warning -- the guard that actually stops
    runaway iterations is the divergence check.
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"iteration budget must be >= 1, got {max_iter}")
    ctx = _make_context(problem)
    grid = problem.grid
    background_h4 = norm_h4_vector(ctx.background)
    bounds_report, warn = _bounds_with_warnings(
        problem, background_h4, budget, seed
    )

    if initial is None:
        v_values = np.zeros((grid.npoints, problem.n_components))
        v_hats = [
            np.zeros(grid.shape, dtype=np.complex128)
            for _ in range(problem.n_components)
        ]
    else:
        if initial.grid != grid or initial.n_components != problem.n_components:
            raise ValueError("initial perturbation shape does not match the problem")
        v_values = initial.stacked()
        v_hats = [forward_coeffs(grid, v_values[:, m]) for m in range(problem.n_components)]

    steps: list[IterationStep] = []
    first_step = None
    prev_step = None
    converged = False
    t0 = time.perf_counter()

    for k in range(1, max_iter + 1):
        new_values, new_hats, dropped = _apply(ctx, v_values)
        step_sq = sum(
            h4_norm_sq_coeffs(grid, new_hats[m] - v_hats[m])
            for m in range(problem.n_components)
        )
        norm_sq = sum(
            h4_norm_sq_coeffs(grid, new_hats[m])
            for m in range(problem.n_components)
        )
        step_h4 = float(np.sqrt(step_sq))
        norm_h4 = float(np.sqrt(norm_sq))
        ratio = None
        if prev_step is not None and prev_step > 0.0 and np.isfinite(step_h4):
            ratio = step_h4 / prev_step
        steps.append(
            IterationStep(
                k=k,
                norm_h4=norm_h4,
                step_h4=step_h4,
                ratio=ratio,
                dropped_mass=dropped,
                wall_time=time.perf_counter() - t0,
            )
        )
        finite = np.isfinite(step_h4) and np.isfinite(norm_h4)
        blown_up = (
            first_step is not None
            and step_h4 > DIVERGENCE_FACTOR * max(first_step, np.finfo(float).tiny)
        )
        if not finite or blown_up:
            # report the last finite iterate, not the runaway one
            report = _assemble_report(
                ctx, v_values, background_h4, bounds_report,
                tuple(warn), steps, converged=False, tol=tol, with_residual=False,
            )
            raise DivergenceDetected(report)
        v_values, v_hats = new_values, new_hats
        if first_step is None:
            first_step = step_h4
        prev_step = step_h4
        if step_h4 <= tol * max(1.0, norm_h4):
            converged = True
            break

    report = _assemble_report(
        ctx, v_values, background_h4, bounds_report,
        tuple(warn), steps, converged=converged, tol=tol, with_residual=converged,
    )
    if not converged:
        raise MaxIterExceeded(report)
    return report


def _assemble_report(
    ctx: _Context,
    v_values: np.ndarray,
    background_h4: float,
    bounds_report: BoundsReport,
    warnings: tuple[str, ...],
    steps: list[IterationStep],
    converged: bool,
    tol: float,
    with_residual: bool,
) -> SolveReport:
    grid = ctx.problem.grid
    perturbation = VectorField.from_stack(grid, v_values)
    solution = VectorField.from_stack(grid, ctx.background_values + v_values)
    res = residual(ctx.problem, solution) if with_residual else None
    return SolveReport(
        background=ctx.background,
        perturbation=perturbation,
        solution=solution,
        background_h4=background_h4,
        perturbation_h4=norm_h4_vector(perturbation),
        solution_h4=norm_h4_vector(solution),
        background_dropped=ctx.background_dropped,
        converged=converged,
        iterations=len(steps),
        tol=tol,
        residual=res,
        trace=IterationTrace(tuple(steps)),
        bounds=bounds_report,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# random ball fields and probes
# ---------------------------------------------------------------------------

def random_ball_field(
    grid: Grid,
    n_components: int,
    rng: np.random.Generator,
    target_norm: float,
) -> VectorField:
    """Random smooth vector field with exact H^4 norm ``target_norm``.

    White noise is shaped by the spectral envelope (1 + |p|^8)^(-1) and the
    whole vector is rescaled to the requested norm, so draws are H^4-generic
    but well resolved on the lattice.
    """
    if target_norm < 0.0:
        raise ValueError("target norm must be nonnegative")
    if target_norm == 0.0:
        return VectorField.zeros(grid, n_components)
    envelope = 1.0 / h4_weight(grid)
    hats = []
    total_sq = 0.0
    for _ in range(n_components):
        noise = rng.standard_normal(grid.shape)
        hat = np.fft.fftn(noise) * envelope
        hats.append(hat)
        total_sq += h4_norm_sq_coeffs(grid, hat)
    scale = target_norm / np.sqrt(total_sq)
    comps = tuple(
        RealField(grid, inverse_values(grid, scale * hat)) for hat in hats
    )
    return VectorField(comps)


@dataclass(frozen=True)
class ProbeReport:
    """Empirical Lipschitz ratios of T on random ball pairs."""

    pairs: int
    seed: int
    ratios: tuple[float, ...]
    max_ratio: float
    mean_ratio: float


def contraction_probe(
    problem: Problem,
    pairs: int = 50,
    seed: int = 0,
    background: VectorField | None = None,
) -> ProbeReport:
    """Measure |T(v1) - T(v2)| / |v1 - v2| on random pairs in the rho-ball."""
    if pairs < 1:
        raise ValueError("need at least one pair")
    ctx = _make_context(problem, background)
    grid = problem.grid
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(pairs):
        r1 = problem.rho * rng.random()
        r2 = problem.rho * rng.random()
        v1 = random_ball_field(grid, problem.n_components, rng, r1)
        v2 = random_ball_field(grid, problem.n_components, rng, r2)
        diff_sq = sum(
            h4_norm_sq_coeffs(
                grid,
                forward_coeffs(grid, v1.components[m].values - v2.components[m].values),
            )
            for m in range(problem.n_components)
        )
        denom = float(np.sqrt(diff_sq))
        if denom == 0.0:
            continue
        _, hats1, _ = _apply(ctx, v1.stacked())
        _, hats2, _ = _apply(ctx, v2.stacked())
        num_sq = sum(
            h4_norm_sq_coeffs(grid, h1 - h2) for h1, h2 in zip(hats1, hats2)
        )
        ratios.append(float(np.sqrt(num_sq)) / denom)
    return ProbeReport(
        pairs=pairs,
        seed=seed,
        ratios=tuple(ratios),
        max_ratio=max(ratios),
        mean_ratio=float(np.mean(ratios)),
    )


# ---------------------------------------------------------------------------
# continuity experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuityReport:
    """Measured fixed-point shift under a nonlinearity change vs. its bound."""

    measured: float
    bound: float
    margin: float
    slack: float
    passed: bool
    nonlinearity_gap: float
    gap_method: str
    contraction_constant: float
    iterations: tuple[int, int]
    residuals: tuple[float, float]


def continuity_experiment(
    problem: Problem,
    g1: Nonlinearity,
    g2: Nonlinearity,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    margin: float = 0.05,
    budget: int = DEFAULT_C2_BUDGET,
    seed: int = 0,
) -> ContinuityReport:
    """Solve with g1 and g2 and compare |u1 - u2|_H4 to the certified bound.

    The pass rule allows the stated relative margin plus an absolute slack
    of 10 * tol (two converged solves cannot be distinguished below that).
    """
    rep1 = picard(problem.with_nonlinearity(g1), tol=tol, max_iter=max_iter,
                  budget=budget, seed=seed)
    rep2 = picard(problem.with_nonlinearity(g2), tol=tol, max_iter=max_iter,
                  budget=budget, seed=seed)
    diff = VectorField(
        tuple(
            RealField(problem.grid, a.values - b.values)
            for a, b in zip(rep1.solution.components, rep2.solution.components)
        )
    )
    measured = norm_h4_vector(diff)
    gap = c2_gap(g1, g2, rep1.bounds.state_ball_radius, budget=budget, seed=seed)
    bound = continuity_bound_raw(
        rep1.bounds.eps_used,
        rep1.bounds.lipschitz_coeff,
        problem.c2_bound,
        rep1.bounds.background_h4,
        gap.value,
    )
    slack = 10.0 * tol
    passed = measured <= bound * (1.0 + margin) + slack
    return ContinuityReport(
        measured=measured,
        bound=bound,
        margin=margin,
        slack=slack,
        passed=passed,
        nonlinearity_gap=gap.value,
        gap_method=gap.method,
        contraction_constant=rep1.bounds.contraction_constant,
        iterations=(rep1.iterations, rep2.iterations),
        residuals=(
            rep1.residual.relative if rep1.residual else float("nan"),
            rep2.residual.relative if rep2.residual else float("nan"),
        ),
    )
