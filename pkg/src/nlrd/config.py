"""JSON configuration: schema, construction, and coupling resolution.

A config file has five sections::

    {
      "grid":         {"d": 5, "n": 12, "L": 8.0},
      "problem":      {"rho": 1.0, "c2_bound": 1.0,
                       "eps": 0.02            # or "eps_fraction": 0.5
                      },
      "kernels":      [ {"constructor": "gaussian", "params": {...}}, ... ],
      "forcings":     [ ... one spec per component ... ],
      "nonlinearity": {"family": "quadratic",
                       "params": {"matrices": [[[...]]]},
                       "scale_c2_to_fraction": 0.5},
      "solver":       {"tol": 1e-10, "max_iter": 200, "seed": 0,
                       "budget": 100000},
      "margins":      {"contraction": 0.05, "continuity": 0.05}
    }

Field constructors: ``gaussian`` (params ``width``, ``amplitude``,
``center``), ``bfx1`` (params ``path``, grid must match), ``zero``.

Coupling resolution: ``eps`` gives the amplitudes directly (scalar or one
per component); ``eps_fraction`` q sets every amplitude to q * eps_max,
where eps_max is the certified threshold computed around the background of
the configured forcings.  ``scale_c2_to_fraction`` rescales the
nonlinearity so its exact C^2 norm over the relevant state ball equals that
fraction of ``c2_bound``.

``build_problem`` resolves everything (solving the linear background once)
and returns the problem together with the fully resolved configuration
dictionary that reports embed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import _kernels, __version__
from .bounds import coupling_threshold_raw, sobolev_embedding_constant
from .fieldio import read_field
from .lattice import Grid, RealField, VectorField, norm_h4_vector
from .model import (
    DEFAULT_C2_BUDGET,
    GaussianSpec,
    Nonlinearity,
    Problem,
    c2_norm,
    image_ball_radius,
    kernel_aggregates,
    quadratic_nonlinearity,
    scale_nonlinearity,
)
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, solve_background

DEFAULT_MARGINS = {"contraction": 0.05, "continuity": 0.05}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class BuiltProblem:
    """A problem plus everything resolved while building it."""

    problem: Problem
    resolved: dict = field(repr=False)
    background: VectorField = field(repr=False)
    background_h4: float
    background_dropped: tuple[float, ...]
    tol: float
    max_iter: int
    seed: int
    budget: int
    margins: dict
    warnings: tuple[str, ...]


def load_config(path: str | Path) -> dict:
    """Read and parse a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


def _section(cfg: dict, name: str, required: bool = True) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing config section {name!r}")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return sec


def _build_grid(cfg: dict) -> Grid:
    sec = _section(cfg, "grid")
    try:
        return Grid(d=int(sec["d"]), n=int(sec["n"]), L=float(sec["L"]))
    except KeyError as err:
        raise ConfigError(f"grid section is missing {err}") from err
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad grid section: {err}") from err


def build_field(grid: Grid, spec: Any) -> RealField:
    """Construct one field from a constructor spec."""
    if not isinstance(spec, dict) or "constructor" not in spec:
        raise ConfigError(f"field spec must be an object with a constructor, got {spec!r}")
    name = spec["constructor"]
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"field params must be an object, got {params!r}")
    try:
        if name == "gaussian":
            gauss = GaussianSpec(
                width=float(params.get("width", 1.0)),
                amplitude=float(params.get("amplitude", 1.0)),
                center=params.get("center", 0.0),
            )
            return gauss.sample(grid)
        if name == "zero":
            return RealField.zeros(grid)
        if name == "bfx1":
            f = read_field(params["path"])
            if f.grid != grid:
                raise ConfigError(
                    f"field in {params['path']} has grid {f.grid}, expected {grid}"
                )
            return f
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, OSError) as err:
        raise ConfigError(f"cannot build {name!r} field: {err}") from err
    raise ConfigError(f"unknown field constructor {name!r}")


def _build_fields(grid: Grid, cfg: dict, section: str) -> tuple[RealField, ...]:
    specs = cfg.get(section)
    if not isinstance(specs, list) or not specs:
        raise ConfigError(f"config section {section!r} must be a nonempty list")
    return tuple(build_field(grid, s) for s in specs)


def _build_nonlinearity(cfg: dict) -> tuple[Nonlinearity, float | None]:
    sec = _section(cfg, "nonlinearity")
    family = sec.get("family")
    params = sec.get("params", {})
    if family != "quadratic":
        raise ConfigError(f"unknown nonlinearity family {family!r}")
    try:
        mats = [np.asarray(A, dtype=float) for A in params["matrices"]]
        g = quadratic_nonlinearity(mats)
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"bad quadratic nonlinearity: {err}") from err
    frac = sec.get("scale_c2_to_fraction")
    if frac is not None:
        frac = float(frac)
        if not 0.0 < frac <= 1.0:
            raise ConfigError(
                f"scale_c2_to_fraction must be in (0, 1], got {frac}"
            )
    return g, frac


def build_problem(
    cfg: dict, eps_fraction: float | None = None
) -> BuiltProblem:
    """Build a problem from a parsed config, resolving couplings and scaling.

    ``eps_fraction`` (e.g. from the command line) overrides any coupling
    settings in the file.
    """
    grid = _build_grid(cfg)
    prob_sec = _section(cfg, "problem")
    solver_sec = _section(cfg, "solver", required=False)
    margins = dict(DEFAULT_MARGINS)
    margins.update(_section(cfg, "margins", required=False))

    try:
        rho = float(prob_sec.get("rho", 1.0))
        c2_bound = float(prob_sec.get("c2_bound", 1.0))
        tol = float(solver_sec.get("tol", DEFAULT_TOL))
        max_iter = int(solver_sec.get("max_iter", DEFAULT_MAX_ITER))
        seed = int(solver_sec.get("seed", 0))
        budget = int(solver_sec.get("budget", DEFAULT_C2_BUDGET))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad scalar setting: {err}") from err

    kernels = _build_fields(grid, cfg, "kernels")
    forcings = _build_fields(grid, cfg, "forcings")
    if len(kernels) != len(forcings):
        raise ConfigError(
            f"{len(kernels)} kernels vs {len(forcings)} forcings; "
            "need one of each per component"
        )
    g, c2_fraction = _build_nonlinearity(cfg)
    if g.N != len(kernels):
        raise ConfigError(
            f"nonlinearity has {g.N} components but {len(kernels)} kernels given"
        )

    warnings: list[str] = []

    # The background (and hence the state-ball radius and eps_max) depends
    # only on the grid and forcings, so it can be resolved before couplings.
    base = Problem(
        grid=grid,
        eps=(0.0,) * g.N,
        kernels=kernels,
        forcings=forcings,
        nonlinearity=g,
        rho=rho,
        c2_bound=c2_bound,
    )
    background, dropped = solve_background(base)
    background_h4 = norm_h4_vector(background)

    scale_applied = None
    if c2_fraction is not None:
        radius = image_ball_radius(
            background_h4, sobolev_embedding_constant(grid.d)
        )
        current = c2_norm(g, radius, budget=budget, seed=seed)
        if current.value <= 0.0:
            raise ConfigError("cannot rescale a vanishing nonlinearity")
        scale_applied = c2_fraction * c2_bound / current.value
        g = scale_nonlinearity(g, scale_applied)

    l1_rss, l2_rss = kernel_aggregates(kernels)
    eps_max = coupling_threshold_raw(
        grid.d, rho, c2_bound, l1_rss, l2_rss, background_h4
    )

    cfg_fraction = prob_sec.get("eps_fraction")
    cfg_eps = prob_sec.get("eps")
    if eps_fraction is not None:
        if not eps_fraction > 0.0:
            raise ConfigError(f"eps fraction must be positive, got {eps_fraction}")
        eps = (float(eps_fraction) * eps_max,) * g.N
        eps_source = f"cli_fraction={eps_fraction:g}"
        if eps_fraction > 1.0:
            warnings.append(
                f"requested coupling fraction {eps_fraction:g} exceeds 1; "
                "the solve is outside the certified regime"
            )
    elif cfg_fraction is not None and cfg_eps is not None:
        raise ConfigError("give either 'eps' or 'eps_fraction', not both")
    elif cfg_fraction is not None:
        q = float(cfg_fraction)
        if not q > 0.0:
            raise ConfigError(f"eps_fraction must be positive, got {q}")
        eps = (q * eps_max,) * g.N
        eps_source = f"config_fraction={q:g}"
        if q > 1.0:
            warnings.append(
                f"configured coupling fraction {q:g} exceeds 1; "
                "the solve is outside the certified regime"
            )
    elif cfg_eps is not None:
        if np.isscalar(cfg_eps):
            eps = (float(cfg_eps),) * g.N
        else:
            eps = tuple(float(e) for e in cfg_eps)
            if len(eps) != g.N:
                raise ConfigError(
                    f"eps list has {len(eps)} entries for {g.N} components"
                )
        eps_source = "config_eps"
    else:
        eps = (0.0,) * g.N
        eps_source = "default_zero"

    try:
        problem = Problem(
            grid=grid,
            eps=eps,
            kernels=kernels,
            forcings=forcings,
            nonlinearity=g,
            rho=rho,
            c2_bound=c2_bound,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err

    resolved = {
        "version": __version__,
        "backend": _kernels.backend(),
        "grid": {"d": grid.d, "n": grid.n, "L": grid.L},
        "n_components": g.N,
        "rho": rho,
        "c2_bound": c2_bound,
        "eps": list(eps),
        "eps_source": eps_source,
        "eps_max_at_build": eps_max,
        "background_h4": background_h4,
        "nonlinearity": {
            "family": "quadratic",
            "label": g.label,
            "scale_applied": scale_applied,
        },
        "kernels": cfg.get("kernels"),
        "forcings": cfg.get("forcings"),
        "solver": {
            "tol": tol,
            "max_iter": max_iter,
            "seed": seed,
            "budget": budget,
        },
        "margins": margins,
    }
    return BuiltProblem(
        problem=problem,
        resolved=resolved,
        background=background,
        background_h4=background_h4,
        background_dropped=dropped,
        tol=tol,
        max_iter=max_iter,
        seed=seed,
        budget=budget,
        margins=margins,
        warnings=tuple(warnings),
    )
