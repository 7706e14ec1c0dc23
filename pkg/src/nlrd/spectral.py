"""Spectral application and inversion of the diffusion operator, convolution.

The linear operator is L = -Laplacian + Laplacian^2, diagonal in Fourier
space with symbol |p|^2 + |p|^4.  The symbol vanishes only at p = 0, so
inversion is defined up to the zero mode; ``solve_linear`` either projects
the zero mode out (recording the dropped mass) or rejects inputs whose mean
is too large to ignore.

Periodic convolution is evaluated spectrally:

    (H * G)^(p) = (2 pi)^(d/2) H^(p) G^(p)

under the unitary transform convention of :mod:`nlrd.lattice`.  The
brute-force counterpart ``convolve_direct`` computes the defining lattice
sum h^d sum_y H(x - y) G(y) with wrap-around and is intended as a
cross-check on tiny grids only.
"""

from __future__ import annotations

import functools
from typing import Literal

import numpy as np

from . import _kernels
from .lattice import (
    Grid,
    RealField,
    SpectralField,
    forward_transform,
    inverse_transform,
    norm_l1,
    squared_wavenumber,
)

_TWO_PI = 2.0 * np.pi

#: rejection threshold for the relative zero-mode mass in ``solve_linear``
TOL_ZERO_MODE = 1e-8

#: largest grid (total points) accepted by ``convolve_direct``
DIRECT_CONV_MAX_POINTS = 10_000

ZeroModePolicy = Literal["project", "reject"]


class ZeroModeRejected(ValueError):
    """Raised when the forcing carries too much mean for a clean inversion."""

    def __init__(self, mass: float, threshold: float):
        self.mass = mass
        self.threshold = threshold
        super().__init__(
            f"zero-mode mass {mass:.3e} exceeds threshold {threshold:.3e}; "
            "the operator symbol vanishes at p = 0"
        )


class GridTooLarge(ValueError):
    """Raised when the O(P^2) direct convolution would be too expensive."""


@functools.lru_cache(maxsize=16)
def operator_symbol(grid: Grid) -> np.ndarray:
    """Symbol |p|^2 + |p|^4 on the frequency lattice, FFT order."""
    q2 = squared_wavenumber(grid)
    return q2 + q2**2


@functools.lru_cache(maxsize=16)
def inverse_symbol(grid: Grid) -> np.ndarray:
    """1 / (|p|^2 + |p|^4) with the zero mode set to 0, FFT order."""
    sym = operator_symbol(grid)
    inv = np.zeros_like(sym)
    nonzero = sym > 0.0
    inv[nonzero] = 1.0 / sym[nonzero]
    return inv


def apply_operator(u: RealField) -> RealField:
    """Apply -Laplacian + Laplacian^2 spectrally."""
    F = forward_transform(u)
    return inverse_transform(SpectralField(u.grid, operator_symbol(u.grid) * F.coeffs))


def solve_linear(
    f: RealField,
    zero_mode_policy: ZeroModePolicy = "project",
    tol_zero_mode: float = TOL_ZERO_MODE,
) -> tuple[RealField, float]:
    """Solve (-Laplacian + Laplacian^2) u = f on the periodic box.

    Divides by the symbol away from p = 0.  The zero mode of f is projected
    out; its magnitude |f^(0)| is returned as ``dropped_mass``.  Under the
    ``"reject"`` policy, a dropped mass above ``tol_zero_mode`` relative to
    the natural scale (2 pi)^(-d/2) |f|_L1 raises :class:`ZeroModeRejected`.
    """
    if zero_mode_policy not in ("project", "reject"):
        raise ValueError(f"unknown zero-mode policy {zero_mode_policy!r}")
    g = f.grid
    F = forward_transform(f)
    zero_index = (0,) * g.d
    dropped = float(np.abs(F.coeffs[zero_index]))
    if zero_mode_policy == "reject":
        scale = _TWO_PI ** (-g.d / 2.0) * norm_l1(f)
        if dropped > tol_zero_mode * max(scale, np.finfo(float).tiny):
            raise ZeroModeRejected(dropped, tol_zero_mode * scale)
    coeffs = F.coeffs * inverse_symbol(g)
    return inverse_transform(SpectralField(g, coeffs)), dropped


def convolve(H: RealField, G: RealField) -> RealField:
    """Periodic convolution via the spectral product rule."""
    if H.grid != G.grid:
        raise ValueError("convolution operands must share one grid")
    g = H.grid
    FH = forward_transform(H)
    FG = forward_transform(G)
    coeffs = _TWO_PI ** (g.d / 2.0) * FH.coeffs * FG.coeffs
    return inverse_transform(SpectralField(g, coeffs))


def convolve_direct(H: RealField, G: RealField) -> RealField:
    """Brute-force periodic convolution h^d sum_y H(x - y) G(y).

    Quadratic in the number of lattice points; grids above
    ``DIRECT_CONV_MAX_POINTS`` total points are refused.
    """
    if H.grid != G.grid:
        raise ValueError("convolution operands must share one grid")
    g = H.grid
    if g.npoints > DIRECT_CONV_MAX_POINTS:
        raise GridTooLarge(
            f"direct convolution on {g.npoints} points exceeds the "
            f"{DIRECT_CONV_MAX_POINTS}-point guard; use convolve()"
        )
    # Reindex H so that displacement x_j - x_j' maps to lattice index
    # (j - j') mod n on every axis: H_disp[w] = H_periodic(w * h).
    h_disp = np.fft.ifftshift(H.reshaped())
    out = _kernels.circular_convolve(h_disp, G.reshaped())
    return RealField(g, g.h**g.d * out.reshape(-1))
