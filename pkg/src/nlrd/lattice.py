"""Periodic lattices, sampled fields, unitary Fourier transforms, norms.

The computational domain is the periodic box [-L, L)^d sampled at n points
per axis:

    x_j = -L + j h,          h = 2 L / n,        j = 0 .. n-1,
    p_k = (pi / L) k,        k = -n/2 .. n/2 - 1,

with frequency spacing dp = pi / L, so h * dp = 2 pi / n.  n must be even.

Transforms use the unitary convention

    F(p_k) = (2 pi)^(-d/2) h^d  sum_j f(x_j) exp(-i p_k . x_j)
    f(x_j) = (2 pi)^(-d/2) dp^d sum_k F(p_k) exp(+i p_k . x_j)

under which the discrete Parseval identity

    h^d sum_j |f(x_j)|^2 = dp^d sum_k |F(p_k)|^2

holds exactly.  Spectral coefficients are stored in numpy FFT order on a
d-dimensional array; physical samples are stored flat (row-major over axes).
The index shuffles below (ifftshift before the forward FFT, fftshift after
the inverse) realign numpy's j = 0..n-1 / k = 0..n-1 layout with the centred
x_j and p_k lattices; they are exact for even n.

H^4 norms are computed spectrally with the weight 1 + |p|^8.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

_TWO_PI = 2.0 * np.pi

#: relative tolerance for the conjugate-symmetry check in inverse_transform
SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on [-L, L)^d with n points per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self) -> None:
        if not isinstance(self.d, int) or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if not isinstance(self.n, int) or self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"points per axis must be even and >= 2, got {self.n}")
        if not (self.L > 0.0 and np.isfinite(self.L)):
            raise ValueError(f"box half-width must be positive and finite, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        """Lattice spacing 2L / n."""
        return 2.0 * self.L / self.n

    @property
    def dp(self) -> float:
        """Frequency spacing pi / L."""
        return np.pi / self.L

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def npoints(self) -> int:
        return self.n**self.d

    def axis_coords(self) -> np.ndarray:
        """Physical coordinates -L + j h along one axis."""
        return -self.L + self.h * np.arange(self.n)

    def axis_wavenumbers(self) -> np.ndarray:
        """Wavenumbers p_k = dp * k along one axis, in FFT order."""
        return self.dp * self.n * np.fft.fftfreq(self.n)

    def coordinate_arrays(self) -> tuple[np.ndarray, ...]:
        """d coordinate arrays of shape ``grid.shape`` (sparse broadcast)."""
        x = self.axis_coords()
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij", sparse=True))


@functools.lru_cache(maxsize=16)
def squared_wavenumber(grid: Grid) -> np.ndarray:
    """|p|^2 on the frequency lattice, FFT order, shape ``grid.shape``."""
    q = grid.axis_wavenumbers() ** 2
    out = np.zeros(grid.shape)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.n
        out = out + q.reshape(shape)
    return out


@functools.lru_cache(maxsize=16)
def h4_weight(grid: Grid) -> np.ndarray:
    """Spectral H^4 weight 1 + |p|^8, FFT order."""
    q2 = squared_wavenumber(grid)
    return 1.0 + q2**4


@dataclass(frozen=True)
class RealField:
    """Real scalar field sampled on a grid; values flat, row-major."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if vals.size != self.grid.npoints:
            raise ValueError(
                f"expected {self.grid.npoints} samples, got {vals.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "RealField":
        return cls(grid, np.zeros(grid.npoints))

    def reshaped(self) -> np.ndarray:
        """Values as a d-dimensional array (view when possible)."""
        return self.values.reshape(self.grid.shape)


@dataclass(frozen=True)
class SpectralField:
    """Complex spectral coefficients in FFT order, shape ``grid.shape``."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(
                f"expected coefficient shape {self.grid.shape}, got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("spectral coefficients must be finite")
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class VectorField:
    """Tuple of real fields sharing one grid (one per system component)."""

    components: tuple[RealField, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        g0 = comps[0].grid
        for c in comps[1:]:
            if c.grid != g0:
                raise ValueError("all components must share one grid")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid: Grid, n_components: int) -> "VectorField":
        return cls(tuple(RealField.zeros(grid) for _ in range(n_components)))

    @classmethod
    def from_stack(cls, grid: Grid, stacked: np.ndarray) -> "VectorField":
        """Build from a (npoints, N) array of per-component samples."""
        return cls(tuple(RealField(grid, stacked[:, m]) for m in range(stacked.shape[1])))

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @property
    def n_components(self) -> int:
        return len(self.components)

    def stacked(self) -> np.ndarray:
        """(npoints, N) array of samples."""
        return np.stack([c.values for c in self.components], axis=1)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def forward_coeffs(grid: Grid, flat_values: np.ndarray) -> np.ndarray:
    """Forward transform of a flat sample buffer to FFT-order coefficients."""
    scale = (_TWO_PI) ** (-grid.d / 2.0) * grid.h**grid.d
    return scale * np.fft.fftn(np.fft.ifftshift(flat_values.reshape(grid.shape)))


def inverse_values(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Inverse transform of FFT-order coefficients to a flat sample buffer.

    Takes the real part without checking conjugate symmetry; use
    :func:`inverse_transform` when the input is untrusted.
    """
    scale = (_TWO_PI) ** (-grid.d / 2.0) * grid.dp**grid.d * grid.npoints
    return (scale * np.fft.fftshift(np.fft.ifftn(coeffs)).real).reshape(-1)


def forward_transform(f: RealField) -> SpectralField:
    """Unitary forward transform of a sampled field."""
    return SpectralField(f.grid, forward_coeffs(f.grid, f.values))


def inverse_transform(F: SpectralField, check_symmetry: bool = True) -> RealField:
    """Unitary inverse transform back to real samples.

    Rejects coefficient arrays that are not conjugate-symmetric (relative
    asymmetry above SYMMETRY_RTOL), since those do not describe a real field.
    """
    g = F.grid
    c = F.coeffs
    if check_symmetry:
        scale = np.max(np.abs(c))
        if scale > 0.0:
            asym = np.max(np.abs(c - np.conj(_reflect_modes(c))))
            if asym > SYMMETRY_RTOL * scale:
                raise ValueError(
                    "coefficients are not conjugate-symmetric "
                    f"(relative asymmetry {asym / scale:.3e})"
                )
    return RealField(g, inverse_values(g, c))


def _reflect_modes(c: np.ndarray) -> np.ndarray:
    """Map coefficients C[k] -> C[-k] (indices mod n on every axis)."""
    out = c
    for axis in range(c.ndim):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def norm_l1(f: RealField) -> float:
    """Discrete L^1 norm h^d sum |f|."""
    return float(f.grid.h**f.grid.d * np.sum(np.abs(f.values)))


def norm_l2(f: RealField) -> float:
    """Discrete L^2 norm (h^d sum f^2)^(1/2)."""
    return float(np.sqrt(f.grid.h**f.grid.d * np.sum(f.values**2)))


def norm_linf(f: RealField) -> float:
    """Max-abs over lattice points."""
    return float(np.max(np.abs(f.values)))


def h4_norm_sq_coeffs(grid: Grid, coeffs: np.ndarray) -> float:
    """Squared H^4 norm dp^d sum (1 + |p|^8) |F|^2 from FFT-order coeffs."""
    w = h4_weight(grid)
    return float(grid.dp**grid.d * np.sum(w * (coeffs.real**2 + coeffs.imag**2)))


def norm_h4(f: RealField) -> float:
    """Sobolev H^4 norm, computed spectrally."""
    F = forward_transform(f)
    return float(np.sqrt(h4_norm_sq_coeffs(f.grid, F.coeffs)))


def norm_l2_vector(u: VectorField) -> float:
    """Root-sum-square of component L^2 norms."""
    return float(np.sqrt(sum(norm_l2(c) ** 2 for c in u.components)))


def norm_h4_vector(u: VectorField) -> float:
    """Root-sum-square of component H^4 norms."""
    return float(np.sqrt(sum(norm_h4(c) ** 2 for c in u.components)))
