"""Periodic grid bookkeeping, transforms and dealiased products.

The plane is truncated to the torus [-L/2, L/2)^2 sampled on an n x n
uniform grid.  Fields carrying the profile pair u = (U, U~) are stored as
real arrays of shape (6, n, n); axis 1 is x, axis 2 is y.

Fourier convention: u_hat(xi) = sum_x u(x) exp(-i xi.x) / n (numpy "ortho"
normalisation), so a derivative d/dx_j is multiplication by i xi_j.  For
differentiation the Nyquist wavenumber is set to zero: odd derivatives of
the Nyquist mode vanish on the grid, and using the same convention in every
operator keeps identities such as L = curl o curl exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "Field6",
    "SpectralField6",
    "forward_transform",
    "inverse_transform",
    "dealiased_product",
    "Dealiaser",
    "spectral_derivative",
    "set_workers",
    "resample",
]

COMPONENTS = ("U1", "U2", "U3", "Ut1", "Ut2", "Ut3")

_WORKERS = 1


def set_workers(n: int) -> None:
    """Number of threads used by the FFT backend (results are deterministic per setting)."""
    global _WORKERS
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _WORKERS = int(n)


def rfft2(a: np.ndarray) -> np.ndarray:
    return sfft.rfft2(a, axes=(-2, -1), norm="ortho", workers=_WORKERS)


def irfft2(a: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfft2(a, s=(n, n), axes=(-2, -1), norm="ortho", workers=_WORKERS)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-side_length/2, side_length/2)^2."""

    side_length: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.side_length) or self.side_length <= 0:
            raise ValueError(f"side_length must be positive, got {self.side_length}")
        if int(self.n_points) != self.n_points or self.n_points < 8 or self.n_points % 2:
            raise ValueError(f"n_points must be an even integer >= 8, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "side_length", float(self.side_length))

    @property
    def dx(self) -> float:
        return self.side_length / self.n_points

    @property
    def cell_area(self) -> float:
        return self.dx**2

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.side_length + self.dx * np.arange(self.n_points)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular lattice frequencies 2*pi*m/L in FFT order (Nyquist = -pi/dx)."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @cached_property
    def diff_wavenumbers(self) -> np.ndarray:
        """Wavenumbers used for differentiation: as ``wavenumbers`` with Nyquist zeroed."""
        kw = self.wavenumbers.copy()
        kw[self.n_points // 2] = 0.0
        return kw

    def frequency(self, i: int, j: int) -> np.ndarray:
        """Frequency vector xi of the full-FFT index (i, j)."""
        kw = self.wavenumbers
        return np.array([kw[i % self.n_points], kw[j % self.n_points]])

    @cached_property
    def half_wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Differentiation wavenumbers on the rfft half lattice, shaped (n,1) and (1,n/2+1)."""
        n = self.n_points
        kx = self.diff_wavenumbers[:, None]
        ky = np.abs(self.diff_wavenumbers[: n // 2 + 1])[None, :]
        ky[0, n // 2] = 0.0
        return kx, ky

    @cached_property
    def half_weights(self) -> np.ndarray:
        """Multiplicity of each rfft coefficient in the full spectrum."""
        n = self.n_points
        w = np.full((1, n // 2 + 1), 2.0)
        w[0, 0] = 1.0
        w[0, n // 2] = 1.0
        return w

    def integrate(self, values: np.ndarray) -> float:
        """Rectangle-rule integral over the torus (pairwise summation)."""
        return float(np.sum(values) * self.cell_area)

    def shape(self, components: int = 6) -> tuple[int, int, int]:
        return (components, self.n_points, self.n_points)


@dataclass
class Field6:
    """Real 6-component field (U1, U2, U3, Ut1, Ut2, Ut3) sampled on a grid."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape():
            raise ValueError(f"field data shape {self.data.shape} does not match grid {self.grid.shape()}")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field6":
        return cls(grid, np.zeros(grid.shape()))

    @property
    def U(self) -> np.ndarray:
        return self.data[:3]

    @property
    def U_tilde(self) -> np.ndarray:
        return self.data[3:]

    def _check(self, other: "Field6") -> None:
        if other.grid != self.grid:
            raise ValueError("grid mismatch between fields")

    def __add__(self, other: "Field6") -> "Field6":
        self._check(other)
        return Field6(self.grid, self.data + other.data)

    def __sub__(self, other: "Field6") -> "Field6":
        self._check(other)
        return Field6(self.grid, self.data - other.data)

    def __mul__(self, s: float) -> "Field6":
        return Field6(self.grid, self.data * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Field6":
        return Field6(self.grid, -self.data)

    def inner(self, other: "Field6") -> float:
        """Grid L2 inner product <self, other>_2."""
        self._check(other)
        return self.grid.integrate(np.sum(self.data * other.data, axis=0))

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.data**2, axis=0))

    def copy(self) -> "Field6":
        return Field6(self.grid, self.data.copy())


@dataclass
class SpectralField6:
    """Full-lattice Fourier coefficients of a 6-component field, shape (6, n, n)."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def norm(self) -> float:
        """Coefficient-space norm, weighted so that it equals the grid L2 norm of the real field."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * self.grid.cell_area))

    def hermitian_defect(self) -> float:
        """max |c(-xi) - conj(c(xi))|."""
        c = self.coeffs
        mirrored = np.roll(np.flip(c, axis=(-2, -1)), shift=1, axis=(-2, -1))
        return float(np.max(np.abs(mirrored - np.conj(c)))) if c.size else 0.0


def forward_transform(f: Field6) -> SpectralField6:
    """Unitary 2D DFT of every component."""
    bad = ~np.isfinite(f.data)
    if bad.any():
        c, i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"non-finite value {f.data[c, i, j]!r} in component {COMPONENTS[c]} at node ({i}, {j})"
        )
    coeffs = sfft.fft2(f.data, axes=(-2, -1), norm="ortho", workers=_WORKERS)
    return SpectralField6(f.grid, coeffs)


def inverse_transform(g: SpectralField6, tol: float = 1e-9) -> Field6:
    """Inverse of :func:`forward_transform`; rejects coefficients that are not Hermitian."""
    scale = max(float(np.max(np.abs(g.coeffs))), 1.0) if g.coeffs.size else 1.0
    defect = g.hermitian_defect()
    if defect > tol * scale:
        raise ValueError(f"coefficients are not Hermitian-symmetric: max asymmetry {defect:.3e}")
    data = sfft.ifft2(g.coeffs, axes=(-2, -1), norm="ortho", workers=_WORKERS).real
    return Field6(g.grid, data)


def spectral_derivative(values: np.ndarray, grid: GridSpec, axis: int, order: int = 1) -> np.ndarray:
    """d^order/dx_axis of real periodic samples (last two axes are x, y)."""
    kx, ky = grid.half_wavenumbers
    if order == 2:
        # second derivatives keep the Nyquist mode
        n = grid.n_points
        kx = grid.wavenumbers[:, None]
        ky = np.abs(grid.wavenumbers[: n // 2 + 1])[None, :]
    mult = (1j * (kx if axis == 0 else ky)) ** order
    return irfft2(rfft2(values) * mult, grid.n_points)


def padded_size(n: int, factor: float) -> int:
    m = int(np.ceil(factor * n))
    return m + (m % 2)


class Dealiaser:
    """Zero-padding interpolation onto a finer grid and truncation back.

    ``to_padded`` drops the Nyquist row/column of the base spectrum, and
    ``truncate`` is its exact adjoint (up to the cell-area ratio), so the
    padded-grid quadrature of a pointwise density has the truncated
    pointwise derivative as its exact L2 gradient.
    """

    def __init__(self, grid: GridSpec, factor: float = 2.0):
        if factor < 1.5:
            raise ValueError("dealiasing factor must be >= 3/2")
        self.grid = grid
        self.factor = float(factor)
        self.m = padded_size(grid.n_points, factor)
        self.padded_grid = GridSpec(grid.side_length, self.m)
        n = grid.n_points
        h = n // 2
        self._rows_base = np.r_[0:h, n - h + 1 : n]
        self._rows_pad = np.r_[0:h, self.m - h + 1 : self.m]
        self._h = h

    def to_padded_hat(self, hat: np.ndarray) -> np.ndarray:
        """Base rfft coefficients -> padded rfft coefficients (value-preserving)."""
        lead = hat.shape[:-2]
        out = np.zeros(lead + (self.m, self.m // 2 + 1), dtype=complex)
        out[..., self._rows_pad, : self._h] = hat[..., self._rows_base, : self._h]
        return out * (self.m / self.grid.n_points)

    def to_padded(self, values: np.ndarray) -> np.ndarray:
        return irfft2(self.to_padded_hat(rfft2(values)), self.m)

    def truncate_hat(self, padded_values: np.ndarray) -> np.ndarray:
        """Padded samples -> base rfft coefficients (band-limited projection)."""
        ph = rfft2(padded_values)
        n = self.grid.n_points
        out = np.zeros(ph.shape[:-2] + (n, n // 2 + 1), dtype=complex)
        out[..., self._rows_base, : self._h] = ph[..., self._rows_pad, : self._h]
        return out * (n / self.m)

    def truncate(self, padded_values: np.ndarray) -> np.ndarray:
        return irfft2(self.truncate_hat(padded_values), self.grid.n_points)


_RULES = {"3/2": 1.5, "2": 2.0}


def _resolve_factor(rule, n_factors: int) -> float:
    if rule in (None, "auto"):
        # products of q band-limited factors are alias-free with padding (q+1)/2
        return max(1.5, (n_factors + 1) / 2)
    if isinstance(rule, str):
        if rule not in _RULES:
            raise ValueError(f"unknown dealiasing rule {rule!r}")
        return _RULES[rule]
    return float(rule)


def _values(obj, grid: GridSpec) -> np.ndarray:
    if isinstance(obj, Field6):
        if obj.grid != grid:
            raise ValueError("grid mismatch in dealiased product")
        return obj.data
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-2:] != (grid.n_points, grid.n_points):
        raise ValueError(f"grid mismatch in dealiased product: shape {arr.shape}")
    return arr


def dealiased_product(f, g, *more, rule="auto"):
    """Pointwise product of band-limited fields evaluated on a padded grid.

    Factors may be :class:`Field6` objects or scalar (n, n) arrays; at most
    one factor may be 6-component.  ``rule`` is "3/2", "2", a numeric
    padding factor, or "auto" (factor (q+1)/2 for q factors, at least 3/2).
    Returns a Field6 if any factor is one, else an (n, n) array.
    """
    factors = (f, g) + more
    grid = next((x.grid for x in factors if isinstance(x, Field6)), None)
    if grid is None:
        raise TypeError("dealiased_product needs at least one Field6 factor to fix the grid")
    vals = [_values(x, grid) for x in factors]
    if sum(v.ndim == 3 for v in vals) > 1:
        raise ValueError("at most one vector-valued factor is supported")
    d = Dealiaser(grid, _resolve_factor(rule, len(vals)))
    prod = d.to_padded(vals[0])
    for v in vals[1:]:
        prod = prod * d.to_padded(v)
    out = d.truncate(prod)
    return Field6(grid, out) if out.ndim == 3 else out


def resample(f: Field6, grid: GridSpec) -> Field6:
    """Transfer a field to another grid.

    Same side length: trigonometric interpolation (spectral zero padding or
    truncation, Nyquist mode dropped).  Same spacing and a larger side:
    the data is centred and extended by zeros, which suits decayed fields.
    """
    old = f.grid
    if grid == old:
        return f.copy()
    if np.isclose(grid.side_length, old.side_length, rtol=1e-14):
        n, m = old.n_points, grid.n_points
        h = min(n, m) // 2
        rows_old = np.r_[0:h, n - h + 1 : n]
        rows_new = np.r_[0:h, m - h + 1 : m]
        src = rfft2(f.data)
        out = np.zeros((6, m, m // 2 + 1), dtype=complex)
        out[:, rows_new, :h] = src[:, rows_old, :h]
        return Field6(grid, irfft2(out * (m / n), m))
    if np.isclose(grid.dx, old.dx, rtol=1e-12) and grid.n_points >= old.n_points:
        off = (grid.n_points - old.n_points) // 2
        data = np.zeros(grid.shape())
        data[:, off : off + old.n_points, off : off + old.n_points] = f.data
        return Field6(grid, data)
    raise ValueError("resample supports equal side lengths or equal spacing with a larger domain")
