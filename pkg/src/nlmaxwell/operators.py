"""The z-reduced gradient/curl operators, the 6x6 operator L and its symbol.

With the Fourier convention of :mod:`nlmaxwell.grid` (d/dx_j -> i xi_j) the
symbol of L is

    [ xi2^2+k^2   -xi1 xi2      0         0          0       i k xi1 ]
    [ -xi1 xi2    xi1^2+k^2     0         0          0       i k xi2 ]
    [    0           0        |xi|^2   i k xi1    i k xi2       0    ]
    [    0           0       -i k xi1  xi2^2+k^2  -xi1 xi2      0    ]
    [    0           0       -i k xi2  -xi1 xi2   xi1^2+k^2     0    ]
    [ -i k xi1   -i k xi2       0         0          0        |xi|^2 ]

Its kernel at every xi is spanned by the symbols of the gradient-type fields
grad_circ(alpha, 0) and grad_circ(0, alpha~); on the orthogonal complement
it acts as |xi|^2 + k^2.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Field6, GridSpec, irfft2, rfft2


def _check_k(k: float) -> float:
    k = float(k)
    if k == 0.0 or not np.isfinite(k):
        raise ValueError("wave number k must be nonzero (k != 0 is required for the operator L)")
    return k


def symbol_entries(xi1, xi2, k: float) -> np.ndarray:
    """Symbol L_hat(xi) for arrays of frequencies, shape broadcast(xi1, xi2) + (6, 6)."""
    k = _check_k(k)
    xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, float), np.asarray(xi2, float))
    m = np.zeros(xi1.shape + (6, 6), dtype=complex)
    a, b = xi1, xi2
    s = a * a + b * b
    blk = np.empty(xi1.shape + (2, 2))
    blk[..., 0, 0] = b * b + k * k
    blk[..., 0, 1] = -a * b
    blk[..., 1, 0] = -a * b
    blk[..., 1, 1] = a * a + k * k
    m[..., 0:2, 0:2] = blk
    m[..., 3:5, 3:5] = blk
    m[..., 0, 5] = 1j * k * a
    m[..., 1, 5] = 1j * k * b
    m[..., 5, 0] = -1j * k * a
    m[..., 5, 1] = -1j * k * b
    m[..., 2, 3] = 1j * k * a
    m[..., 2, 4] = 1j * k * b
    m[..., 3, 2] = -1j * k * a
    m[..., 4, 2] = -1j * k * b
    m[..., 2, 2] = s
    m[..., 5, 5] = s
    return m


@dataclass(frozen=True)
class SymbolMatrix:
    xi: tuple[float, float]
    k: float
    entries: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def characteristic(self, lam: float) -> complex:
        """det(L_hat(xi) - lam I)."""
        return complex(np.linalg.det(self.entries - lam * np.eye(6)))

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tol)


@dataclass(frozen=True)
class ProjectorPair:
    p_kernel: np.ndarray
    p_range: np.ndarray


def assemble_symbol(xi, k: float) -> SymbolMatrix:
    xi = (float(xi[0]), float(xi[1]))
    return SymbolMatrix(xi, _check_k(k), symbol_entries(xi[0], xi[1], k))


def kernel_basis(xi, k: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of ker L_hat(xi): symbols of grad_circ(alpha, 0) and grad_circ(0, alpha~)."""
    k = _check_k(k)
    a, b = float(xi[0]), float(xi[1])
    s = np.sqrt(a * a + b * b + k * k)
    w1 = np.array([1j * a, 1j * b, 0, 0, 0, -k], dtype=complex) / s
    w2 = np.array([0, 0, k, 1j * a, 1j * b, 0], dtype=complex) / s
    return w1, w2


def projectors(xi, k: float) -> ProjectorPair:
    w1, w2 = kernel_basis(xi, k)
    pk = np.outer(w1, w1.conj()) + np.outer(w2, w2.conj())
    return ProjectorPair(pk, np.eye(6) - pk)


class SpectralOperators:
    """Frequency-wise operators on the rfft half lattice of a grid, for a fixed k.

    All ``*_hat`` methods act on arrays of shape (6, n, n//2+1) (or (n, n//2+1)
    for scalars) as returned by :func:`nlmaxwell.grid.rfft2`.
    """

    def __init__(self, grid: GridSpec, k: float):
        self.grid = grid
        self.k = k = _check_k(k)
        kx, ky = grid.half_wavenumbers
        self.kx = np.broadcast_to(kx, (grid.n_points, grid.n_points // 2 + 1)).copy()
        self.ky = np.broadcast_to(ky, self.kx.shape).copy()
        self.ksq = self.kx**2 + self.ky**2
        self.lam = self.ksq + k * k  # nonzero eigenvalue of the symbol
        s = np.sqrt(self.lam)
        z = np.zeros_like(s)
        self._w1 = np.stack([1j * self.kx / s, 1j * self.ky / s, z, z, z, -k / s + z])
        self._w2 = np.stack([z, z, k / s + z, 1j * self.kx / s, 1j * self.ky / s, z])
        self._w1c = self._w1.conj()
        self._w2c = self._w2.conj()
        self.weights = grid.half_weights

    # transforms
    def hat(self, data: np.ndarray) -> np.ndarray:
        return rfft2(data)

    def real(self, hat: np.ndarray) -> np.ndarray:
        return irfft2(hat, self.grid.n_points)

    # inner products
    def inner_hat(self, a: np.ndarray, b: np.ndarray) -> float:
        """<a, b>_2 of the real fields with half-lattice coefficients a, b."""
        return float(np.sum(self.weights * (a.real * b.real + a.imag * b.imag)) * self.grid.cell_area)

    def norm_hat(self, a: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner_hat(a, a), 0.0)))

    def h_inner_hat(self, a: np.ndarray, b: np.ndarray) -> float:
        """sum_xi (|xi|^2 + k^2) <a(xi), b(xi)>; the norm of the range space."""
        return float(
            np.sum(self.weights * self.lam * (a.real * b.real + a.imag * b.imag)) * self.grid.cell_area
        )

    # projections
    def kernel_coords(self, hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return np.sum(self._w1c * hat, axis=0), np.sum(self._w2c * hat, axis=0)

    def from_kernel_coords(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._w1 * a + self._w2 * b

    def kernel_hat(self, hat: np.ndarray) -> np.ndarray:
        return self.from_kernel_coords(*self.kernel_coords(hat))

    def range_hat(self, hat: np.ndarray) -> np.ndarray:
        return hat - self.kernel_hat(hat)

    # differential operators
    def apply_L_hat(self, u: np.ndarray) -> np.ndarray:
        k, a, b = self.k, self.kx, self.ky
        ik = 1j * k
        out = np.empty_like(u, dtype=complex)
        out[0] = (b * b + k * k) * u[0] - a * b * u[1] + ik * a * u[5]
        out[1] = -a * b * u[0] + (a * a + k * k) * u[1] + ik * b * u[5]
        out[2] = self.ksq * u[2] + ik * a * u[3] + ik * b * u[4]
        out[3] = -ik * a * u[2] + (b * b + k * k) * u[3] - a * b * u[4]
        out[4] = -ik * b * u[2] - a * b * u[3] + (a * a + k * k) * u[4]
        out[5] = -ik * a * u[0] - ik * b * u[1] + self.ksq * u[5]
        return out

    def curl_hat(self, u: np.ndarray) -> np.ndarray:
        k, ia, ib = self.k, 1j * self.kx, 1j * self.ky
        out = np.empty_like(u, dtype=complex)
        out[0] = ib * u[2] - k * u[4]
        out[1] = k * u[3] - ia * u[2]
        out[2] = ia * u[1] - ib * u[0]
        out[3] = ib * u[5] + k * u[1]
        out[4] = -k * u[0] - ia * u[5]
        out[5] = ia * u[4] - ib * u[3]
        return out

    def grad_hat(self, alpha: np.ndarray, alpha_t: np.ndarray) -> np.ndarray:
        ia, ib, k = 1j * self.kx, 1j * self.ky, self.k
        return np.stack([ia * alpha, ib * alpha, k * alpha_t + 0j, ia * alpha_t, ib * alpha_t, -k * alpha + 0j])

    def divergence_hat(self, u: np.ndarray) -> np.ndarray:
        """The two constraints d1 u1 + d2 u2 + k u~3 and d1 u~1 + d2 u~2 - k u3 defining the range space."""
        ia, ib, k = 1j * self.kx, 1j * self.ky, self.k
        return np.stack([ia * u[0] + ib * u[1] + k * u[5], ia * u[3] + ib * u[4] - k * u[2]])

    def laplace_shift_hat(self, u: np.ndarray) -> np.ndarray:
        """Componentwise (-Delta + k^2)."""
        return self.lam * u


@lru_cache(maxsize=16)
def operators_for(grid: GridSpec, k: float) -> SpectralOperators:
    return SpectralOperators(grid, k)


def _ops(field: Field6, k: float) -> SpectralOperators:
    if not np.all(np.isfinite(field.data)):
        raise ValueError("field contains non-finite values")
    return operators_for(field.grid, float(k))


def apply_grad_circ(alpha: np.ndarray, alpha_tilde: np.ndarray, k: float, grid: GridSpec) -> Field6:
    """grad_circ(alpha, alpha~) = (dx a, dy a, k a~, dx a~, dy a~, -k a)."""
    alpha = np.asarray(alpha, float)
    alpha_tilde = np.asarray(alpha_tilde, float)
    shape = (grid.n_points, grid.n_points)
    if alpha.shape != shape or alpha_tilde.shape != shape:
        raise ValueError(f"grid mismatch: scalar fields must have shape {shape}")
    ops = operators_for(grid, float(k))
    return Field6(grid, ops.real(ops.grad_hat(ops.hat(alpha), ops.hat(alpha_tilde))))


def apply_curl_circ(u: Field6, k: float) -> Field6:
    ops = _ops(u, k)
    return Field6(u.grid, ops.real(ops.curl_hat(ops.hat(u.data))))


def apply_L(u: Field6, k: float) -> Field6:
    ops = _ops(u, k)
    return Field6(u.grid, ops.real(ops.apply_L_hat(ops.hat(u.data))))


def divergence_constraints(u: Field6, k: float) -> np.ndarray:
    ops = _ops(u, k)
    return ops.real(ops.divergence_hat(ops.hat(u.data)))


def helmholtz_decompose(u: Field6, k: float) -> tuple[Field6, Field6]:
    """Split u = v + w with v in the range of L and w in its kernel (L2-orthogonal)."""
    ops = _ops(u, k)
    uh = ops.hat(u.data)
    wh = ops.kernel_hat(uh)
    return Field6(u.grid, ops.real(uh - wh)), Field6(u.grid, ops.real(wh))


def v_norm_squared(v: Field6, k: float, tol: float = 1e-8) -> float:
    """||v||^2 = sum |grad v_i|^2 + k^2 |v_i|^2 of the range part of v.

    Warns when v carries a kernel component above ``tol`` (relative L2);
    the norm of the projected part is returned either way.
    """
    ops = _ops(v, k)
    vh = ops.hat(v.data)
    wh = ops.kernel_hat(vh)
    total = ops.norm_hat(vh)
    if total > 0 and ops.norm_hat(wh) > tol * total:
        warnings.warn(
            f"v_norm_squared: input has kernel component {ops.norm_hat(wh) / total:.2e} (relative)",
            stacklevel=2,
        )
    rh = vh - wh
    return ops.h_inner_hat(rh, rh)


def b_L(u: Field6, k: float) -> float:
    """Quadratic form b_L(u, u) = |curl_circ u|_2^2."""
    c = apply_curl_circ(u, k)
    return c.inner(c)


def random_smooth_field(grid: GridSpec, rng: np.random.Generator, components: int = 6,
                        length: float | None = None) -> np.ndarray:
    """Random real samples with Gaussian spectral decay (correlation length ``length``)."""
    length = grid.side_length / 16 if length is None else length
    kx, ky = grid.half_wavenumbers
    damp = np.exp(-0.5 * (kx**2 + ky**2) * length**2)
    shape = (components, grid.n_points, grid.n_points // 2 + 1)
    coef = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * damp
    return irfft2(coef, grid.n_points)


def operator_invariants(grid: GridSpec, k: float, n_fields: int = 5, seed: int = 0) -> dict:
    """Maximum deviations of the identities of L on the lattice and on random smooth fields.

    Returns name -> max deviation; every entry is relative and should be
    at roundoff level (below 1e-10).
    """
    k = _check_k(k)
    kk = grid.wavenumbers
    X1, X2 = np.meshgrid(kk, kk, indexing="ij")
    m = symbol_entries(X1, X2, k)
    lam = X1**2 + X2**2 + k * k
    out = {}
    out["symbol_hermitian"] = float(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))) / lam[..., None, None]))
    ev = np.linalg.eigvalsh(m)
    expected = np.concatenate([np.zeros(lam.shape + (2,)), np.repeat(lam[..., None], 4, axis=-1)], axis=-1)
    out["symbol_eigenvalues"] = float(np.max(np.abs(ev - expected) / lam[..., None]))
    s = np.sqrt(lam)
    z = np.zeros_like(s)
    w1 = np.stack([1j * X1 / s, 1j * X2 / s, z, z, z, -k / s + z], axis=-1)
    w2 = np.stack([z, z, k / s + z, 1j * X1 / s, 1j * X2 / s, z], axis=-1)
    pk = w1[..., :, None] * w1.conj()[..., None, :] + w2[..., :, None] * w2.conj()[..., None, :]
    pr = np.eye(6) - pk
    out["projector_idempotent"] = float(max(np.max(np.abs(pk @ pk - pk)), np.max(np.abs(pr @ pr - pr))))
    out["projector_orthogonal"] = float(np.max(np.abs(pk @ pr)))
    out["symbol_kernel"] = float(np.max(np.abs(m @ pk) / lam[..., None, None]))
    out["symbol_range"] = float(np.max(np.abs(m @ pr - m) / lam[..., None, None]))

    ops = operators_for(grid, k)
    rng = np.random.default_rng(seed)
    dev = {"curl_grad": 0.0, "L_curl_curl": 0.0, "v_w_orthogonal": 0.0, "range_divergence": 0.0}
    for _ in range(n_fields):
        a = random_smooth_field(grid, rng, 2)
        ah = ops.hat(a)
        g = ops.grad_hat(ah[0], ah[1])
        dev["curl_grad"] = max(dev["curl_grad"], ops.norm_hat(ops.curl_hat(g)) / ops.norm_hat(ah))
        uh = ops.hat(random_smooth_field(grid, rng))
        un = ops.norm_hat(uh)
        diff = ops.apply_L_hat(uh) - ops.curl_hat(ops.curl_hat(uh))
        dev["L_curl_curl"] = max(dev["L_curl_curl"], ops.norm_hat(diff) / ops.norm_hat(ops.apply_L_hat(uh)))
        wh = ops.kernel_hat(uh)
        vh = uh - wh
        dev["v_w_orthogonal"] = max(dev["v_w_orthogonal"], abs(ops.inner_hat(vh, wh)) / un**2)
        dv = ops.divergence_hat(vh)
        scale = ops.norm_hat(np.concatenate([1j * ops.kx * vh[[0, 3]], 1j * ops.ky * vh[[1, 4]],
                                             k * vh[[2, 5]]]))
        dev["range_divergence"] = max(dev["range_divergence"], ops.norm_hat(dv) / scale)
    out.update(dev)
    return out
