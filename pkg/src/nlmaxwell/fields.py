"""Physical fields of the travelling wave E = U cos(kz + wt) + U~ sin(kz + wt).

With (C, C~) = curl_circ(U, U~) one has curl E = C cos + C~ sin, so Faraday's
law gives B = -(1/w)(C sin - C~ cos).  H = B (mu = 1) and
D = (V + Gamma |u|^(p-2)) E / w^2, i.e. eps = V / w^2 and
chi = Gamma |u|^(p-2) / w^2 with |u|^2 = 2 <|E|^2>.  With this normalisation
Ampere's law curl H = dD/dt holds exactly when L u = V u + f(x, u).

x, y derivatives are spectral; z and t enter only through theta = kz + wt and
are differentiated analytically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field6, irfft2, rfft2
from .material import MaterialParams
from .operators import operators_for


@dataclass
class FieldSnapshot:
    """Fields at time t on the grid times z_samples; arrays are (nz, 3, n, n).

    ``*_theta`` hold the analytic derivatives with respect to theta = kz + wt.
    """

    t: float
    z_samples: np.ndarray
    k: float
    omega: float
    E: np.ndarray
    B: np.ndarray
    D: np.ndarray
    H: np.ndarray
    E_theta: np.ndarray
    B_theta: np.ndarray
    D_theta: np.ndarray
    energy_density: np.ndarray  # (nz, n, n)
    grid: object = None


def _profiles(u: Field6, mat: MaterialParams):
    """(U, U~, C, C~, susceptibility factor (V + Gamma |u|^(p-2)) / w^2)."""
    ops = operators_for(mat.grid, mat.k)
    c = ops.real(ops.curl_hat(ops.hat(u.data)))
    s2 = np.sum(u.data**2, axis=0)
    eps = (mat.V + mat.nonlinearity.coefficient(mat.Gamma, s2)) / mat.omega**2
    return u.data[:3], u.data[3:], c[:3], c[3:], eps


def reconstruct(u: Field6, mat: MaterialParams, t: float, z_samples) -> FieldSnapshot:
    z = np.atleast_1d(np.asarray(z_samples, float))
    U, Ut, C, Ct, eps = _profiles(u, mat)
    w = mat.omega
    theta = (mat.k * z + w * t)[:, None, None, None]
    cs, sn = np.cos(theta), np.sin(theta)
    E = U * cs + Ut * sn
    E_th = -U * sn + Ut * cs
    B = -(C * sn - Ct * cs) / w
    B_th = -(C * cs + Ct * sn) / w
    D = eps * E
    D_th = eps * E_th
    dens = 0.5 * (np.sum(E * D, axis=1) + np.sum(B * B, axis=1))
    return FieldSnapshot(t, z, mat.k, w, E, B, D, B.copy(), E_th, B_th, D_th, dens, mat.grid)


def total_energy(u: Field6, mat: MaterialParams, t: float, a: float = 0.0, n_z: int = 16) -> float:
    """L(t): integral of (<E, D> + |B|^2) / 2 over the cross-section times [a, a + 1].

    The z integrand is a trigonometric polynomial of degree two in theta,
    integrated by Gauss-Legendre with ``n_z`` points.
    """
    x, wts = np.polynomial.legendre.leggauss(n_z)
    z = a + 0.5 * (x + 1)
    snap = reconstruct(u, mat, t, z)
    per_z = np.array([mat.grid.integrate(d) for d in snap.energy_density])
    return float(0.5 * np.sum(wts * per_z))


def energy_bound(u: Field6, mat: MaterialParams) -> float:
    """(1 + 1/w^2) b_L(u, u) / 2."""
    ops = operators_for(mat.grid, mat.k)
    v = ops.range_hat(ops.hat(u.data))
    return 0.5 * (1 + 1 / mat.omega**2) * ops.h_inner_hat(v, v)


def _curl3(F, F_th, grid, k):
    """Curl of a field sampled on grid x z with d/dz = k d/dtheta."""
    kx, ky = grid.half_wavenumbers
    n = grid.n_points
    Fh = rfft2(F)
    dx = irfft2(1j * kx * Fh, n)
    dy = irfft2(1j * ky * Fh, n)
    dz = k * F_th
    return np.stack([
        dy[:, 2] - dz[:, 1],
        dz[:, 0] - dx[:, 2],
        dx[:, 1] - dy[:, 0],
    ], axis=1), (dx[:, 0], dy[:, 1], dz[:, 2])


def _rel(num, den):
    num = float(np.sqrt(np.sum(num**2)))
    den = float(den)
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return num / den


def maxwell_residuals(snapshots) -> dict:
    """Relative residuals of Faraday, Ampere and the two divergence laws.

    Accepts one snapshot or a sequence; returns the maximum over all of them.
    """
    if isinstance(snapshots, FieldSnapshot):
        snapshots = [snapshots]
    out = {"faraday": 0.0, "ampere": 0.0, "div_B": 0.0, "div_D": 0.0}
    for s in snapshots:
        g, k, w = s.grid, s.k, s.omega
        curlE, _ = _curl3(s.E, s.E_theta, g, k)
        curlH, _ = _curl3(s.H, s.B_theta, g, k)
        _, (b1, b2, b3) = _curl3(s.B, s.B_theta, g, k)
        _, (d1, d2, d3) = _curl3(s.D, s.D_theta, g, k)
        dtB = w * s.B_theta
        dtD = w * s.D_theta

        def nrm(a):
            return np.sqrt(np.sum(a**2))

        vals = {
            "faraday": _rel(curlE + dtB, nrm(curlE)),
            "ampere": _rel(curlH - dtD, nrm(dtD)),
            "div_B": _rel(b1 + b2 + b3, nrm(b1) + nrm(b2) + nrm(b3)),
            "div_D": _rel(d1 + d2 + d3, nrm(d1) + nrm(d2) + nrm(d3)),
        }
        for key, val in vals.items():
            out[key] = max(out[key], val)
    return out
