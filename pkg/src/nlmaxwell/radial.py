"""Cylindrically symmetric one-profile solutions U = u(r)(-y/r, x/r, 0), U~ = 0.

On such divergence-free fields L acts as -Delta + k^2 componentwise, so the
profile solves

    -u'' - u'/r + u/r^2 + (k^2 - V(r)) u = Gamma(r) |u|^(p-2) u,  u(0) = u(inf) = 0.

The nontrivial solution is located by shooting on the slope u'(0) and then
polished by Newton iteration on a Chebyshev collocation of [-R, R], using
that the equation is invariant under odd extension u(-r) = -u(r).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BarycentricInterpolator

from .grid import Field6, GridSpec


class RadialSolveError(RuntimeError):
    pass


@dataclass
class RadialProblem:
    k: float
    omega: float = 1.0
    V0: float = 0.5
    Gamma0: float = 1.0
    p: float = 4.0
    r_max: Optional[float] = None
    n_r: int = 480  # Chebyshev nodes on [-R, R]; must be even so that r = 0 is not a node
    V: Optional[Callable[[np.ndarray], np.ndarray]] = None
    Gamma: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("wave number k must be nonzero (k != 0)")
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.p <= 2:
            raise ValueError(f"exponent p must be > 2, got {self.p}")
        if self.n_r < 16 or self.n_r % 2:
            raise ValueError("n_r must be even and >= 16")
        if self.V is None and self.V0 >= self.k**2:
            raise ValueError("(V) violated: need max V < k^2")
        if self.r_max is None:
            self.r_max = 25.0 / math.sqrt(self.decay_rate2)
        if self.r_max <= 0:
            raise ValueError("r_max must be > 0")
        r = np.linspace(0, self.r_max, 257)
        if np.max(self.V_of(r)) >= self.k**2:
            raise ValueError("(V) violated: need max V < k^2")
        if np.min(self.Gamma_of(r)) <= 0:
            raise ValueError("Gamma must be positive")

    @property
    def decay_rate2(self) -> float:
        return self.k**2 - self.V0

    def V_of(self, r):
        r = np.asarray(r, float)
        return self.V(r) if self.V is not None else np.full_like(r, self.V0)

    def Gamma_of(self, r):
        r = np.asarray(r, float)
        return self.Gamma(r) if self.Gamma is not None else np.full_like(r, self.Gamma0)

    @property
    def scale(self) -> float:
        """Amplitude scale sqrt((k^2 - V0) / Gamma0) of the nonlinear balance."""
        return (self.decay_rate2 / self.Gamma0) ** (1.0 / (self.p - 2))


def cheb(n: int):
    """Chebyshev points x_j = cos(j pi / n) and the differentiation matrix."""
    j = np.arange(n + 1)
    x = np.cos(np.pi * j / n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


@dataclass
class RadialProfile:
    problem: RadialProblem
    r: np.ndarray  # positive collocation nodes, decreasing
    u: np.ndarray
    slope: float
    residual: float
    newton_iterations: int
    _interp: BarycentricInterpolator = field(repr=False, default=None)
    _dinterp: BarycentricInterpolator = field(repr=False, default=None)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        R = self.problem.r_max
        out = np.zeros_like(r)
        inside = r <= R
        out[inside] = self._interp(r[inside])
        return out

    def derivative(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        out = np.zeros_like(r)
        inside = r <= self.problem.r_max
        out[inside] = self._dinterp(r[inside])
        return out

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.u)))

    def energy(self, n_quad: int = 400) -> float:
        """J of the embedded field on the plane, by Gauss-Legendre in r."""
        prob = self.problem
        x, w = np.polynomial.legendre.leggauss(n_quad)
        R = prob.r_max
        r = 0.5 * R * (x + 1)
        w = 0.5 * R * w
        u = self(r)
        du = self.derivative(r)
        lam = prob.k**2 - prob.V_of(r)
        dens = 0.5 * (du**2 + u**2 / r**2 + lam * u**2) - prob.Gamma_of(r) * np.abs(u) ** prob.p / prob.p
        return float(2 * np.pi * np.sum(w * dens * r))

    def to_csv(self, path, n: int = 1001) -> None:
        r = np.linspace(0, self.problem.r_max, n)
        np.savetxt(path, np.column_stack([r, self(r)]), delimiter=",", header="r,u", comments="", fmt="%.17g")


def _shoot(prob: RadialProblem, c: float, r_end: float):
    """Integrate from r0 with u ~ c r + (lambda c / 8) r^3.  Returns (kind, solution).

    kind is +1 for overshoot (u crosses zero), -1 for undershoot (u' turns
    positive after the first maximum), 0 if neither happens before r_end.
    """
    p = prob.p
    r0 = 1e-6 * prob.r_max
    lam0 = prob.k**2 - float(prob.V_of(np.array([0.0]))[0])
    y0 = [c * r0 + lam0 * c * r0**3 / 8, c + 3 * lam0 * c * r0**2 / 8]

    def rhs(r, y):
        u, du = y
        lam = prob.k**2 - float(prob.V_of(np.array([r]))[0])
        g = float(prob.Gamma_of(np.array([r]))[0])
        return [du, -du / r + u / r**2 + lam * u - g * abs(u) ** (p - 2) * u]

    def cross(r, y):
        return y[0]

    cross.terminal = True
    cross.direction = -1

    def turn(r, y):
        return y[1]

    turn.terminal = False
    turn.direction = 1

    sol = solve_ivp(rhs, (r0, r_end), y0, method="DOP853", rtol=1e-12, atol=1e-14 * max(c, 1e-300),
                    events=(cross, turn), dense_output=True)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _shooting_guess(prob: RadialProblem):
    """Bisection on the initial slope; returns (slope, initial profile on [0, R])."""
    scale = prob.scale
    lam = math.sqrt(prob.decay_rate2)
    R = prob.r_max
    lo = 1e-3 * scale * lam
    if _shoot(prob, lo, R)[0] != -1:
        raise RadialSolveError("no nontrivial radial solution found in bracket: small slopes do not undershoot")
    hi = 2 * lo
    for _ in range(80):
        if _shoot(prob, hi, R)[0] == 1:
            break
        lo, hi = hi, 2 * hi
    else:
        raise RadialSolveError("no nontrivial radial solution found in bracket: no overshoot")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        kind, _ = _shoot(prob, mid, R)
        if kind == 1:
            hi = mid
        else:
            lo = mid
    c = 0.5 * (lo + hi)
    _, sol = _shoot(prob, lo, R)
    # the shot profile is accurate until it leaves the separatrix; cut it at its smallest value
    t = np.linspace(sol.t[0], sol.t[-1], 4001)
    u = sol.sol(t)[0]
    imax = int(np.argmax(u))
    icut = imax + int(np.argmin(u[imax:]))
    r_cut = t[icut]

    def guess(r):
        r = np.asarray(r, float)
        out = np.zeros_like(r)
        m = r <= r_cut
        rr = np.clip(r[m], sol.t[0], None)
        out[m] = sol.sol(rr)[0] * np.where(r[m] < sol.t[0], r[m] / sol.t[0], 1.0)
        return out

    return c, guess


def _newton_polish(prob: RadialProblem, guess, max_iter: int = 60, tol: float = 1e-13):
    n = prob.n_r - 1  # polynomial degree, odd
    x, D = cheb(n)
    R = prob.r_max
    r = R * x
    D = D / R
    D2 = D @ D
    inner = slice(1, n)
    ri = r[inner]
    u = np.sign(r) * guess(np.abs(r))
    u[0] = u[-1] = 0.0
    lam = prob.k**2 - prob.V_of(np.abs(ri))
    gam = prob.Gamma_of(np.abs(ri))
    p = prob.p
    A = -D2[inner, inner] - D[inner, inner] / ri[:, None] + np.diag(1.0 / ri**2 + lam)

    def residual(ui):
        return A @ ui - gam * np.abs(ui) ** (p - 2) * ui

    ui = u[inner].copy()
    res = np.max(np.abs(residual(ui)))
    it = 0
    while it < max_iter:
        Jac = A - np.diag((p - 1) * gam * np.abs(ui) ** (p - 2))
        F = residual(ui)
        ui = ui - np.linalg.solve(Jac, F)
        it += 1
        res = float(np.max(np.abs(residual(ui))))
        if res < tol * max(1.0, np.max(np.abs(ui)) * prob.decay_rate2):
            break
    u = np.zeros(n + 1)
    u[inner] = ui
    return r, u, res, it, D


def radial_solve(prob: RadialProblem) -> RadialProfile:
    """Nontrivial profile u >= 0 with ODE residual below 1e-8 at the collocation nodes."""
    c, guess = _shooting_guess(prob)
    r, u, res, it, D = _newton_polish(prob, guess)
    amp = float(np.max(np.abs(u)))
    if amp <= 0.1 * prob.scale:
        raise RadialSolveError(f"Newton iteration collapsed to the trivial solution (max|u| = {amp:.3e})")
    if res > 1e-8:
        raise RadialSolveError(f"radial collocation did not converge (residual {res:.3e})")
    pos = r > 0
    tail = np.abs(u[pos & (r > 0.9 * prob.r_max)])
    if tail.size and tail.max() > 1e-8 * amp:
        raise RadialSolveError(f"profile not decayed at r_max = {prob.r_max:g}; increase r_max")
    if np.sum(u[pos]) < 0:
        u = -u
    du = D @ u
    return RadialProfile(prob, r[pos], u[pos], c, res, it,
                         BarycentricInterpolator(r, u), BarycentricInterpolator(r, du))


def embed_radial(profile: Union[RadialProfile, Callable], grid: GridSpec, images: Optional[int] = None,
                 decay_tol: float = 1e-8) -> Field6:
    """Periodic lift of (-y/r u, x/r u, 0, 0, 0, 0) to the grid, zero at r = 0.

    The whole-plane field is summed over its periodic images (``images``
    rings of neighbouring cells on each side), which removes the jump a
    slowly decaying tail would otherwise leave at the cell boundary.  By
    default enough rings are taken to cover the profile support r_max.
    Raises if the profile is not decayed (relative to ``decay_tol``) where
    the image sum is cut off.
    """
    side = grid.side_length
    r_cut = getattr(getattr(profile, "problem", None), "r_max", None)
    if images is None:
        images = 1 if r_cut is None else max(1, math.ceil(r_cut / side + 0.5 * math.sqrt(2)))
    X, Y = grid.mesh
    r0 = np.hypot(X, Y)
    peak = float(np.max(np.abs(profile(np.linspace(0, side / 2, 512)))))
    if peak == 0:
        return Field6(grid, np.zeros((6,) + r0.shape))
    far = (images + 0.5) * side
    if r_cut is None or r_cut > far:
        edge = float(np.abs(profile(np.array([far])))[0])
        if edge > decay_tol * peak:
            raise ValueError(f"profile not decayed at r = {far:g} (|u| = {edge:.3e}, peak {peak:.3e})")
    data = np.zeros((6,) + r0.shape)
    for a in range(-images, images + 1):
        for b in range(-images, images + 1):
            xs = X - a * side
            ys = Y - b * side
            r = np.hypot(xs, ys)
            if r_cut is not None and np.min(r) > r_cut:
                continue
            u = np.asarray(profile(r.ravel()), float).reshape(r.shape)
            amp = np.where(r > 0, u / np.where(r > 0, r, 1.0), 0.0)
            data[0] -= ys * amp
            data[1] += xs * amp
    return Field6(grid, data)
