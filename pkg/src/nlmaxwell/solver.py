"""Ground states of L u - V u = f(x, u) by reduction to the range space.

For v in the range space V the strictly convex map w -> I(v + w) on the
kernel space W has a unique minimiser w(v); m(v) = v + w(v) parametrises the
constraint set M and J~ = J o m is the reduced functional.  Ground states
minimise J over the Nehari set, i.e. minimise psi(d) = max_t J~(t d) over
directions d, which is what :func:`ground_state_solve` does.

All internal work is on rfft half-lattice coefficients; see
:class:`nlmaxwell.operators.SpectralOperators`.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .energy import EnergyBreakdown, EnergyModel
from .grid import Field6, GridSpec
from .material import MaterialParams
from .operators import operators_for

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass
class InnerSolveConfig:
    """Settings of the kernel-space minimisation of I(v + .)."""

    tolerance: float = 1e-10
    max_iterations: int = 2000
    step_rule: str = "bb"  # "bb" (Barzilai-Borwein with fixed-step fallback) or "fixed"
    safety: float = 0.9

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("inner tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("inner max_iterations must be >= 1")
        if self.step_rule not in ("bb", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


@dataclass
class SolverConfig:
    inner: InnerSolveConfig = field(default_factory=InnerSolveConfig)
    tolerance: float = 1e-6  # relative full residual |grad J(u)|_2 / |u|_2
    max_iterations: int = 2000
    armijo_c1: float = 1e-4
    max_backtracks: int = 40
    stall_iterations: int = 30
    dealias_factor: Optional[float] = None


class InnerSolveError(RuntimeError):
    def __init__(self, message, w_hat, residual):
        super().__init__(message)
        self.w_hat = w_hat
        self.residual = residual


class NoMountainPassError(RuntimeError):
    pass


@dataclass
class Point:
    """A point u = v + w(v) of the constraint set with cached quantities."""

    v_hat: np.ndarray
    w_hat: np.ndarray
    quadratic: float
    potential: float
    nonlinear: float
    g_hat: np.ndarray  # hat of V u + f(x, u)
    inner_iterations: int
    inner_residual: float

    @property
    def J(self) -> float:
        return self.quadratic - self.potential - self.nonlinear

    @property
    def u_hat(self) -> np.ndarray:
        return self.v_hat + self.w_hat


@dataclass
class SolveResult:
    u_star: Field6
    J_value: float
    ray_parameter: float
    residual_full: float
    residual_kernel: float
    nehari_residual: float
    iterations: int
    converged: bool
    u_norm: float = 0.0
    v_star: Optional[Field6] = None
    energy: Optional[EnergyBreakdown] = None
    tilde_ratio: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def residual_relative(self) -> float:
        return self.residual_full / self.u_norm if self.u_norm > 0 else float("inf")


class ReducedProblem:
    """Reduced functional J~ = J o m for one material, in hat space."""

    def __init__(self, mat: MaterialParams, cfg: SolverConfig | None = None):
        self.mat = mat
        self.cfg = cfg or SolverConfig()
        self.model = EnergyModel(mat, self.cfg.dealias_factor)
        self.ops = self.model.ops
        self.grid = mat.grid
        self.inner_history: list[float] = []

    # ------------------------------------------------------------ inner solve
    def _fixed_step(self, umax: float) -> float:
        nl = self.mat.nonlinearity
        bound = self.model.V_max + nl.p * self.model.nl.gamma_max * umax ** (nl.p - 2)
        return self.cfg.inner.safety / bound

    def inner_solve(self, v_hat: np.ndarray, w0_hat: np.ndarray | None = None) -> Point:
        """Minimise I(v + w) over kernel fields w by projected gradient descent."""
        icfg = self.cfg.inner
        ops = self.ops
        w = np.zeros_like(v_hat) if w0_hat is None else ops.kernel_hat(w0_hat)
        pot, nl, g, umax = self.model.compact_part(v_hat + w)
        I = pot + nl
        r = ops.kernel_hat(g)
        res = ops.norm_hat(r)
        history = [I]
        step = self._fixed_step(umax)
        it = 0
        while res > icfg.tolerance and it < icfg.max_iterations:
            it += 1
            trial = w - step * r
            pot_t, nl_t, g_t, umax_t = self.model.compact_part(v_hat + trial)
            I_t = pot_t + nl_t
            if I_t > I + 64 * _EPS * max(abs(I), 1.0):
                # monotone safeguard: retreat to the curvature-bounded step
                fixed = self._fixed_step(max(umax, umax_t))
                step = fixed if step > fixed else 0.5 * step
                continue
            r_t = ops.kernel_hat(g_t)
            if icfg.step_rule == "bb":
                dw = trial - w
                dr = r_t - r
                curv = ops.inner_hat(dw, dr)
                step = ops.inner_hat(dw, dw) / curv if curv > 0 else self._fixed_step(umax_t)
            else:
                step = self._fixed_step(umax_t)
            w, r, I, pot, nl, g, umax = trial, r_t, I_t, pot_t, nl_t, g_t, umax_t
            res = ops.norm_hat(r)
            history.append(I)
        self.inner_history = history
        if res > icfg.tolerance:
            raise InnerSolveError(
                f"inner minimisation did not reach tolerance {icfg.tolerance:g} in "
                f"{icfg.max_iterations} iterations (residual {res:.3e})", w, res)
        quad = 0.5 * ops.h_inner_hat(v_hat, v_hat)
        return Point(v_hat, w, quad, pot, nl, g, it, res)

    # --------------------------------------------------------- reduced level
    def full_gradient(self, pt: Point) -> np.ndarray:
        """Hat of L u - V u - f(x, u) at u = m(v)."""
        return self.ops.lam * pt.v_hat - pt.g_hat

    def reduced_gradient(self, pt: Point) -> np.ndarray:
        return self.ops.range_hat(self.full_gradient(pt))

    # ------------------------------------------------------------ ray search
    def ray_maximize(self, d_hat: np.ndarray, t0: float | None = None, w0_hat=None,
                     cold: bool = True, check_unique: bool = False):
        """Maximise phi(t) = J~(t d) over t > 0.  Returns (t, Point).

        Cold starts scan upward from small t and take the first sign change
        of phi'; warm starts bracket locally around ``t0``.  The bracket is
        narrowed at golden-section points and finished by Brent's method on
        phi'(t) = <grad J(m(t d)), d>_2.
        """
        ops = self.ops
        dd = ops.h_inner_hat(d_hat, d_hat)
        memo: dict[float, Point] = {}
        ref = {"t": t0, "w": w0_hat}

        def point(t: float) -> Point:
            if t in memo:
                return memo[t]
            if memo:
                tn = min(memo, key=lambda s: abs(math.log(s / t)))
                w0 = memo[tn].w_hat * (t / tn)
            elif ref["w"] is not None and ref["t"]:
                w0 = ref["w"] * (t / ref["t"])
            else:
                w0 = None
            pt = self.inner_solve(t * d_hat, w0)
            memo[t] = pt
            return pt

        def dphi(t: float) -> float:
            pt = point(t)
            return t * dd - ops.inner_hat(pt.g_hat, d_hat)

        if t0 is None or cold:
            t_guess = self._ray_guess(d_hat, dd)
            t = t_guess / 8 if t0 is None else t0 / 8
            if dphi(t) <= 0:
                while dphi(t) <= 0:
                    t *= 0.5
                    if t < 1e-8 * t_guess:
                        raise NoMountainPassError("no mountain pass along ray: phi decreasing from t = 0")
            a = t
            b = 2 * t
            while dphi(b) > 0:
                a, b = b, 2 * b
                if b > 1e8 * t_guess:
                    raise NoMountainPassError("no mountain pass along ray: phi increasing without bound")
        else:
            fac = 1.05
            if dphi(t0) > 0:
                a, b = t0, t0 * fac
                while dphi(b) > 0:
                    a, b = b, b * fac
                    fac *= 2
            else:
                a, b = t0 / fac, t0
                while dphi(a) <= 0:
                    a, b = a / fac, a
                    fac *= 2
                    if a < 1e-12 * t0:
                        raise NoMountainPassError("no mountain pass along ray: phi decreasing from t = 0")
        # golden-section narrowing of a wide bracket
        gr = 0.5 * (math.sqrt(5) - 1)
        while (b - a) > 0.25 * b:
            c = b - gr * (b - a)
            if dphi(c) > 0:
                a = c
            else:
                b = c
        if dphi(a) <= 0:
            t_star = a
        else:
            t_star = brentq(dphi, a, b, xtol=1e-14 * b, rtol=4 * _EPS, maxiter=200)
        pt = point(t_star)
        if check_unique:
            for s in (1.5, 2.0, 4.0):
                try:
                    if dphi(s * t_star) > 0:
                        warnings.warn(f"multiple maxima along ray: phi' > 0 at {s:g} t*", RuntimeWarning,
                                      stacklevel=2)
                        break
                except InnerSolveError:
                    break
        return t_star, pt

    def _ray_guess(self, d_hat: np.ndarray, dd: float) -> float:
        """Maximiser of t -> J(t d) ignoring the kernel correction."""
        pot, nl, _, _ = self.model.compact_part(d_hat, with_gradient=False)
        p = self.mat.p
        quad = 0.5 * dd - pot
        if nl <= 0 or quad <= 0:
            return 1.0
        # J(t d) = quad t^2 - nl t^p is maximal at t = (2 quad / (p nl))^(1/(p-2))
        return (2 * quad / (p * nl)) ** (1.0 / (p - 2))


# ------------------------------------------------------------------ public API


def _hat(f: Field6, mat: MaterialParams) -> np.ndarray:
    if f.grid != mat.grid:
        raise ValueError("grid mismatch between field and material")
    return operators_for(mat.grid, mat.k).hat(f.data)


def _range_hat(v: Field6, mat: MaterialParams) -> np.ndarray:
    ops = operators_for(mat.grid, mat.k)
    return ops.range_hat(ops.hat(v.data))


def _cfg(cfg) -> SolverConfig:
    if cfg is None:
        return SolverConfig()
    if isinstance(cfg, InnerSolveConfig):
        return SolverConfig(inner=cfg)
    return cfg


def inner_minimize(v: Field6, mat: MaterialParams, cfg=None, w0: Field6 | None = None) -> Field6:
    """Kernel field w(v) minimising I(v + w); v is first projected onto the range space."""
    prob = ReducedProblem(mat, _cfg(cfg))
    w0h = None if w0 is None else _hat(w0, mat)
    pt = prob.inner_solve(_range_hat(v, mat), w0h)
    return Field6(mat.grid, prob.ops.real(pt.w_hat))


def manifold_map(v: Field6, mat: MaterialParams, cfg=None) -> Field6:
    """m(v) = v + w(v)."""
    prob = ReducedProblem(mat, _cfg(cfg))
    pt = prob.inner_solve(_range_hat(v, mat))
    return Field6(mat.grid, prob.ops.real(pt.u_hat))


def reduced_functional(v: Field6, mat: MaterialParams, cfg=None) -> float:
    prob = ReducedProblem(mat, _cfg(cfg))
    return prob.inner_solve(_range_hat(v, mat)).J


def reduced_gradient(v: Field6, mat: MaterialParams, cfg=None) -> Field6:
    """Range projection of grad J(m(v)), the L2 gradient of J~ at v."""
    prob = ReducedProblem(mat, _cfg(cfg))
    pt = prob.inner_solve(_range_hat(v, mat))
    return Field6(mat.grid, prob.ops.real(prob.reduced_gradient(pt)))


def ray_maximize(v: Field6, mat: MaterialParams, cfg=None) -> tuple[float, float]:
    """(t*, J~(t* v)) for the first local maximum of t -> J~(t v)."""
    prob = ReducedProblem(mat, _cfg(cfg))
    vh = _range_hat(v, mat)
    nv = math.sqrt(prob.ops.h_inner_hat(vh, vh))
    if nv == 0:
        raise ValueError("ray_maximize needs v != 0")
    t, pt = prob.ray_maximize(vh / nv, check_unique=True)
    return t / nv, pt.J


def default_initial(grid: GridSpec, k: float, polarization=(1, 0, 0, 0, 0, 0), width: float | None = None,
                    kind: str = "gaussian", seed: int = 0) -> Field6:
    """Gaussian bump times a constant polarisation, projected onto the range space.

    ``kind="random"`` multiplies the bump by a smooth seeded random field instead.
    """
    width = grid.side_length / 8 if width is None else width
    X, Y = grid.mesh
    bump = np.exp(-(X**2 + Y**2) / (2 * width**2))
    if kind == "gaussian":
        a = np.asarray(polarization, float).reshape(6, 1, 1)
        if a.shape[0] != 6 or not np.any(a):
            raise ValueError("polarization must be a nonzero 6-vector")
        data = a * bump
    elif kind == "random":
        rng = np.random.default_rng(seed)
        ops = operators_for(grid, k)
        noise = ops.hat(rng.standard_normal(grid.shape()))
        noise *= np.exp(-ops.ksq * width**2 / 8)
        data = ops.real(noise) * bump
    else:
        raise ValueError(f"unknown initial kind {kind!r}")
    ops = operators_for(grid, k)
    return Field6(grid, ops.real(ops.range_hat(ops.hat(data))))


def ground_state_solve(initial: Field6, mat: MaterialParams, cfg: SolverConfig | None = None,
                       callback: Callable[[dict], None] | None = None, warm_start: bool = False) -> SolveResult:
    """Minimise J over the Nehari set by descent on the direction sphere.

    Each iterate is u = m(t* d) with t* the ray maximiser, so every iterate
    lies on the constraint set and satisfies the Nehari condition.  Steps use
    the (-Delta + k^2)^{-1}-preconditioned reduced gradient, projected onto
    the tangent space of the sphere, with Barzilai-Borwein step lengths and
    Armijo backtracking on psi(d) = max_t J~(t d).

    With ``warm_start`` the initial field is taken to be close to the
    constraint set: the first ray search brackets around its own scale and
    the inner solve starts from its kernel part (e.g. a solution resampled
    from another grid).
    """
    cfg = cfg or SolverConfig()
    prob = ReducedProblem(mat, cfg)
    ops = prob.ops
    uh = _hat(initial, mat)
    vh = ops.range_hat(uh)
    nv = math.sqrt(ops.h_inner_hat(vh, vh))
    if nv == 0:
        raise ValueError("initial field has no range-space component")
    if warm_start:
        t, pt = prob.ray_maximize(vh / nv, t0=nv, w0_hat=uh - vh, cold=False)
    else:
        t, pt = prob.ray_maximize(vh / nv, check_unique=True)
    v = t * (vh / nv)

    history = []
    alpha = 1.0
    best_J = pt.J
    stall = 0
    converged = False
    it = 0
    G_prev = v_prev = None
    while True:
        gJ = prob.full_gradient(pt)
        u_hat = pt.u_hat
        unorm = ops.norm_hat(u_hat)
        res = ops.norm_hat(gJ) / unorm
        rec = {
            "iteration": it,
            "J_v": 0.5 * ops.h_inner_hat(v, v) - sum(prob.model.compact_part(v, False)[:2]),
            "J_tilde": pt.J,
            "t_star": t,
            "residual_full": res,
            "residual_kernel": pt.inner_residual,
            "inner_iterations": pt.inner_iterations,
            "step": alpha,
        }
        history.append(rec)
        if callback is not None:
            callback(rec)
        log.debug("iter %d J=%.15g res=%.3e t=%.6g", it, pt.J, res, t)
        if res < cfg.tolerance:
            converged = True
            break
        if it >= cfg.max_iterations:
            break
        it += 1

        G = v - ops.range_hat(pt.g_hat) / ops.lam  # H-gradient of J~ at v
        G = G - (ops.h_inner_hat(G, v) / ops.h_inner_hat(v, v)) * v
        gnorm2 = ops.h_inner_hat(G, G)
        if G_prev is not None:
            s = v - v_prev
            y = G - G_prev
            sy = ops.h_inner_hat(s, y)
            if sy > 0:
                alpha = min(max(ops.h_inner_hat(s, s) / sy, 1e-3), 1e3)
        accepted = False
        for _ in range(cfg.max_backtracks):
            vt = v - alpha * G
            nt = math.sqrt(ops.h_inner_hat(vt, vt))
            try:
                t_new, pt_new = prob.ray_maximize(vt / nt, t0=t, w0_hat=pt.w_hat, cold=False)
            except (InnerSolveError, NoMountainPassError):
                alpha *= 0.5
                continue
            noise = 16 * _EPS * max(abs(pt.J), 1.0)
            if pt_new.J <= pt.J - cfg.armijo_c1 * alpha * gnorm2 + noise:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            log.info("line search failed at iteration %d", it)
            break
        v_prev, G_prev = v, G
        v = t_new * (vt / nt)
        t, pt = t_new, pt_new
        if pt.J < best_J - _EPS * abs(best_J):
            best_J = pt.J
            stall = 0
        else:
            stall += 1
            if stall >= cfg.stall_iterations:
                log.info("energy stalled at iteration %d", it)
                break

    gJ = prob.full_gradient(pt)
    u_hat = pt.u_hat
    u = Field6(mat.grid, ops.real(u_hat))
    unorm = ops.norm_hat(u_hat)
    res_abs = ops.norm_hat(gJ)
    tilde = float(np.sqrt(np.sum(u.data[3:] ** 2) * mat.grid.cell_area)) / unorm
    return SolveResult(
        u_star=u,
        J_value=pt.J,
        ray_parameter=t,
        residual_full=res_abs,
        residual_kernel=ops.norm_hat(ops.kernel_hat(pt.g_hat)),
        nehari_residual=abs(ops.inner_hat(gJ, u_hat)),
        iterations=it,
        converged=converged and res_abs < cfg.tolerance * unorm,
        u_norm=unorm,
        v_star=Field6(mat.grid, ops.real(v)),
        energy=EnergyBreakdown(pt.quadratic, pt.potential, pt.nonlinear),
        tilde_ratio=tilde,
        history=history,
    )


def mountain_pass_floor(mat: MaterialParams, radii, directions, cfg=None) -> float:
    """max over r of min over sampled directions d (||d|| = 1) of J(r d).

    Directions are projected onto the range space and normalised in the
    range-space norm.  The sampled minimum bounds the infimum over the
    sphere from above, so this is an estimate of the mountain-pass floor a.
    """
    model = EnergyModel(mat, _cfg(cfg).dealias_factor)
    ops = model.ops
    ds = []
    for d in directions:
        dh = ops.range_hat(ops.hat(d.data))
        ds.append(dh / math.sqrt(ops.h_inner_hat(dh, dh)))
    best = -math.inf
    for r in radii:
        vals = [model.breakdown(r * dh).J for dh in ds]
        best = max(best, min(vals))
    return best
