"""Material coefficients V, Gamma and the power-law nonlinearity F = Gamma |u|^p / p."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .grid import Dealiaser, Field6, GridSpec, irfft2, rfft2

COEFFICIENT_KINDS = ("constant", "gaussian", "periodic", "raster")


@dataclass(frozen=True)
class Coefficient:
    """Closed-form or raster description of a scalar coefficient field.

    constant:  value
    gaussian:  value + amplitude * exp(-|x|^2 / (2 width^2))
    periodic:  value + amplitude * (cos(2 pi x/period) + cos(2 pi y/period)) / 2
    raster:    node values read from ``path``
    """

    kind: str = "constant"
    value: float = 0.0
    amplitude: float = 0.0
    width: float = 1.0
    period: float = 1.0
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}; expected one of {COEFFICIENT_KINDS}")
        if self.kind == "gaussian" and self.width <= 0:
            raise ValueError("gaussian width must be positive")
        if self.kind == "periodic" and self.period <= 0:
            raise ValueError("period must be positive")
        if self.kind == "raster" and not self.path:
            raise ValueError("raster coefficient needs a file path")

    def sample(self, grid: GridSpec) -> np.ndarray:
        X, Y = grid.mesh
        if self.kind == "constant":
            return np.full(X.shape, float(self.value))
        if self.kind == "gaussian":
            return self.value + self.amplitude * np.exp(-(X**2 + Y**2) / (2 * self.width**2))
        if self.kind == "periodic":
            ratio = grid.side_length / self.period
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(
                    f"period {self.period} does not divide side_length {grid.side_length}"
                )
            w = 2 * np.pi / self.period
            return self.value + 0.5 * self.amplitude * (np.cos(w * X) + np.cos(w * Y))
        from .io import read_raster

        values, n, side = read_raster(self.path)
        if n != grid.n_points or abs(side - grid.side_length) > 1e-12 * side:
            raise ValueError(
                f"raster {self.path} is for n_points={n}, side_length={side}; "
                f"grid has {grid.n_points}, {grid.side_length}"
            )
        return values


class PowerNonlinearity:
    """Isotropic F(x, u) = Gamma(x) |u|^p / p, f = Gamma |u|^(p-2) u."""

    def __init__(self, p: float):
        if p < 2:
            raise ValueError(f"exponent p must be >= 2, got {p}")
        self.p = float(p)

    def density(self, gamma, s2):
        """F as a function of Gamma and |u|^2."""
        return gamma * s2 ** (0.5 * self.p) / self.p

    def coefficient(self, gamma, s2):
        """c such that f(x, u) = c u."""
        if self.p == 4.0:
            return gamma * s2
        return gamma * s2 ** (0.5 * self.p - 1)

    def curvature_bound(self, gamma_max: float, umax: float) -> float:
        """Upper bound of the Hessian of F on |u| <= umax."""
        return (self.p - 1) * gamma_max * umax ** (self.p - 2)


@dataclass
class MaterialParams:
    """Coefficients of L u - V u = f(x, u) on a grid.

    ``V`` and ``Gamma`` are (n, n) node arrays.  ``V_kind`` / ``Gamma_kind``
    record how they were produced, which the hypothesis report uses.
    """

    grid: GridSpec
    k: float
    omega: float
    p: float
    V: np.ndarray
    V0: float
    Gamma: np.ndarray
    gamma_AR: Optional[float] = None
    p_min: float = 3.0
    V_kind: str = "raster"
    Gamma_kind: str = "raster"
    validate: bool = True
    nonlinearity: PowerNonlinearity = field(init=False, repr=False)

    def __post_init__(self):
        shape = (self.grid.n_points, self.grid.n_points)
        self.V = np.broadcast_to(np.asarray(self.V, float), shape).copy()
        self.Gamma = np.broadcast_to(np.asarray(self.Gamma, float), shape).copy()
        self.k = float(self.k)
        self.omega = float(self.omega)
        self.p = float(self.p)
        if self.k == 0:
            raise ValueError("wave number k must be nonzero (k != 0)")
        if self.p < 2:
            raise ValueError(f"exponent p must be > 2, got {self.p}")
        self.nonlinearity = PowerNonlinearity(self.p)
        if self.validate:
            self.check()

    @classmethod
    def from_coefficients(cls, grid, k, omega, p, V: Coefficient, Gamma: Coefficient, V0=None, **kw):
        V_arr = V.sample(grid)
        if V0 is None:
            V0 = V.value
        return cls(grid, k, omega, p, V_arr, float(V0), Gamma.sample(grid),
                   V_kind=V.kind, Gamma_kind=Gamma.kind, **kw)

    def check(self) -> None:
        """Raise ValueError if an invariant of the coefficient class fails."""
        problems = [name for name, ok, detail in _invariant_checks(self) if not ok]
        if problems:
            details = "; ".join(f"{n}: {d}" for n, ok, d in _invariant_checks(self) if not ok)
            raise ValueError(f"material parameters violate {', '.join(problems)} ({details})")

    @property
    def V_is_constant(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.V))))
        return bool(np.max(np.abs(self.V - self.V0)) <= 1e-14 * scale)

    @cached_property
    def _evaluators(self) -> dict:
        return {}

    def evaluator(self, factor: float | None = None) -> "NonlinearEvaluator":
        factor = default_dealias_factor(self.p) if factor is None else float(factor)
        if factor not in self._evaluators:
            self._evaluators[factor] = NonlinearEvaluator(self, factor)
        return self._evaluators[factor]


def default_dealias_factor(p: float) -> float:
    """Padding making |u|^(p-2) u alias-free for even integer p (2 otherwise)."""
    if p == int(p) and int(p) % 2 == 0:
        return max(1.5, p / 2)
    return 2.0


class NonlinearEvaluator:
    """Evaluates int F(x, u) and the dealiased f(x, u) on the padded grid.

    The returned f is the exact L2 gradient of the returned integral with
    respect to the node values of u.
    """

    def __init__(self, mat: MaterialParams, factor: float = 2.0):
        self.mat = mat
        self.dealiaser = Dealiaser(mat.grid, factor)
        self.gamma_pad = self.dealiaser.to_padded(mat.Gamma)
        self.gamma_max = float(np.max(mat.Gamma))
        self.cell_area = self.dealiaser.padded_grid.cell_area

    def evaluate_hat(self, u_hat: np.ndarray, with_f: bool = True):
        """(int F, f_hat, max |u|) for base rfft coefficients u_hat of shape (6, n, n/2+1)."""
        d = self.dealiaser
        up = d.to_padded_hat(u_hat)
        up = irfft2(up, d.m)
        s2 = np.einsum("cij,cij->ij", up, up)
        nl = self.mat.nonlinearity
        total = float(np.sum(nl.density(self.gamma_pad, s2)) * self.cell_area)
        umax = float(np.sqrt(np.max(s2)))
        if not with_f:
            return total, None, umax
        f_hat = d.truncate_hat(nl.coefficient(self.gamma_pad, s2) * up)
        return total, f_hat, umax


def evaluate_F(u: Field6, mat: MaterialParams) -> np.ndarray:
    """Pointwise F(x, u(x)) on the grid nodes."""
    if u.grid != mat.grid:
        raise ValueError("grid mismatch between field and material")
    s2 = np.sum(u.data**2, axis=0)
    return mat.nonlinearity.density(mat.Gamma, s2)


def pointwise_f(u: Field6, mat: MaterialParams) -> Field6:
    """f(x, u) = Gamma |u|^(p-2) u at the grid nodes, no dealiasing."""
    if u.grid != mat.grid:
        raise ValueError("grid mismatch between field and material")
    s2 = np.sum(u.data**2, axis=0)
    return Field6(u.grid, mat.nonlinearity.coefficient(mat.Gamma, s2) * u.data)


def evaluate_f(u: Field6, mat: MaterialParams, factor: float | None = None) -> Field6:
    """Dealiased f(x, u): the L2 gradient of the padded-grid integral of F."""
    if u.grid != mat.grid:
        raise ValueError("grid mismatch between field and material")
    if mat.p < 2:
        raise ValueError("p < 2 is not supported")
    ev = mat.evaluator(factor)
    _, f_hat, _ = ev.evaluate_hat(rfft2(u.data))
    return Field6(u.grid, irfft2(f_hat, u.grid.n_points))


def nonlinear_energy(u: Field6, mat: MaterialParams, factor: float | None = None) -> float:
    """int F(x, u) evaluated on the padded grid."""
    total, _, _ = mat.evaluator(factor).evaluate_hat(rfft2(u.data), with_f=False)
    return total


# ---------------------------------------------------------------- hypotheses


@dataclass
class HypothesisReport:
    entries: list = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.entries.append((name, bool(passed), detail))

    @property
    def all_passed(self) -> bool:
        return all(ok for _, ok, _ in self.entries)

    def failed(self) -> list[str]:
        return [n for n, ok, _ in self.entries if not ok]

    def __getitem__(self, name: str) -> bool:
        for n, ok, _ in self.entries:
            if n == name:
                return ok
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {n: {"passed": ok, "detail": d} for n, ok, d in self.entries}

    def lines(self) -> list[str]:
        return [f"{'PASS' if ok else 'FAIL'}  {n:10s} {d}" for n, ok, d in self.entries]


def _invariant_checks(mat: MaterialParams):
    vmin, vmax = float(np.min(mat.V)), float(np.max(mat.V))
    gmin, gmax = float(np.min(mat.Gamma)), float(np.max(mat.Gamma))
    k2 = mat.k**2
    yield ("p", mat.p > 2 and mat.p >= mat.p_min,
           f"p={mat.p:g} (need p > 2 and p >= p_min={mat.p_min:g})")
    yield ("(V)", bool(np.all(np.isfinite(mat.V))) and 0 < vmin <= vmax < k2,
           f"min V={vmin:.6g}, max V={vmax:.6g}, k^2={k2:.6g}")
    yield ("Gamma", bool(np.all(np.isfinite(mat.Gamma))) and gmin > 0,
           f"min Gamma={gmin:.6g}, max Gamma={gmax:.6g}")
    yield ("omega", mat.omega > 0 and np.isfinite(mat.omega), f"omega={mat.omega:g}")


def _is_unit_periodic(a: np.ndarray, grid: GridSpec) -> tuple[bool, str]:
    if np.ptp(a) <= 1e-14 * max(1.0, float(np.max(np.abs(a)))):
        return True, "constant"
    cells = 1.0 / grid.dx
    if abs(cells - round(cells)) > 1e-9 or round(cells) < 1:
        return False, "non-constant and unit shifts are not whole grid cells"
    s = int(round(cells))
    defect = max(np.max(np.abs(np.roll(a, s, axis=0) - a)), np.max(np.abs(np.roll(a, s, axis=1) - a)))
    return defect <= 1e-12 * max(1.0, float(np.max(np.abs(a)))), f"unit-shift defect {defect:.2e}"


def validate_hypotheses(mat: MaterialParams, decay_tol: float = 1e-8) -> HypothesisReport:
    """Check (V), (F1)-(F6) and (F4') for the power-law family on the grid."""
    rep = HypothesisReport()
    grid = mat.grid
    p = mat.p
    checks = {n: (ok, d) for n, ok, d in _invariant_checks(mat)}
    rep.add("p", *checks["p"])
    rep.add("(V)", *checks["(V)"])

    # V - V0 in L^{p/(p-2)}: decay at the boundary, unless V is constant or Z^2-periodic
    diff = mat.V - mat.V0
    if mat.V_is_constant:
        rep.add("(V)decay", True, "V == V0")
        rep.add("(V)branch", True, "V == V0")
    elif mat.V_kind == "periodic":
        rep.add("(V)decay", True, "not applicable: Z^2-periodic V (translation-invariant medium)")
        rep.add("(V)branch", True, "not applicable: Z^2-periodic V")
    else:
        edge = np.concatenate([diff[0], diff[-1], diff[:, 0], diff[:, -1]])
        emax = float(np.max(np.abs(edge)))
        rep.add("(V)decay", emax < decay_tol, f"max |V - V0| on boundary = {emax:.2e} (need < {decay_tol:g})")
        # V > V0 pointwise; a decaying bump rounds to V0 far out, so equality is accepted there
        dmin = float(np.min(diff))
        dmax = float(np.max(diff))
        floor = -1e-14 * max(1.0, abs(mat.V0))
        rep.add("(V)branch", dmin >= floor and dmax > 0,
                f"min (V - V0) = {dmin:.3e}, max (V - V0) = {dmax:.3e} (need V >= V0 up to roundoff, V != V0)")

    gmin, gmax = float(np.min(mat.Gamma)), float(np.max(mat.Gamma))
    periodic, pdetail = _is_unit_periodic(mat.Gamma, grid)
    rep.add("(F1)", gmin >= 0 and periodic, f"F >= 0, C^1 in u; Gamma Z^2-periodic: {pdetail}")
    rep.add("(F2)", p > 2, f"|f| = Gamma |u|^{p - 1:g} = o(1) as u -> 0")
    rep.add("(F3)", np.isfinite(gmax), f"c1 = max Gamma = {gmax:.6g}")
    c2 = gmin / p
    rep.add("(F4)", c2 > 0, f"liminf F/|u|^p >= c2 = {c2:.6g}")
    rep.add("(F4')", c2 > 0, f"F >= c2 |u|^p with c2 = min Gamma / p = {c2:.6g}")

    # Euler identity <f, u> = p F on random samples as a spot check of (F5)
    rng = np.random.default_rng(12345)
    u = rng.standard_normal((6, 64)) * rng.uniform(0.01, 10, 64)
    s2 = np.sum(u**2, axis=0)
    g = rng.uniform(gmin, gmax, 64) if gmax > gmin else np.full(64, gmin)
    F = mat.nonlinearity.density(g, s2)
    fu = mat.nonlinearity.coefficient(g, s2) * s2
    euler = float(np.max(np.abs(fu - p * F) / np.maximum(p * F, 1e-300)))
    rep.add("(F5)", p >= 2 and euler < 1e-12,
            f"isotropic with nondecreasing chi'; <f,u> = {p:g} F >= 2F (sample defect {euler:.1e})")
    gamma = p if mat.gamma_AR is None else float(mat.gamma_AR)
    rep.add("(F6)", 2 < gamma <= p, f"<f,u> = p F >= gamma F with gamma = {gamma:g}")
    return rep
