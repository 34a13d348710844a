"""The functional J(u) = 1/2 b_L(u,u) - 1/2 int V|u|^2 - int F(x,u) and its L2 gradients."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .grid import Field6
from .material import MaterialParams
from .operators import operators_for


@dataclass(frozen=True)
class EnergyBreakdown:
    quadratic: float  # 1/2 ||v||^2 = 1/2 b_L(u, u)
    potential: float  # 1/2 int V |u|^2
    nonlinear: float  # int F(x, u)

    @property
    def I(self) -> float:
        return self.potential + self.nonlinear

    @property
    def J(self) -> float:
        return self.quadratic - self.potential - self.nonlinear

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(I=self.I, J=self.J)
        return d


class EnergyModel:
    """Hat-space evaluation of J, I and their gradients for one material.

    Fields are passed as half-lattice coefficient arrays (6, n, n//2+1).
    """

    def __init__(self, mat: MaterialParams, dealias_factor: float | None = None):
        self.mat = mat
        self.grid = mat.grid
        self.ops = operators_for(mat.grid, mat.k)
        self.nl = mat.evaluator(dealias_factor)
        self.V = mat.V
        self.V_max = float(np.max(mat.V))

    def compact_part(self, u_hat: np.ndarray, with_gradient: bool = True):
        """Return (potential, nonlinear, grad_I_hat, max|u|) with grad_I = V u + f(x, u)."""
        ops = self.ops
        u = ops.real(u_hat)
        vu = self.V * u
        potential = 0.5 * self.grid.integrate(np.sum(vu * u, axis=0))
        nonlinear, f_hat, umax = self.nl.evaluate_hat(u_hat, with_f=with_gradient)
        g = ops.hat(vu) + f_hat if with_gradient else None
        return potential, nonlinear, g, umax

    def quadratic(self, u_hat: np.ndarray) -> float:
        r = self.ops.range_hat(u_hat)
        return 0.5 * self.ops.h_inner_hat(r, r)

    def breakdown(self, u_hat: np.ndarray) -> EnergyBreakdown:
        pot, nl, _, _ = self.compact_part(u_hat, with_gradient=False)
        return EnergyBreakdown(self.quadratic(u_hat), pot, nl)

    def gradient(self, u_hat: np.ndarray) -> np.ndarray:
        """Hat of L u - V u - f(x, u)."""
        _, _, g, _ = self.compact_part(u_hat)
        return self.ops.apply_L_hat(u_hat) - g


def _model(u: Field6, mat: MaterialParams) -> EnergyModel:
    if u.grid != mat.grid:
        raise ValueError("grid mismatch between field and material")
    return EnergyModel(mat)


def evaluate_J(u: Field6, mat: MaterialParams) -> EnergyBreakdown:
    m = _model(u, mat)
    return m.breakdown(m.ops.hat(u.data))


def gradient_J(u: Field6, mat: MaterialParams) -> Field6:
    """L2 gradient L u - V u - f(x, u); its zeros are weak solutions."""
    m = _model(u, mat)
    return Field6(u.grid, m.ops.real(m.gradient(m.ops.hat(u.data))))


def gradient_I_kernel(u: Field6, mat: MaterialParams) -> Field6:
    """Kernel projection of V u + f(x, u); vanishes exactly on the constraint set M."""
    m = _model(u, mat)
    _, _, g, _ = m.compact_part(m.ops.hat(u.data))
    return Field6(u.grid, m.ops.real(m.ops.kernel_hat(g)))


def residual_norms(u: Field6, mat: MaterialParams) -> dict:
    """|grad J|_2, |P_W grad I|_2, <grad J(u), u>_2 and |u|_2."""
    m = _model(u, mat)
    uh = m.ops.hat(u.data)
    _, _, g, _ = m.compact_part(uh)
    gj = m.ops.apply_L_hat(uh) - g
    return {
        "residual_full": m.ops.norm_hat(gj),
        "residual_kernel": m.ops.norm_hat(m.ops.kernel_hat(g)),
        "nehari": m.ops.inner_hat(gj, uh),
        "u_norm": m.ops.norm_hat(uh),
    }
