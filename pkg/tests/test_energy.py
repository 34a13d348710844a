import numpy as np
import pytest

from nlmaxwell.energy import EnergyModel, evaluate_J, gradient_I_kernel, gradient_J, residual_norms
from nlmaxwell.grid import Field6, GridSpec
from nlmaxwell.material import Coefficient, MaterialParams
from nlmaxwell.operators import apply_grad_circ, b_L, helmholtz_decompose, random_smooth_field

from conftest import kerr


def _gauss_material(n=48):
    g = GridSpec(16.0, n)
    return MaterialParams.from_coefficients(g, 1.0, 1.0, 4.0, Coefficient("gaussian", 0.4, 0.3, 2.0),
                                            Coefficient("constant", 1.0))


def test_zero_field():
    mat = kerr(12.0, 16)
    z = Field6.zeros(mat.grid)
    e = evaluate_J(z, mat)
    assert e.quadratic == e.potential == e.nonlinear == 0.0
    assert gradient_J(z, mat).norm() == 0.0
    assert gradient_I_kernel(z, mat).norm() == 0.0


def test_breakdown_invariants(rng):
    mat = _gauss_material()
    u = Field6(mat.grid, random_smooth_field(mat.grid, rng))
    e = evaluate_J(u, mat)
    assert e.J + e.I == pytest.approx(e.quadratic, rel=1e-14)
    assert e.potential >= 0 and e.nonlinear >= 0
    assert 2 * e.quadratic == pytest.approx(b_L(u, mat.k), rel=1e-10)
    d = e.to_dict()
    assert d["J"] == e.J and d["I"] == e.I


def test_kernel_field_has_no_quadratic_part(rng):
    mat = kerr(12.0, 32)
    a = random_smooth_field(mat.grid, rng, 2)
    w = apply_grad_circ(a[0], a[1], mat.k, mat.grid)
    e = evaluate_J(w, mat)
    assert abs(e.quadratic) < 1e-20 * max(1.0, e.I)
    assert e.J == pytest.approx(-e.I) and e.J <= 0


def test_single_mode_closed_form():
    # Gamma = 0 (validation bypassed): J(v) = (|xi|^2 + k^2 - V0) / 2 * |v|^2 for one range mode
    g = GridSpec(2 * np.pi, 32)
    k, V0 = 1.3, 0.6
    mat = MaterialParams(g, k, 1.0, 4.0, V0, V0, 0.0, validate=False)
    X, Y = g.mesh
    xi = (2.0, 1.0)
    ph = xi[0] * X + xi[1] * Y
    # div-free in the (U1, U2) plane with U~ = 0 and U3 = 0: range element
    data = np.zeros((6, 32, 32))
    data[0] = -xi[1] * np.cos(ph)
    data[1] = xi[0] * np.cos(ph)
    u = Field6(g, data)
    v, w = helmholtz_decompose(u, k)
    assert w.norm() < 1e-13
    e = evaluate_J(u, mat)
    lam = xi[0] ** 2 + xi[1] ** 2 + k * k
    norm2 = (xi[0] ** 2 + xi[1] ** 2) * 0.5 * (2 * np.pi) ** 2
    assert e.quadratic == pytest.approx(0.5 * lam * norm2, rel=1e-13)
    assert e.J == pytest.approx(0.5 * (lam - V0) * norm2, rel=1e-13)


def test_gradient_matches_central_differences(rng):
    mat = _gauss_material()
    for _ in range(5):
        u = Field6(mat.grid, random_smooth_field(mat.grid, rng))
        u = u * (1 / u.norm())
        phi = Field6(mat.grid, random_smooth_field(mat.grid, rng))
        phi = phi * (1 / phi.norm())
        h = 1e-5
        fd = (evaluate_J(u + phi * h, mat).J - evaluate_J(u - phi * h, mat).J) / (2 * h)
        an = gradient_J(u, mat).inner(phi)
        assert abs(fd - an) <= 1e-6 * max(abs(an), 1e-3)


def test_gradient_in_kernel_directions_is_minus_grad_I(rng):
    mat = _gauss_material(32)
    u = Field6(mat.grid, random_smooth_field(mat.grid, rng))
    gJ = gradient_J(u, mat)
    _, gJ_kernel = helmholtz_decompose(gJ, mat.k)
    gI = gradient_I_kernel(u, mat)
    assert (gJ_kernel + gI).norm() < 1e-12 * gI.norm()


def test_gradient_I_kernel_vanishes_for_range_field_without_nonlinearity(rng):
    g = GridSpec(12.0, 32)
    mat = MaterialParams(g, 1.0, 1.0, 4.0, 0.5, 0.5, 0.0, validate=False)
    v, _ = helmholtz_decompose(Field6(g, random_smooth_field(g, rng)), 1.0)
    assert gradient_I_kernel(v, mat).norm() < 1e-14 * v.norm()


def test_scaling_for_kerr(rng):
    mat = kerr(12.0, 32)
    u = Field6(mat.grid, random_smooth_field(mat.grid, rng))
    t = 1.9
    a, b = evaluate_J(u, mat), evaluate_J(u * t, mat)
    assert b.nonlinear == pytest.approx(t**4 * a.nonlinear, rel=1e-13)
    assert b.quadratic == pytest.approx(t**2 * a.quadratic, rel=1e-13)


def test_translation_invariance_for_periodic_medium(rng):
    g = GridSpec(8.0, 64)
    mat = MaterialParams.from_coefficients(g, 1.0, 1.0, 4.0, Coefficient("periodic", 0.4, 0.1, period=1.0),
                                           Coefficient("constant", 1.0))
    u = Field6(g, random_smooth_field(g, rng))
    shifted = Field6(g, np.roll(u.data, (8, -24), axis=(1, 2)))
    assert evaluate_J(shifted, mat).J == pytest.approx(evaluate_J(u, mat).J, rel=1e-12)


def test_residual_norms_consistent(rng):
    mat = _gauss_material(32)
    u = Field6(mat.grid, random_smooth_field(mat.grid, rng))
    rn = residual_norms(u, mat)
    assert rn["residual_full"] == pytest.approx(gradient_J(u, mat).norm(), rel=1e-12)
    assert rn["residual_kernel"] == pytest.approx(gradient_I_kernel(u, mat).norm(), rel=1e-12)
    assert rn["nehari"] == pytest.approx(gradient_J(u, mat).inner(u), rel=1e-10)
    assert EnergyModel(mat).V_max == pytest.approx(0.7)
