import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlmaxwell.fields import energy_bound, maxwell_residuals, reconstruct, total_energy
from nlmaxwell.grid import Field6
from nlmaxwell.operators import apply_grad_circ, random_smooth_field
from nlmaxwell.solver import default_initial, ground_state_solve

from conftest import kerr


@pytest.fixture(scope="module")
def mat():
    return kerr(12.0, 32)


@pytest.fixture(scope="module")
def solved():
    m = kerr(24.0, 64)
    return m, ground_state_solve(default_initial(m.grid, m.k), m)


def _random(mat, seed):
    return Field6(mat.grid, random_smooth_field(mat.grid, np.random.default_rng(seed), length=1.5))


def test_zero_field_gives_zero_fields(mat):
    s = reconstruct(Field6.zeros(mat.grid), mat, 0.3, [0.0, 0.5])
    for name in ("E", "B", "D", "H", "energy_density"):
        assert np.all(getattr(s, name) == 0)
    assert total_energy(Field6.zeros(mat.grid), mat, 0.0) == 0.0
    assert all(v == 0 for v in maxwell_residuals(s).values())


def test_shapes_and_constitutive_relations(mat):
    u = _random(mat, 1)
    s = reconstruct(u, mat, 0.0, [0.0, 0.25, 0.5])
    assert s.E.shape == (3, 3, 32, 32) and s.energy_density.shape == (3, 32, 32)
    assert np.array_equal(s.H, s.B)
    # at theta = 0 E = U, at theta = pi/2 E = U~
    assert np.allclose(s.E[0], u.data[:3])
    s2 = reconstruct(u, mat, math.pi / (2 * mat.omega), [0.0])
    assert np.allclose(s2.E[0], u.data[3:])
    chi = (mat.V + mat.Gamma * np.sum(u.data**2, axis=0)) / mat.omega**2
    assert np.allclose(s.D, chi * s.E)


@settings(max_examples=10)
@given(t=st.floats(0, 10), z=st.floats(-5, 5))
def test_time_and_z_periodicity(mat, t, z):
    u = _random(mat, 2)
    a = reconstruct(u, mat, t, [z])
    b = reconstruct(u, mat, t + 2 * math.pi / mat.omega, [z])
    c = reconstruct(u, mat, t, [z + 2 * math.pi / mat.k])
    np.testing.assert_allclose(b.E, a.E, atol=1e-10)
    np.testing.assert_allclose(c.B, a.B, atol=1e-10)


def test_faraday_and_div_B_hold_for_any_profile(mat):
    for seed in range(3):
        s = reconstruct(_random(mat, seed), mat, 0.7, [0.0, 0.3])
        res = maxwell_residuals(s)
        assert res["faraday"] < 1e-12
        assert res["div_B"] < 1e-12


def test_ampere_detects_non_solutions(mat):
    res = maxwell_residuals(reconstruct(_random(mat, 4), mat, 0.0, [0.0]))
    assert res["ampere"] > 1e-2
    X, Y = mat.grid.mesh
    bump = np.exp(-(X**2 + Y**2))
    w = apply_grad_circ(bump, np.zeros_like(bump), mat.k, mat.grid)
    res = maxwell_residuals(reconstruct(w, mat, 0.0, [0.0]))
    assert res["ampere"] > 1e-2


def test_z_quadrature_is_converged(mat):
    u = _random(mat, 5)
    for t in (0.0, 1.3):
        assert abs(total_energy(u, mat, t, n_z=16) - total_energy(u, mat, t, n_z=32)) < 1e-10 * abs(
            total_energy(u, mat, t, n_z=32))


def test_energy_is_shift_invariant_in_a(mat):
    u = _random(mat, 6)
    # z and t enter through theta = kz + wt, so moving the window by a equals a time shift
    e1 = total_energy(u, mat, 0.0, a=0.4)
    e2 = total_energy(u, mat, 0.4 * mat.k / mat.omega, a=0.0)
    assert e1 == pytest.approx(e2, rel=1e-12)


def test_solution_fields_and_energy_bound(solved):
    mat, res = solved
    ts = np.linspace(0, 2 * math.pi / mat.omega, 8, endpoint=False)
    snaps = [reconstruct(res.u_star, mat, t, [0.0, 0.5]) for t in ts]
    r = maxwell_residuals(snaps)
    assert r["faraday"] < 1e-10 and r["div_B"] < 1e-10
    assert r["ampere"] < 1e-3  # aliasing limited on this coarse grid
    bound = energy_bound(res.u_star, mat)
    L = [total_energy(res.u_star, mat, t) for t in ts]
    assert max(L) <= bound * (1 + 1e-10)
    assert min(L) > 0
