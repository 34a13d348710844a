import math

import numpy as np
import pytest

from nlmaxwell.energy import evaluate_J, gradient_I_kernel, gradient_J
from nlmaxwell.grid import Field6, GridSpec
from nlmaxwell.material import Coefficient, MaterialParams
from nlmaxwell.operators import helmholtz_decompose, random_smooth_field
from nlmaxwell.solver import (
    InnerSolveConfig,
    InnerSolveError,
    NoMountainPassError,
    ReducedProblem,
    SolverConfig,
    default_initial,
    ground_state_solve,
    inner_minimize,
    manifold_map,
    mountain_pass_floor,
    ray_maximize,
    reduced_functional,
    reduced_gradient,
)

from conftest import kerr

TOL = 1e-10


def _range_field(mat, rng, scale=1.0):
    u = Field6(mat.grid, random_smooth_field(mat.grid, rng, length=1.5))
    v, _ = helmholtz_decompose(u, mat.k)
    return v * (scale / v.norm())


def _I(u, mat):
    return evaluate_J(u, mat).I


@pytest.fixture(scope="module")
def mat():
    return kerr(16.0, 32)


@pytest.fixture(scope="module")
def solved():
    m = kerr(24.0, 48)
    return m, ground_state_solve(default_initial(m.grid, m.k), m)


def test_config_validation():
    with pytest.raises(ValueError):
        InnerSolveConfig(tolerance=0)
    with pytest.raises(ValueError):
        InnerSolveConfig(max_iterations=0)
    with pytest.raises(ValueError):
        InnerSolveConfig(step_rule="newton")


def test_inner_minimize_trivial_cases(mat, rng):
    assert inner_minimize(Field6.zeros(mat.grid), mat).norm() == 0.0
    lin = MaterialParams(mat.grid, mat.k, 1.0, 4.0, 0.5, 0.5, 0.0, validate=False)
    v = _range_field(lin, rng, 3.0)
    assert inner_minimize(v, lin).norm() == 0.0


def test_inner_minimize_unique_and_optimal(mat, rng):
    v = _range_field(mat, rng, 8.0)
    w1 = inner_minimize(v, mat)
    w2 = inner_minimize(v, mat, w0=Field6(mat.grid, random_smooth_field(mat.grid, rng)))
    assert (w1 - w2).norm() < 10 * TOL
    assert w1.norm() > 1e-3  # the Kerr term couples v to the kernel
    _, wk = helmholtz_decompose(w1, mat.k)
    assert (w1 - wk).norm() < 1e-12 * w1.norm()
    assert gradient_I_kernel(v + w1, mat).norm() <= TOL
    assert _I(v + w1, mat) <= _I(v, mat)


@pytest.mark.parametrize("rule", ["bb", "fixed"])
def test_inner_iterations_are_monotone(mat, rng, rule):
    prob = ReducedProblem(mat, SolverConfig(inner=InnerSolveConfig(step_rule=rule, max_iterations=5000)))
    v = _range_field(mat, rng, 8.0)
    prob.inner_solve(prob.ops.hat(v.data))
    hist = np.array(prob.inner_history)
    assert len(hist) > 2
    assert np.all(np.diff(hist) <= 64 * np.finfo(float).eps * np.abs(hist[:-1]))


def test_inner_non_convergence_carries_iterate(mat, rng):
    v = _range_field(mat, rng, 8.0)
    with pytest.raises(InnerSolveError) as exc:
        inner_minimize(v, mat, InnerSolveConfig(max_iterations=2))
    assert exc.value.residual > TOL and exc.value.w_hat is not None


def test_manifold_map_properties(mat, rng):
    assert manifold_map(Field6.zeros(mat.grid), mat).norm() == 0.0
    for _ in range(3):
        v = _range_field(mat, rng, rng.uniform(1, 10))
        assert reduced_functional(v, mat) >= evaluate_J(v, mat).J
    v = _range_field(mat, rng, 6.0)
    dv = _range_field(mat, rng, 1e-6)
    change = (manifold_map(v + dv, mat) - manifold_map(v, mat)).norm()
    assert change < 10 * 1e-6


def test_reduced_gradient_finite_differences(mat, rng):
    assert reduced_gradient(Field6.zeros(mat.grid), mat).norm() == 0.0
    v = _range_field(mat, rng, 6.0)
    g = reduced_gradient(v, mat)
    _, gk = helmholtz_decompose(g, mat.k)
    assert gk.norm() < 1e-12 * g.norm()
    for _ in range(3):
        phi = _range_field(mat, rng)
        h = 1e-4
        fd = (reduced_functional(v + phi * h, mat) - reduced_functional(v - phi * h, mat)) / (2 * h)
        an = g.inner(phi)
        assert abs(fd - an) < 1e-4 * max(abs(an), 1e-2)


def test_ray_maximize_geometry_and_nehari(mat, rng):
    v = _range_field(mat, rng, 1.0)
    t, Jt = ray_maximize(v, mat)
    assert t > 0 and Jt > 0
    prob = ReducedProblem(mat)
    vh = prob.ops.hat(v.data)
    assert prob.inner_solve(0.05 * t * vh).J > 0  # phi > 0 near 0
    assert prob.inner_solve(3 * t * vh).J < Jt  # and decreases past t*
    u = manifold_map(v * t, mat)
    neh = abs(gradient_J(u, mat).inner(u))
    assert neh < 1e-8 * (1 + u.norm() ** 2)


def test_ray_scaling_in_gamma(rng):
    m1 = kerr(16.0, 32, gamma=1.0)
    m2 = kerr(16.0, 32, gamma=2.0)
    v = _range_field(m1, rng, 1.0)
    t1, J1 = ray_maximize(v, m1)
    t2, J2 = ray_maximize(v, m2)
    assert t2 == pytest.approx(t1 / math.sqrt(2), rel=1e-8)
    assert J2 == pytest.approx(J1 / 2, rel=1e-10)


def test_no_mountain_pass_without_gap(rng):
    bad = kerr(16.0, 32, V0=1.5, validate=False)
    v = default_initial(bad.grid, bad.k, width=4.0)
    with pytest.raises(NoMountainPassError, match="no mountain pass along ray"):
        ray_maximize(v, bad)


def test_default_initial_is_range_field():
    g = GridSpec(24.0, 32)
    for kind in ("gaussian", "random"):
        u = default_initial(g, 1.0, kind=kind, seed=3)
        v, w = helmholtz_decompose(u, 1.0)
        assert w.norm() < 1e-13 * u.norm()
    assert np.array_equal(default_initial(g, 1.0, kind="random", seed=3).data,
                          default_initial(g, 1.0, kind="random", seed=3).data)
    with pytest.raises(ValueError):
        default_initial(g, 1.0, polarization=(0, 0, 0, 0, 0, 0))
    with pytest.raises(ValueError):
        default_initial(g, 1.0, kind="noise")


def test_ground_state_certificates(solved):
    mat, res = solved
    assert res.converged
    assert res.J_value > 0
    assert res.residual_relative < 1e-6
    assert gradient_J(res.u_star, mat).norm() == pytest.approx(res.residual_full, rel=1e-6)
    assert res.nehari_residual <= 1e-6 * (1 + res.u_norm**2)
    assert res.residual_kernel <= TOL
    assert reduced_gradient(res.v_star, mat).norm() < 1e-6 * res.u_norm
    # every outer iterate stays on the constraint set and J decreases
    Js = [r["J_tilde"] for r in res.history]
    assert all(r["residual_kernel"] <= TOL for r in res.history)
    assert np.all(np.diff(Js) <= 1e-12 * abs(Js[0]))


def test_ground_state_above_mountain_pass_floor(solved, rng):
    mat, res = solved
    dirs = [res.v_star] + [_range_field(mat, rng) for _ in range(4)]
    a = mountain_pass_floor(mat, np.linspace(0.2, 3.0, 15), dirs)
    assert 0 < a <= res.J_value


def test_solve_is_deterministic(solved):
    mat, res = solved
    again = ground_state_solve(default_initial(mat.grid, mat.k), mat)
    assert again.J_value == res.J_value
    assert np.array_equal(again.u_star.data, res.u_star.data)


def test_warm_start_from_solution(solved):
    mat, res = solved
    again = ground_state_solve(res.u_star, mat, warm_start=True)
    assert again.converged and again.iterations <= 1
    assert again.J_value == pytest.approx(res.J_value, rel=1e-10)


def test_iteration_cap_reports_not_converged():
    m = kerr(24.0, 32)
    res = ground_state_solve(default_initial(m.grid, m.k), m, SolverConfig(max_iterations=1))
    assert not res.converged and res.iterations == 1


def test_periodic_medium_translation(rng):
    g = GridSpec(8.0, 48)
    mat = MaterialParams.from_coefficients(g, 1.0, 1.0, 4.0, Coefficient("periodic", 0.4, 0.1, period=1.0),
                                           Coefficient("constant", 1.0))
    res = ground_state_solve(default_initial(g, 1.0, width=1.5), mat)
    assert res.converged and res.J_value > 0
    cells = 6  # one period
    for s in [(cells, 0), (0, 2 * cells), (-cells, 3 * cells)]:
        shifted = Field6(g, np.roll(res.u_star.data, s, axis=(1, 2)))
        assert evaluate_J(shifted, mat).J == pytest.approx(res.J_value, rel=1e-12)
