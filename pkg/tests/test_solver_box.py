import numpy as np

from sumhess import geometry, grids, solver
from sumhess.lift import ConeSpec
from sumhess.solver import BoxSystem, ProblemSpec


def arbitrary_fields_problem(spec, extents=(2.0, 2.0, 2.0)):
    def f(points):
        return 2.0 + np.cos(points).sum(axis=1) ** 2

    def a(points):
        return 1.5 + 0.25 * np.sin(points[:, 0])

    def b(points, normals):
        return 1.0 + points.prod(axis=1)

    return ProblemSpec(
        spec=spec, geom=geometry.box(extents), f=f, a=a, b=b
    )


def test_normal_derivative_exact_for_quadratics():
    grid = grids.box_grid([2.0, 2.0, 2.0], 9)
    u = 0.5 * (grid.points**2).sum(axis=1)
    dnu_u = (grid.dnu @ u)[grid.boundary_flat]
    x_dot_nu = (grid.points[grid.boundary_flat] * grid.normals[grid.boundary_flat]).sum(axis=1)
    assert np.abs(dnu_u - x_dot_nu).max() < 1e-13


def test_box_hessian_exact_for_quadratic_forms():
    rng = np.random.default_rng(3)
    grid = grids.box_grid([2.0, 1.6, 2.4], (9, 7, 11))
    A = rng.normal(size=(3, 3))
    A = (A + A.T) / 2
    u = 0.5 * np.einsum("pi,ij,pj->p", grid.points, A, grid.points)
    H = grids.box_hessians(grid, u)
    assert np.abs(H - A[None]).max() < 1e-10


def test_t0_anchor_residual_zero_box():
    spec = ConeSpec(3, 2, 2)
    problem = arbitrary_fields_problem(spec)
    grid = grids.box_grid(problem.geom.extents, 17)
    system = BoxSystem(problem, grid)
    res = system.residual(system.initial_values(), 0.0)
    assert np.abs(res).max() <= 1e-12


def test_box_jacobian_matches_finite_differences():
    spec = ConeSpec(3, 2, 2)
    problem = arbitrary_fields_problem(spec)
    grid = grids.box_grid(problem.geom.extents, 7)
    system = BoxSystem(problem, grid)
    rng = np.random.default_rng(11)
    u = system.initial_values() + 1e-3 * rng.normal(size=grid.npoints)
    assert system.min_margin(u) > 0
    for t in (0.4, 1.0):
        J = system.jacobian(u, t)
        v = rng.normal(size=grid.npoints)
        eps = 1e-6
        fd = (
            system.residual(u + eps * v, t, require_admissible=False)
            - system.residual(u - eps * v, t, require_admissible=False)
        ) / (2 * eps)
        Jv = J @ v
        assert np.abs(Jv - fd).max() / np.abs(Jv).max() < 1e-5


def test_box_manufactured_small():
    spec = ConeSpec(3, 2, 2)
    report = solver.manufactured_suite("box", spec, (9, 17))
    assert 1.5 <= report["observed_order"] <= 2.3, report
    for row in report["rows"]:
        assert row["diagnostics"]["bound_ok"]
        assert row["diagnostics"]["max_on_boundary"]
        assert row["diagnostics"]["admissible_everywhere"]


def test_box_four_dimensional():
    spec = ConeSpec(4, 2, 2)
    problem, exact = solver.box_cosine_problem(spec)
    state, grid = solver.box_solve(problem, 7)
    assert state.t == 1.0
    assert np.abs(state.values - exact(grid.points)).max() < 2e-2
    assert state.diagnostics["bound_ok"] and state.diagnostics["max_on_boundary"]


def test_box_non_cubic_mesh():
    spec = ConeSpec(3, 2, 2)
    problem, exact = solver.box_cosine_problem(spec, extents=[2.0, 1.5, 2.5])
    state, grid = solver.box_solve(problem, (9, 7, 11))
    assert state.t == 1.0
    assert np.abs(state.values - exact(grid.points)).max() < 1e-2
    assert state.diagnostics["bound_ok"] and state.diagnostics["max_on_boundary"]


def test_box_solution_dependent_f():
    spec = ConeSpec(3, 2, 2)
    problem, exact = solver.box_cosine_problem(spec)
    base_f = problem.f
    problem.f = lambda pts, u: base_f(pts) + (exact(pts) - u)
    problem.f_u = lambda pts, u: -np.ones(pts.shape[0])
    state, grid = solver.box_solve(problem, 9)
    assert state.t == 1.0
    assert np.abs(state.values - exact(grid.points)).max() < 5e-3


def test_box_trivial_path():
    spec = ConeSpec(3, 2, 2)
    K0 = solver.homotopy_constant(spec)

    def f(points):
        return np.full(points.shape[0], K0)

    def a(points):
        return np.ones(points.shape[0])

    def b(points, normals):
        return (points * normals).sum(axis=1) + 0.5 * (points**2).sum(axis=1)

    problem = ProblemSpec(spec=spec, geom=geometry.box([2.0, 2.0, 2.0]), f=f, a=a, b=b)
    state, grid = solver.box_solve(problem, 9)
    assert state.t == 1.0
    assert sum(s["newton_iters"] for s in state.steps) == 0
