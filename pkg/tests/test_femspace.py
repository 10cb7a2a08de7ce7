import math

import numpy as np
import pytest

from vvda.errors import GeometryError, InvalidArgument
from vvda.femspace import (Field, build_space, eval_basis, evaluate_field,
                           interpolate)
from vvda.mesh import Mesh, generate_structured
from vvda.quadrature import quadrature_rule


def test_p1_dof_count_two_triangles(two_triangle_mesh):
    space = build_space(two_triangle_mesh, 1, 1)
    assert space.dof_count == 4


def test_p2_dof_count_two_triangles(two_triangle_mesh):
    space = build_space(two_triangle_mesh, 2, 1)
    assert space.dof_count == 9     # 4 vertices + 5 edges


def test_p2_vector_periodic_dof_count():
    # Euler-formula oracle on the torus: E = V + T = 16 + 32 = 48
    mesh = generate_structured(4, periodic=True)
    V = mesh.num_distinct_vertices
    E = V + mesh.num_triangles
    space = build_space(mesh, 2, 2, bc_mode="periodic")
    assert space.dof_count == 2 * (V + E) == 128


@pytest.mark.parametrize("degree", [1, 2])
def test_partition_of_unity(degree, two_triangle_mesh, rng):
    space = build_space(two_triangle_mesh, degree, 1)
    rule = quadrature_rule(4)
    for tri in range(two_triangle_mesh.num_triangles):
        values, _ = eval_basis(space, tri, rule)
        assert np.allclose(values.sum(axis=1), 1.0, atol=1e-14)


def test_p1_gradient_closed_form(unit_triangle_mesh):
    # hand symbolic differentiation: basis at vertex (0,0) is 1 - x - y
    space = build_space(unit_triangle_mesh, 1, 1)
    _, grads = eval_basis(space, 0, quadrature_rule(2))
    assert np.allclose(grads[:, 0, :], [-1.0, -1.0], atol=1e-15)
    assert np.allclose(grads[:, 1, :], [1.0, 0.0], atol=1e-15)
    assert np.allclose(grads[:, 2, :], [0.0, 1.0], atol=1e-15)


def test_eval_basis_rejects_bad_triangle(unit_triangle_mesh):
    space = build_space(unit_triangle_mesh, 1, 1)
    with pytest.raises(InvalidArgument):
        eval_basis(space, 5, quadrature_rule(2))


def test_degenerate_triangle_rejected():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(GeometryError):
        Mesh(verts, np.array([[0, 1, 2]]), (0, 0, 2, 1))


def test_unsupported_degree():
    mesh = generate_structured(2)
    with pytest.raises(InvalidArgument):
        build_space(mesh, 3, 1)


@pytest.mark.parametrize("degree", [1, 2])
def test_polynomial_reproduction(degree, rng):
    mesh = generate_structured(3)
    space = build_space(mesh, degree, 1)

    def poly(x, y):
        if degree == 1:
            return 0.5 - 2.0 * x + 3.0 * y
        return 0.5 - 2.0 * x + 3.0 * y + x * y - 0.25 * x * x + y * y

    f = interpolate(space, poly)
    pts = rng.random((30, 2))
    assert np.allclose(evaluate_field(f, pts), poly(pts[:, 0], pts[:, 1]),
                       atol=1e-12)


def test_periodic_identified_point_values(rng):
    L = 2 * math.pi
    mesh = generate_structured(4, periodic=True)
    space = build_space(mesh, 2, 1, bc_mode="periodic")
    f = Field(space, rng.standard_normal(space.dof_count))
    ys = np.linspace(0.1, L - 0.1, 7)
    left = evaluate_field(f, np.column_stack([np.zeros_like(ys), ys]))
    right = evaluate_field(f, np.column_stack([np.full_like(ys, L), ys]))
    assert np.allclose(left, right, atol=1e-12)
    xs = np.linspace(0.1, L - 0.1, 7)
    bottom = evaluate_field(f, np.column_stack([xs, np.zeros_like(xs)]))
    top = evaluate_field(f, np.column_stack([xs, np.full_like(xs, L)]))
    assert np.allclose(bottom, top, atol=1e-12)


def test_zero_mean_space_flags_constant_nullspace():
    from vvda.assembly import assemble_mass
    mesh = generate_structured(3)
    space = build_space(mesh, 1, 1, zero_mean=True)
    assert space.zero_mean_constraint
    # the flagged direction is the mass action of the constant-1 vector
    ones = np.ones(space.dof_count)
    assert np.allclose(space.integral_vector(),
                       assemble_mass(space) @ ones, atol=1e-14)
    assert space.integral_vector().sum() == pytest.approx(1.0, abs=1e-13)


def test_dirichlet_boundary_dofs():
    mesh = generate_structured(2)
    space = build_space(mesh, 2, 1, bc_mode="dirichlet")
    pts = space.dof_points()
    on_boundary = ((np.abs(pts[:, 0]) < 1e-14) | (np.abs(pts[:, 0] - 1) < 1e-14)
                   | (np.abs(pts[:, 1]) < 1e-14) | (np.abs(pts[:, 1] - 1) < 1e-14))
    assert set(space.boundary_dofs.tolist()) == set(np.nonzero(on_boundary)[0])
    vec = build_space(mesh, 2, 2, bc_mode="dirichlet")
    assert len(vec.boundary_dofs) == 2 * len(space.boundary_dofs)


def test_bc_mode_validation():
    mesh = generate_structured(2, periodic=True)
    with pytest.raises(InvalidArgument):
        build_space(mesh, 2, 1)                      # periodic mesh needs periodic bc
    with pytest.raises(InvalidArgument):
        build_space(generate_structured(2), 2, 1, bc_mode="periodic")
    with pytest.raises(InvalidArgument):
        build_space(mesh, 2, 1, bc_mode="dirichlet")  # no boundary on the torus


def test_field_length_validation(two_triangle_mesh):
    space = build_space(two_triangle_mesh, 1, 1)
    with pytest.raises(InvalidArgument):
        Field(space, np.zeros(3))
