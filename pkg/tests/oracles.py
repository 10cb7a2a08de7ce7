"""Independent brute-force oracles for the test suite.

The polynomial integrator expands every element integrand in reference
monomials and integrates with the exact factorial formula; it shares no
code with the package's Gauss-quadrature assembly path.
"""

import math

import numpy as np


class Poly2:
    """Bivariate polynomial in reference coordinates, dense coefficients."""

    def __init__(self, coeffs):
        self.c = np.atleast_2d(np.asarray(coeffs, dtype=float))

    @classmethod
    def const(cls, value):
        return cls([[value]])

    @classmethod
    def xi(cls):
        return cls([[0.0], [1.0]])

    @classmethod
    def eta(cls):
        return cls([[0.0, 1.0]])

    def __add__(self, other):
        a, b = self.c, other.c
        n0 = max(a.shape[0], b.shape[0])
        n1 = max(a.shape[1], b.shape[1])
        out = np.zeros((n0, n1))
        out[:a.shape[0], :a.shape[1]] += a
        out[:b.shape[0], :b.shape[1]] += b
        return Poly2(out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        return Poly2(s * self.c)

    def __mul__(self, other):
        a, b = self.c, other.c
        out = np.zeros((a.shape[0] + b.shape[0] - 1,
                        a.shape[1] + b.shape[1] - 1))
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                if a[i, j] != 0.0:
                    out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
        return Poly2(out)

    def integrate_reference(self):
        """Exact integral over the reference triangle (factorial formula)."""
        total = 0.0
        for i in range(self.c.shape[0]):
            for j in range(self.c.shape[1]):
                if self.c[i, j] != 0.0:
                    total += self.c[i, j] * (math.factorial(i) * math.factorial(j)
                                             / math.factorial(i + j + 2))
        return total


def barycentric_polys():
    one = Poly2.const(1.0)
    xi, eta = Poly2.xi(), Poly2.eta()
    return [one - xi - eta, xi, eta]


def basis_polys(degree):
    lam = barycentric_polys()
    if degree == 1:
        return lam
    out = []
    for i in range(3):
        out.append(lam[i] * (lam[i].scale(2.0) - Poly2.const(1.0)))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        out.append((lam[j] * lam[k]).scale(4.0))
    return out


def basis_grad_polys(degree):
    """Reference-coordinate gradients as polynomial pairs."""
    dl = [(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)]
    lam = barycentric_polys()
    if degree == 1:
        return [(Poly2.const(g[0]), Poly2.const(g[1])) for g in dl]
    out = []
    for i in range(3):
        factor = lam[i].scale(4.0) - Poly2.const(1.0)
        out.append((factor.scale(dl[i][0]), factor.scale(dl[i][1])))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        gx = lam[k].scale(4.0 * dl[j][0]) + lam[j].scale(4.0 * dl[k][0])
        gy = lam[k].scale(4.0 * dl[j][1]) + lam[j].scale(4.0 * dl[k][1])
        out.append((gx, gy))
    return out


class TriangleOracle:
    """Exact element integrals on one physical triangle."""

    def __init__(self, pts, degree):
        pts = np.asarray(pts, dtype=float)
        J = np.column_stack([pts[1] - pts[0], pts[2] - pts[0]])
        self.detJ = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        Jinv = np.array([[J[1, 1], -J[0, 1]], [-J[1, 0], J[0, 0]]]) / self.detJ
        self.phi = basis_polys(degree)
        gref = basis_grad_polys(degree)
        # physical gradient: d/dx_k = sum_m dref_m * Jinv[m, k]
        self.gphys = []
        for gx, gy in gref:
            px = gx.scale(Jinv[0, 0]) + gy.scale(Jinv[1, 0])
            py = gx.scale(Jinv[0, 1]) + gy.scale(Jinv[1, 1])
            self.gphys.append((px, py))

    def integral(self, poly):
        return self.detJ * poly.integrate_reference()


def field_poly(oracle, local_coeffs):
    out = Poly2.const(0.0)
    for c, phi in zip(local_coeffs, oracle.phi):
        out = out + phi.scale(c)
    return out


def dense_mass(space):
    n = space.scalar_dof_count
    out = np.zeros((n, n))
    mesh = space.mesh
    for t, dofs in enumerate(space.scalar_cell_dofs):
        oracle = TriangleOracle(mesh.vertices[mesh.triangles[t]], space.degree)
        for a, ga in enumerate(dofs):
            for b, gb in enumerate(dofs):
                out[ga, gb] += oracle.integral(oracle.phi[a] * oracle.phi[b])
    return _expand_vector(out, space)


def dense_stiffness(space):
    n = space.scalar_dof_count
    out = np.zeros((n, n))
    mesh = space.mesh
    for t, dofs in enumerate(space.scalar_cell_dofs):
        oracle = TriangleOracle(mesh.vertices[mesh.triangles[t]], space.degree)
        for a, ga in enumerate(dofs):
            for b, gb in enumerate(dofs):
                val = oracle.integral(oracle.gphys[a][0] * oracle.gphys[b][0]
                                      + oracle.gphys[a][1] * oracle.gphys[b][1])
                out[ga, gb] += val
    return _expand_vector(out, space)


def dense_divergence(vel_space, p_space):
    out = np.zeros((p_space.dof_count, vel_space.dof_count))
    mesh = vel_space.mesh
    for t in range(mesh.num_triangles):
        vo = TriangleOracle(mesh.vertices[mesh.triangles[t]], vel_space.degree)
        po = TriangleOracle(mesh.vertices[mesh.triangles[t]], p_space.degree)
        vdofs = vel_space.scalar_cell_dofs[t]
        pdofs = p_space.scalar_cell_dofs[t]
        for i, gi in enumerate(pdofs):
            for a, ga in enumerate(vdofs):
                for comp in range(2):
                    val = vo.integral(po.phi[i] * vo.gphys[a][comp])
                    out[gi, 2 * ga + comp] += val
    return out


def dense_cross(w_field, vel_space):
    nv = vel_space.dof_count
    out = np.zeros((nv, nv))
    mesh = vel_space.mesh
    wspace = w_field.space
    for t in range(mesh.num_triangles):
        oracle = TriangleOracle(mesh.vertices[mesh.triangles[t]], vel_space.degree)
        wpoly = field_poly(oracle, w_field.coeffs[wspace.scalar_cell_dofs[t]])
        vdofs = vel_space.scalar_cell_dofs[t]
        for a, ga in enumerate(vdofs):          # test function
            for b, gb in enumerate(vdofs):      # trial function
                val = oracle.integral(wpoly * oracle.phi[a] * oracle.phi[b])
                # integral of w * (v2 chi1 - v1 chi2)
                out[2 * ga, 2 * gb + 1] += val
                out[2 * ga + 1, 2 * gb] -= val
    return out


def dense_convection_plain(v_field, scalar_space):
    """(v . grad phi_b, phi_a) without skew symmetrization."""
    n = scalar_space.dof_count
    out = np.zeros((n, n))
    mesh = scalar_space.mesh
    vspace = v_field.space
    for t in range(mesh.num_triangles):
        oracle = TriangleOracle(mesh.vertices[mesh.triangles[t]],
                                scalar_space.degree)
        sdofs = vspace.scalar_cell_dofs[t]
        vx = field_poly(oracle, v_field.coeffs[2 * sdofs])
        vy = field_poly(oracle, v_field.coeffs[2 * sdofs + 1])
        dofs = scalar_space.scalar_cell_dofs[t]
        for a, ga in enumerate(dofs):
            for b, gb in enumerate(dofs):
                val = oracle.integral((vx * oracle.gphys[b][0]
                                       + vy * oracle.gphys[b][1]) * oracle.phi[a])
                out[ga, gb] += val
    return out


def dense_convection_skew(v_field, scalar_space):
    plain = dense_convection_plain(v_field, scalar_space)
    return 0.5 * (plain - plain.T)


def dense_nudge(partition, space, mu):
    """mu * sum_K |K|^{-1} (int_K phi_i)(int_K phi_j), per component."""
    mesh = space.mesh
    E = np.zeros((partition.num_cells, space.scalar_dof_count))
    for t, dofs in enumerate(space.scalar_cell_dofs):
        oracle = TriangleOracle(mesh.vertices[mesh.triangles[t]], space.degree)
        for a, ga in enumerate(dofs):
            E[partition.cell_of[t], ga] += oracle.integral(oracle.phi[a])
    G = mu * (E.T / partition.cell_area) @ E
    return _expand_vector(G, space)


def _expand_vector(scalar_mat, space):
    if space.components == 1:
        return scalar_mat
    return np.kron(scalar_mat, np.eye(2))


def boundary_flux(fn, domain, npts=4000):
    """Counterclockwise boundary integral of fn . n on a rectangle."""
    x0, y0, x1, y1 = domain
    from numpy.polynomial.legendre import leggauss
    g, w = leggauss(64)

    def seg(ax, ay, bx, by, nx, ny):
        xm = 0.5 * (ax + bx) + 0.5 * (bx - ax) * g
        ym = 0.5 * (ay + by) + 0.5 * (by - ay) * g
        u1, u2 = fn(xm, ym)
        length = math.hypot(bx - ax, by - ay)
        return 0.5 * length * np.sum(w * (u1 * nx + u2 * ny))

    return (seg(x0, y0, x1, y0, 0.0, -1.0) + seg(x1, y0, x1, y1, 1.0, 0.0)
            + seg(x1, y1, x0, y1, 0.0, 1.0) + seg(x0, y1, x0, y0, -1.0, 0.0))
