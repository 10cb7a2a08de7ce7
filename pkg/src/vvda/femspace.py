"""Lagrange finite element spaces (P1/P2, scalar or 2-vector) on triangles.

Degrees of freedom are numbered vertices first, then edges; vector
spaces interleave components (x0, y0, x1, y1, ...).  Periodic meshes get
one DOF per identified vertex/edge class.  Dirichlet handling is by
strong elimination; the space only reports which DOFs are constrained.
"""

import numpy as np

from .errors import GeometryError, InvalidArgument
from .mesh import locate_triangles
from .quadrature import quadrature_rule

__all__ = ["FunctionSpace", "Field", "build_space", "eval_basis",
           "interpolate", "evaluate_field"]


# -- reference elements ---------------------------------------------------

def reference_basis(degree, xy):
    """Values and reference gradients of the local basis at points ``xy``.

    Returns (phi, gref) with shapes (npts, nloc) and (npts, nloc, 2).
    Local ordering: the three vertex functions, then (for P2) the three
    edge functions, edge k opposite vertex k.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    x, y = xy[:, 0], xy[:, 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if degree == 1:
        phi = np.stack([l0, l1, l2], axis=1)
        gref = np.broadcast_to(dl, (len(x), 3, 2)).copy()
        return phi, gref
    if degree == 2:
        lam = (l0, l1, l2)
        phi = np.empty((len(x), 6))
        gref = np.empty((len(x), 6, 2))
        for i in range(3):
            phi[:, i] = lam[i] * (2.0 * lam[i] - 1.0)
            gref[:, i, :] = (4.0 * lam[i] - 1.0)[:, None] * dl[i]
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            phi[:, 3 + i] = 4.0 * lam[j] * lam[k]
            gref[:, 3 + i, :] = 4.0 * (lam[k][:, None] * dl[j]
                                       + lam[j][:, None] * dl[k])
        return phi, gref
    raise InvalidArgument("unsupported polynomial degree %r" % (degree,))


def triangle_geometry(mesh):
    """Per-triangle affine map data: (Jinv, detJ), cached on the mesh."""
    cached = getattr(mesh, "_geometry", None)
    if cached is not None:
        return cached
    p = mesh.vertices[mesh.triangles]
    J = np.empty((mesh.num_triangles, 2, 2))
    J[:, :, 0] = p[:, 1] - p[:, 0]
    J[:, :, 1] = p[:, 2] - p[:, 0]
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(detJ == 0.0):
        raise GeometryError("degenerate triangle (zero Jacobian)")
    Jinv = np.empty_like(J)
    Jinv[:, 0, 0] = J[:, 1, 1] / detJ
    Jinv[:, 0, 1] = -J[:, 0, 1] / detJ
    Jinv[:, 1, 0] = -J[:, 1, 0] / detJ
    Jinv[:, 1, 1] = J[:, 0, 0] / detJ
    mesh._geometry = (Jinv, detJ)
    return mesh._geometry


class FunctionSpace:
    """Scalar or 2-vector Lagrange space bound to a mesh.

    Attributes
    ----------
    mesh : Mesh
    degree : int (1 or 2)
    components : int (1 or 2)
    dof_count : int
    cell_dofs : (nt, nloc*components) int array
        Global DOFs per triangle, component-interleaved.
    boundary_dofs : int array
        DOFs subject to strong Dirichlet conditions (empty unless
        bc_mode == 'dirichlet').
    zero_mean_constraint : bool
        Pressure-style space whose nullspace direction is the constant 1.
    """

    def __init__(self, mesh, degree, components, bc_mode, zero_mean):
        self.mesh = mesh
        self.degree = degree
        self.components = components
        self.bc_mode = bc_mode
        self.zero_mean_constraint = zero_mean
        self._batches = {}
        self._integral_vec = None

        rep = mesh.vertex_reps()
        masters = np.unique(rep)
        vclass = np.full(mesh.num_vertices, -1, dtype=np.int64)
        vclass[masters] = np.arange(len(masters))
        vclass = vclass[rep]
        self._vertex_class = vclass
        self._num_vertex_dofs = len(masters)
        self._master_vertices = masters

        tris = mesh.triangles
        if degree == 1:
            scalar_cell = vclass[tris]
            self.scalar_dof_count = len(masters)
        else:
            table = mesh.edge_table()
            scalar_cell = np.hstack([vclass[tris],
                                     len(masters) + table.tri_edges])
            self.scalar_dof_count = len(masters) + table.num_edges
        self.scalar_cell_dofs = np.ascontiguousarray(scalar_cell)

        if components == 1:
            self.cell_dofs = self.scalar_cell_dofs
        else:
            nloc = scalar_cell.shape[1]
            cd = np.empty((len(tris), 2 * nloc), dtype=np.int64)
            cd[:, 0::2] = 2 * scalar_cell
            cd[:, 1::2] = 2 * scalar_cell + 1
            self.cell_dofs = np.ascontiguousarray(cd)
        self.dof_count = components * self.scalar_dof_count

        self.boundary_dofs = np.zeros(0, dtype=np.int64)
        if bc_mode == "dirichlet":
            self.boundary_dofs = self._dirichlet_dofs()

    def _dirichlet_dofs(self):
        mesh = self.mesh
        be = mesh.boundary_edges
        tris = mesh.triangles[be[:, 0]]
        locv = np.column_stack([(be[:, 1] + 1) % 3, (be[:, 1] + 2) % 3])
        bverts = tris[np.arange(len(be))[:, None], locv].ravel()
        scalar = set(self._vertex_class[bverts].tolist())
        if self.degree == 2:
            off = self._num_vertex_dofs
            scalar.update((off + mesh.boundary_edge_ids()).tolist())
        scalar = np.array(sorted(scalar), dtype=np.int64)
        if self.components == 1:
            return scalar
        return np.sort(np.concatenate([2 * scalar, 2 * scalar + 1]))

    @property
    def free_dofs(self):
        mask = np.ones(self.dof_count, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.nonzero(mask)[0]

    def dof_points(self):
        """Coordinates of the scalar DOF nodes (vertices, then edge midpoints)."""
        pts = self.mesh.vertices[self._master_vertices]
        if self.degree == 2:
            pts = np.vstack([pts, self.mesh.edge_table().midpoints])
        return pts

    def integral_vector(self):
        """Vector of basis-function integrals over the domain.

        For a zero-mean space this is the direction in which the constant
        nullspace is removed.
        """
        if self._integral_vec is None:
            batch = self.batch(max(2, 2 * self.degree))
            loc = np.einsum("tq,qa->ta", batch.wdet, batch.phi)
            vec = np.zeros(self.scalar_dof_count)
            np.add.at(vec, self.scalar_cell_dofs, loc)
            if self.components == 2:
                full = np.zeros(self.dof_count)
                full[0::2] = vec
                full[1::2] = vec
                vec = full
            self._integral_vec = vec
        return self._integral_vec

    def batch(self, quad_degree):
        """Bulk quadrature data for this space at the given exactness degree."""
        if quad_degree not in self._batches:
            self._batches[quad_degree] = ElementBatch(self, quadrature_rule(quad_degree))
        return self._batches[quad_degree]


class ElementBatch:
    """Evaluated basis data at quadrature points for every triangle.

    Physical gradients are materialized lazily (``gphys``) since only the
    assembly kernels need them; diagnostics contract through ``gref`` and
    ``Jinv`` to keep memory bounded for high-order error rules.
    """

    def __init__(self, space, rule):
        self.space = space
        self.rule = rule
        mesh = space.mesh
        self.phi, self.gref = reference_basis(space.degree, rule.xy)
        self.Jinv, detJ = triangle_geometry(mesh)
        self.wdet = rule.weights[None, :] * detJ[:, None]
        p0 = mesh.vertices[mesh.triangles[:, 0]]
        ref = rule.xy
        J = np.empty((mesh.num_triangles, 2, 2))
        p = mesh.vertices[mesh.triangles]
        J[:, :, 0] = p[:, 1] - p[:, 0]
        J[:, :, 1] = p[:, 2] - p[:, 0]
        phys = p0[:, None, :] + np.einsum("tkm,qm->tqk", J, ref)
        self.xq = np.ascontiguousarray(phys[:, :, 0])
        self.yq = np.ascontiguousarray(phys[:, :, 1])
        self._gphys = None

    @property
    def gphys(self):
        if self._gphys is None:
            self._gphys = np.ascontiguousarray(
                np.einsum("qam,tmk->tqak", self.gref, self.Jinv))
        return self._gphys

    def scalar_values(self, scalar_coeffs):
        """Field values at all quadrature points, shape (nt, nq)."""
        c = scalar_coeffs[self.space.scalar_cell_dofs]
        return np.einsum("ta,qa->tq", c, self.phi)

    def scalar_gradients(self, scalar_coeffs):
        """Field gradients at all quadrature points, shape (nt, nq, 2)."""
        c = scalar_coeffs[self.space.scalar_cell_dofs]
        gr = np.einsum("ta,qam->tqm", c, self.gref)
        return np.einsum("tqm,tmk->tqk", gr, self.Jinv)


def build_space(mesh, degree, components=1, bc_mode="none", zero_mean=False):
    """Construct a Lagrange space on ``mesh``.

    bc_mode is 'periodic' (required for periodic meshes), 'dirichlet'
    (strong boundary conditions on the whole boundary), or 'none'.
    """
    if degree not in (1, 2):
        raise InvalidArgument("degree must be 1 or 2, got %r" % (degree,))
    if components not in (1, 2):
        raise InvalidArgument("components must be 1 or 2")
    if bc_mode not in ("none", "periodic", "dirichlet"):
        raise InvalidArgument("unknown bc_mode %r" % (bc_mode,))
    if bc_mode == "periodic" and not mesh.periodic:
        raise InvalidArgument("bc_mode 'periodic' requires a periodic mesh")
    if mesh.periodic and bc_mode != "periodic":
        raise InvalidArgument("periodic meshes require bc_mode 'periodic'")
    if bc_mode == "dirichlet" and len(mesh.boundary_edges) == 0:
        raise InvalidArgument("mesh has no boundary for Dirichlet conditions")
    return FunctionSpace(mesh, degree, components, bc_mode, zero_mean)


def eval_basis(space, triangle, quad):
    """Basis values and physical gradients on one triangle.

    Returns (values, gradients) with shapes (nq, nloc) and (nq, nloc, 2);
    gradients are reference gradients mapped by the inverse-transpose
    Jacobian of the affine map.
    """
    if not 0 <= triangle < space.mesh.num_triangles:
        raise InvalidArgument("triangle index out of range")
    phi, gref = reference_basis(space.degree, quad.xy)
    Jinv, _ = triangle_geometry(space.mesh)
    grads = np.einsum("qam,mk->qak", gref, Jinv[triangle])
    return phi, grads


class Field:
    """Coefficient vector bound to a function space."""

    def __init__(self, space, coeffs=None):
        self.space = space
        if coeffs is None:
            coeffs = np.zeros(space.dof_count)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.dof_count,):
            raise InvalidArgument("coefficient vector has length %d, expected %d"
                                  % (coeffs.size, space.dof_count))
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, space):
        return cls(space)

    def copy(self):
        return Field(self.space, self.coeffs.copy())

    def component(self, c):
        """Scalar coefficient slice of component ``c`` of a vector field."""
        if self.space.components == 1:
            if c != 0:
                raise InvalidArgument("scalar field has a single component")
            return self.coeffs
        return self.coeffs[c::2]


def interpolate(space, fn):
    """Nodal interpolant of ``fn``.

    ``fn(x, y)`` must accept numpy arrays; for vector spaces it returns a
    pair (u1, u2).
    """
    pts = space.dof_points()
    vals = fn(pts[:, 0], pts[:, 1])
    if space.components == 1:
        return Field(space, np.asarray(vals, dtype=float))
    coeffs = np.empty(space.dof_count)
    coeffs[0::2] = np.broadcast_to(vals[0], (len(pts),))
    coeffs[1::2] = np.broadcast_to(vals[1], (len(pts),))
    return Field(space, coeffs)


def evaluate_field(field, points):
    """Point evaluation of a discrete field (component-major for vectors)."""
    space = field.space
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tri = locate_triangles(space.mesh, points)
    if np.any(tri < 0):
        raise InvalidArgument("point outside the mesh")
    p0 = space.mesh.vertices[space.mesh.triangles[tri, 0]]
    Jinv, _ = triangle_geometry(space.mesh)
    ref = np.einsum("pmk,pk->pm", Jinv[tri], points - p0)
    phi, _ = reference_basis(space.degree, ref)
    out = []
    for c in range(space.components):
        coeffs = field.component(c)
        local = coeffs[space.scalar_cell_dofs[tri]]
        vals = np.einsum("pa,pa->p", local, phi)
        out.append(vals)
    return out[0] if space.components == 1 else np.array(out)
