"""Sparse operator assembly for the velocity-vorticity schemes.

Global matrices are scipy CSR.  The per-step operators (vorticity-
weighted cross coupling and skew convection) go through a precomputed
CSR pattern and the selected element kernels; the time-independent ones
(mass, stiffness, divergence, nudging Gram) are assembled once per run.

Quadrature exactness is degree 6 everywhere here, which integrates the
P2 x P2 x grad-P2 products exactly on affine triangles.
"""

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import InvalidArgument

__all__ = [
    "ASSEMBLY_DEGREE", "NudgeOperator",
    "assemble_mass", "assemble_stiffness", "assemble_divergence",
    "assemble_cross", "assemble_convection_skew", "assemble_forcing",
    "build_nudge", "assemble_nudge_matrix", "assemble_nudge_rhs",
]

ASSEMBLY_DEGREE = 6

_CROSS_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])


class _CsrPattern:
    """Fixed sparsity pattern with a (cell, a, b) -> data-slot map."""

    def __init__(self, cell_dofs, ndofs):
        nt, nloc = cell_dofs.shape
        rows = np.repeat(cell_dofs, nloc, axis=1).ravel()
        cols = np.tile(cell_dofs, (1, nloc)).ravel()
        keys = rows * ndofs + cols
        order = np.argsort(keys, kind="stable")
        sk = keys[order]
        new = np.empty(len(sk), dtype=bool)
        new[0] = True
        new[1:] = sk[1:] != sk[:-1]
        slot_sorted = np.cumsum(new) - 1
        self.slot = np.empty(len(sk), dtype=np.int64)
        self.slot[order] = slot_sorted
        uk = sk[new]
        self.indices = (uk % ndofs).astype(np.int32)
        self.indptr = np.zeros(ndofs + 1, dtype=np.int32)
        counts = np.bincount((uk // ndofs).astype(np.int64), minlength=ndofs)
        np.cumsum(counts, out=self.indptr[1:])
        self.shape = (ndofs, ndofs)
        self.nnz = len(uk)

    def assemble(self, local):
        data = np.zeros(self.nnz)
        kernels.scatter_add(data, self.slot, np.ascontiguousarray(local).ravel())
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()),
                             shape=self.shape)


def _scalar_pattern(space):
    pat = getattr(space, "_csr_pattern", None)
    if pat is None:
        pat = _CsrPattern(space.scalar_cell_dofs, space.scalar_dof_count)
        space._csr_pattern = pat
    return pat


def _vectorize(mat_scalar, components, block=None):
    if components == 1:
        return mat_scalar.tocsr()
    if block is None:
        block = sp.identity(2, format="csr")
    return sp.kron(mat_scalar, block, format="csr")


def _check_same_mesh(a, b):
    if a.mesh is not b.mesh:
        raise InvalidArgument("operands live on different meshes")


def assemble_mass(space):
    """Gram matrix of the basis (symmetric positive definite)."""
    batch = space.batch(ASSEMBLY_DEGREE)
    local = kernels.weighted_mass_local(batch.wdet, batch.phi)
    M = _scalar_pattern(space).assemble(local)
    M.eliminate_zeros()
    return _vectorize(M, space.components)


def assemble_stiffness(space):
    """Gradient Gram matrix (symmetric positive semidefinite)."""
    batch = space.batch(ASSEMBLY_DEGREE)
    local = np.einsum("tq,tqak,tqbk->tab", batch.wdet, batch.gphys,
                      batch.gphys, optimize=True)
    K = _scalar_pattern(space).assemble(local)
    return _vectorize(K, space.components)


def assemble_divergence(vel_space, pressure_space):
    """Coupling matrix B with (B v)_i = (div v, q_i)."""
    _check_same_mesh(vel_space, pressure_space)
    if vel_space.components != 2:
        raise InvalidArgument("velocity space must be vector valued")
    if not (vel_space.degree == 2 and pressure_space.degree == 1):
        raise InvalidArgument("divergence coupling expects the P2/P1 pair")
    vb = vel_space.batch(ASSEMBLY_DEGREE)
    pb = pressure_space.batch(ASSEMBLY_DEGREE)
    rows, cols, data = [], [], []
    nt, nploc = pressure_space.scalar_cell_dofs.shape
    nvloc = vel_space.scalar_cell_dofs.shape[1]
    for comp in range(2):
        local = np.einsum("tq,qi,tqa->tia", vb.wdet, pb.phi,
                          vb.gphys[:, :, :, comp], optimize=True)
        r = np.repeat(pressure_space.scalar_cell_dofs, nvloc, axis=1)
        c = np.tile(2 * vel_space.scalar_cell_dofs + comp, (1, nploc))
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(local.ravel())
    B = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(pressure_space.dof_count, vel_space.dof_count))
    return B.tocsr()


def assemble_cross(w, vel_space):
    """Matrix of (v, chi) -> integral of w * (v2*chi1 - v1*chi2).

    ``w`` is a scalar field (lagged vorticity).  The result is exactly
    skew-symmetric, which is what makes the term drop out of energy
    estimates.
    """
    _check_same_mesh(w.space, vel_space)
    if w.space.components != 1 or w.space.degree != vel_space.degree:
        raise InvalidArgument("cross weight must be a scalar field of the "
                              "velocity degree")
    vb = vel_space.batch(ASSEMBLY_DEGREE)
    wb = w.space.batch(ASSEMBLY_DEGREE)
    wq = np.ascontiguousarray(wb.scalar_values(w.coeffs) * vb.wdet)
    local = kernels.weighted_mass_local(wq, vb.phi)
    Wm = _scalar_pattern(vel_space).assemble(local)
    return sp.kron(Wm, _CROSS_BLOCK, format="csr")


def assemble_convection_skew(v, scalar_space):
    """Skew-symmetrized convection matrix N(v) on a scalar space.

    N(v)[a, b] = 0.5 * ((v . grad phi_b, phi_a) - (v . grad phi_a, phi_b)),
    so psi^T N(v) psi = 0 for every psi regardless of div v.
    """
    _check_same_mesh(v.space, scalar_space)
    if v.space.components != 2:
        raise InvalidArgument("convecting field must be vector valued")
    sb = scalar_space.batch(ASSEMBLY_DEGREE)
    vbatch = v.space.batch(ASSEMBLY_DEGREE)
    vx = np.ascontiguousarray(vbatch.scalar_values(v.component(0)))
    vy = np.ascontiguousarray(vbatch.scalar_values(v.component(1)))
    conv = kernels.convection_local(sb.wdet, vx, vy, sb.phi, sb.gphys)
    local = 0.5 * (conv - conv.transpose(0, 2, 1))
    return _scalar_pattern(scalar_space).assemble(local)


def assemble_forcing(space, f, t):
    """Load vector of (f(., t), basis) by degree-6 quadrature.

    ``f(x, y, t)`` takes arrays; for vector spaces it returns (f1, f2).
    """
    batch = space.batch(ASSEMBLY_DEGREE)
    vals = f(batch.xq, batch.yq, t)
    out = np.zeros(space.dof_count)
    if space.components == 1:
        comps = (np.broadcast_to(vals, batch.xq.shape),)
    else:
        comps = tuple(np.broadcast_to(v, batch.xq.shape) for v in vals)
    for c, fc in enumerate(comps):
        loc = np.einsum("tq,qa->ta", batch.wdet * fc, batch.phi)
        target = np.zeros(space.scalar_dof_count)
        np.add.at(target, space.scalar_cell_dofs, loc)
        out[c::space.components] += target
    return out


class NudgeOperator:
    """Piecewise-constant L2 projection onto the coarse observation cells.

    Holds the per-cell basis integrals E[K, i] = integral of phi_i over
    cell K; the projection of a field with scalar coefficients c has cell
    means (E c) / |K|, and the nudging Gram matrix is
    E^T diag(1/|K|) E (the projection applied to trial and test sides).
    """

    def __init__(self, partition, space):
        if len(partition.cell_of) != space.mesh.num_triangles:
            raise InvalidArgument("partition does not match the space's mesh")
        self.partition = partition
        self.space = space
        batch = space.batch(ASSEMBLY_DEGREE)
        loc = np.einsum("tq,qa->ta", batch.wdet, batch.phi)
        nt, nloc = space.scalar_cell_dofs.shape
        rows = np.repeat(partition.cell_of, nloc)
        cols = space.scalar_cell_dofs.ravel()
        self.cell_integrals = sp.coo_matrix(
            (loc.ravel(), (rows, cols)),
            shape=(partition.num_cells, space.scalar_dof_count)).tocsr()
        inv_area = sp.diags(1.0 / partition.cell_area)
        gram = (self.cell_integrals.T @ inv_area @ self.cell_integrals).tocsr()
        gram.eliminate_zeros()
        self._gram_scalar = gram

    def cell_means(self, coeffs):
        """Per-cell means; (ncells,) for scalar data, (ncells, 2) for vector."""
        coeffs = np.asarray(coeffs, dtype=float)
        if self.space.components == 1:
            return (self.cell_integrals @ coeffs) / self.partition.cell_area
        return np.column_stack(
            [(self.cell_integrals @ coeffs[c::2]) / self.partition.cell_area
             for c in range(2)])

    def projection_norm(self, coeffs):
        """L2 norm of the projected (piecewise constant) field."""
        means = self.cell_means(coeffs)
        return float(np.sqrt(np.sum(self.partition.cell_area
                                    * np.atleast_2d(means.T) ** 2)))

    def matrix(self, mu):
        if mu < 0:
            raise InvalidArgument("nudging intensity must be nonnegative")
        n = self.space.dof_count
        if mu == 0.0:
            return sp.csr_matrix((n, n))
        return _vectorize(mu * self._gram_scalar, self.space.components)

    def rhs(self, mu, observed):
        if mu < 0:
            raise InvalidArgument("nudging intensity must be nonnegative")
        out = np.zeros(self.space.dof_count)
        if mu == 0.0:
            return out
        observed = np.asarray(observed, dtype=float)
        if self.space.components == 1:
            if observed.shape != (self.partition.num_cells,):
                raise InvalidArgument("observed means must be per coarse cell")
            return mu * (self.cell_integrals.T @ observed)
        if observed.shape != (self.partition.num_cells, 2):
            raise InvalidArgument("observed means must be (ncells, 2)")
        for c in range(2):
            out[c::2] = mu * (self.cell_integrals.T @ observed[:, c])
        return out


def build_nudge(partition, space):
    return NudgeOperator(partition, space)


def assemble_nudge_matrix(op, mu):
    return op.matrix(mu)


def assemble_nudge_rhs(op, mu, observed):
    return op.rhs(mu, observed)
