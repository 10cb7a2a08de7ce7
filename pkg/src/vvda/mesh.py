"""Triangulations of rectangles with optional periodic identification.

Only structured right-triangle meshes are generated internally; a plain
text import/export exists for extension.  Generated meshes carry integer
lattice coordinates so periodic vertex/edge identification and coarse
cell nesting are decided by exact integer arithmetic instead of
floating-point comparisons.
"""

import math
from collections import namedtuple

import numpy as np

from .errors import GeometryError, InvalidArgument, UnsupportedConfiguration

__all__ = [
    "Mesh", "CoarsePartition", "generate_structured", "refine_uniform",
    "coarse_partition", "locate_triangles", "read_mesh_text", "write_mesh_text",
]

EdgeTable = namedtuple("EdgeTable", "tri_edges num_edges rep_pairs midpoints")


class Mesh:
    """Conforming triangulation of a rectangle.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array
        Vertex index triples, counterclockwise.
    domain : (x0, y0, x1, y1)
        Rectangle corners.
    periodic : bool
        Opposite edges identified (torus).
    periodic_map : dict or None
        Slave vertex index -> master vertex index; None when not periodic.
    boundary_edges : (nb, 2) int array
        (triangle, local edge) pairs; empty in periodic mode.
    h : float
        Maximum triangle diameter (longest edge).
    """

    def __init__(self, vertices, triangles, domain, periodic=False,
                 lattice=None, periodic_pairs=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.domain = tuple(float(c) for c in domain)
        self.periodic = bool(periodic)
        # lattice = (ij, nlat): vertex k sits at origin + ij[k]/nlat * extent
        self._ij = None if lattice is None else np.asarray(lattice[0], dtype=np.int64)
        self._nlat = None if lattice is None else int(lattice[1])
        self._edge_table = None

        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= len(self.vertices)):
            raise InvalidArgument("triangle indices out of range")
        areas = self.areas()
        if np.any(areas <= 0.0):
            raise GeometryError("all triangles must be counterclockwise with "
                                "positive area")

        self.periodic_map = None
        if self.periodic:
            if self._ij is not None:
                self.periodic_map = self._lattice_periodic_map()
            elif periodic_pairs is not None:
                self.periodic_map = {int(s): int(m) for s, m in periodic_pairs}
            else:
                raise InvalidArgument("periodic mesh needs lattice data or "
                                      "explicit periodic_pairs")
        self.h = self._mesh_size()
        self.boundary_edges = self._find_boundary_edges()

    # -- basic queries ---------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_distinct_vertices(self):
        if self.periodic_map is None:
            return self.num_vertices
        return self.num_vertices - len(self.periodic_map)

    def areas(self):
        """Signed triangle areas (positive for counterclockwise)."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def vertex_reps(self):
        """Representative (master) index for every vertex."""
        rep = np.arange(self.num_vertices, dtype=np.int64)
        if self.periodic_map:
            for slave, master in self.periodic_map.items():
                rep[slave] = master
        return rep

    def _mesh_size(self):
        if self._ij is not None:
            x0, y0, x1, y1 = self.domain
            return math.hypot((x1 - x0) / self._nlat, (y1 - y0) / self._nlat)
        p = self.vertices[self.triangles]
        lengths = [np.hypot(*(p[:, a] - p[:, b]).T) for a, b in
                   ((1, 2), (2, 0), (0, 1))]
        return float(np.max(lengths))

    # -- identification --------------------------------------------------

    def _lattice_periodic_map(self):
        n = self._nlat
        wrapped = self._ij % n
        lookup = {}
        for k, (i, j) in enumerate(self._ij):
            if 0 <= i < n and 0 <= j < n:
                lookup[(int(i), int(j))] = k
        pmap = {}
        for k, (i, j) in enumerate(wrapped):
            master = lookup[(int(i), int(j))]
            if master != k:
                pmap[k] = master
        return pmap

    def _raw_edge_pairs(self):
        t = self.triangles
        # local edge k is opposite local vertex k
        a = t[:, [1, 2, 0]].ravel()
        b = t[:, [2, 0, 1]].ravel()
        return a, b

    def _find_boundary_edges(self):
        if self.periodic:
            return np.zeros((0, 2), dtype=np.int64)
        a, b = self._raw_edge_pairs()
        pairs = np.sort(np.column_stack([a, b]), axis=1)
        _, inverse, counts = np.unique(pairs, axis=0, return_inverse=True,
                                       return_counts=True)
        if np.any(counts > 2):
            raise GeometryError("non-conforming mesh: edge shared by >2 triangles")
        onboundary = counts[inverse] == 1
        idx = np.nonzero(onboundary)[0]
        return np.column_stack([idx // 3, idx % 3]).astype(np.int64)

    def edge_table(self):
        """Identified edge numbering: (tri_edges, num_edges, rep_pairs, midpoints).

        tri_edges[t, k] is the global edge id of triangle t's edge opposite
        local vertex k.  Periodic translates share one id.
        """
        if self._edge_table is not None:
            return self._edge_table
        a, b = self._raw_edge_pairs()
        if self.periodic and self._ij is not None:
            n2 = 2 * self._nlat
            s = (self._ij[a] + self._ij[b]) % n2
            d = self._ij[b] - self._ij[a]
            flip = (d[:, 0] < 0) | ((d[:, 0] == 0) & (d[:, 1] < 0))
            d[flip] *= -1
            keys = np.column_stack([s, d])
        elif self.periodic:
            rep = self.vertex_reps()
            keys = np.sort(np.column_stack([rep[a], rep[b]]), axis=1)
        else:
            keys = np.sort(np.column_stack([a, b]), axis=1)
        uniq, first, inverse = np.unique(keys, axis=0, return_index=True,
                                         return_inverse=True)
        tri_edges = inverse.reshape(-1, 3).astype(np.int64)
        rep_pairs = np.column_stack([a[first], b[first]]).astype(np.int64)
        midpoints = 0.5 * (self.vertices[rep_pairs[:, 0]]
                           + self.vertices[rep_pairs[:, 1]])
        self._edge_table = EdgeTable(tri_edges, len(uniq), rep_pairs, midpoints)
        return self._edge_table

    def boundary_edge_ids(self):
        """Identified edge ids lying on the geometric boundary."""
        table = self.edge_table()
        if len(self.boundary_edges) == 0:
            return np.zeros(0, dtype=np.int64)
        return table.tri_edges[self.boundary_edges[:, 0],
                               self.boundary_edges[:, 1]]


class CoarsePartition:
    """Grouping of fine triangles into coarse observation cells."""

    def __init__(self, cell_of, cell_area, H, fine_mesh=None):
        self.cell_of = np.asarray(cell_of, dtype=np.int64)
        self.cell_area = np.asarray(cell_area, dtype=float)
        self.H = float(H)
        self.fine_mesh = fine_mesh

    @property
    def num_cells(self):
        return len(self.cell_area)


def generate_structured(n, domain=None, periodic=False):
    """Uniform right-triangle mesh with ``n`` subdivisions per side.

    The default domain is the unit square, or [0, 2*pi]^2 in periodic
    mode.  Each grid cell is split along its lower-left to upper-right
    diagonal, so the mesh has (n+1)^2 vertices and 2 n^2 triangles.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise InvalidArgument("subdivision count must be a positive integer")
    if domain is None:
        domain = (0.0, 0.0, 2.0 * math.pi, 2.0 * math.pi) if periodic \
            else (0.0, 0.0, 1.0, 1.0)
    x0, y0, x1, y1 = (float(c) for c in domain)
    if not (x1 > x0 and y1 > y0):
        raise InvalidArgument("domain rectangle must have positive extent")

    n = int(n)
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="xy")
    ij = np.column_stack([ii.ravel(), jj.ravel()]).astype(np.int64)
    vertices = np.column_stack([x0 + (ij[:, 0] / n) * (x1 - x0),
                                y0 + (ij[:, 1] / n) * (y1 - y0)])

    def vid(i, j):
        return j * (n + 1) + i

    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    cell = np.arange(n * n)
    ci, cj = cell % n, cell // n
    v00, v10 = vid(ci, cj), vid(ci + 1, cj)
    v01, v11 = vid(ci, cj + 1), vid(ci + 1, cj + 1)
    tris[0::2] = np.column_stack([v00, v10, v11])   # below the diagonal
    tris[1::2] = np.column_stack([v00, v11, v01])   # above the diagonal
    return Mesh(vertices, tris, (x0, y0, x1, y1), periodic=periodic,
                lattice=(ij, n))


def refine_uniform(mesh):
    """Split every triangle into 4 congruent children via edge midpoints."""
    if mesh.periodic and mesh._ij is None:
        raise UnsupportedConfiguration("refinement of an imported periodic "
                                       "mesh is not supported")
    a, b = mesh._raw_edge_pairs()
    pairs = np.sort(np.column_stack([a, b]), axis=1)
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
    raw_tri_edges = inverse.reshape(-1, 3)

    nv = mesh.num_vertices
    mid_ids = nv + np.arange(len(uniq))

    lattice = None
    if mesh._ij is not None:
        ij = np.vstack([2 * mesh._ij,
                        mesh._ij[uniq[:, 0]] + mesh._ij[uniq[:, 1]]])
        nlat = 2 * mesh._nlat
        x0, y0, x1, y1 = mesh.domain
        vertices = np.column_stack([x0 + (ij[:, 0] / nlat) * (x1 - x0),
                                    y0 + (ij[:, 1] / nlat) * (y1 - y0)])
        lattice = (ij, nlat)
    else:
        mids = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
        vertices = np.vstack([mesh.vertices, mids])

    t = mesh.triangles
    m0 = mid_ids[raw_tri_edges[:, 0]]   # midpoint opposite vertex 0
    m1 = mid_ids[raw_tri_edges[:, 1]]
    m2 = mid_ids[raw_tri_edges[:, 2]]
    children = np.empty((4 * len(t), 3), dtype=np.int64)
    children[0::4] = np.column_stack([t[:, 0], m2, m1])
    children[1::4] = np.column_stack([m2, t[:, 1], m0])
    children[2::4] = np.column_stack([m1, m0, t[:, 2]])
    children[3::4] = np.column_stack([m0, m1, m2])
    return Mesh(vertices, children, mesh.domain, periodic=mesh.periodic,
                lattice=lattice)


def coarse_partition(fine, coarse="same"):
    """Assign each fine triangle to the coarse cell containing its barycenter.

    ``coarse`` is either the string "same" (observation cells coincide
    with the computation cells) or a mesh whose cells exactly tile groups
    of fine triangles (e.g. an ancestor under ``refine_uniform``).
    """
    if isinstance(coarse, str):
        if coarse != "same":
            raise InvalidArgument("coarse must be a Mesh or the string 'same'")
        areas = fine.areas()
        return CoarsePartition(np.arange(fine.num_triangles), areas, fine.h,
                               fine_mesh=fine)

    if coarse.domain != fine.domain:
        raise UnsupportedConfiguration("coarse and fine meshes must cover the "
                                       "same rectangle")
    bary = fine.vertices[fine.triangles].mean(axis=1)
    cell_of = locate_triangles(coarse, bary)
    if np.any(cell_of < 0):
        raise UnsupportedConfiguration("fine barycenter outside every coarse "
                                       "cell; meshes are not nested")
    cell_area = np.zeros(coarse.num_triangles)
    np.add.at(cell_area, cell_of, fine.areas())
    coarse_area = coarse.areas()
    if not np.allclose(cell_area, coarse_area, rtol=1e-12, atol=0.0):
        raise UnsupportedConfiguration("fine triangles do not tile the coarse "
                                       "cells; meshes are not nested")
    return CoarsePartition(cell_of, cell_area, coarse.h, fine_mesh=fine)


def locate_triangles(mesh, points):
    """Triangle index containing each point (-1 if none), via barycentric test."""
    p = mesh.vertices[mesh.triangles]
    result = np.full(len(points), -1, dtype=np.int64)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    for k, (x, y) in enumerate(points):
        rx = x - p[:, 0, 0]
        ry = y - p[:, 0, 1]
        lam1 = (rx * d2[:, 1] - ry * d2[:, 0]) / det
        lam2 = (ry * d1[:, 0] - rx * d1[:, 1]) / det
        inside = (lam1 >= -1e-12) & (lam2 >= -1e-12) & (lam1 + lam2 <= 1 + 1e-12)
        hits = np.nonzero(inside)[0]
        if len(hits):
            result[k] = hits[0]
    return result


def write_mesh_text(mesh, path):
    """Write the plain-text mesh format (see package docs)."""
    with open(path, "w") as f:
        f.write("vertices %d\n" % mesh.num_vertices)
        for x, y in mesh.vertices:
            f.write("%.17g %.17g\n" % (x, y))
        f.write("triangles %d\n" % mesh.num_triangles)
        for i, j, k in mesh.triangles:
            f.write("%d %d %d\n" % (i, j, k))
        if mesh.periodic_map:
            f.write("periodic_pairs %d\n" % len(mesh.periodic_map))
            for slave in sorted(mesh.periodic_map):
                f.write("%d %d\n" % (slave, mesh.periodic_map[slave]))


def read_mesh_text(path):
    """Read the plain-text mesh format written by :func:`write_mesh_text`."""
    with open(path) as f:
        tokens = f.read().split()
    pos = 0

    def take(expect=None):
        nonlocal pos
        if pos >= len(tokens):
            raise InvalidArgument("truncated mesh file")
        tok = tokens[pos]
        pos += 1
        if expect is not None and tok != expect:
            raise InvalidArgument("expected '%s' in mesh file, got '%s'"
                                  % (expect, tok))
        return tok

    take("vertices")
    nv = int(take())
    vertices = np.array([[float(take()), float(take())] for _ in range(nv)])
    take("triangles")
    nt = int(take())
    triangles = np.array([[int(take()), int(take()), int(take())]
                          for _ in range(nt)], dtype=np.int64).reshape(nt, 3)
    pairs = None
    if pos < len(tokens):
        take("periodic_pairs")
        npairs = int(take())
        pairs = [(int(take()), int(take())) for _ in range(npairs)]
    x0, y0 = vertices.min(axis=0)
    x1, y1 = vertices.max(axis=0)
    return Mesh(vertices, triangles, (x0, y0, x1, y1),
                periodic=pairs is not None, periodic_pairs=pairs)
