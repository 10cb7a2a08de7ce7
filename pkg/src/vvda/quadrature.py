"""Symmetric quadrature rules on the reference triangle.

Points are stored in barycentric coordinates, weights sum to the
reference-triangle area 1/2, and all weights are positive.  Degrees 1-8
use the classic symmetric Gauss rules (orbit constants refined to full
double precision); degrees 9-10 are built at call time from a
Gauss-Jacobi x Gauss-Legendre product on the collapsed square,
symmetrized over the triangle's six-element symmetry group so the result
is again a symmetric rule.
"""

import numpy as np
from scipy.special import roots_jacobi

from .errors import InvalidArgument

__all__ = ["QuadratureRule", "quadrature_rule"]


class QuadratureRule:
    """Quadrature rule on the reference triangle (0,0)-(1,0)-(0,1).

    Attributes
    ----------
    points : (n, 3) array
        Barycentric coordinates of the nodes.
    weights : (n,) array
        Reference-area weights; positive, summing to 1/2.
    exactness_degree : int
        All bivariate monomials up to this total degree are integrated
        exactly.
    """

    def __init__(self, points, weights, exactness_degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.exactness_degree = int(exactness_degree)

    @property
    def xy(self):
        """Nodes in reference (x, y) coordinates, shape (n, 2)."""
        return self.points[:, 1:3].copy()

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return "QuadratureRule(npoints=%d, degree=%d)" % (
            len(self.weights), self.exactness_degree)


def _orbit3(b):
    a = 1.0 - 2.0 * b
    return [(a, b, b), (b, a, b), (b, b, a)]


def _orbit6(b, c):
    a = 1.0 - b - c
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


# Orbit data: (list of barycentric points, weight per point, normalized so
# the weights of the full rule sum to 1; scaled by 1/2 on construction).
_CENTROID = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]

_HARDCODED = {
    1: (1, [(_CENTROID, 1.0)]),
    2: (2, [(_orbit3(1.0 / 6.0), 1.0 / 3.0)]),
    # 6-point rule, exact to degree 4 (also serves requests for degree 3:
    # the textbook 4-point degree-3 rule has a negative centroid weight).
    4: (4, [(_orbit3(0.44594849091596489), 0.22338158967801147),
            (_orbit3(0.09157621350977074), 0.10995174365532187)]),
    5: (5, [(_CENTROID, 0.225),
            (_orbit3(0.47014206410511509), 0.13239415278850618),
            (_orbit3(0.10128650732345634), 0.12593918054482715)]),
    6: (6, [(_orbit3(0.06308901449150223), 0.05084490637020682),
            (_orbit3(0.24928674517091042), 0.11678627572637937),
            (_orbit6(0.31035245103378441, 0.05314504984481695),
             0.08285107561837358)]),
    # 16-point rule, exact to degree 8 (also serves degree-7 requests:
    # the 13-point degree-7 rule has a negative centroid weight).
    8: (8, [(_CENTROID, 0.14431560767778717),
            (_orbit3(0.45929258829272316), 0.09509163426728463),
            (_orbit3(0.17056930775176021), 0.10321737053471825),
            (_orbit3(0.05054722831703098), 0.03245849762319808),
            (_orbit6(0.26311282963463811, 0.72849239295540428),
             0.02723031417443499)]),
}


def _build_hardcoded(key):
    degree, orbits = _HARDCODED[key]
    pts, wts = [], []
    for orbit, w in orbits:
        pts.extend(orbit)
        wts.extend([0.5 * w] * len(orbit))
    return QuadratureRule(pts, wts, degree)


def _build_collapsed(degree):
    # Duffy substitution x=u, y=v(1-u) maps the unit square onto the
    # triangle with Jacobian (1-u); Gauss-Jacobi absorbs that weight.
    m = (degree + 2) // 2
    xj, wj = roots_jacobi(m, 1.0, 0.0)
    u = 0.5 * (xj + 1.0)
    wu = 0.25 * wj
    xg, wg = np.polynomial.legendre.leggauss(m)
    v = 0.5 * (xg + 1.0)
    wv = 0.5 * wg

    x = np.repeat(u, m)
    y = np.tile(v, m) * (1.0 - x)
    w = np.repeat(wu, m) * np.tile(wv, m)

    # Symmetrize over the 6 barycentric permutations.
    lam = np.column_stack([1.0 - x - y, x, y])
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    pts = np.vstack([lam[:, p] for p in perms])
    wts = np.tile(w / 6.0, 6)
    return QuadratureRule(pts, wts, degree)


def quadrature_rule(exactness_degree):
    """Return a symmetric positive-weight rule for the requested degree.

    The returned rule's ``exactness_degree`` may exceed the request (a
    degree-3 request is served by the degree-4 rule).
    """
    if not isinstance(exactness_degree, (int, np.integer)):
        raise InvalidArgument("exactness degree must be an integer")
    d = int(exactness_degree)
    if d < 1 or d > 10:
        raise InvalidArgument("supported exactness degrees are 1..10, got %d" % d)
    key = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6, 7: 8, 8: 8}.get(d)
    if key is not None:
        return _build_hardcoded(key)
    return _build_collapsed(d)
