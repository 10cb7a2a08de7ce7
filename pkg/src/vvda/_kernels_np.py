"""Vectorized numpy fallback for the per-element assembly kernels.

The same three operations exist as a compiled extension
(``vvda._speedups``); :mod:`vvda.kernels` picks one at import.  Both hot
paths take arrays prepared by the caller: quadrature weights already
multiplied by the Jacobian determinant, and physical basis gradients.
"""

import numpy as np


def weighted_mass_local(wq, phi):
    """Local matrices of the w-weighted L2 pairing.

    wq : (nt, nq) field values at quadrature points times wdet
    phi : (nq, nloc) basis values

    Returns (nt, nloc, nloc) with entries sum_q wq * phi_a * phi_b.
    """
    return np.einsum("tq,qa,qb->tab", wq, phi, phi, optimize=True)


def convection_local(wdet, vx, vy, phi, gphys):
    """Local matrices of the directional-derivative pairing.

    Entries: sum_q wdet[t,q] * (vx*d_x + vy*d_y)(phi_b) * phi_a.
    gphys : (nt, nq, nloc, 2) physical basis gradients.
    """
    s = vx[:, :, None] * gphys[:, :, :, 0] + vy[:, :, None] * gphys[:, :, :, 1]
    return np.einsum("tq,qa,tqb->tab", wdet, phi, s, optimize=True)


def scatter_add(data, index, values):
    """Accumulate ``values`` into ``data`` at (repeated) flat positions."""
    np.add.at(data, index, values)
