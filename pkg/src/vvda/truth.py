"""Ground-truth solutions, forcing terms and observation streams.

Provides closed-form reference cases (time-dependent convergence case,
a steady flow, bounded fields for long-horizon stability runs), the
coarse-cell observation sampler, and solver-generated twin trajectories
with a binary frame-file format for replayable observations.

Sign convention used throughout: the scalar curl is
rot(g1, g2) = d g1 / dy - d g2 / dx, and the cross action of a scalar w
on a vector v is w x v = w * (v2, -v1), which together keep the
rotational-form identity (u . grad) u = (rot u) x u + grad(|u|^2 / 2).
"""

import math
import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgument, ObservationGapError

__all__ = [
    "ManufacturedCase", "ObservationFrame", "TwinTrajectory",
    "experiment1_case", "steady_case", "stability_case", "twin_forcing_case",
    "eval_truth", "sample_observation", "case_observer", "twin_observer",
    "twin_generate", "save_twin", "load_twin",
]

PI = math.pi


@dataclass
class ManufacturedCase:
    """Closed-form fields driving a run.

    ``forcing``/``rot_forcing`` are always required.  ``velocity``,
    ``vorticity`` etc. may be None for forcing-only cases (periodic twin
    experiments).  The fields need not solve the flow equations: the
    stability case only supplies bounded data.
    """

    nu: float
    forcing: Callable          # (x, y, t) -> (f1, f2)
    rot_forcing: Callable      # (x, y, t) -> scalar
    velocity: Optional[Callable] = None       # (x, y, t) -> (u1, u2)
    pressure: Optional[Callable] = None       # (x, y, t) -> scalar
    vorticity: Optional[Callable] = None      # (x, y, t) -> scalar
    grad_velocity: Optional[Callable] = None  # (x, y, t) -> ((u1x, u1y), (u2x, u2y))
    grad_vorticity: Optional[Callable] = None  # (x, y, t) -> (wx, wy)
    name: str = "case"


def experiment1_case(nu=1.0):
    """Time-dependent convergence-test solution on the unit square.

    u = (cos(pi (y - t)), sin(pi (x + t))), p = (1 + t^2) sin(x + y);
    the forcing comes from substituting u, p into the momentum equation
    u_t - nu Lap(u) + (u . grad) u + grad p = f.
    """
    def velocity(x, y, t):
        return np.cos(PI * (y - t)), np.sin(PI * (x + t))

    def pressure(x, y, t):
        return (1.0 + t * t) * np.sin(x + y)

    def vorticity(x, y, t):
        return -PI * np.sin(PI * (y - t)) - PI * np.cos(PI * (x + t))

    def forcing(x, y, t):
        sy, cy = np.sin(PI * (y - t)), np.cos(PI * (y - t))
        sx, cx = np.sin(PI * (x + t)), np.cos(PI * (x + t))
        gp = (1.0 + t * t) * np.cos(x + y)
        f1 = PI * sy + nu * PI**2 * cy - PI * sx * sy + gp
        f2 = PI * cx + nu * PI**2 * sx + PI * cy * cx + gp
        return f1, f2

    def rot_forcing(x, y, t):
        sy, cy = np.sin(PI * (y - t)), np.cos(PI * (y - t))
        sx, cx = np.sin(PI * (x + t)), np.cos(PI * (x + t))
        return PI**2 * cy - nu * PI**3 * sy + PI**2 * sx - nu * PI**3 * cx

    def grad_velocity(x, y, t):
        zero = np.zeros_like(x + y)
        return ((zero, -PI * np.sin(PI * (y - t))),
                (PI * np.cos(PI * (x + t)), zero))

    def grad_vorticity(x, y, t):
        return PI**2 * np.sin(PI * (x + t)), -PI**2 * np.cos(PI * (y - t))

    return ManufacturedCase(nu, forcing, rot_forcing, velocity, pressure,
                            vorticity, grad_velocity, grad_vorticity,
                            name="experiment1")


def steady_case(nu=1.0):
    """Steady stream-function flow psi = sin(pi x) sin(pi y) on the unit square."""
    def velocity(x, y, t):
        return (PI * np.sin(PI * x) * np.cos(PI * y),
                -PI * np.cos(PI * x) * np.sin(PI * y))

    def pressure(x, y, t):
        return np.cos(PI * x) * np.cos(PI * y)

    def vorticity(x, y, t):
        return -2.0 * PI**2 * np.sin(PI * x) * np.sin(PI * y)

    def forcing(x, y, t):
        u1, u2 = velocity(x, y, t)
        f1 = 2.0 * nu * PI**2 * u1 + 0.5 * PI**3 * np.sin(2 * PI * x) \
            - PI * np.sin(PI * x) * np.cos(PI * y)
        f2 = 2.0 * nu * PI**2 * u2 + 0.5 * PI**3 * np.sin(2 * PI * y) \
            - PI * np.cos(PI * x) * np.sin(PI * y)
        return f1, f2

    def rot_forcing(x, y, t):
        return -4.0 * nu * PI**4 * np.sin(PI * x) * np.sin(PI * y)

    def grad_velocity(x, y, t):
        sx, cx = np.sin(PI * x), np.cos(PI * x)
        sy, cy = np.sin(PI * y), np.cos(PI * y)
        return ((PI**2 * cx * cy, -PI**2 * sx * sy),
                (PI**2 * sx * sy, -PI**2 * cx * cy))

    def grad_vorticity(x, y, t):
        return (-2.0 * PI**3 * np.cos(PI * x) * np.sin(PI * y),
                -2.0 * PI**3 * np.sin(PI * x) * np.cos(PI * y))

    return ManufacturedCase(nu, forcing, rot_forcing, velocity, pressure,
                            vorticity, grad_velocity, grad_vorticity,
                            name="steady")


def stability_case():
    """Bounded smooth forcing and observed fields on the periodic box.

    The "observed" velocity is divergence free and uniformly bounded in
    time, which is all the long-time stability bounds require of the
    measurement stream; it is not a flow solution.  The forcing is
    steady: the constant velocity mode is undamped on the torus (zero
    means are monitored, not enforced), and steady forcing lets the
    long-run norm caps saturate within the test window instead of
    drifting quasi-periodically for thousands of steps.
    """
    def velocity(x, y, t):
        return (np.cos(y) * (1.0 + 0.5 * np.sin(t)),
                np.sin(x) * (1.0 + 0.5 * np.cos(t)))

    def vorticity(x, y, t):
        return (-np.sin(y) * (1.0 + 0.5 * np.sin(t))
                - np.cos(x) * (1.0 + 0.5 * np.cos(t)))

    def forcing(x, y, t):
        return np.sin(y) * np.ones_like(t + x), np.sin(x) * np.ones_like(t + y)

    def rot_forcing(x, y, t):
        return (np.cos(y) - np.cos(x)) * np.ones_like(t + x)

    def grad_velocity(x, y, t):
        zero = np.zeros_like(x + y)
        return ((zero, -np.sin(y) * (1.0 + 0.5 * np.sin(t))),
                (np.cos(x) * (1.0 + 0.5 * np.cos(t)), zero))

    def grad_vorticity(x, y, t):
        return (np.sin(x) * (1.0 + 0.5 * np.cos(t)),
                -np.cos(y) * (1.0 + 0.5 * np.sin(t)))

    return ManufacturedCase(1.0, forcing, rot_forcing, velocity, None,
                            vorticity, grad_velocity, grad_vorticity,
                            name="stability")


def twin_forcing_case():
    """Traveling-wave forcing for twin experiments on the periodic box."""
    def forcing(x, y, t):
        return np.sin(y + t), np.sin(x - t)

    def rot_forcing(x, y, t):
        return np.cos(y + t) - np.cos(x - t)

    return ManufacturedCase(1.0, forcing, rot_forcing, name="twin-forcing")


def twin_default_ic(x, y):
    """Divergence-free initial state used for the twin ("true") run."""
    return np.cos(y), np.sin(x)


def eval_truth(case, what, x, y, t):
    """Evaluate one named field of a case at (x, y, t)."""
    fns = {"u": case.velocity, "p": case.pressure, "omega": case.vorticity,
           "f": case.forcing, "rot_f": case.rot_forcing}
    if what not in fns:
        raise InvalidArgument("unknown field %r; expected one of %s"
                              % (what, sorted(fns)))
    fn = fns[what]
    if fn is None:
        raise InvalidArgument("case %r does not define field %r"
                              % (case.name, what))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return fn(x, y, t)


@dataclass
class ObservationFrame:
    """Coarse-cell means of the observed fields at one time."""
    time: float
    u_means: Optional[np.ndarray]        # (ncells, 2)
    w_means: Optional[np.ndarray] = None  # (ncells,)


def _mesh_quad(mesh, degree=6):
    from .quadrature import quadrature_rule
    cache = getattr(mesh, "_obs_quad", None)
    if cache is None:
        cache = mesh._obs_quad = {}
    if degree not in cache:
        rule = quadrature_rule(degree)
        p = mesh.vertices[mesh.triangles]
        J = np.empty((mesh.num_triangles, 2, 2))
        J[:, :, 0] = p[:, 1] - p[:, 0]
        J[:, :, 1] = p[:, 2] - p[:, 0]
        detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        phys = p[:, 0][:, None, :] + np.einsum("tkm,qm->tqk", J, rule.xy)
        wdet = rule.weights[None, :] * detJ[:, None]
        cache[degree] = (phys[:, :, 0], phys[:, :, 1], wdet)
    return cache[degree]


def sample_observation(source, partition, t, include_vorticity=False):
    """Coarse-cell means of the observed fields at time ``t``.

    ``source`` is a ManufacturedCase (means by degree-6 quadrature of the
    closed forms) or a TwinTrajectory (exact integrals of the stored
    discrete fields).
    """
    if hasattr(source, "frame_index"):
        return source.sample(partition, t, include_vorticity)
    mesh = partition.fine_mesh
    if mesh is None:
        raise InvalidArgument("partition does not reference its fine mesh")
    xq, yq, wdet = _mesh_quad(mesh)
    cell_of = partition.cell_of

    def cell_mean(values):
        integ = np.zeros(partition.num_cells)
        np.add.at(integ, cell_of, np.sum(wdet * values, axis=1))
        return integ / partition.cell_area

    u1, u2 = source.velocity(xq, yq, t)
    u1 = np.broadcast_to(u1, xq.shape)
    u2 = np.broadcast_to(u2, xq.shape)
    u_means = np.column_stack([cell_mean(u1), cell_mean(u2)])
    w_means = None
    if include_vorticity:
        if source.vorticity is None:
            raise InvalidArgument("case %r has no vorticity field to observe"
                                  % (source.name,))
        w = np.broadcast_to(source.vorticity(xq, yq, t), xq.shape)
        w_means = cell_mean(w)
    return ObservationFrame(float(t), u_means, w_means)


def case_observer(case, partition):
    """Observer handle sampling a closed-form case."""
    def observer(t, include_vorticity=False):
        return sample_observation(case, partition, t, include_vorticity)
    return observer


# -- twin trajectories ------------------------------------------------------

_MAGIC = b"VVDA1"
_HEADER = struct.Struct("<IQQQdQqdddd")   # version, frames, len_v, len_w,
                                          # dt, stride, mesh_n, domain


class TwinTrajectory:
    """Stored (t, velocity, vorticity) snapshots of a reference run."""

    def __init__(self, times, v_frames, w_frames, dt, stride, mesh_n, domain,
                 vel_space=None, vort_space=None):
        self.times = np.asarray(times, dtype=float)
        self.v_frames = np.asarray(v_frames, dtype=float)
        self.w_frames = np.asarray(w_frames, dtype=float)
        self.dt = float(dt)
        self.stride = int(stride)
        self.mesh_n = int(mesh_n)
        self.domain = tuple(domain)
        self.vel_space = vel_space
        self.vort_space = vort_space
        self._ops = {}

    @property
    def num_frames(self):
        return len(self.times)

    def frame_index(self, t):
        """Index of the stored frame at time ``t`` (exact, up to roundoff)."""
        idx = np.searchsorted(self.times, t - 1e-9 * max(1.0, abs(t)))
        if idx >= len(self.times) or abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise ObservationGapError("no stored twin frame at t=%r" % (t,))
        return int(idx)

    def _nudge_ops(self, partition):
        key = id(partition)
        if key not in self._ops:
            if self.vel_space is None or self.vort_space is None:
                raise InvalidArgument("twin trajectory is not bound to its "
                                      "function spaces")
            from .assembly import build_nudge
            self._ops[key] = (build_nudge(partition, self.vel_space),
                              build_nudge(partition, self.vort_space))
        return self._ops[key]

    def sample(self, partition, t, include_vorticity=False):
        op_v, op_w = self._nudge_ops(partition)
        k = self.frame_index(t)
        u_means = op_v.cell_means(self.v_frames[k])
        w_means = op_w.cell_means(self.w_frames[k]) if include_vorticity else None
        return ObservationFrame(float(t), u_means, w_means)


def twin_observer(trajectory, partition):
    """Observer handle sampling a stored twin trajectory."""
    def observer(t, include_vorticity=False):
        return trajectory.sample(partition, t, include_vorticity)
    return observer


def twin_generate(mesh, config, case=None, initial_velocity=None,
                  initial_vorticity=None, stride=1):
    """Run the nudging-free scheme and store (t, v, w) frames.

    Returns a TwinTrajectory bound to the run's function spaces.  The
    initial fields are nodal interpolants of the given callables (zero
    fields when omitted).
    """
    from .femspace import interpolate
    from .scheme import Stepper, nudge_free, run

    if stride < 1:
        raise InvalidArgument("sampling stride must be >= 1")
    cfg = nudge_free(config)
    stepper = Stepper(mesh, cfg, case=case or twin_forcing_case())
    state = stepper.initial_state()
    if initial_velocity is not None:
        state.v_now = interpolate(stepper.vel, initial_velocity)
    if initial_vorticity is not None:
        state.w_now = interpolate(stepper.vort, initial_vorticity)

    times = [0.0]
    v_frames = [state.v_now.coeffs.copy()]
    w_frames = [state.w_now.coeffs.copy()]

    def keep(st, stepper_):
        if st.n % stride == 0:
            times.append(st.t)
            v_frames.append(st.v_now.coeffs.copy())
            w_frames.append(st.w_now.coeffs.copy())

    run(stepper, state, callbacks=(keep,))
    n = _structured_n(mesh)
    return TwinTrajectory(times, v_frames, w_frames, cfg.dt, stride, n,
                          mesh.domain, stepper.vel, stepper.vort)


def _structured_n(mesh):
    nlat = getattr(mesh, "_nlat", None)
    return int(nlat) if nlat is not None else -1


def save_twin(trajectory, path):
    """Write the binary twin frame file (magic bytes ``VVDA1``).

    Layout: magic, header (version, frame count, velocity/vorticity
    coefficient lengths, base dt, stride, structured mesh n, domain
    rectangle), then the frame-time index, then per frame the raw
    little-endian float64 velocity and vorticity coefficients.
    """
    tr = trajectory
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(_HEADER.pack(1, tr.num_frames, tr.v_frames.shape[1],
                             tr.w_frames.shape[1], tr.dt, tr.stride,
                             tr.mesh_n, *tr.domain))
        f.write(tr.times.astype("<f8").tobytes())
        for k in range(tr.num_frames):
            f.write(tr.v_frames[k].astype("<f8").tobytes())
            f.write(tr.w_frames[k].astype("<f8").tobytes())


def load_twin(path, vel_space=None, vort_space=None):
    """Read a twin frame file; optionally bind it to function spaces."""
    with open(path, "rb") as f:
        magic = f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise OSError("%s is not a twin trajectory file (bad magic)" % path)
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise OSError("truncated twin trajectory header in %s" % path)
        (version, nframes, len_v, len_w, dt, stride, mesh_n,
         x0, y0, x1, y1) = _HEADER.unpack(header)
        if version != 1:
            raise OSError("unsupported twin trajectory version %d" % version)
        times = np.frombuffer(f.read(8 * nframes), dtype="<f8")
        if len(times) != nframes:
            raise OSError("truncated twin trajectory index in %s" % path)
        body = np.frombuffer(f.read(), dtype="<f8")
    expected = nframes * (len_v + len_w)
    if len(body) != expected:
        raise OSError("truncated twin trajectory frames in %s" % path)
    body = body.reshape(nframes, len_v + len_w)
    tr = TwinTrajectory(times.copy(), body[:, :len_v].copy(),
                        body[:, len_v:].copy(), dt, stride, mesh_n,
                        (x0, y0, x1, y1), vel_space, vort_space)
    if vel_space is not None and vel_space.dof_count != len_v:
        raise InvalidArgument("velocity space does not match stored frames")
    if vort_space is not None and vort_space.dof_count != len_w:
        raise InvalidArgument("vorticity space does not match stored frames")
    return tr
