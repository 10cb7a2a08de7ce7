"""Linearized backward-Euler and BDF2 time stepping with nudging.

Each step performs two sequential linear solves: the velocity-pressure
saddle problem with the cross term built from lagged vorticity, then the
vorticity transport solve with skew convection built from the fresh
velocity.  Velocity nudging (mu1) and vorticity nudging (mu2) enter as a
time-independent projection Gram matrix plus a per-step data right-hand
side; with mu1 = mu2 = 0 no nudging block is ever assembled and the
scheme reduces to the plain velocity-vorticity method.

The BDF2 variant uses the standard 3/4/1 stencil for both fields, the
extrapolated vorticity 2 w^n - w^{n-1} in the cross term, and generates
its startup level with one backward-Euler step at identical nudging
parameters.  Its vorticity nonlinearity is kept in the skew form (as in
the first-order scheme): with a velocity pair that is not pointwise
divergence free, the skew form is what makes the nonlinear term drop
out of energy balances at any time-step size.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import linsolve
from .assembly import (assemble_convection_skew, assemble_cross,
                       assemble_divergence, assemble_forcing, assemble_mass,
                       assemble_stiffness, build_nudge)
from .errors import BlowUpError, InvalidArgument, StateError
from .femspace import Field, build_space, interpolate

__all__ = ["NudgeConfig", "SchemeConfig", "SchemeState", "Stepper", "run"]


@dataclass
class NudgeConfig:
    """Nudging intensities plus the observation machinery.

    ``observer(t, include_vorticity)`` must return an ObservationFrame
    with per-coarse-cell means at exactly time t.  With mu2 = 0 vorticity
    observations are never requested.
    """
    mu1: float = 0.0
    mu2: float = 0.0
    partition: object = None
    observer: Optional[Callable] = None

    def __post_init__(self):
        if self.mu1 < 0 or self.mu2 < 0:
            raise InvalidArgument("nudging intensities must be nonnegative")
        if (self.mu1 > 0 or self.mu2 > 0) and self.partition is None:
            raise InvalidArgument("nudging requires a coarse partition")

    @property
    def active(self):
        return self.mu1 > 0 or self.mu2 > 0


@dataclass
class SchemeConfig:
    dt: float
    nu: float
    T: float
    scheme: str = "bdf2"           # "be" | "bdf2"
    bc_mode: str = "periodic"      # "periodic" | "dirichlet"
    nudge: NudgeConfig = field(default_factory=NudgeConfig)
    solver_tol: float = linsolve.DEFAULT_TOL

    def __post_init__(self):
        if self.scheme not in ("be", "bdf2"):
            raise InvalidArgument("scheme must be 'be' or 'bdf2'")
        if self.bc_mode not in ("periodic", "dirichlet"):
            raise InvalidArgument("bc_mode must be 'periodic' or 'dirichlet'")
        if not (self.dt > 0 and self.nu > 0 and self.T > 0):
            raise InvalidArgument("dt, nu and T must all be positive")

    @property
    def num_steps(self):
        return int(math.ceil(self.T / self.dt - 1e-9))


@dataclass
class SchemeState:
    t: float
    n: int
    v_now: Field
    w_now: Field
    p_now: Field
    v_prev: Optional[Field] = None
    w_prev: Optional[Field] = None


class Stepper:
    """Assembled spaces and operators for one configuration on one mesh.

    ``case`` supplies the forcing (always) and, in Dirichlet mode, the
    boundary values of velocity and vorticity.
    """

    def __init__(self, mesh, config, case):
        if config.bc_mode == "periodic" and not mesh.periodic:
            raise InvalidArgument("periodic run requires a periodic mesh")
        if config.bc_mode == "dirichlet" and (case.velocity is None
                                              or case.vorticity is None):
            raise InvalidArgument("Dirichlet runs need truth velocity and "
                                  "vorticity for the boundary values")
        self.mesh = mesh
        self.config = config
        self.case = case

        bc = "periodic" if config.bc_mode == "periodic" else "dirichlet"
        pres_bc = "periodic" if config.bc_mode == "periodic" else "none"
        self.vel = build_space(mesh, 2, 2, bc_mode=bc)
        self.pres = build_space(mesh, 1, 1, bc_mode=pres_bc, zero_mean=True)
        self.vort = build_space(mesh, 2, 1, bc_mode=bc)

        self.Mv = assemble_mass(self.vel)
        self.Kv = assemble_stiffness(self.vel)
        self.B = assemble_divergence(self.vel, self.pres)
        self.mvec = self.pres.integral_vector()
        self.Mw = assemble_mass(self.vort)
        self.Kw = assemble_stiffness(self.vort)

        nudge = config.nudge
        self.op_v = self.op_w = None
        self._static_v = config.nu * self.Kv
        self._static_w = config.nu * self.Kw
        if nudge.mu1 > 0:
            self.op_v = build_nudge(nudge.partition, self.vel)
            self._static_v = self._static_v + self.op_v.matrix(nudge.mu1)
        if nudge.mu2 > 0:
            self.op_w = build_nudge(nudge.partition, self.vort)
            self._static_w = self._static_w + self.op_w.matrix(nudge.mu2)

        self._vel_free = self.vel.free_dofs
        self._vel_cons = self.vel.boundary_dofs
        self._vort_free = self.vort.free_dofs
        self._vort_cons = self.vort.boundary_dofs
        self._B_free = self.B[:, self._vel_free] if len(self._vel_cons) else self.B
        self._B_cons = self.B[:, self._vel_cons] if len(self._vel_cons) else None
        self._vel_solver = linsolve.LaggedLU()
        self._vort_solver = linsolve.LaggedLU()
        self.last_div_res = 0.0

    # -- state construction ----------------------------------------------

    def initial_state(self, mode="zero"):
        """Zero fields (the paper-style cold start) or interpolated truth."""
        if mode == "zero":
            return SchemeState(0.0, 0, Field.zeros(self.vel),
                               Field.zeros(self.vort), Field.zeros(self.pres))
        if mode == "truth":
            if self.case.velocity is None or self.case.vorticity is None:
                raise InvalidArgument("case has no truth fields to interpolate")
            v = interpolate(self.vel, lambda x, y: self.case.velocity(x, y, 0.0))
            w = interpolate(self.vort, lambda x, y: self.case.vorticity(x, y, 0.0))
            return SchemeState(0.0, 0, v, w, Field.zeros(self.pres))
        raise InvalidArgument("initial state mode must be 'zero' or 'truth'")

    # -- observation / boundary helpers -----------------------------------

    def _observations(self, t1, observations=None):
        nudge = self.config.nudge
        if not nudge.active:
            return None
        obs = observations
        if obs is None:
            if nudge.observer is None:
                raise InvalidArgument("nudging is on but no observer is set")
            obs = nudge.observer(t1, nudge.mu2 > 0)
        if abs(obs.time - t1) > 1e-12 * max(1.0, abs(t1)):
            raise StateError("observation frame at t=%r does not match "
                             "step time %r" % (obs.time, t1))
        if nudge.mu1 > 0 and obs.u_means is None:
            raise InvalidArgument("velocity nudging needs velocity observations")
        if nudge.mu2 > 0 and obs.w_means is None:
            raise InvalidArgument("vorticity nudging needs vorticity "
                                  "observations (mu2 > 0)")
        return obs

    def _boundary_values(self, space, fn, t1):
        pts = space.dof_points()
        if space.components == 1:
            scalar_bd = space.boundary_dofs
            return np.asarray(fn(pts[scalar_bd, 0], pts[scalar_bd, 1], t1),
                              dtype=float)
        scalar_bd = space.boundary_dofs[0::2] // 2
        u1, u2 = fn(pts[scalar_bd, 0], pts[scalar_bd, 1], t1)
        out = np.empty(2 * len(scalar_bd))
        out[0::2] = u1
        out[1::2] = u2
        return out

    # -- solves ------------------------------------------------------------

    def _velocity_solve(self, A, rhs, t1):
        tol = self.config.solver_tol
        cons = self._vel_cons
        if len(cons) == 0:
            system = linsolve.SaddleSystem(A, self.B, self.mvec, rhs,
                                           np.zeros(self.pres.dof_count))
            v, p, lam = linsolve.solve_saddle(system, tol,
                                              solver=self._vel_solver)
            v_full = v
        else:
            g = self._boundary_values(self.vel, self.case.velocity, t1)
            free = self._vel_free
            A_ff = A[free][:, free]
            A_fc = A[free][:, cons]
            rhs_f = rhs[free] - A_fc @ g
            rhs_div = -(self._B_cons @ g)
            system = linsolve.SaddleSystem(A_ff, self._B_free, self.mvec,
                                           rhs_f, rhs_div)
            vf, p, lam = linsolve.solve_saddle(system, tol,
                                               solver=self._vel_solver)
            v_full = np.zeros(self.vel.dof_count)
            v_full[free] = vf
            v_full[cons] = g
        div = self.B @ v_full + lam * self.mvec
        self.last_div_res = float(np.linalg.norm(div)
                                  / (1.0 + np.linalg.norm(v_full)))
        return Field(self.vel, v_full), Field(self.pres, p)

    def _vorticity_solve(self, Aw, rhs, t1):
        tol = self.config.solver_tol
        cons = self._vort_cons
        if len(cons) == 0:
            w = linsolve.solve_scalar(Aw, rhs, tol, solver=self._vort_solver)
            return Field(self.vort, w)
        g = self._boundary_values(self.vort, self.case.vorticity, t1)
        free = self._vort_free
        A_ff = Aw[free][:, free]
        rhs_f = rhs[free] - Aw[free][:, cons] @ g
        wf = linsolve.solve_scalar(A_ff, rhs_f, tol,
                                   solver=self._vort_solver)
        w_full = np.zeros(self.vort.dof_count)
        w_full[free] = wf
        w_full[cons] = g
        return Field(self.vort, w_full)

    # -- steps ---------------------------------------------------------------

    def step_be(self, state, observations=None):
        """One backward-Euler step from t^n to t^{n+1}."""
        cfg = self.config
        dt, mu1, mu2 = cfg.dt, cfg.nudge.mu1, cfg.nudge.mu2
        t1 = dt * (state.n + 1)
        obs = self._observations(t1, observations)

        C = assemble_cross(state.w_now, self.vel)
        A = (1.0 / dt) * self.Mv + self._static_v + C
        rhs = (1.0 / dt) * (self.Mv @ state.v_now.coeffs) \
            + assemble_forcing(self.vel, self.case.forcing, t1)
        if mu1 > 0:
            rhs += self.op_v.rhs(mu1, obs.u_means)
        v1, p1 = self._velocity_solve(A, rhs, t1)

        N = assemble_convection_skew(v1, self.vort)
        Aw = (1.0 / dt) * self.Mw + self._static_w + N
        rhs_w = (1.0 / dt) * (self.Mw @ state.w_now.coeffs) \
            + assemble_forcing(self.vort, self.case.rot_forcing, t1)
        if mu2 > 0:
            rhs_w += self.op_w.rhs(mu2, obs.w_means)
        w1 = self._vorticity_solve(Aw, rhs_w, t1)

        return SchemeState(t1, state.n + 1, v1, w1, p1,
                           v_prev=state.v_now, w_prev=state.w_now)

    def step_bdf2(self, state, observations=None):
        """One BDF2 step; needs two back levels in the state."""
        if state.v_prev is None or state.w_prev is None:
            raise StateError("BDF2 step requires two back levels; generate "
                             "the startup level first")
        cfg = self.config
        dt, mu1, mu2 = cfg.dt, cfg.nudge.mu1, cfg.nudge.mu2
        t1 = dt * (state.n + 1)
        obs = self._observations(t1, observations)

        w_extrap = Field(self.vort, 2.0 * state.w_now.coeffs
                         - state.w_prev.coeffs)
        C = assemble_cross(w_extrap, self.vel)
        A = (1.5 / dt) * self.Mv + self._static_v + C
        rhs = self.Mv @ ((2.0 * state.v_now.coeffs
                          - 0.5 * state.v_prev.coeffs) / dt) \
            + assemble_forcing(self.vel, self.case.forcing, t1)
        if mu1 > 0:
            rhs += self.op_v.rhs(mu1, obs.u_means)
        v1, p1 = self._velocity_solve(A, rhs, t1)

        N = assemble_convection_skew(v1, self.vort)
        Aw = (1.5 / dt) * self.Mw + self._static_w + N
        rhs_w = self.Mw @ ((2.0 * state.w_now.coeffs
                            - 0.5 * state.w_prev.coeffs) / dt) \
            + assemble_forcing(self.vort, self.case.rot_forcing, t1)
        if mu2 > 0:
            rhs_w += self.op_w.rhs(mu2, obs.w_means)
        w1 = self._vorticity_solve(Aw, rhs_w, t1)

        return SchemeState(t1, state.n + 1, v1, w1, p1,
                           v_prev=state.v_now, w_prev=state.w_now)

    def step(self, state, observations=None):
        """Advance one step, applying the BDF2 startup rule at n = 0."""
        if self.config.scheme == "be":
            out = self.step_be(state, observations)
            out.v_prev = out.w_prev = None   # BE keeps a single level
            return out
        if state.v_prev is None:
            if state.n != 0:
                raise StateError("missing back level at n=%d" % state.n)
            return self.step_be(state, observations)
        return self.step_bdf2(state, observations)


def run(stepper, state=None, recorder=None, callbacks=(), record_stride=1,
        blowup_threshold=None):
    """Step until t >= T, recording diagnostics.

    Returns (final_state, RunReport or None).  ``recorder`` maps
    (state, stepper, div_res) to a row dict (see diagnostics.Recorder);
    callbacks receive (state, stepper) after every step.  When a
    blow-up threshold is given, any recorded norm above it aborts the
    run with BlowUpError.
    """
    if record_stride < 1:
        raise InvalidArgument("record stride must be >= 1")
    if state is None:
        state = stepper.initial_state()
    n_steps = stepper.config.num_steps
    rows = []
    started = time.perf_counter()
    if recorder is not None:
        rows.append(recorder(state, stepper, 0.0))
    for _ in range(n_steps):
        state = stepper.step(state)
        for cb in callbacks:
            cb(state, stepper)
        if recorder is not None and (state.n % record_stride == 0
                                     or state.n == n_steps):
            row = recorder(state, stepper, stepper.last_div_res)
            rows.append(row)
            if blowup_threshold is not None:
                worst = max(row.get(k, 0.0) for k in
                            ("norm_v_l2", "norm_w_l2", "norm_v_h1", "norm_w_h1"))
                if not np.isfinite(worst) or worst > blowup_threshold:
                    raise BlowUpError("norm %.3e exceeded blow-up threshold "
                                      "%.1e at step %d (t=%g)"
                                      % (worst, blowup_threshold, state.n,
                                         state.t))
    report = None
    if recorder is not None:
        from .diagnostics import RunReport
        report = RunReport(rows, _config_echo(stepper.config),
                           time.perf_counter() - started)
    return state, report


def _config_echo(config):
    nudge = config.nudge
    return {
        "scheme": config.scheme, "dt": config.dt, "nu": config.nu,
        "T": config.T, "bc_mode": config.bc_mode, "mu1": nudge.mu1,
        "mu2": nudge.mu2, "solver_tol": config.solver_tol,
    }


def nudge_free(config):
    """Copy of ``config`` with all nudging removed."""
    return replace(config, nudge=NudgeConfig())
