"""Time evolution: the nonlinear radial moving-boundary problem and linear
mode dynamics under ``L + K``.

Radial scheme.  Each phase is mapped to a fixed reference interval
(``r = R xi`` inside, ``r = R + (R_C - R) eta`` outside) carrying a uniform
vertex-centred grid.  The unknowns are the control-volume masses, updated by

    m_j(t+dt) = m_j(t) + dt [G_{j+1/2} - G_{j-1/2}] + [S_{j+1/2} - S_{j-1/2}],

with ``G = 2 pi r kappa c_r`` (implicit, new geometry) and ``S`` the solute
carried by the face sweeping the area between its old and new position
(explicit).  The combination ``kappa c_r + c V`` vanishes at the membrane and
``c_r`` at the wall, so the boundary faces carry no mass and each phase mass
is conserved to rounding.  ``R`` moves explicitly with
``R' = [[c]] + H(R)`` (radial flows vanish, so ``u . n = 0``).
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg
from scipy.linalg import solve_banded
from scipy.stats import linregress

from .core import (InvalidStateError, RadialGrid, RadialState, TwoPhaseRadialField,
                   collocation_grids, dissipation, energy, mean_curvature, phase_mass)
from .equilibria import find_equilibrium
from .linop import assemble_mode_operator


class SimulationAbort(RuntimeError):
    """Positivity loss or interface collision during a run."""


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-3
    T_final: float = 10.0
    scheme: str = "imex1"
    r_margin: float = 1e-3
    output_every: int = 10
    positivity_floor: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidStateError("dt must be positive")
        if not (self.T_final > 0 and math.isfinite(self.T_final)):
            raise InvalidStateError("T_final must be positive")
        # the radial integrator is first-order IMEX; linear mode runs always use BDF2
        if self.scheme != "imex1":
            raise InvalidStateError(f"unknown scheme {self.scheme!r}")
        if self.output_every < 1:
            raise InvalidStateError("output_every must be >= 1")

    @property
    def n_steps(self):
        return int(math.ceil(self.T_final / self.dt - 1e-9))


@dataclass(frozen=True, eq=False)
class Trajectory:
    columns: dict
    final_state: object = None
    converged: bool = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = {k: np.asarray(v) for k, v in self.columns.items()}
        object.__setattr__(self, "columns", cols)
        t = cols["t"]
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise InvalidStateError("trajectory times must be strictly increasing")

    @property
    def t(self):
        return self.columns["t"]

    def __getitem__(self, key):
        return self.columns[key]

    def __len__(self):
        return len(self.t)


# --- nonlinear radial flow ----------------------------------------------------


def _ref_nodes(n):
    x = np.linspace(0.0, 1.0, n)
    return x, np.concatenate(([0.0], 0.5 * (x[1:] + x[:-1]), [1.0]))


def _geometry(R, Rc, xi_i, xi_o):
    """Nodes and dual-cell edges of both phases for interface radius ``R``."""
    (xn_i, xe_i), (xn_o, xe_o) = xi_i, xi_o
    ri, ei = R * xn_i, R * xe_i
    ro, eo = R + (Rc - R) * xn_o, R + (Rc - R) * xe_o
    ri[-1], ei[-1] = R, R
    ro[0], eo[0], ro[-1], eo[-1] = R, R, Rc, Rc
    return (ri, ei), (ro, eo)


def _areas(edges):
    return math.pi * np.diff(edges**2)


def _diffusion_banded(nodes, edges, areas, kappa, dt):
    """Banded form of ``diag(areas) - dt * K`` with zero boundary fluxes."""
    r_f = edges[1:-1]
    g = 2 * math.pi * r_f * kappa / np.diff(nodes)
    n = len(nodes)
    ab = np.zeros((3, n))
    ab[1] = areas
    ab[1, :-1] += dt * g
    ab[1, 1:] += dt * g
    ab[0, 1:] = -dt * g
    ab[2, :-1] = -dt * g
    return ab


def _swept(c, edges_old, edges_new):
    """Net solute entering each cell through moving interior faces."""
    s = 0.5 * (c[1:] + c[:-1]) * math.pi * (edges_new[1:-1] ** 2 - edges_old[1:-1] ** 2)
    out = np.zeros_like(c)
    out[:-1] += s
    out[1:] -= s
    return out


class _RadialStepper:
    def __init__(self, state, params_kappa, cfg):
        gi, go = state.c.inner_grid, state.c.outer_grid
        if gi.flavor != "fv" or go.flavor != "fv":
            raise InvalidStateError("radial dynamics needs uniform (fv) grids in both phases")
        self.cfg = cfg
        self.kp, self.km = params_kappa
        self.Rc = state.R_container
        self.xi_i, self.xi_o = _ref_nodes(gi.n), _ref_nodes(go.n)
        self.R = state.R
        self.t = state.t
        (ri, ei), (ro, eo) = _geometry(self.R, self.Rc, self.xi_i, self.xi_o)
        self.mi = state.c.inner * _areas(ei)
        self.mo = state.c.outer * _areas(eo)
        self.ci, self.co = state.c.inner.copy(), state.c.outer.copy()

    def velocity(self):
        return self.ci[-1] - self.co[0] + mean_curvature(self.R)

    def step(self):
        cfg, dt, Rc = self.cfg, self.cfg.dt, self.Rc
        Rn = self.R + dt * self.velocity()
        if not (cfg.r_margin < Rn < Rc - cfg.r_margin):
            raise SimulationAbort(f"interface collision: R = {Rn} at t = {self.t + dt}")
        (_, ei0), (_, eo0) = _geometry(self.R, Rc, self.xi_i, self.xi_o)
        (ri, ei), (ro, eo) = _geometry(Rn, Rc, self.xi_i, self.xi_o)
        rhs_i = self.mi + _swept(self.ci, ei0, ei)
        rhs_o = self.mo + _swept(self.co, eo0, eo)
        ai, ao = _areas(ei), _areas(eo)
        ci = solve_banded((1, 1), _diffusion_banded(ri, ei, ai, self.kp, dt), rhs_i)
        co = solve_banded((1, 1), _diffusion_banded(ro, eo, ao, self.km, dt), rhs_o)
        floor = cfg.positivity_floor
        if ci.min() <= floor or co.min() <= floor:
            raise SimulationAbort(f"positivity lost at t = {self.t + dt}: min c = {min(ci.min(), co.min())}")
        self.R, self.t = Rn, self.t + dt
        self.ci, self.co = ci, co
        # masses from the conservative update, not from c * area, so drift stays at rounding
        self.mi, self.mo = ci * ai, co * ao

    def state(self):
        (ri, _), (ro, _) = _geometry(self.R, self.Rc, self.xi_i, self.xi_o)
        gi = RadialGrid(ri, "fv", 0.0, self.R)
        go = RadialGrid(ro, "fv", self.R, self.Rc)
        return RadialState(TwoPhaseRadialField(gi, self.ci, go, self.co), self.t)


def step_radial(state, cfg, kappa=(1.0, 1.0)):
    """Advance a radial state (uniform grids) by one time step."""
    st = _RadialStepper(state, kappa, cfg)
    st.step()
    return st.state()


def _distance_c(state, eq):
    c = state.c
    di = c.inner_grid.integrate((c.inner - eq.c_plus) ** 2)
    do = c.outer_grid.integrate((c.outer - eq.c_minus) ** 2)
    return math.sqrt(di + do)


def simulate_radial(init, cfg, kappa=(1.0, 1.0), equilibrium=None):
    """Run to ``cfg.T_final``, sampling diagnostics every ``cfg.output_every`` steps.

    Columns: ``t, R, M_plus, M_minus, E, D, dist`` (``|R - R*|``) and
    ``dist_c`` (``L2`` distance of ``c`` from the equilibrium concentrations).
    """
    Mp, Mm = phase_mass(init)
    if equilibrium is None:
        roots = find_equilibrium(Mp, Mm, init.R_container)
        equilibrium = min(roots, key=lambda e: abs(e.R_star - init.R))
    st = _RadialStepper(init, kappa, cfg)
    cols = {k: [] for k in ("t", "R", "M_plus", "M_minus", "E", "D", "dist", "dist_c")}

    def record(state):
        mp, mm = phase_mass(state)
        cols["t"].append(state.t)
        cols["R"].append(state.R)
        cols["M_plus"].append(mp)
        cols["M_minus"].append(mm)
        cols["E"].append(energy(state))
        cols["D"].append(dissipation(state))
        cols["dist"].append(abs(state.R - equilibrium.R_star))
        cols["dist_c"].append(_distance_c(state, equilibrium))

    record(init)
    n = cfg.n_steps
    for i in range(1, n + 1):
        st.step()
        if i % cfg.output_every == 0 or i == n:
            record(st.state())
    final = st.state()
    converged = bool(cols["dist"][-1] < 1e-6)
    return Trajectory(cols, final, converged,
                      meta={"R_star": equilibrium.R_star, "c_plus": equilibrium.c_plus,
                            "c_minus": equilibrium.c_minus, "mass_plus_sum": float(st.mi.sum()),
                            "mass_minus_sum": float(st.mo.sum())})


# --- linear mode dynamics -----------------------------------------------------


def linear_mode_evolve(k, init, cfg, params, op=None):
    """Integrate ``x' = (L + K) x`` for one mode (BDF2 after a backward-Euler start).

    Records the discrete energy norm of the reduced state.
    """
    if init.k != k:
        raise InvalidStateError("initial state belongs to a different mode")
    if op is None:
        n_in, n_out = len(init.mu_plus), len(init.mu_minus)
        grids = collocation_grids(n_in, params.R_container, n_out)
        op = assemble_mode_operator(k, params, grids)
    if not op.is_admissible(init):
        raise InvalidStateError("initial state violates the domain conditions")
    A = op.matrix
    n = op.size
    dt = cfg.dt
    x_prev = op.reduce(init)
    lu1 = scipy.linalg.lu_factor(np.eye(n) - dt * A)
    lu2 = scipy.linalg.lu_factor(3 * np.eye(n) - 2 * dt * A)
    ts, norms = [0.0], [op.norm(x_prev)]
    x = scipy.linalg.lu_solve(lu1, x_prev)
    steps = cfg.n_steps
    for i in range(1, steps + 1):
        if i > 1:
            x_prev, x = x, scipy.linalg.lu_solve(lu2, 4 * x - x_prev)
        if i % cfg.output_every == 0 or i == steps:
            ts.append(i * dt)
            norms.append(op.norm(x))
    return Trajectory({"t": ts, "norm": norms}, op.expand(x), meta={"k": k})


# --- rate extraction ----------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    rate: float
    stderr: float
    n_points: int


def decay_rate_fit(traj, tail_fraction=0.5, column="norm", t=None):
    """Least-squares slope of ``log(column)`` against ``t`` over the final tail.

    ``traj`` may be a Trajectory or, with ``t`` given, an array of values.
    """
    if t is None:
        t, y = traj.t, traj[column]
    else:
        y = traj
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    if not 0 < tail_fraction <= 1:
        raise InvalidStateError("tail_fraction must lie in (0, 1]")
    n0 = int(math.floor(len(t) * (1 - tail_fraction)))
    tt, yy = t[n0:], y[n0:]
    if len(tt) < 3:
        raise InvalidStateError("need at least three tail samples")
    if np.any(yy <= 0):
        raise InvalidStateError("tail values must be positive")
    fit = linregress(tt, np.log(yy))
    return DecayFit(float(fit.slope), float(fit.stderr), len(tt))
