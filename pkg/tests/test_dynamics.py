import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osmoflow.core import (InvalidStateError, PhysParams, RadialState, TwoPhaseRadialField,
                           collocation_grids, constant_state, phase_mass)
from osmoflow.dynamics import (SimulationAbort, StepperConfig, Trajectory, decay_rate_fit,
                               linear_mode_evolve, simulate_radial, step_radial)
from osmoflow.equilibria import find_equilibrium, null_space_basis
from osmoflow.linop import (ModeState, assemble_mode_operator, eigen_spectrum, random_admissible_state,
                            remove_kernel_component)

P0 = PhysParams()


class TestConfig:
    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"T_final": -1.0}, {"scheme": "rk4"},
                                    {"output_every": 0}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidStateError):
            StepperConfig(**kw)

    def test_n_steps(self):
        assert StepperConfig(dt=0.1, T_final=1.0).n_steps == 10

    def test_trajectory_times_increase(self):
        with pytest.raises(InvalidStateError):
            Trajectory({"t": [0.0, 1.0, 1.0]})


class TestStep:
    def test_equilibrium_unchanged(self):
        s = constant_state(2.0, 1.0, 1.0, 2.0, 65, 65)
        s1 = step_radial(s, StepperConfig(dt=1e-3))
        assert abs(s1.R - 1.0) < 1e-10
        assert np.abs(s1.c.inner - 2.0).max() < 1e-10
        assert np.abs(s1.c.outer - 1.0).max() < 1e-10

    def test_radius_grows_when_driven(self):
        s = constant_state(2.2, 1.0, 1.0, 2.0, 65, 65)
        assert step_radial(s, StepperConfig(dt=1e-3)).R > 1.0

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1.2, 4.0), st.floats(0.3, 2.0), st.floats(0.6, 1.4), st.floats(0.2, 5), st.floats(0.2, 5))
    def test_mass_drift_per_step(self, cp, cm, R, kp, km):
        s = constant_state(cp, cm, R, 2.0, 33, 33)
        xi = s.c.inner_grid.nodes
        s = RadialState(TwoPhaseRadialField(s.c.inner_grid, cp * (1 + 0.1 * np.cos(3 * xi)),
                                            s.c.outer_grid, s.c.outer))
        m0 = phase_mass(s)
        s1 = step_radial(s, StepperConfig(dt=1e-3), kappa=(kp, km))
        m1 = phase_mass(s1)
        for a, b in zip(m0, m1):
            assert abs(b - a) / a < 1e-12

    def test_collision_aborts(self):
        s = constant_state(50.0, 0.1, 1.9, 2.0, 17, 17)
        with pytest.raises(SimulationAbort):
            step_radial(s, StepperConfig(dt=0.1, r_margin=0.05))

    def test_needs_fv_grids(self):
        s = constant_state(2.0, 1.0, 1.0, 2.0, 17, 17, flavor="cheb")
        with pytest.raises(InvalidStateError):
            step_radial(s, StepperConfig())


@pytest.fixture(scope="module")
def run():
    s = constant_state(2.2, 1.0, 1.0, 2.0, 129, 129)
    return simulate_radial(s, StepperConfig(dt=1e-3, T_final=1.0, output_every=10))


@pytest.fixture(scope="module")
def grids():
    return collocation_grids(48, P0.R_container)


class TestSimulate:
    def test_energy_monotone(self, run):
        assert np.all(np.diff(run["E"]) <= 1e-12)

    def test_mass_conserved_over_run(self, run):
        for col in ("M_plus", "M_minus"):
            m = run[col]
            assert np.abs(m - m[0]).max() / m[0] < 1e-10

    def test_energy_rate_matches_dissipation(self, run):
        t, E, D = run.t, run["E"], run["D"]
        dEdt = np.gradient(E, t)
        sel = (t > 0.1) & (t < t[-1] - 0.05)
        assert np.max(np.abs(dEdt[sel] + D[sel]) / D[sel]) < 1e-2

    def test_positivity(self, run):
        fs = run.final_state
        assert fs.c.inner.min() > 0 and fs.c.outer.min() > 0

    def test_converges_to_mass_determined_root(self):
        s = constant_state(2.1, 1.0, 1.0, 2.0, 65, 65)
        eq = min(find_equilibrium(*phase_mass(s), 2.0), key=lambda e: abs(e.R_star - 1.0))
        tr = simulate_radial(s, StepperConfig(dt=2e-3, T_final=14.0, output_every=50))
        assert tr.converged
        assert abs(tr.final_state.R - eq.R_star) < 1e-6
        assert tr.meta["R_star"] == eq.R_star

    def test_stays_at_equilibrium(self):
        (eq,) = find_equilibrium(2.2 * math.pi, 3 * math.pi, 2.0)
        tr = simulate_radial(eq.to_state(), StepperConfig(dt=1e-3, T_final=0.5), equilibrium=eq)
        assert np.max(tr["dist"]) < 1e-8


class TestLinear:
    def test_kernel_vector_stationary(self, grids):
        e = null_space_basis(P0, grids)[0]
        op = assemble_mode_operator(0, P0, grids)
        tr = linear_mode_evolve(0, e, StepperConfig(dt=1e-2, T_final=2.0), P0, op=op)
        diff = op.reduce(tr.final_state) - op.reduce(e)
        assert op.norm(diff) < 1e-8
        assert np.ptp(tr["norm"]) < 1e-8

    def test_zero_stays_zero(self, grids):
        z = ModeState(3, np.zeros(grids[0].n), np.zeros(grids[1].n), 0.0)
        tr = linear_mode_evolve(3, z, StepperConfig(dt=1e-2, T_final=1.0), P0)
        assert np.all(tr["norm"] == 0)

    def test_mode_two_rate(self, grids):
        op = assemble_mode_operator(2, P0, grids)
        w = random_admissible_state(op, np.random.default_rng(0))
        tr = linear_mode_evolve(2, w, StepperConfig(dt=1e-3, T_final=8.0), P0, op=op)
        lam = eigen_spectrum(op).eigenvalues[0].real
        assert decay_rate_fit(tr).rate == pytest.approx(lam, rel=0.02)

    def test_mode_zero_rate_after_kernel_removal(self, grids):
        op = assemble_mode_operator(0, P0, grids)
        w = random_admissible_state(op, np.random.default_rng(1))
        w = op.expand(remove_kernel_component(op, op.reduce(w)))
        tr = linear_mode_evolve(0, w, StepperConfig(dt=1e-3, T_final=8.0), P0, op=op)
        lam = eigen_spectrum(op).nonzero()[0].real
        assert decay_rate_fit(tr).rate == pytest.approx(lam, rel=0.02)

    def test_inadmissible_init_rejected(self, grids):
        w = ModeState(2, np.zeros(grids[0].n), np.zeros(grids[1].n), 1.0)
        with pytest.raises(InvalidStateError):
            linear_mode_evolve(2, w, StepperConfig(), P0)

    def test_wrong_mode_rejected(self, grids):
        w = ModeState(2, np.zeros(grids[0].n), np.zeros(grids[1].n), 0.0)
        with pytest.raises(InvalidStateError):
            linear_mode_evolve(3, w, StepperConfig(), P0)


class TestDecayFit:
    t = np.linspace(0, 20, 401)

    def test_exact_exponential(self):
        fit = decay_rate_fit(np.exp(-0.5 * self.t), t=self.t)
        assert abs(fit.rate + 0.5) < 1e-12

    def test_modulated(self):
        y = np.exp(-0.5 * self.t) * (1 + 0.01 * np.sin(self.t))
        assert abs(decay_rate_fit(y, t=self.t).rate + 0.5) < 0.01

    def test_constant(self):
        assert decay_rate_fit(np.full_like(self.t, 3.0), t=self.t).rate == pytest.approx(0, abs=1e-14)

    def test_nonpositive_tail_rejected(self):
        y = np.exp(-self.t)
        y[-1] = 0.0
        with pytest.raises(InvalidStateError):
            decay_rate_fit(y, t=self.t)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-5, 5), st.floats(-10, 10), st.floats(0.1, 1.0))
    def test_recovers_any_rate(self, rate, logc, frac):
        y = np.exp(logc + rate * self.t)
        assert decay_rate_fit(y, frac, t=self.t).rate == pytest.approx(rate, abs=1e-9)
