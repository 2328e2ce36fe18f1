"""The acceptance suite: one function per criterion, each returning a
:class:`CriterionResult`.  Shared by ``osmoflow verify-all`` and the test
suite."""

from dataclasses import dataclass, field
import math
import time

import numpy as np

from .config import RunConfig
from .core import PhysParams, collocation_grids, constant_state, phase_mass
from .dynamics import StepperConfig, decay_rate_fit, linear_mode_evolve, simulate_radial
from .equilibria import det_formula, find_equilibrium, phi_matrix, phi_matrix_quadrature
from .linop import (assemble_mode_operator, eigen_spectrum, random_admissible_state,
                    remove_kernel_component, semisimplicity_check, spectrum_report)
from .manufactured import convergence_study
from .stokes import normal_velocity_response, stokes_energy_identity_residual, verify_lopatinskii


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name}: {self.summary()}"

    def summary(self):
        return ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items() if not isinstance(v, (list, dict)))

    def to_dict(self, timing=False):
        """JSON form; wall-clock entries are left out unless ``timing`` so
        reports are reproducible byte for byte."""
        details = {k: v for k, v in self.details.items() if timing or not k.startswith("runtime")}
        out = {"id": self.id, "name": self.name, "passed": bool(self.passed),
               "details": _jsonable(details)}
        if timing:
            out["seconds"] = self.seconds
        return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


class _Context:
    """Caches spectra shared between criteria."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._reports = {}

    def report(self, n, n_coarse):
        key = (n, n_coarse)
        if key not in self._reports:
            sc = self.cfg.spectrum
            t0 = time.perf_counter()
            rep = spectrum_report(self.cfg.params, n=n, k_max=sc.k_max, tol_zero=sc.tol_zero,
                                  n_coarse=n_coarse, threshold=sc.spurious_shift)
            self._reports[key] = (rep, time.perf_counter() - t0)
        return self._reports[key]


def kernel_dimension(ctx):
    g = ctx.cfg.grid
    rep, secs = ctx.report(g.n, g.n_coarse)
    per = {k: v for k, v in rep.kernel_by_mode.items() if v}
    expected = {0: 2, 1: 1, -1: 1}
    ok = (rep.kernel_dimension == rep.expected_kernel_dimension and per == expected
          and g.n >= 128 and secs < 30.0)
    return CriterionResult(1, "kernel dimension", ok,
                           {"kernel_dimension": rep.kernel_dimension, "per_mode": per,
                            "n": g.n, "runtime_s": secs})


def negative_real_spectrum(ctx):
    g, sc = ctx.cfg.grid, ctx.cfg.spectrum
    rep, _ = ctx.report(g.n, g.n_coarse)
    rep2, _ = ctx.report(g.n_fine, g.n)
    nonzero = np.concatenate([sp.nonzero(sc.tol_zero) for sp in rep.modes.values()])
    max_re = float(nonzero.real.max())
    max_im = float(np.abs(nonzero.imag).max())
    rel = abs(rep.gap - rep2.gap) / abs(rep2.gap)
    ok = max_re < 0 and max_im < 1e-8 and rep.gap > 0 and rel < 5e-4
    return CriterionResult(2, "negative real spectrum and stable gap", ok,
                           {"max_re_nonzero": max_re, "max_abs_imag": max_im, "gap_n": rep.gap,
                            "gap_2n": rep2.gap, "gap_rel_change": rel})


def semisimplicity(ctx):
    res = semisimplicity_check(ctx.cfg.params, n=ctx.cfg.grid.n, tol=0.1,
                               tol_zero=ctx.cfg.spectrum.tol_zero)
    vals = list(res.residuals.values())
    ok = res.passed and res.n_kernel_vectors == ctx.cfg.params.N + 2
    return CriterionResult(3, "semisimple zero eigenvalue", ok,
                           {"n_kernel_vectors": res.n_kernel_vectors,
                            "min_relative_residual": min(vals) if vals else math.nan})


def stokes_energy_identity(ctx):
    prm, n = ctx.cfg.params, ctx.cfg.grid.stokes_n
    grids = collocation_grids(n, prm.R_container)
    res = {k: stokes_energy_identity_residual(k, prm, grids) for k in range(2, 9)}
    study = [stokes_energy_identity_residual(4, prm, collocation_grids(m, prm.R_container))
             for m in (8, 12, 16)]
    orders = [math.log(study[i] / study[i + 1]) / math.log(m2 / m1)
              for i, (m1, m2) in enumerate(((8, 12), (12, 16)))]
    ok = max(res.values()) <= 1e-6 and min(orders) >= 2
    return CriterionResult(4, "Stokes energy identity", ok,
                           {"max_residual": max(res.values()), "refinement_k4": study,
                            "min_observed_order": min(orders)})


def stokes_response_signs(ctx):
    prm, n = ctx.cfg.params, ctx.cfg.grid.stokes_n
    v = {k: normal_velocity_response(k, prm, n=n) for k in range(-16, 17)}
    signs = [v[k] * (prm.m - k * k) for k in v]
    ok = abs(v[0]) <= 1e-10 and abs(v[1]) <= 1e-10 and abs(v[-1]) <= 1e-10 and min(signs) >= 0
    return CriterionResult(5, "Stokes response signs", ok,
                           {"v0": v[0], "v1": v[1], "min_v_times_symbol": min(signs)})


def lopatinskii_shapiro(ctx):
    rng = np.random.default_rng(ctx.cfg.seed)
    worst_det, worst_sigma, worst_hom = 0.0, math.inf, 0.0
    for _ in range(20):
        nup, num = 10 ** rng.uniform(-1, 1, size=2)
        xi = (float(rng.choice([-1, 1]) * rng.uniform(0.1, 10)),)
        rep = verify_lopatinskii(nup, num, xi)
        exact = -2 * (nup + num) ** 2
        worst_det = max(worst_det, abs(rep.det_M - exact) / abs(exact))
        worst_sigma = min(worst_sigma, rep.min_singular_value)
        rep2 = verify_lopatinskii(nup, num, (2 * xi[0],))
        worst_hom = max(worst_hom, abs(rep2.min_singular_value - rep.min_singular_value))
    ok = worst_det < 1e-14 and worst_sigma > 0
    return CriterionResult(6, "Lopatinskii-Shapiro", ok,
                           {"max_rel_det_error": worst_det, "min_singular_value": worst_sigma,
                            "homogeneity_defect": worst_hom})


def manufactured_convergence(ctx):
    details, ok = {}, True
    for k in (0, 1, 2):
        ns, errs, orders = convergence_study(k, ctx.cfg.params)
        details[f"k{k}_min_order"] = min(orders)
        details[f"k{k}_errors"] = errs
        ok = ok and min(orders) >= 2 and len(orders) >= 3
    return CriterionResult(7, "manufactured-solution convergence", ok, details)


def nonlinear_gradient_flow(ctx):
    cfg = ctx.cfg
    s, prm = cfg.simulate, cfg.params
    init = constant_state(s.c_plus, s.c_minus, s.R, prm.R_container, s.n_inner, s.n_outer)
    M0 = phase_mass(init)
    eq = min(find_equilibrium(*M0, prm.R_container), key=lambda e: abs(e.R_star - s.R))
    scfg = StepperConfig(dt=s.dt, T_final=s.t_final, output_every=s.output_every)
    t0 = time.perf_counter()
    traj = simulate_radial(init, scfg, (prm.kappa_plus, prm.kappa_minus), eq)
    secs = time.perf_counter() - t0
    drift = max(np.abs(traj["M_plus"] / M0[0] - 1).max(), np.abs(traj["M_minus"] / M0[1] - 1).max())
    dE = float(np.diff(traj["E"]).max())
    tol_E = (s.dt * s.output_every) ** 2
    final_err = abs(traj.final_state.R - eq.R_star)
    # tail fit where the signal is well above rounding
    d = traj["dist"]
    mask = (d > 1e-11) & (traj.t >= 0.25 * s.t_final)
    fit = decay_rate_fit(d[mask], 1.0, t=traj.t[mask])
    unit = eq.unit_params(prm)
    sp = eigen_spectrum(assemble_mode_operator(0, unit, n=cfg.grid.n),
                        assemble_mode_operator(0, unit, n=cfg.grid.n_coarse))
    lam = float(sp.nonzero(cfg.spectrum.tol_zero)[0].real) / eq.time_scale
    rel = abs(fit.rate / lam - 1)
    ok = drift < 1e-10 and dE <= tol_E and final_err < 1e-6 and rel < 0.05 and secs < 120
    return CriterionResult(8, "nonlinear gradient flow", ok,
                           {"mass_drift": float(drift), "max_energy_increase": dE,
                            "R_final_error": final_err, "R_star": eq.R_star,
                            "fitted_rate": fit.rate, "eigenvalue": lam, "rate_rel_error": rel,
                            "runtime_s": secs})


def linear_consistency(ctx):
    cfg = ctx.cfg
    me, prm = cfg.mode_evolve, cfg.params
    rng = np.random.default_rng(cfg.seed)
    scfg = StepperConfig(dt=me.dt, T_final=me.t_final, output_every=me.output_every)
    details, ok = {}, True
    for k in (0, 2, 3):
        op = assemble_mode_operator(k, prm, n=cfg.grid.n)
        st = random_admissible_state(op, rng)
        st = op.expand(remove_kernel_component(op, op.reduce(st), cfg.spectrum.tol_zero))
        traj = linear_mode_evolve(k, st, scfg, prm, op=op)
        fit = decay_rate_fit(traj, me.tail_fraction)
        sp = eigen_spectrum(op, assemble_mode_operator(k, prm, n=cfg.grid.n_coarse))
        lam = float(sp.nonzero(cfg.spectrum.tol_zero)[0].real)
        rel = abs(fit.rate / lam - 1)
        details[f"k{k}_rate"] = fit.rate
        details[f"k{k}_eigenvalue"] = lam
        details[f"k{k}_rel_error"] = rel
        ok = ok and rel < 0.02
    return CriterionResult(9, "linear evolution vs spectrum", ok, details)


def phi_positivity(ctx):
    prm = ctx.cfg.params
    A, det = phi_matrix(prm)
    quad_dev = float(np.abs(phi_matrix_quadrature(prm, n=ctx.cfg.grid.n) - A).max())
    dets = []
    for cm in np.linspace(0.1, 10.0, 10):
        for Rc in np.linspace(1.1, 10.0, 10):
            p = PhysParams(ctilde_plus=cm + 1.0, ctilde_minus=cm, R_container=Rc)
            dets.append(phi_matrix(p)[1])
    target = 5.5 * math.pi**2
    ok = abs(det - target) <= 1e-8 and min(dets) > 0 and quad_dev <= 1e-10 \
        and abs(det_formula(prm) - det) <= 1e-10 * abs(det)
    return CriterionResult(10, "Phi-matrix positivity", ok,
                           {"det_A": det, "target": target, "min_sweep_det": min(dets),
                            "sweep_points": len(dets), "quadrature_deviation": quad_dev})


CRITERIA = (kernel_dimension, negative_real_spectrum, semisimplicity, stokes_energy_identity,
            stokes_response_signs, lopatinskii_shapiro, manufactured_convergence,
            nonlinear_gradient_flow, linear_consistency, phi_positivity)


def run_acceptance(cfg=None, only=None):
    """Run all criteria (or the ids in ``only``) and return their results."""
    ctx = _Context(cfg or RunConfig())
    out = []
    for cid, fn in enumerate(CRITERIA, start=1):
        if only is not None and cid not in only:
            continue
        t0 = time.perf_counter()
        res = fn(ctx)
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
