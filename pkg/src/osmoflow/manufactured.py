"""Manufactured solutions for the general two-phase mode Stokes problem.

Smooth fields are chosen first; sympy differentiates them into the body
force ``f``, the divergence data ``g`` and the interface jumps ``h`` and
``l`` that make them exact solutions.  The inner fields respect the
regularity structure at the origin,

    u_r + i u_theta = r^|k+1| P(r^2),  u_r - i u_theta = r^|k-1| Q(r^2),
    p = r^|k| S(r^2),

and the outer ones vanish at the wall.  Rational factors with complex poles
near the real axis keep the errors above rounding at modest resolutions.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
import sympy as sp

from .core import PhysParams, chebyshev_grid, collocation_grids
from .stokes import ModeStokesProblem, StokesForcing, solve_stokes_mode

_r = sp.symbols("r", positive=True)


def _lap_vec(ur, ut, k):
    r = _r
    lr = sp.diff(ur, r, 2) + sp.diff(ur, r) / r - (1 + k**2) * ur / r**2 - 2 * sp.I * k * ut / r**2
    lt = sp.diff(ut, r, 2) + sp.diff(ut, r) / r - (1 + k**2) * ut / r**2 + 2 * sp.I * k * ur / r**2
    return lr, lt


def _traction(ur, ut, p, nu, k):
    r = _r
    return (2 * nu * sp.diff(ur, r) - p, nu * (sp.diff(ut, r) - ut / r + sp.I * k * ur / r))


def _numeric(expr):
    f = sp.lambdify(_r, expr, "numpy")
    return lambda x: np.broadcast_to(np.asarray(f(x), dtype=complex), np.shape(x)).copy()


@dataclass(frozen=True, eq=False)
class Manufactured:
    k: int
    params: PhysParams
    exact: dict
    forcing: StokesForcing
    h_normal: complex
    h_tangent: complex

    def problem(self, grids):
        pref = 0.0
        if self.k == 0:
            # gauge the outer pressure mean like the solver does, from a fine quadrature
            gf = chebyshev_grid(1.0, float(self.params.R_container), 256)
            pm = self.exact["-"]["p"](gf.nodes)
            pref = float((gf.weights @ pm).real / gf.weights.sum())
        return ModeStokesProblem(self.k, self.h_normal, self.h_tangent, self.params, grids,
                                 self.forcing, pref)

    def error(self, sol):
        """Max nodal error over all velocity and pressure components."""
        err = 0.0
        for ph, g, vals in (("+", sol.grids[0], (sol.u_r_plus, sol.u_theta_plus, sol.p_plus)),
                            ("-", sol.grids[1], (sol.u_r_minus, sol.u_theta_minus, sol.p_minus))):
            for key, v in zip(("u_r", "u_theta", "p"), vals):
                err = max(err, float(np.abs(v - self.exact[ph][key](g.nodes)).max()))
        return err


@lru_cache(maxsize=None)
def manufactured(k, params=PhysParams()):
    r, I = _r, sp.I
    nup = sp.nsimplify(params.nu_plus, rational=True)
    num = sp.nsimplify(params.nu_minus, rational=True)
    Rc = sp.nsimplify(params.R_container, rational=True)
    a = r**abs(k + 1) * (1 + r**2 / 3) / (r**2 + sp.Rational(1, 4))
    b = r**abs(k - 1) * (2 - r**2) / (r**2 + sp.Rational(1, 3))
    fields = {
        "+": ((a + b) / 2, (a - b) / (2 * I), r**abs(k) * (1 + r**2) / (r**2 + sp.Rational(1, 2)), nup),
        "-": ((Rc - r) * (1 + r) / (r**2 + sp.Rational(1, 5)),
              I * (Rc - r) * (r - 3) / (r + sp.Rational(1, 2)),
              sp.cos(r) / (r + 1), num),
    }
    exact, data = {}, {}
    for ph, (ur, ut, p, nu) in fields.items():
        lr, lt = _lap_vec(ur, ut, k)
        f_r = -nu * lr + sp.diff(p, r)
        f_t = -nu * lt + I * k * p / r
        g = -(sp.diff(ur, r) + ur / r + I * k * ut / r)
        exact[ph] = {"u_r": _numeric(ur), "u_theta": _numeric(ut), "p": _numeric(p)}
        fr, ft = _numeric(f_r), _numeric(f_t)
        data[ph] = (lambda x, fr=fr, ft=ft: (fr(x), ft(x)), _numeric(g))
    tp = _traction(*fields["+"][:3], nup, k)
    tm = _traction(*fields["-"][:3], num, k)

    def at1(e):
        return complex(sp.N(e.subs(r, 1), 30))

    forcing = StokesForcing(f_plus=data["+"][0], f_minus=data["-"][0],
                            g_plus=data["+"][1], g_minus=data["-"][1],
                            l=(at1(fields["+"][0] - fields["-"][0]), at1(fields["+"][1] - fields["-"][1])))
    return Manufactured(k, params, exact, forcing, at1(tp[0] - tm[0]), at1(tp[1] - tm[1]))


def convergence_study(k, params=PhysParams(), resolutions=(8, 12, 16, 24)):
    """Errors and observed orders ``log(e_i/e_{i+1}) / log(n_{i+1}/n_i)``."""
    mms = manufactured(k, params)
    errors = []
    for n in resolutions:
        sol = solve_stokes_mode(mms.problem(collocation_grids(n, params.R_container)))
        errors.append(mms.error(sol))
    orders = [math.log(errors[i] / errors[i + 1]) / math.log(resolutions[i + 1] / resolutions[i])
              for i in range(len(errors) - 1)]
    return list(resolutions), errors, orders
