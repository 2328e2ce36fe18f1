"""Closed-form reference solutions built with sympy.

The mode-k Stokes problem is solved exactly with a streamfunction
``psi(r) exp(i k theta)`` (``u_r = i k psi / r``, ``u_theta = -psi'``), whose
radial factor is a combination of biharmonic powers.
"""

from functools import lru_cache

import numpy as np
import sympy as sp

r = sp.symbols("r", positive=True)
I = sp.I


def _lap_vec(ur, ut, k):
    lr = sp.diff(ur, r, 2) + sp.diff(ur, r) / r - (1 + k**2) * ur / r**2 - 2 * I * k * ut / r**2
    lt = sp.diff(ut, r, 2) + sp.diff(ut, r) / r - (1 + k**2) * ut / r**2 + 2 * I * k * ur / r**2
    return lr, lt


def _traction(ur, ut, p, nu, k):
    """``tau e_r`` at radius ``r``: (normal, tangential)."""
    return (2 * nu * sp.diff(ur, r) - p,
            nu * (sp.diff(ut, r) - ut / r + I * k * ur / r))


def _rational(x):
    return sp.nsimplify(x, rational=True)


@lru_cache(maxsize=None)
def exact_mode_flow(k, nu_plus=1, nu_minus=1, R_container=2, h_normal=None, h_tangent=0):
    """Exact solution for mode ``k >= 1``; returns sympy expressions and ``v``.

    ``h_normal`` defaults to ``1 - k**2`` (the unit interface mode in 2D).
    """
    if k < 1:
        raise ValueError("closed form implemented for k >= 1")
    nup, num, Rc = _rational(nu_plus), _rational(nu_minus), _rational(R_container)
    hn = 1 - k**2 if h_normal is None else _rational(h_normal)
    ht = _rational(h_tangent)
    a = sp.symbols("a0:6")
    if k == 1:
        inner = [r, r**3]
        outer = [r, 1 / r, r**3, r * sp.log(r)]
    else:
        inner = [r**k, r**(k + 2)]
        outer = [r**k, r**(-k), r**(k + 2), r**(2 - k)]
    psi_p = a[0] * inner[0] + a[1] * inner[1]
    psi_m = sum(c * b for c, b in zip(a[2:], outer))
    fields = {}
    for ph, psi, nu in (("+", psi_p, nup), ("-", psi_m, num)):
        ur = I * k * psi / r
        ut = -sp.diff(psi, r)
        _, lt = _lap_vec(ur, ut, k)
        p = sp.simplify(nu * r * lt / (I * k))
        fields[ph] = (ur, ut, p, nu)
    (urp, utp, pp, _), (urm, utm, pm, _) = fields["+"], fields["-"]
    tp = _traction(urp, utp, pp, nup, k)
    tm = _traction(urm, utm, pm, num, k)
    eqs = [
        (urp - urm).subs(r, 1),
        (utp - utm).subs(r, 1),
        (tp[0] - tm[0]).subs(r, 1) - hn,
        (tp[1] - tm[1]).subs(r, 1) - ht,
        urm.subs(r, Rc),
        utm.subs(r, Rc),
    ]
    sol = sp.solve(eqs, a, dict=True)[0]
    out = {ph: tuple(sp.simplify(e.subs(sol)) for e in fields[ph][:3]) for ph in ("+", "-")}
    v = sp.nsimplify(sp.simplify(out["+"][0].subs(r, 1)))
    return out, v


def momentum_residual(k, ur, ut, p, nu):
    lr, lt = _lap_vec(ur, ut, k)
    return (sp.simplify(-nu * lr + sp.diff(p, r)), sp.simplify(-nu * lt + I * k * p / r))


def lambdify(expr):
    f = sp.lambdify(r, expr, "numpy")
    return lambda x: np.broadcast_to(np.asarray(f(x), dtype=complex), np.shape(x)).copy()
