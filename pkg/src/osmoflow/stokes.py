"""Two-phase Stokes problem for one angular mode in concentric geometry.

The interface is the unit circle and the container wall is ``r = R_container``.
A mode-``k`` field is ``u = (u_r(r) e_r + u_theta(r) e_theta) exp(i k theta)``
with pressure ``p(r) exp(i k theta)``; the strain is ``eps(u) = grad u +
grad u^T`` and the stress ``tau = nu eps(u) - p Id``.  Jumps ``[[.]]`` are
inner trace minus outer trace.

Discretisation: Chebyshev collocation per phase in primitive variables with
the pressure carried on the interior Lobatto nodes only (a P_N - P_{N-2}
pairing, which has no spurious pressure modes).  The inner disk uses
parity-folded grids, so regularity at the origin is built into the basis.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from .chebyshev import InteriorParity, diff_matrix, interp_matrix
from .core import TWO_PI, InvalidStateError, PhysParams, collocation_grids

DEFAULT_STOKES_N = 48


class SingularSystemError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class StokesForcing:
    """Manufactured data for the general problem.

    ``f_plus``/``f_minus`` map radii to ``(f_r, f_theta)``; ``g_plus``/``g_minus``
    map radii to the prescribed ``-div u``; ``l`` is the velocity jump
    ``(l_r, l_theta)`` at the interface.
    """

    f_plus: object = None
    f_minus: object = None
    g_plus: object = None
    g_minus: object = None
    l: tuple = (0.0, 0.0)


@dataclass(frozen=True, eq=False)
class ModeStokesProblem:
    k: int
    h_normal: complex
    h_tangent: complex = 0.0
    params: PhysParams = field(default_factory=PhysParams)
    grids: tuple = None
    forcing: StokesForcing = None
    pressure_ref: float = 0.0

    def __post_init__(self):
        if int(self.k) != self.k:
            raise InvalidStateError("k must be an integer")
        if not (np.isfinite(self.h_normal) and np.isfinite(self.h_tangent)):
            raise InvalidStateError("traction jump amplitudes must be finite")
        if self.grids is None:
            object.__setattr__(self, "grids", collocation_grids(DEFAULT_STOKES_N, self.params.R_container))
        gi, go = self.grids
        if gi.flavor != "parity" or gi.b != 1.0 or go.flavor != "cheb" or go.a != 1.0 \
                or go.b != self.params.R_container:
            raise InvalidStateError("Stokes grids must be a parity grid on (0,1] and a "
                                    "Chebyshev grid on [1, R_container]")


@dataclass(frozen=True, eq=False)
class ModeFlowSolution:
    k: int
    params: PhysParams
    grids: tuple
    u_r_plus: np.ndarray
    u_theta_plus: np.ndarray
    p_plus: np.ndarray
    u_r_minus: np.ndarray
    u_theta_minus: np.ndarray
    p_minus: np.ndarray
    residuals: dict

    @property
    def v_interface(self):
        """Normal velocity ``u . n`` at the interface."""
        return self.u_r_plus[-1]

    @property
    def pressure_jump(self):
        return self.p_plus[-1] - self.p_minus[0]

    def strain(self, phase):
        """``(eps_rr, eps_tt, eps_rt)`` on the nodes of ``phase`` ('+' or '-')."""
        if phase == "+":
            g, ur, ut = self.grids[0], self.u_r_plus, self.u_theta_plus
        else:
            g, ur, ut = self.grids[1], self.u_r_minus, self.u_theta_minus
        return _strain(g, self.k, ur, ut)

    def viscous_dissipation(self):
        """``1/2 int nu |eps(u)|^2`` over both phases (per unit mode amplitude)."""
        total = 0.0
        for phase, g, nu in (("+", self.grids[0], self.params.nu_plus),
                             ("-", self.grids[1], self.params.nu_minus)):
            err, ett, ert = self.strain(phase)
            dens = np.abs(err)**2 + np.abs(ett)**2 + 2 * np.abs(ert)**2
            total += 0.5 * nu * float(g.weights @ dens)
        return total


def _velocity_parity(k):
    return -1 if k % 2 == 0 else 1


def _strain(grid, k, ur, ut):
    s = _velocity_parity(k)
    r = grid.nodes
    D = grid.D(s)
    err = 2 * (D @ ur)
    ett = 2 * (1j * k * ut + ur) / r
    ert = D @ ut - ut / r + 1j * k * ur / r
    return err, ett, ert


@lru_cache(maxsize=None)
def _ops(grid, parity_p):
    """Pressure derivative / interpolation operators for one phase.

    Returns ``(Dp, E)``: derivative on pressure nodes and evaluation at all
    velocity nodes, both acting on pressure-node values.
    """
    if grid.flavor == "parity":
        ip = InteriorParity(grid._fold)
        return ip.D(parity_p) / grid.b, ip.interp(grid._fold.half, parity_p)
    xp = grid.nodes[1:-1]
    return diff_matrix(xp), interp_matrix(xp, grid.nodes)


def _eval(fun, r):
    return np.zeros_like(r, dtype=complex) if fun is None else np.asarray(fun(r), dtype=complex)


def assemble_stokes(problem):
    """Dense collocation system ``A x = b`` and the unknown layout."""
    k, prm = problem.k, problem.params
    gi, go = problem.grids
    ni, no = gi.n, go.n
    su = _velocity_parity(k)
    sp = -su
    npi, npo = ni - 1, no - 2
    # unknown layout
    sl = {}
    off = 0
    for name, size in (("ur+", ni), ("ut+", ni), ("p+", npi), ("ur-", no), ("ut-", no), ("p-", npo)):
        sl[name] = slice(off, off + size)
        off += size
    nunk = off
    A = np.zeros((nunk, nunk), dtype=complex)
    b = np.zeros(nunk, dtype=complex)
    forcing = problem.forcing or StokesForcing()

    row = 0
    for ph, g, nu, rows, Dpar in (("+", gi, prm.nu_plus, slice(0, ni - 1), su),
                                  ("-", go, prm.nu_minus, slice(1, no - 1), None)):
        r = g.nodes[rows]
        D = g.D(Dpar if Dpar is not None else 1)[rows]
        D2 = g.D2(Dpar if Dpar is not None else 1)[rows]
        Dp, _ = _ops(g, sp)
        m = len(r)
        ridx = np.arange(m)
        I = np.eye(g.n)[rows]
        ur, ut, p = sl["ur" + ph], sl["ut" + ph], sl["p" + ph]
        lap = D2 + D / r[:, None] - (1 + k * k) * I / (r * r)[:, None]
        cross = 2j * k * I / (r * r)[:, None]
        fr = ft = _eval(None, r)
        ffun = forcing.f_plus if ph == "+" else forcing.f_minus
        if ffun is not None:
            fr, ft = (np.asarray(v, dtype=complex) for v in ffun(r))
        gfun = forcing.g_plus if ph == "+" else forcing.g_minus
        # r-momentum
        A[row + ridx, ur] = -nu * lap
        A[row + ridx, ut] = nu * cross
        A[row + ridx, p] = Dp
        b[row:row + m] = fr
        row += m
        # theta-momentum
        A[row + ridx, ut] = -nu * lap
        A[row + ridx, ur] = -nu * cross
        A[row + ridx, p] = np.diag(1j * k / r)
        b[row:row + m] = ft
        row += m
        # continuity: -div u = g
        A[row + ridx, ur] = -(D + I / r[:, None])
        A[row + ridx, ut] = -1j * k * I / r[:, None]
        b[row:row + m] = _eval(gfun, r)
        row += m

    Di, Do = gi.D(su), go.D()
    _, Ei = _ops(gi, sp)
    _, Eo = _ops(go, sp)
    lr, lt = forcing.l
    # velocity continuity
    A[row, sl["ur+"].start + ni - 1] = 1.0
    A[row, sl["ur-"].start] = -1.0
    b[row] = lr
    row += 1
    A[row, sl["ut+"].start + ni - 1] = 1.0
    A[row, sl["ut-"].start] = -1.0
    b[row] = lt
    row += 1
    # normal traction jump
    A[row, sl["ur+"]] = 2 * prm.nu_plus * Di[-1]
    A[row, sl["p+"]] = -Ei[-1]
    A[row, sl["ur-"]] = -2 * prm.nu_minus * Do[0]
    A[row, sl["p-"]] = Eo[0]
    b[row] = problem.h_normal
    row += 1
    # tangential traction jump (r = 1)
    for ph, D, nu, idx, sign in (("+", Di, prm.nu_plus, ni - 1, 1.0), ("-", Do, prm.nu_minus, 0, -1.0)):
        A[row, sl["ut" + ph]] += sign * nu * D[idx]
        A[row, sl["ut" + ph].start + idx] += -sign * nu
        A[row, sl["ur" + ph].start + idx] += sign * nu * 1j * k
    b[row] = problem.h_tangent
    row += 1
    # no slip at the wall
    A[row, sl["ur-"].start + no - 1] = 1.0
    row += 1
    A[row, sl["ut-"].start + no - 1] = 1.0
    row += 1
    assert row == nunk
    return A, b, sl


def solve_stokes_mode(problem, rcond=1e-13):
    """Solve the mode problem; the pressure gauge is pinned for ``k = 0``."""
    A, b, sl = assemble_stokes(problem)
    gi, go = problem.grids
    sp = 1 if problem.k % 2 == 0 else -1
    _, Ei = _ops(gi, sp)
    _, Eo = _ops(go, sp)
    if problem.k == 0:
        # outer-phase mean pressure fixes the additive constant
        gauge = np.zeros(A.shape[1], dtype=complex)
        gauge[sl["p-"]] = (go.weights @ Eo) / go.weights.sum()
        Ag = np.vstack([A, gauge])
        bg = np.append(b, problem.pressure_ref)
        x, *_ = np.linalg.lstsq(Ag, bg, rcond=rcond)
    else:
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"mode {problem.k}: singular Stokes system") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(f"mode {problem.k}: non-finite Stokes solution")
    res = A @ x - b
    n_in = 3 * (gi.n - 1)
    n_out = 3 * (go.n - 2)
    residuals = {
        "momentum": float(np.abs(np.concatenate([res[:2 * (gi.n - 1)],
                                                 res[n_in:n_in + 2 * (go.n - 2)]])).max(initial=0.0)),
        "divergence": float(np.abs(np.concatenate([res[2 * (gi.n - 1):n_in],
                                                   res[n_in + 2 * (go.n - 2):n_in + n_out]])).max(initial=0.0)),
        "interface": float(np.abs(res[n_in + n_out:n_in + n_out + 4]).max()),
        "wall": float(np.abs(res[-2:]).max()),
    }
    return ModeFlowSolution(
        k=problem.k, params=problem.params, grids=problem.grids,
        u_r_plus=x[sl["ur+"]], u_theta_plus=x[sl["ut+"]], p_plus=Ei @ x[sl["p+"]],
        u_r_minus=x[sl["ur-"]], u_theta_minus=x[sl["ut-"]], p_minus=Eo @ x[sl["p-"]],
        residuals=residuals)


def unit_mode_flow(k, params, grids=None):
    """Flow driven by the unit interface perturbation ``rho = exp(i k theta)``."""
    h = params.m - k * k
    return solve_stokes_mode(ModeStokesProblem(k, h, 0.0, params, grids))


@lru_cache(maxsize=4096)
def _response(k, params, n):
    sol = unit_mode_flow(k, params, collocation_grids(n, params.R_container))
    return float(sol.v_interface.real)


def normal_velocity_response(k, params, grids=None, k_max=32, n=DEFAULT_STOKES_N):
    """Mode-``k`` coefficient ``v_k`` of the Stokes-induced normal velocity."""
    if abs(k) > k_max:
        raise InvalidStateError(f"|k| = {abs(k)} exceeds k_max = {k_max}")
    if grids is not None:
        return float(unit_mode_flow(k, params, grids).v_interface.real)
    return _response(int(k), params, n)


def stokes_energy_identity_residual(k, params, grids=None):
    """``| int_S u.n conj(Dtilde sigma) - 1/2 int nu |eps(u)|^2 |`` for the unit mode."""
    sol = unit_mode_flow(k, params, grids)
    lhs = TWO_PI * (params.m - k * k) * sol.v_interface
    return float(abs(lhs - sol.viscous_dissipation()))


def weak_form_residual(sol, h_normal, h_tangent, test_plus, test_minus):
    """``a(u, phi) + b(p, phi) - int_S h . conj(phi)`` for one smooth test field.

    ``test_plus``/``test_minus`` map radii to ``(phi_r, phi_theta)``; the test
    field must be continuous at ``r = 1`` and vanish at the wall.
    """
    k, prm = sol.k, sol.params
    total = 0.0 + 0.0j
    traces = []
    for ph, g, nu, fun in (("+", sol.grids[0], prm.nu_plus, test_plus),
                           ("-", sol.grids[1], prm.nu_minus, test_minus)):
        r = g.nodes
        pr, pt = (np.asarray(v, dtype=complex) for v in fun(r))
        e_u = sol.strain(ph)
        e_p = _strain(g, k, pr, pt)
        contr = e_u[0] * np.conj(e_p[0]) + e_u[1] * np.conj(e_p[1]) + 2 * e_u[2] * np.conj(e_p[2])
        div_phi = g.D(_velocity_parity(k)) @ pr + pr / r + 1j * k * pt / r
        p = sol.p_plus if ph == "+" else sol.p_minus
        total += 0.5 * nu * (g.weights @ contr) - g.weights @ (p * np.conj(div_phi))
        traces.append((pr, pt))
    (pr, pt), _ = traces
    total -= TWO_PI * (h_normal * np.conj(pr[-1]) + h_tangent * np.conj(pt[-1]))
    return complex(total)


# --- Lopatinskii-Shapiro check for the flat two-phase interface -------------


@dataclass(frozen=True)
class LSReport:
    xi: tuple
    nu_plus: float
    nu_minus: float
    min_singular_value: float
    det_M: float

    def to_dict(self):
        return {"xi": list(self.xi), "nu_plus": self.nu_plus, "nu_minus": self.nu_minus,
                "min_singular_value": self.min_singular_value, "det_M": self.det_M}


def _halfspace_traces(nu_plus, nu_minus, xi):
    """Traces at ``t = 0`` of the decaying solution families.

    Returns, for each of the ``2N`` basis elements (tangential amplitudes of
    the pressure-free family in each phase, then the pressure-carrying
    amplitude of each phase), a dict per phase with ``u``, ``du`` (tangential
    components and their normal derivative), ``v``, ``dv`` and ``p``.
    """
    xi = np.asarray(xi, dtype=float)
    d = len(xi)
    a = float(np.linalg.norm(xi))
    zero = {"u": np.zeros(d, complex), "du": np.zeros(d, complex), "v": 0j, "dv": 0j, "p": 0j}
    basis = []
    for sign in (1, -1):
        for j in range(d):
            e = np.zeros(d)
            e[j] = 1.0
            own = {"u": e.astype(complex), "du": -a * e.astype(complex),
                   "v": sign * 1j * (e @ xi) / a, "dv": -sign * 1j * (e @ xi), "p": 0j}
            basis.append((own, dict(zero)) if sign == 1 else (dict(zero), own))
    for sign, nu in ((1, nu_plus), (-1, nu_minus)):
        own = {"u": 1j * xi / a**2 + 0j, "du": -2j * xi / a, "v": 0j, "dv": sign * 1.0 + 0j,
               "p": 2 * nu + 0j}
        basis.append((own, dict(zero)) if sign == 1 else (dict(zero), own))
    return basis, a


def boundary_matrix(nu_plus, nu_minus, xi, normalize=True):
    """Interface operator applied to the decaying solution space (2N x 2N).

    Rows: velocity continuity (N), stress balance (N).  With ``normalize`` the
    stress rows are divided by ``|xi|`` and the pressure-carrying columns
    multiplied by ``|xi|``, so the matrix depends on ``xi / |xi|`` only.
    """
    basis, a = _halfspace_traces(nu_plus, nu_minus, xi)
    xi = np.asarray(xi, dtype=float)
    d = len(xi)
    N = d + 1
    B = np.zeros((2 * N, 2 * N), dtype=complex)
    for col, (P, M) in enumerate(basis):
        B[:d, col] = P["u"] - M["u"]
        B[d, col] = P["v"] - M["v"]
        B[N:N + d, col] = nu_plus * (P["du"] + 1j * xi * P["v"]) - nu_minus * (-M["du"] + 1j * xi * M["v"])
        B[N + d, col] = nu_plus * 2 * P["dv"] - nu_minus * (-2 * M["dv"]) - (P["p"] - M["p"])
    if normalize:
        B[N:] /= a
        B[:, 2 * d:] *= a
    return B


def reduced_beta_matrix(nu_plus, nu_minus, xi):
    """2x2 system for the pressure amplitudes after eliminating continuity.

    Restricts to tangential amplitudes parallel to ``xi`` (the orthogonal
    ones decouple), solves the continuity rows for them, and keeps the
    ``xi``-projected tangential and the normal stress rows.  Rows are scaled
    to unit-phase leading entries.
    """
    B = boundary_matrix(nu_plus, nu_minus, xi, normalize=False)
    xi = np.asarray(xi, dtype=float)
    d = len(xi)
    N = d + 1
    xh = xi / np.linalg.norm(xi)
    # coordinates: (a_plus, a_minus, beta_plus, beta_minus)
    embed = np.zeros((2 * N, 4))
    embed[:d, 0] = xh
    embed[d:2 * d, 1] = xh
    embed[2 * d, 2] = 1.0
    embed[2 * d + 1, 3] = 1.0
    C = B[:N] @ embed
    Ca, Cb = C[:, :2], C[:, 2:]
    T = np.vstack([-np.linalg.pinv(Ca) @ Cb, np.eye(2)])
    S = np.vstack([xh @ B[N:N + d], B[N + d]]) @ embed
    M = S @ T
    for i in range(2):
        lead = M[i, np.argmax(np.abs(M[i]) > 1e-12 * np.abs(M[i]).max())]
        M[i] /= lead / abs(lead)
    return M


def verify_lopatinskii(nu_plus, nu_minus, xi):
    xi = tuple(float(v) for v in np.atleast_1d(xi))
    if not xi or math.hypot(*xi) == 0.0:
        raise InvalidStateError("tangential frequency xi must be nonzero")
    if nu_plus <= 0 or nu_minus <= 0:
        raise InvalidStateError("viscosities must be positive")
    B = boundary_matrix(nu_plus, nu_minus, xi)
    smin = float(np.linalg.svd(B, compute_uv=False).min())
    M = reduced_beta_matrix(nu_plus, nu_minus, xi)
    det = np.linalg.det(M)
    return LSReport(xi=xi, nu_plus=float(nu_plus), nu_minus=float(nu_minus),
                    min_singular_value=smin, det_M=float(det.real))
