"""Radial equilibria from conserved masses, the kernel basis of ``L + K``, and
the 2x2 matrix behind semisimplicity of the zero eigenvalue."""

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma

from .core import TWO_PI, InvalidStateError, PhysParams, collocation_grids, constant_state
from .linop import DEFAULT_N, ModeState

N_SCAN = 1024


class NoEquilibrium(RuntimeError):
    """``F`` has no sign change on the scan grid; ``profile`` holds ``(R, F(R))``."""

    def __init__(self, message, profile):
        super().__init__(message)
        self.profile = profile


def ball_volume(R, N=2):
    return math.pi ** (N / 2) / gamma(N / 2 + 1) * R**N


def sphere_area(R, N=2):
    return N * ball_volume(R, N) / R


def equilibrium_residual(R, M_plus, M_minus, R_container, N=2):
    """``F(R) = M_+/|B_R| - M_-/(|B_{R_C}| - |B_R|) - (N-1)/R``."""
    vin = ball_volume(R, N)
    vout = ball_volume(R_container, N) - vin
    return M_plus / vin - M_minus / vout - (N - 1) / R


@dataclass(frozen=True)
class Equilibrium:
    R_star: float
    c_plus: float
    c_minus: float
    R_container: float
    N: int = 2

    def __post_init__(self):
        if not 0 < self.R_star < self.R_container:
            raise InvalidStateError("equilibrium radius outside the container")
        if self.c_plus <= 0 or self.c_minus <= 0:
            raise InvalidStateError("equilibrium concentrations must be positive")

    @property
    def jump_residual(self):
        return self.c_plus - self.c_minus - (self.N - 1) / self.R_star

    def unit_params(self, base=None):
        """Parameters of the same equilibrium rescaled to the unit interface.

        Lengths scale by ``R_star``, concentrations by ``1/R_star``, time by
        ``R_star**2`` and viscosities by ``1/R_star``; diffusivities are
        unchanged.  Eigenvalues at this equilibrium are those of
        ``unit_params`` divided by ``R_star**2``.
        """
        base = base or PhysParams()
        s = self.R_star
        return replace(base, nu_plus=base.nu_plus / s, nu_minus=base.nu_minus / s,
                       ctilde_plus=self.c_plus * s, ctilde_minus=self.c_minus * s,
                       R_container=self.R_container / s, N=self.N)

    @property
    def time_scale(self):
        return self.R_star**2

    def to_state(self, n_inner=65, n_outer=65, flavor="fv"):
        return constant_state(self.c_plus, self.c_minus, self.R_star, self.R_container,
                              n_inner, n_outer, flavor)

    def to_dict(self):
        return {"R_star": self.R_star, "c_plus": self.c_plus, "c_minus": self.c_minus,
                "R_container": self.R_container, "N": self.N,
                "jump_residual": self.jump_residual}


def find_equilibrium(M_plus, M_minus, R_container, N=2, n_scan=N_SCAN, xtol=1e-14):
    """All radial equilibria with the given phase masses, by scan and root polish."""
    if not (M_plus > 0 and M_minus > 0 and R_container > 0):
        raise InvalidStateError("masses and container radius must be positive")
    R = R_container * np.arange(1, n_scan + 1) / (n_scan + 1)
    F = np.array([equilibrium_residual(r, M_plus, M_minus, R_container, N) for r in R])
    roots = [float(R[i]) for i in np.flatnonzero(F == 0.0)]
    for i in np.flatnonzero(np.sign(F[:-1]) * np.sign(F[1:]) < 0):
        roots.append(brentq(equilibrium_residual, R[i], R[i + 1], args=(M_plus, M_minus, R_container, N),
                            xtol=xtol, rtol=4 * np.finfo(float).eps))
    if not roots:
        raise NoEquilibrium("F(R) does not change sign on the scan grid", np.column_stack([R, F]))
    out = []
    for r in sorted(roots):
        cp = M_plus / ball_volume(r, N)
        cm = M_minus / (ball_volume(R_container, N) - ball_volume(r, N))
        out.append(Equilibrium(float(r), float(cp), float(cm), float(R_container), N))
    return out


def null_space_basis(params, grids=None, n=DEFAULT_N):
    """The ``N + 2`` kernel directions as mode states (2D).

    Two radial ones, ``(m, 0, -1)`` and ``(0, m, 1)``, and the translations
    ``rho = x_1, x_2`` written through the modes ``k = +-1`` (``rho = 1`` in
    each; ``cos`` and ``sin`` are their half-sum and half-difference / i).
    """
    params.check_reference()
    gi, go = grids or collocation_grids(n, params.R_container)
    m = params.m
    zi, zo = np.zeros(gi.n), np.zeros(go.n)
    return [ModeState(0, zi + m, zo, -1.0),
            ModeState(0, zi, zo + m, 1.0),
            ModeState(1, zi, zo, 1.0),
            ModeState(-1, zi, zo, 1.0)]


def phi_matrix(params):
    """The matrix ``A`` and ``det(A)`` from the geometry of the unit disk."""
    N, m = params.N, params.m
    S = sphere_area(1.0, N)
    Dp = ball_volume(1.0, N)
    Dm = ball_volume(params.R_container, N) - Dp
    A = np.array([[-m * Dp / params.ctilde_plus + S, -S],
                  [S, m * Dm / params.ctilde_minus - S]])
    return A, float(np.linalg.det(A))


def phi_map(params, state, grids):
    """``Phi(f_+, f_-, theta)`` for a mode state, by quadrature (2D).

    Only mode 0 has nonzero integrals; other modes map to zero.
    """
    if state.k != 0:
        return np.zeros(2, dtype=complex)
    gi, go = grids
    surf = TWO_PI * state.rho
    return np.array([params.ctilde_plus * surf + gi.weights @ state.mu_plus,
                     params.ctilde_minus * surf - go.weights @ state.mu_minus])


def phi_matrix_quadrature(params, grids=None, n=DEFAULT_N):
    """``A`` recovered from ``Phi`` applied to the two radial kernel vectors."""
    grids = grids or collocation_grids(n, params.R_container)
    e1, e2 = null_space_basis(params, grids)[:2]
    cols = np.column_stack([phi_map(params, e1, grids), phi_map(params, e2, grids)]).real
    return -cols / np.array([[params.ctilde_plus], [params.ctilde_minus]])


def det_formula(params):
    """The closed-form determinant, using ``|S| = N |D_+|`` and ``m = N - 1``."""
    N, m = params.N, params.m
    S = sphere_area(1.0, N)
    Dp = ball_volume(1.0, N)
    Dm = ball_volume(params.R_container, N) - Dp
    cp, cm = params.ctilde_plus, params.ctilde_minus
    return -m * S * Dm / (N * cm) + m * S * Dm / cm + m * S * Dp / cp + m * Dp * Dm / cp
