"""Linearised operator ``L + K`` at the unit-disk equilibrium, one angular
mode at a time.

A mode-``k`` state is ``(mu_plus(r), mu_minus(r), rho) exp(i k theta)``.  The
three conditions defining the domain,

    alpha_+ mu_+'(1) + mu_+(1) - mu_-(1) + (m - k^2) rho = 0
    alpha_+ mu_+'(1) - alpha_- mu_-'(1) = 0
    mu_-'(R_container) = 0,

are solved for the three boundary values ``mu_+(1), mu_-(1), mu_-(R_C)`` so the
operator acts on interior nodal values and ``rho`` only.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.linalg

from .core import TWO_PI, InvalidStateError, PhysParams, collocation_grids
from .stokes import DEFAULT_STOKES_N, normal_velocity_response

TOL_ZERO = 1e-6
SPURIOUS_SHIFT = 1e-3
DEFAULT_N = 128


class InadmissibleStateError(InvalidStateError):
    """A mode state violates the domain conditions of the operator."""


@dataclass(frozen=True, eq=False)
class ModeState:
    k: int
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    rho: complex

    def __post_init__(self):
        mp = np.asarray(self.mu_plus, dtype=complex)
        mm = np.asarray(self.mu_minus, dtype=complex)
        object.__setattr__(self, "mu_plus", mp)
        object.__setattr__(self, "mu_minus", mm)
        object.__setattr__(self, "rho", complex(self.rho))
        if not (np.all(np.isfinite(mp)) and np.all(np.isfinite(mm)) and np.isfinite(self.rho)):
            raise InvalidStateError("mode state must be finite")


def _scalar_parity(k):
    return 1 if k % 2 == 0 else -1


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """``L + K`` restricted to mode ``k`` in boundary-reduced coordinates.

    Reduced coordinates are ``(mu_plus at inner nodes r < 1, mu_minus at
    outer interior nodes, rho)``; ``expand`` recovers full profiles.
    """

    k: int
    params: PhysParams
    grids: tuple
    matrix: np.ndarray
    expand_matrix: np.ndarray
    constraints: np.ndarray
    v_k: float

    @property
    def n_plus(self):
        return self.grids[0].n

    @property
    def n_minus(self):
        return self.grids[1].n

    @property
    def size(self):
        return self.matrix.shape[0]

    def reduce(self, state):
        if state.mu_plus.shape != (self.n_plus,) or state.mu_minus.shape != (self.n_minus,):
            raise InvalidStateError("mode state does not match the operator grids")
        return np.concatenate([state.mu_plus[:-1], state.mu_minus[1:-1], [state.rho]])

    def expand(self, x):
        z = self.expand_matrix @ np.asarray(x, dtype=complex)
        np_ = self.n_plus
        return ModeState(self.k, z[:np_], z[np_:np_ + self.n_minus], z[-1])

    def full_vector(self, state):
        return np.concatenate([state.mu_plus, state.mu_minus, [state.rho]])

    def bc_residuals(self, state):
        """Residuals of the three domain conditions, in the order listed above."""
        return self.constraints @ self.full_vector(state)

    def is_admissible(self, state, tol=1e-9):
        z = self.full_vector(state)
        scale = max(1.0, float(np.abs(z).max()))
        return bool(np.abs(self.bc_residuals(state)).max() <= tol * scale)

    def apply(self, state):
        """``(L + K) state`` as full profiles (the operator image at every node)."""
        k, prm = self.k, self.params
        gi, go = self.grids
        s = _scalar_parity(k)
        ri, ro = gi.nodes, go.nodes
        lap_p = gi.D2(s) @ state.mu_plus + (gi.D(s) @ state.mu_plus) / ri - k * k * state.mu_plus / ri**2
        lap_m = go.D2() @ state.mu_minus + (go.D() @ state.mu_minus) / ro - k * k * state.mu_minus / ro**2
        flux = (gi.D(s) @ state.mu_plus)[-1]
        rho = -prm.alpha_plus * flux + self.v_k * state.rho
        return ModeState(k, prm.kappa_plus * lap_p, prm.kappa_minus * lap_m, rho)

    @cached_property
    def norm_weights(self):
        """Positive weights on reduced coordinates for the discrete energy norm."""
        gi, go = self.grids
        prm = self.params
        wp = prm.ctilde_minus * gi.weights[:-1]
        wm = prm.ctilde_plus * go.weights[1:-1]
        return np.concatenate([wp, wm, [prm.ctilde_plus * prm.ctilde_minus * TWO_PI]])

    def norm(self, x):
        x = np.asarray(x)
        return float(np.sqrt(np.sum(self.norm_weights * np.abs(x) ** 2)))


def assemble_mode_operator(k, params, grids=None, n=DEFAULT_N, stokes_n=DEFAULT_STOKES_N):
    """Assemble ``L + K`` for mode ``k`` on spectral grids (inner parity, outer Lobatto)."""
    k = int(k)
    params.check_reference()
    if grids is None:
        grids = collocation_grids(n, params.R_container)
    gi, go = grids
    if gi.flavor != "parity" or go.flavor != "cheb" or gi.b != 1.0 or go.b != params.R_container:
        raise InvalidStateError("linop needs a parity grid on (0,1] and a Chebyshev grid on [1, R_container]")
    prm = params
    s = _scalar_parity(k)
    ni, no = gi.n, go.n
    nz = ni + no + 1
    Di, D2i = gi.D(s), gi.D2(s)
    Do, D2o = go.D(), go.D2()
    ri, ro = gi.nodes, go.nodes
    h = prm.m - k * k

    C = np.zeros((3, nz))
    C[0, :ni] = prm.alpha_plus * Di[-1]
    C[0, ni - 1] += 1.0
    C[0, ni] = -1.0
    C[0, -1] = h
    C[1, :ni] = prm.alpha_plus * Di[-1]
    C[1, ni:ni + no] = -prm.alpha_minus * Do[0]
    C[2, ni:ni + no] = Do[-1]

    bidx = np.array([ni - 1, ni, ni + no - 1])
    fidx = np.setdiff1d(np.arange(nz), bidx)
    E = np.zeros((nz, len(fidx)))
    E[fidx, np.arange(len(fidx))] = 1.0
    E[bidx] = -np.linalg.solve(C[:, bidx], C[:, fidx])

    v = normal_velocity_response(k, prm, n=stokes_n)
    F = np.zeros((len(fidx), nz))
    lap_i = D2i + Di / ri[:, None] - k * k * np.diag(1.0 / ri**2)
    lap_o = D2o + Do / ro[:, None] - k * k * np.diag(1.0 / ro**2)
    F[:ni - 1, :ni] = prm.kappa_plus * lap_i[:-1]
    F[ni - 1:ni + no - 3, ni:ni + no] = prm.kappa_minus * lap_o[1:-1]
    F[-1, :ni] = -prm.alpha_plus * Di[-1]
    F[-1, -1] = v
    return ModeOperator(k=k, params=prm, grids=grids, matrix=F @ E, expand_matrix=E,
                        constraints=C, v_k=v)


@dataclass(frozen=True)
class ModeSpectrum:
    k: int
    eigenvalues: np.ndarray
    n_raw: int
    refinement_delta: float

    def kernel(self, tol_zero=TOL_ZERO):
        return self.eigenvalues[np.abs(self.eigenvalues) < tol_zero]

    def nonzero(self, tol_zero=TOL_ZERO):
        return self.eigenvalues[np.abs(self.eigenvalues) >= tol_zero]


def eigen_spectrum(op, coarse=None, tol_zero=TOL_ZERO, threshold=SPURIOUS_SHIFT):
    """Eigenvalues of ``op`` confirmed by a coarser discretisation.

    ``coarse`` defaults to the same mode at half resolution.  An eigenvalue is
    retained when some coarse eigenvalue lies within
    ``threshold * max(1, |lambda|)``; results are sorted by real part,
    largest first.
    """
    if coarse is None:
        gi, go = op.grids
        coarse = assemble_mode_operator(op.k, op.params,
                                        collocation_grids(gi.n // 2, op.params.R_container, go.n // 2))
    try:
        lf = scipy.linalg.eigvals(op.matrix)
        lc = scipy.linalg.eigvals(coarse.matrix)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed for mode {op.k}") from exc
    if not (np.all(np.isfinite(lf)) and np.all(np.isfinite(lc))):
        raise RuntimeError(f"eigensolver returned non-finite values for mode {op.k}")
    dist = np.abs(lf[:, None] - lc[None, :]).min(axis=1)
    rel = dist / np.maximum(1.0, np.abs(lf))
    keep = rel <= threshold
    kept = lf[keep]
    order = np.lexsort((-kept.imag, -kept.real))
    delta = float(rel[keep].max()) if keep.any() else math.nan
    return ModeSpectrum(k=op.k, eigenvalues=kept[order], n_raw=len(lf), refinement_delta=delta)


@dataclass(frozen=True)
class SpectrumReport:
    params: PhysParams
    n: int
    n_coarse: int
    k_max: int
    tol_zero: float
    modes: dict
    kernel_dimension: int
    kernel_by_mode: dict
    gap: float
    max_imag: float
    refinement_delta: float

    @property
    def expected_kernel_dimension(self):
        return self.params.N + 2

    @property
    def failures(self):
        out = []
        if self.kernel_dimension != self.expected_kernel_dimension:
            out.append(f"kernel_dimension {self.kernel_dimension} != {self.expected_kernel_dimension}")
        if not self.gap > 0:
            out.append(f"gap {self.gap} is not positive")
        return out

    @property
    def passed(self):
        return not self.failures

    def to_dict(self, max_per_mode=None):
        modes = {}
        for k, sp in self.modes.items():
            ev = sp.eigenvalues if max_per_mode is None else sp.eigenvalues[:max_per_mode]
            modes[str(k)] = {"re": [float(z.real) for z in ev], "im": [float(z.imag) for z in ev],
                             "refinement_delta": sp.refinement_delta}
        return {"params": self.params.to_dict(), "n": self.n, "n_coarse": self.n_coarse,
                "k_max": self.k_max, "tol_zero": self.tol_zero,
                "kernel_dimension": self.kernel_dimension,
                "kernel_by_mode": {str(k): v for k, v in self.kernel_by_mode.items()},
                "gap": self.gap, "max_imag": self.max_imag,
                "refinement_delta": self.refinement_delta,
                "passed": self.passed, "failures": self.failures, "modes": modes}

    def rows(self):
        """``(k, Re lambda, Im lambda)`` for every retained eigenvalue."""
        for k, sp in self.modes.items():
            for z in sp.eigenvalues:
                yield k, float(z.real), float(z.imag)


def spectrum_report(params, n=DEFAULT_N, k_max=16, tol_zero=TOL_ZERO, n_coarse=None,
                    threshold=SPURIOUS_SHIFT):
    """Spectra for modes ``-k_max..k_max`` and the aggregate kernel/gap data.

    The assembled matrix depends on ``k`` only through ``k^2`` (and ``v_k``,
    which is even in ``k``), so each ``|k|`` is solved once and mirrored.
    """
    if k_max < 2:
        raise InvalidStateError("k_max must be at least 2")
    n_coarse = n_coarse or n // 2
    fine_grids = collocation_grids(n, params.R_container)
    coarse_grids = collocation_grids(n_coarse, params.R_container)
    modes = {}
    for k in range(0, k_max + 1):
        sp = eigen_spectrum(assemble_mode_operator(k, params, fine_grids),
                            assemble_mode_operator(k, params, coarse_grids),
                            tol_zero=tol_zero, threshold=threshold)
        modes[k] = sp
        if k:
            modes[-k] = ModeSpectrum(-k, sp.eigenvalues, sp.n_raw, sp.refinement_delta)
    modes = dict(sorted(modes.items()))
    kernel_by_mode = {k: int(len(sp.kernel(tol_zero))) for k, sp in modes.items()}
    nonzero = np.concatenate([sp.nonzero(tol_zero) for sp in modes.values()])
    gap = float(-nonzero.real.max()) if nonzero.size else math.inf
    allev = np.concatenate([sp.eigenvalues for sp in modes.values()])
    deltas = [sp.refinement_delta for sp in modes.values() if np.isfinite(sp.refinement_delta)]
    return SpectrumReport(params=params, n=n, n_coarse=n_coarse, k_max=k_max, tol_zero=tol_zero,
                          modes=modes, kernel_dimension=sum(kernel_by_mode.values()),
                          kernel_by_mode=kernel_by_mode, gap=gap,
                          max_imag=float(np.abs(allev.imag).max()) if allev.size else 0.0,
                          refinement_delta=max(deltas) if deltas else math.nan)


def pairing(op, a, b):
    """``c~_- int a_+ conj(b_+) + c~_+ int a_- conj(b_-) - c~_+ c~_- int_S a_rho conj(Dtilde b_rho)``."""
    prm = op.params
    gi, go = op.grids
    h = prm.m - op.k * op.k
    return (prm.ctilde_minus * (gi.weights @ (a.mu_plus * np.conj(b.mu_plus)))
            + prm.ctilde_plus * (go.weights @ (a.mu_minus * np.conj(b.mu_minus)))
            - prm.ctilde_plus * prm.ctilde_minus * TWO_PI * a.rho * np.conj(h * b.rho))


def quadratic_form(op, state, tol=1e-9):
    """``-<(L + K) w, w>`` for an admissible mode state ``w``."""
    if not op.is_admissible(state, tol):
        raise InadmissibleStateError(
            f"state violates the domain conditions (residuals {np.abs(op.bc_residuals(state))})")
    return complex(-pairing(op, op.apply(state), state))


def quadratic_form_closed(op, state):
    """The same form written as a sum of manifestly nonnegative terms.

    ``c~_- kappa_+ |grad w_+|^2 + c~_+ kappa_- |grad w_-|^2
    + c~_+ c~_- alpha_+^2 int_S |d_n w_+|^2 + c~_+ c~_- (m - k^2) v_k int_S |sigma|^2``.
    """
    prm, k = op.params, op.k
    gi, go = op.grids
    s = _scalar_parity(k)
    dp = gi.D(s) @ state.mu_plus
    dm = go.D() @ state.mu_minus
    gp = gi.weights @ (np.abs(dp) ** 2 + k * k * np.abs(state.mu_plus / gi.nodes) ** 2)
    gm = go.weights @ (np.abs(dm) ** 2 + k * k * np.abs(state.mu_minus / go.nodes) ** 2)
    cc = prm.ctilde_plus * prm.ctilde_minus
    return float(prm.ctilde_minus * prm.kappa_plus * gp + prm.ctilde_plus * prm.kappa_minus * gm
                 + cc * prm.alpha_plus**2 * TWO_PI * abs(dp[-1]) ** 2
                 + cc * (prm.m - k * k) * op.v_k * TWO_PI * abs(state.rho) ** 2)


def random_admissible_state(op, rng, degree=4):
    """Smooth random mode state satisfying the domain conditions exactly.

    ``mu_+ = r^|k| P(r^2)``, ``rho`` random, and ``mu_-`` a random polynomial
    corrected by a quadratic in ``r - 1`` so that the three conditions hold.
    """
    prm, k = op.params, op.k
    gi, go = op.grids
    ri, ro = gi.nodes, go.nodes
    Rc = prm.R_container

    def cplx(size):
        return rng.standard_normal(size) + 1j * rng.standard_normal(size)

    a = cplx(degree + 1)
    ak = abs(k)
    mp = ri**ak * np.polyval(a, ri**2)
    # exact derivative at r = 1 of r^|k| P(r^2)
    dp1 = ak * np.polyval(a, 1.0) + 2 * np.polyval(np.polyder(a), 1.0)
    rho = complex(cplx(1)[0])
    b = cplx(degree + 1)
    q = np.polyval(b, ro - 1.0)
    q1, dq1, dqR = np.polyval(b, 0.0), np.polyval(np.polyder(b), 0.0), np.polyval(np.polyder(b), Rc - 1.0)
    target_val = prm.alpha_plus * dp1 + mp[-1] + (prm.m - k * k) * rho
    target_d1 = prm.alpha_plus * dp1 / prm.alpha_minus
    # correction c0 + c1 (r-1) + c2 (r-1)^2
    c0 = target_val - q1
    c1 = target_d1 - dq1
    c2 = (-dqR - c1) / (2 * (Rc - 1.0))
    mm = q + c0 + c1 * (ro - 1.0) + c2 * (ro - 1.0) ** 2
    return ModeState(k, mp, mm, rho)


def kernel_vectors(op, tol_zero=TOL_ZERO, shift=0.0):
    """Eigenvectors (reduced coordinates) of ``matrix - shift I`` with ``|lambda| < tol_zero``."""
    A = op.matrix - shift * np.eye(op.size)
    lam, V = scipy.linalg.eig(A)
    sel = np.abs(lam) < tol_zero
    return lam[sel], V[:, sel]


def remove_kernel_component(op, x, tol_zero=TOL_ZERO):
    """Spectral projection of ``x`` onto the complement of the discrete kernel."""
    lam, V = scipy.linalg.eig(op.matrix, left=False, right=True)
    sel = np.abs(lam) < tol_zero
    if not sel.any():
        return np.asarray(x, dtype=complex)
    lamL, W = scipy.linalg.eig(op.matrix.conj().T)
    selL = np.abs(lamL) < tol_zero
    Vk, Wk = V[:, sel], W[:, selL]
    P = Vk @ np.linalg.solve(Wk.conj().T @ Vk, Wk.conj().T)
    return np.asarray(x, dtype=complex) - P @ x


@dataclass(frozen=True)
class SemisimplicityResult:
    passed: bool
    residuals: dict = field(default_factory=dict)
    n_kernel_vectors: int = 0


def semisimplicity_check(params, n=DEFAULT_N, tol=0.1, tol_zero=TOL_ZERO, shift=0.0,
                         modes=(0, 1, -1), rcond=1e-12):
    """No Jordan chain at zero: ``(L + K - shift) x = e`` must fail for kernel vectors ``e``.

    For each discrete kernel vector the weighted least-squares residual
    relative to ``|e|`` is recorded; the check passes iff every residual
    exceeds ``tol`` (vacuously when no kernel vectors are found).
    """
    grids = collocation_grids(n, params.R_container)
    residuals = {}
    count = 0
    for k in modes:
        op = assemble_mode_operator(k, params, grids)
        A = op.matrix - shift * np.eye(op.size)
        _, V = kernel_vectors(op, tol_zero, shift)
        w = np.sqrt(op.norm_weights)
        Aw = w[:, None] * A
        for j in range(V.shape[1]):
            e = V[:, j]
            ne = op.norm(e)
            if ne == 0.0:
                continue
            x, *_ = np.linalg.lstsq(Aw, w * e, rcond=rcond)
            residuals[(k, j)] = op.norm(A @ x - e) / ne
            count += 1
    passed = all(r > tol for r in residuals.values())
    return SemisimplicityResult(passed=passed, residuals=residuals, n_kernel_vectors=count)
