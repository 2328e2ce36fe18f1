"""Barycentric Chebyshev machinery: points, weights, differentiation,
interpolation and interpolatory quadrature with the polar area weight.

Everything here works on explicit node arrays so the same routines serve the
plain Lobatto grids of the outer annulus and the parity-folded grids of the
inner disk.
"""

from functools import lru_cache

import numpy as np


def lobatto_points(n):
    """Chebyshev-Lobatto points ``-cos(j*pi/(n-1))``, increasing, ``n >= 2``."""
    j = np.arange(n)
    x = -np.cos(np.pi * j / (n - 1))
    # exact symmetry; cos rounding otherwise breaks mirror lookups
    x = 0.5 * (x - x[::-1])
    return x


def bary_weights(x):
    """Barycentric weights for arbitrary distinct nodes, normalised to max 1.

    Uses log-magnitudes so that several hundred nodes neither under- nor
    overflow.
    """
    x = np.asarray(x, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    sign = np.prod(np.sign(diff), axis=1)
    logmag = -np.sum(np.log(np.abs(diff)), axis=1)
    logmag -= logmag.max()
    return sign * np.exp(logmag)


def diff_matrix(x, w=None):
    """First-derivative collocation matrix on nodes ``x``."""
    x = np.asarray(x, dtype=float)
    if w is None:
        w = bary_weights(x)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def interp_matrix(x_src, x_dst, w=None):
    """Matrix evaluating the interpolant on ``x_src`` at the points ``x_dst``."""
    x_src = np.asarray(x_src, dtype=float)
    x_dst = np.atleast_1d(np.asarray(x_dst, dtype=float))
    if w is None:
        w = bary_weights(x_src)
    dx = x_dst[:, None] - x_src[None, :]
    exact = dx == 0.0
    dx[exact] = 1.0
    T = w[None, :] / dx
    T /= T.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if hit.any():
        T[hit] = exact[hit].astype(float)
    return T


@lru_cache(maxsize=None)
def _gauss01(m):
    g, gw = np.polynomial.legendre.leggauss(m)
    return 0.5 * (g + 1.0), 0.5 * gw


def radial_moment_weights(x, a, b, w=None):
    """Weights ``W`` with ``sum W_i f(x_i) = int_a^b p(x) x dx`` where ``p``
    interpolates ``f`` on ``x``.  Exact for the interpolant."""
    x = np.asarray(x, dtype=float)
    m = len(x) // 2 + 4
    g, gw = _gauss01(m)
    xg = a + (b - a) * g
    T = interp_matrix(x, xg, w)
    return (b - a) * (gw * xg) @ T


class ParityFold:
    """Fold a full symmetric Lobatto grid on [-1, 1] onto its positive half.

    With ``n`` positive nodes the full grid has ``2n`` points (odd degree), so
    the origin is never a node.  A function of parity ``s`` (``f(-x) = s f(x)``)
    is represented by its values on the positive half.
    """

    def __init__(self, n):
        self.n = n
        self.full = lobatto_points(2 * n)
        self.half = self.full[n:]
        self.w = bary_weights(self.full)
        self.D_full = diff_matrix(self.full, self.w)
        self.D2_full = self.D_full @ self.D_full
        # mirror of positive index n+b is n-1-b
        self._mirror = np.arange(n - 1, -1, -1)

    def fold(self, M, parity):
        """Restrict a full-grid operator (rows and columns) to the half grid."""
        n = self.n
        return M[n:, n:] + parity * M[n:, :n][:, self._mirror]

    def D(self, parity):
        return self.fold(self.D_full, parity)

    def D2(self, parity):
        return self.fold(self.D2_full, parity)

    def even_area_weights(self):
        """``sum W_b f(x_b) = int_0^1 f(x) x dx`` for even ``f``."""
        wf = radial_moment_weights(self.full, 0.0, 1.0, self.w)
        n = self.n
        return wf[n:] + wf[:n][self._mirror]


class InteriorParity:
    """Parity-folded interpolation on the interior Lobatto nodes of the full
    grid; used for the pressure in the staggered Stokes discretisation."""

    def __init__(self, fold):
        self.fold = fold
        n = fold.n
        self.full = fold.full[1:-1]
        self.half = self.full[n - 1:]
        self.w = bary_weights(self.full)
        self.D_full = diff_matrix(self.full, self.w)
        self._mirror = np.arange(n - 2, -1, -1)

    def _fold_cols(self, M, parity):
        n = self.fold.n
        return M[:, n - 1:] + parity * M[:, :n - 1][:, self._mirror]

    def D(self, parity):
        n = self.fold.n
        return self._fold_cols(self.D_full[n - 1:], parity)

    def interp(self, x_dst, parity):
        return self._fold_cols(interp_matrix(self.full, x_dst, self.w), parity)
