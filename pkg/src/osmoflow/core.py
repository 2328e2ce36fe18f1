"""Parameters, radial grids, two-phase fields and scalar diagnostics.

Fields are sampled on one grid per phase: the inner disk ``(0, R)`` and the
outer annulus ``(R, R_container)``.  The interface traces of the two phases
are independent, so concentrations may jump across the membrane.

Three grid flavours are supported:

``"parity"``
    positive half of an odd-degree Chebyshev-Lobatto grid on ``[-R, R]``;
    the origin is never a node and radial profiles are folded by parity.
``"cheb"``
    Chebyshev-Lobatto grid on ``[a, b]``.
``"fv"``
    uniform vertex-centred grid including both endpoints; quadrature weights
    are the exact areas of the dual control volumes.
"""

from dataclasses import asdict, dataclass, fields
from functools import cached_property, lru_cache
import math

import numpy as np
from scipy.special import xlogy

from .chebyshev import ParityFold, diff_matrix, lobatto_points, radial_moment_weights

TWO_PI = 2.0 * math.pi
MIN_NODES = 8


class InvalidStateError(ValueError):
    """A state or field violates its invariants."""


@dataclass(frozen=True)
class PhysParams:
    """Dimensionless constants of the two-phase model.

    ``alpha_plus``/``alpha_minus`` are derived as ``kappa / ctilde``.
    """

    nu_plus: float = 1.0
    nu_minus: float = 1.0
    kappa_plus: float = 1.0
    kappa_minus: float = 1.0
    ctilde_plus: float = 2.0
    ctilde_minus: float = 1.0
    R_container: float = 2.0
    N: int = 2

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise InvalidStateError(f"{f.name} must be a finite number, got {v!r}")
        for name in ("nu_plus", "nu_minus", "kappa_plus", "kappa_minus",
                     "ctilde_plus", "ctilde_minus"):
            if getattr(self, name) <= 0:
                raise InvalidStateError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.R_container <= 1.0:
            raise InvalidStateError(f"R_container must be > 1, got {self.R_container}")
        if int(self.N) != self.N or self.N < 2:
            raise InvalidStateError(f"N must be an integer >= 2, got {self.N}")

    @property
    def m(self):
        return self.N - 1

    @property
    def alpha_plus(self):
        return self.kappa_plus / self.ctilde_plus

    @property
    def alpha_minus(self):
        return self.kappa_minus / self.ctilde_minus

    def check_reference(self, tol=1e-12):
        """Raise unless the parameters describe the unit-disk equilibrium."""
        jump = self.ctilde_plus - self.ctilde_minus
        if abs(jump - self.m) > tol * max(1.0, abs(self.m)):
            raise InvalidStateError(
                f"ctilde_plus - ctilde_minus = {jump!r} but the unit-disk "
                f"equilibrium requires N - 1 = {self.m}")
        if self.N != 2:
            raise InvalidStateError("discretised solvers are two-dimensional (N = 2)")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_mapping(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidStateError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radial nodes spanning one phase interval."""

    nodes: np.ndarray
    flavor: str
    a: float
    b: float

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", x)
        if self.flavor not in ("parity", "cheb", "fv"):
            raise InvalidStateError(f"unknown grid flavor {self.flavor!r}")
        if x.ndim != 1 or len(x) < MIN_NODES:
            raise InvalidStateError(f"a grid needs at least {MIN_NODES} nodes")
        if not np.all(np.diff(x) > 0):
            raise InvalidStateError("grid nodes must be strictly increasing")
        if x[-1] != self.b or (self.flavor != "parity" and x[0] != self.a):
            raise InvalidStateError("grid endpoints must coincide with the phase boundaries")

    @property
    def n(self):
        return len(self.nodes)

    @cached_property
    def _fold(self):
        return _parity_fold(self.n)

    @cached_property
    def weights(self):
        """Quadrature weights including the ``2 pi r`` area element."""
        if self.flavor == "parity":
            return TWO_PI * self.b**2 * self._fold.even_area_weights()
        if self.flavor == "cheb":
            return TWO_PI * radial_moment_weights(self.nodes, self.a, self.b)
        edges = np.concatenate(([self.a], 0.5 * (self.nodes[1:] + self.nodes[:-1]), [self.b]))
        return math.pi * np.diff(edges**2)

    @cached_property
    def _D_cheb(self):
        return diff_matrix(self.nodes)

    def D(self, parity=1):
        """First-derivative matrix (spectral flavours only).

        ``parity`` selects the symmetry of the profile across the origin and
        only matters on parity grids.
        """
        if self.flavor == "parity":
            return self._fold.D(parity) / self.b
        if self.flavor == "cheb":
            return self._D_cheb
        raise InvalidStateError("finite-volume grids have no collocation matrix")

    def D2(self, parity=1):
        if self.flavor == "parity":
            return self._fold.D2(parity) / self.b**2
        D = self.D()
        return D @ D

    def derivative(self, values, parity=1):
        if self.flavor == "fv":
            return np.gradient(values, self.nodes, edge_order=2)
        return self.D(parity) @ values

    def integrate(self, values):
        """Area integral ``int f dA`` over the phase (2D, radial ``f``)."""
        return float(np.real(self.weights @ values)) if np.isrealobj(values) else self.weights @ values


@lru_cache(maxsize=None)
def _parity_fold(n):
    return ParityFold(n)


@lru_cache(maxsize=None)
def parity_grid(R, n):
    """Inner-phase collocation grid on ``(0, R]``."""
    return RadialGrid(R * _parity_fold(n).half, "parity", 0.0, R)


@lru_cache(maxsize=None)
def chebyshev_grid(a, b, n):
    x = a + 0.5 * (b - a) * (lobatto_points(n) + 1.0)
    x[0], x[-1] = a, b
    return RadialGrid(x, "cheb", a, b)


def uniform_grid(a, b, n):
    x = np.linspace(a, b, n)
    x[-1] = b
    return RadialGrid(x, "fv", a, b)


def collocation_grids(n, R_container, n_outer=None):
    """Default spectral grid pair around the unit interface."""
    return parity_grid(1.0, n), chebyshev_grid(1.0, float(R_container), n_outer or n)


@dataclass(frozen=True, eq=False)
class TwoPhaseRadialField:
    inner_grid: RadialGrid
    inner: np.ndarray
    outer_grid: RadialGrid
    outer: np.ndarray

    def __post_init__(self):
        inner = np.asarray(self.inner, dtype=float)
        outer = np.asarray(self.outer, dtype=float)
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "outer", outer)
        if inner.shape != self.inner_grid.nodes.shape or outer.shape != self.outer_grid.nodes.shape:
            raise InvalidStateError("field values do not match their grids")
        if not (np.all(np.isfinite(inner)) and np.all(np.isfinite(outer))):
            raise InvalidStateError("field values must be finite")
        if self.inner_grid.b != self.outer_grid.a:
            raise InvalidStateError("inner and outer grids must meet at the interface")

    @property
    def R(self):
        return self.inner_grid.b

    @property
    def traces(self):
        """Interface traces ``(inner, outer)``."""
        return self.inner[-1], self.outer[0]

    @property
    def jump(self):
        cp, cm = self.traces
        return cp - cm


@dataclass(frozen=True, eq=False)
class RadialState:
    """Radially symmetric configuration: interface radius, concentration, time."""

    c: TwoPhaseRadialField
    t: float = 0.0

    def __post_init__(self):
        R, Rc = self.R, self.R_container
        if not 0.0 < R < Rc:
            raise InvalidStateError(f"interface radius {R} outside (0, {Rc})")
        if np.any(self.c.inner < 0) or np.any(self.c.outer < 0):
            raise InvalidStateError("concentration must be nonnegative")

    @property
    def R(self):
        return self.c.R

    @property
    def R_container(self):
        return self.c.outer_grid.b


def constant_state(c_plus, c_minus, R, R_container, n_inner=65, n_outer=65, flavor="fv", t=0.0):
    """Phase-wise constant state on uniform (``fv``) or spectral grids."""
    if flavor == "fv":
        gi, go = uniform_grid(0.0, R, n_inner), uniform_grid(R, R_container, n_outer)
    else:
        gi, go = parity_grid(float(R), n_inner), chebyshev_grid(float(R), float(R_container), n_outer)
    field = TwoPhaseRadialField(gi, np.full(gi.n, float(c_plus)), go, np.full(go.n, float(c_minus)))
    return RadialState(field, t)


def mean_curvature(R, N=2):
    """(N-1)-fold mean curvature of a sphere of radius ``R`` (negative)."""
    if not R > 0:
        raise InvalidStateError(f"radius must be positive, got {R}")
    return -(N - 1) / R


def phase_mass(state):
    c = state.c
    return c.inner_grid.integrate(c.inner), c.outer_grid.integrate(c.outer)


def energy(state):
    """``int c ln c + |Gamma|`` with ``0 ln 0 = 0``."""
    c = state.c
    ent = c.inner_grid.integrate(xlogy(c.inner, c.inner)) + c.outer_grid.integrate(xlogy(c.outer, c.outer))
    return ent + TWO_PI * state.R


def dissipation(state, floor=1e-12):
    """Rate of energy loss ``int |c_r|^2 / c + |Gamma| ([[c]] + H)^2``.

    The viscous term is absent because radial flows vanish identically.
    """
    c = state.c
    if min(c.inner.min(), c.outer.min()) <= floor:
        raise InvalidStateError(f"dissipation needs c > {floor} everywhere")
    gi, go = c.inner_grid, c.outer_grid
    di = gi.derivative(c.inner, parity=1)
    do = go.derivative(c.outer)
    bulk = gi.integrate(di**2 / c.inner) + go.integrate(do**2 / c.outer)
    drive = c.jump + mean_curvature(state.R)
    return bulk + TWO_PI * state.R * drive**2


def _grid_to_json(grid, values):
    return {"flavor": grid.flavor, "nodes": [float(v) for v in grid.nodes],
            "values": [float(v) for v in values]}


def state_to_json(state):
    c = state.c
    return {"R": float(state.R), "t": float(state.t),
            "inner": _grid_to_json(c.inner_grid, c.inner),
            "outer": _grid_to_json(c.outer_grid, c.outer)}


def _infer_flavor(nodes, inner):
    h = np.diff(nodes)
    if np.allclose(h, h[0], rtol=1e-9, atol=0):
        return "fv"
    return "parity" if inner else "cheb"


def state_from_json(doc):
    R = float(doc["R"])
    parts = []
    for key, a in (("inner", 0.0), ("outer", R)):
        d = doc[key]
        nodes = np.array(d["nodes"], dtype=float)
        flavor = d.get("flavor") or _infer_flavor(nodes, key == "inner")
        b = R if key == "inner" else float(nodes[-1])
        parts.append((RadialGrid(nodes, flavor, a, b), np.array(d["values"], dtype=float)))
    (gi, ci), (go, co) = parts
    return RadialState(TwoPhaseRadialField(gi, ci, go, co), float(doc.get("t", 0.0)))
