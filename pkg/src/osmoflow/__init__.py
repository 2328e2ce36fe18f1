"""Numerical toolkit for a two-phase Stokes-osmosis moving-boundary model in
2D concentric geometry: per-mode interface Stokes solves, the spectrum of the
linearised evolution at the disk equilibrium, and radial nonlinear runs."""

__version__ = "0.1.0"
