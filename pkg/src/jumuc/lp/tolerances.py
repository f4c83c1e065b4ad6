"""Solver tolerances, kept in one place."""

FEAS_TOL = 1e-7
INT_TOL = 1e-6
DUAL_REL_TOL = 1e-6
