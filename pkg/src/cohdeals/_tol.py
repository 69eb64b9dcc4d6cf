"""Numerical tolerances shared by every module."""

import os

FEAS_TOL = 1e-9
REPORT_TOL = 1e-7


def report_tol():
    """Reporting tolerance; ``COHDEALS_TOL`` overrides the default."""
    raw = os.environ.get("COHDEALS_TOL")
    if raw:
        try:
            val = float(raw)
        except ValueError:
            return REPORT_TOL
        if val > 0:
            return val
    return REPORT_TOL
