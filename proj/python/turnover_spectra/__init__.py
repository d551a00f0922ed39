"""Turnover reduction from internal trade crossing via the alpha correlation spectrum."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import Error, _sweep_rho_star_json, _turnover_report_json


def turnover_report(corr, weighted_turnovers):
    """Full model, large-N model, T2, rho*, rho' and the factored relation as a dict."""
    return _json.loads(_turnover_report_json(corr, weighted_turnovers))


def sweep_rho_star(grid, rho, n_periods, seed, repair=True, threads=1):
    """rho* x N versus N on one-factor panels; returns the summary dict (slope, F, points)."""
    return _json.loads(_sweep_rho_star_json(list(grid), rho, n_periods, seed, repair, threads))


__all__ = [name for name in dir() if not name.startswith("_")] + ["Error"]
