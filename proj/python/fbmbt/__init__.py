"""Python interface to the fbmbt simulation toolkit."""

import json

from ._fbmbt import (
    CapacityError,
    ConfigError,
    __version__,
    cov_fbm,
    fit_rate,
    hermite,
    kappa,
    ks_two_sample,
    midpoint_taylor_table,
    o_tilde_n,
    rho,
    rho_window_closed_form,
    rho_window_sum,
    sample_correction,
    sample_fbm,
    sample_fgn,
    sample_skeleton,
    sum_rho_cubed,
    v3,
    v_pq,
)
from ._fbmbt import _run_experiment


def run_experiment(config, workers=1):
    """Run an experiment config (dict). Returns (summary dict, CSV text, all_pass)."""
    summary, csv, ok = _run_experiment(json.dumps(config), workers)
    return json.loads(summary), csv, ok


__all__ = [name for name in dir() if not name.startswith("_")]
