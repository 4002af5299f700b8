"""Trajectory synthesis from a transition database.

Thin wrapper over the compiled ``_exostitch`` module. JSON-shaped values are
plain dicts here.
"""

import json

from ._exostitch import (
    Database,
    Error,
    TrajectorySet,
    bias_bound,
    bootstrap_floor,
    decile_levels,
    k_dispersion,
    mfmc_constant_C,
    mfmci_constant_Ci,
    variance_bound,
)
from . import _exostitch

__all__ = [
    "Database", "Error", "TrajectorySet", "bias_bound", "bootstrap_floor", "build_database",
    "decile_levels", "fan_chart", "fidelity", "k_dispersion", "learning_curve", "load",
    "manifest", "mfmc_constant_C", "mfmci_constant_Ci", "simulate", "to_dict", "variance_bound",
]


def load(path):
    return Database.load(path)


def build_database(config, mode=None, seed=None):
    """Simulates seed trajectories. `config` is a build config dict."""
    return _exostitch._build_database(json.dumps(config), mode, seed)


def manifest(db):
    return json.loads(db._manifest())


def simulate(policy_class, params=(), algorithm="mfmci", db=None, **query):
    """Runs one policy query and returns a TrajectorySet.

    Extra keyword arguments are request fields (n, h, seed, x0, metric, mdp,
    mdp_params).
    """
    body = dict(query, policy_class=policy_class, params=list(params), algorithm=algorithm)
    return _exostitch._simulate(json.dumps(body), db)


def to_dict(ts):
    return json.loads(ts._json())


def fan_chart(ts, variable, levels=None):
    return json.loads(ts._fan_chart(variable, list(levels) if levels is not None else decile_levels()))


def fidelity(truth, surrogate, variables=None, levels=None):
    variables = list(variables) if variables is not None else truth.variables
    levels = list(levels) if levels is not None else decile_levels()
    return json.loads(_exostitch._fidelity(truth, surrogate, variables, levels))


def learning_curve(config, threads=None):
    """Returns (csv text, summary dict)."""
    csv, summary = _exostitch._learning_curve(json.dumps(config), threads)
    return csv, json.loads(summary)
