"""Python bindings for the smpriv core.

Configurations are plain dicts with the same layout as the JSON run config;
missing keys keep their defaults. Checkpoints are returned as dicts too.
"""

import json

from . import _smpriv
from ._smpriv import (
    Error,
    balanced_accuracy,
    lp_distance,
    ne_p,
    normalized_distortion,
    peak_preservation,
    quality_indicators,
    spearman,
    verify_bound_chain,
    verify_xent_bound,
    welch_psd,
)

__all__ = [
    "Error",
    "balanced_accuracy",
    "default_config",
    "generate",
    "lp_distance",
    "ne_p",
    "normalized_distortion",
    "peak_preservation",
    "quality_indicators",
    "release",
    "resolve_config",
    "run_cli",
    "spearman",
    "sweep",
    "train",
    "verify_bound_chain",
    "verify_xent_bound",
    "welch_psd",
]


def _text(config):
    return "" if config is None else json.dumps(config)


def default_config():
    return json.loads(_smpriv.default_config())


def resolve_config(config=None):
    """Fills in defaults and validates; raises ValueError on unknown keys."""
    return json.loads(_smpriv.resolve_config(_text(config)))


def generate(config=None):
    """Dataset named by the config's data section: house, day, x (days x T), y (days x T)."""
    return _smpriv.generate(_text(config))


def train(config=None):
    """Runs the adversarial training loop. Returns releaser, attacker and history."""
    r = _smpriv.train(_text(config))
    return {
        "releaser": json.loads(r["releaser"]),
        "attacker": json.loads(r["attacker"]),
        "history": r["history"],
    }


def release(releaser, y, seed=0):
    """Releases each row of y (days x T, kW) with seed noise drawn from `seed`."""
    return _smpriv.release(json.dumps(releaser), y, seed)


def sweep(config=None):
    """Trade-off sweep over the config's lambda_grid; one dict per point."""
    return _smpriv.sweep(_text(config))


def run_cli(*args):
    """Runs a command-line invocation in process; returns (exit code, stdout, stderr)."""
    return _smpriv.run_cli([str(a) for a in args])
