"""Rational secret sharing protocol and round simulator."""

import json

from ._core import (
    ConfigError,
    default_beta,
    iterated_shares,
    neighbors,
    reconstruct,
    run_game,
    select_field,
    shamir_reconstruct,
    shamir_split,
    tree_dump,
    verify,
)
from ._core import run_experiment as _run_experiment

__all__ = [
    "ConfigError",
    "default_beta",
    "iterated_shares",
    "neighbors",
    "reconstruct",
    "run",
    "run_game",
    "select_field",
    "shamir_reconstruct",
    "shamir_split",
    "tree_dump",
    "verify",
]


def run(config):
    """Run an experiment from a config dict; returns the parsed report."""
    report_json, summary_csv, _ = _run_experiment(json.dumps(config))
    report = json.loads(report_json)
    report["summary_csv"] = summary_csv
    return report
