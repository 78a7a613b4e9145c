"""Spiking V1 model with neuronal flooding (FLO) and jamming (JAM) attacks."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import (
    ExperimentConfig,
    _run_experiment,
    _run_grid,
)

def run_experiment(config: "ExperimentConfig", write_files: bool = True):
    """Run one experiment; returns (manifest dict, ImpactReport)."""
    manifest, report = _run_experiment(config, write_files)
    return _json.loads(manifest), report


def run_grid(scale: float, output_dir: str, repetitions: int = 10, workers: int = 1,
             base_seed: int = 1, write_spikes: bool = True):
    """Run the 36-cell grid; returns the list of manifest dicts."""
    return [_json.loads(m) for m in
            _run_grid(scale, output_dir, repetitions, workers, base_seed, write_spikes)]


__all__ = [name for name in dir() if not name.startswith("_")]
