"""Ramp flow forecasting with spatio-temporal decoupled masked pretraining.

Thin Python layer over the C++ core: arrays are NumPy float64, interchange
specs and configs are plain dicts.
"""

import json
import os

import torch  # noqa: F401  loads the libtorch shared libraries used by _core

from . import _core
from ._core import (
    ConfigError,
    InsufficientDataError,
    ParseError,
    ShapeError,
    UndefinedMetricError,
    ValidationError,
    apply_mask as _apply_mask,
    mae,
    mape,
    patchify,
    positional_encoding_2d,
    rmse,
    split_by_days,
    unpatchify,
)

__all__ = [
    "ConfigError",
    "InsufficientDataError",
    "ParseError",
    "ShapeError",
    "UndefinedMetricError",
    "ValidationError",
    "ablate",
    "apply_mask",
    "default_interchange",
    "evaluate",
    "full_adjacency",
    "fuse_features",
    "generate",
    "load_dataset",
    "load_interchange",
    "mae",
    "mape",
    "movement_endpoints",
    "patchify",
    "positional_encoding_2d",
    "pretrain",
    "resolve_config",
    "rmse",
    "split_by_days",
    "stdae_forward",
    "synth",
    "train",
    "unpatchify",
    "write_synthetic",
]


def _spec_text(spec):
    return spec if isinstance(spec, str) else json.dumps(spec)


def default_interchange(interval_sec=300):
    return json.loads(_core.default_interchange(interval_sec))


def load_interchange(path):
    return json.loads(_core.load_interchange(os.fspath(path)))


def full_adjacency(spec):
    return _core.full_adjacency(_spec_text(spec))


def movement_endpoints(spec, movement_id):
    return _core.movement_endpoints(_spec_text(spec), movement_id)


def _dataset(raw):
    raw["interchange"] = json.loads(raw["interchange"])
    return raw


def generate(spec=None, **synth):
    """Synthetic dataset as dict(interchange, timestamps, mainline [T,N,4], ramps [T,M,1])."""
    spec = default_interchange(synth.get("interval_sec", 300)) if spec is None else spec
    return _dataset(_core.generate(_spec_text(spec), json.dumps(synth)))


def write_synthetic(directory, spec=None, **synth):
    spec = default_interchange(synth.get("interval_sec", 300)) if spec is None else spec
    _core.write_synthetic(_spec_text(spec), json.dumps(synth), os.fspath(directory))


def load_dataset(directory):
    return _dataset(_core.load_dataset(os.fspath(directory)))


def fuse_features(mainline, spec):
    return _core.fuse_features(mainline, _spec_text(spec))


def apply_mask(window, mask, spec):
    """Returns (masked values, observation indicator)."""
    return _apply_mask(window, json.dumps(mask), _spec_text(spec))


def stdae_forward(long_window, seed=0, **config):
    """Forward pass of a freshly initialized STDAE; returns the four outputs."""
    return _core.stdae_forward(long_window, json.dumps(config), seed)


def resolve_config(config=None, **overrides):
    doc = dict(config or {})
    doc.update(overrides)
    return json.loads(_core.resolve_config(json.dumps(doc)))


def synth(config):
    return _core.run_synth(json.dumps(config))


def pretrain(config):
    """Returns the best validation reconstruction loss."""
    return _core.run_pretrain(json.dumps(config))


def train(config):
    return json.loads(_core.run_train(json.dumps(config)))


def evaluate(config):
    return json.loads(_core.run_eval(json.dumps(config)))


def ablate(config):
    return json.loads(_core.run_ablate(json.dumps(config)))
