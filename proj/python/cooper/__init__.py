"""Python bindings for the cooper toolkit."""

import json as _json

from ._cooper import (
    classify_gain,
    clipped_term,
    compute_advantages,
    depth_to_pseudo,
    exploration_reward,
    interpolate_path,
    make_palette,
    match_thinking_answer,
    match_thinking_generation,
    measure_solver_order,
    min_palette_distance,
    percentile,
    pseudo_to_depth,
    pseudo_to_seg,
    run_cli,
    seg_to_pseudo,
    train_flow_fixture,
)
from ._cooper import parse_config as _parse_config


def load_config(toml_text="", overrides=()):
    """Parse a run configuration and return it as a dict."""
    return _json.loads(_parse_config(toml_text, list(overrides)))


__all__ = [
    "classify_gain",
    "clipped_term",
    "compute_advantages",
    "depth_to_pseudo",
    "exploration_reward",
    "interpolate_path",
    "load_config",
    "make_palette",
    "match_thinking_answer",
    "match_thinking_generation",
    "measure_solver_order",
    "min_palette_distance",
    "percentile",
    "pseudo_to_depth",
    "pseudo_to_seg",
    "run_cli",
    "seg_to_pseudo",
    "train_flow_fixture",
]
