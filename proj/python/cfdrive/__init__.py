"""Counterfactual data augmentation for imitation-learned driving."""

from ._cfdrive import (
    CfdriveError,
    TreeModel,
    augment,
    collect,
    distill,
    driving_score,
    evaluate,
    fit_trees,
    infraction_score,
    parse_config,
    run_expert_episode,
    search_counterfactuals,
    sha256_hex,
    templates,
    train,
    verify_manifest,
)

__all__ = [
    "CfdriveError",
    "TreeModel",
    "augment",
    "collect",
    "distill",
    "driving_score",
    "evaluate",
    "fit_trees",
    "infraction_score",
    "parse_config",
    "run_expert_episode",
    "search_counterfactuals",
    "sha256_hex",
    "templates",
    "train",
    "verify_manifest",
]
