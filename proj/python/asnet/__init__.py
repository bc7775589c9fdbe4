"""Crowd counting by density estimation with coarse and fine-grained domain adaptation."""

from ._core import (
    ScoreSet,
    adversarial_loss,
    apply_roi,
    compute_scores,
    config,
    density_loss,
    discriminator_loss,
    downsample,
    evaluate,
    game,
    mae_mse,
    pixel_weights,
    points_to_density,
    predict_density,
    synth,
    train,
    weighted_density_loss,
)

__all__ = [
    "ScoreSet",
    "adversarial_loss",
    "apply_roi",
    "compute_scores",
    "config",
    "density_loss",
    "discriminator_loss",
    "downsample",
    "evaluate",
    "game",
    "mae_mse",
    "pixel_weights",
    "points_to_density",
    "predict_density",
    "synth",
    "train",
    "weighted_density_loss",
]
