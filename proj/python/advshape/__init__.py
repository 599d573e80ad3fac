"""Adversarial image generation with YUV chroma scaling and Gaussian masking."""

from ._core import (
    DecodeError,
    IoError,
    Model,
    ModelFormatError,
    SearchResult,
    UsageError,
    clip_unit,
    compose_adversarial,
    cw_l2_noise,
    default_sigma,
    fgsm_noise,
    generate_toy_dataset,
    improvement_summary,
    l2_distance,
    load_model,
    load_png,
    make_mask,
    make_toy_classifier,
    mim_noise,
    rgb_to_yuv,
    save_png,
    search_minimal,
    search_with_fallback,
    shape_noise,
    train_toy_classifier,
    yuv_to_rgb,
)

__all__ = [
    "DecodeError",
    "IoError",
    "Model",
    "ModelFormatError",
    "SearchResult",
    "UsageError",
    "clip_unit",
    "compose_adversarial",
    "cw_l2_noise",
    "default_sigma",
    "fgsm_noise",
    "generate_toy_dataset",
    "improvement_summary",
    "l2_distance",
    "load_model",
    "load_png",
    "make_mask",
    "make_toy_classifier",
    "mim_noise",
    "rgb_to_yuv",
    "save_png",
    "search_minimal",
    "search_with_fallback",
    "shape_noise",
    "train_toy_classifier",
    "yuv_to_rgb",
]
