"""Mask-free virtual try-on at desk scale: diffusion training with pseudo-
triplets, in-the-wild layered augmentation, attention localization, and
FID/KID evaluation. The heavy lifting lives in the C++ extension."""

from tryonlab._core import (  # noqa: F401
    NoiseSchedule,
    build_schedule,
    build_dataset,
    composite,
    cross_attention,
    decode,
    denoise_step,
    encode,
    evaluate,
    extract_features,
    fid,
    forward_sample,
    gen_background,
    kid,
    ldm_loss,
    localization_loss,
    multi_garment,
    read_png,
    region_mae,
    resize_mask,
    sample_timestep,
    timestep_embedding,
    token_localization_loss,
    total_loss,
    train,
    train_profile_json,
    try_on,
    update_mask,
    write_png,
)

__all__ = [
    "NoiseSchedule",
    "build_schedule",
    "build_dataset",
    "composite",
    "cross_attention",
    "decode",
    "denoise_step",
    "encode",
    "evaluate",
    "extract_features",
    "fid",
    "forward_sample",
    "gen_background",
    "kid",
    "ldm_loss",
    "localization_loss",
    "multi_garment",
    "read_png",
    "region_mae",
    "resize_mask",
    "sample_timestep",
    "timestep_embedding",
    "token_localization_loss",
    "total_loss",
    "train",
    "train_profile_json",
    "try_on",
    "update_mask",
    "write_png",
]
