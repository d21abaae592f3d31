"""Document image enhancement: synthesis, training, inference and evaluation."""

from ._core import (
    ConfigError,
    Error,
    FormatError,
    InvalidArgument,
    InvalidShape,
    IoError,
    Model,
    ParseError,
    VersionError,
    build_dataset,
    default_config,
    degrade,
    evaluate,
    load_image,
    micro_config,
    psnr,
    render_document,
    report_render,
    run_cli,
    save_image,
    spectral_profile,
    ssim,
    train,
)

__all__ = [
    "ConfigError",
    "Error",
    "FormatError",
    "InvalidArgument",
    "InvalidShape",
    "IoError",
    "Model",
    "ParseError",
    "VersionError",
    "build_dataset",
    "default_config",
    "degrade",
    "evaluate",
    "load_image",
    "micro_config",
    "psnr",
    "render_document",
    "report_render",
    "run_cli",
    "save_image",
    "spectral_profile",
    "ssim",
    "train",
]
