"""Coarse-to-fine style transfer.

Feature maps and images are float32 arrays shaped (channels, height, width);
images hold RGB values in [0, 1].
"""

from ._styler import (
    BenchResult,
    ConfigError,
    InvalidInput,
    IoError,
    NumericError,
    StylerError,
    Stylizer,
    bench,
    color,
    cost_matrix,
    gram_loss,
    load_image,
    make_toy_data,
    meanvar_loss,
    perceptual_loss,
    read_archive,
    remd_loss,
    save_image,
    ssim,
    train_coarse,
    train_fine,
    wct,
    whiten,
    write_archive,
)

__all__ = [
    "BenchResult",
    "ConfigError",
    "InvalidInput",
    "IoError",
    "NumericError",
    "StylerError",
    "Stylizer",
    "bench",
    "color",
    "cost_matrix",
    "gram_loss",
    "load_image",
    "make_toy_data",
    "meanvar_loss",
    "perceptual_loss",
    "read_archive",
    "remd_loss",
    "save_image",
    "ssim",
    "train_coarse",
    "train_fine",
    "wct",
    "whiten",
    "write_archive",
]
