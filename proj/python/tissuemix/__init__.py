"""Histopathology sample synthesis, loss functions, segmentation metrics and tiled inference fusion."""

from ._core import (
    DomainError,
    InvalidArgument,
    IoError,
    apply_filter,
    apply_variant,
    argmax_mask,
    bezier,
    c1_residual,
    classification_logits,
    consistency_reg,
    dice_loss,
    dice_loss_grad,
    evaluate,
    fuse_tiles,
    gradient_checks,
    keep,
    mosaic,
    multilabel_soft_margin,
    multilabel_soft_margin_grad,
    permutation_test,
    plan_tiles,
    random_loop,
    rasterize_loop,
    run_cli,
    tta_variants,
)

__version__ = "0.1.0"
