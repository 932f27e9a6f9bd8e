"""Log-compressed squared error over jointly positive pixels.

Density targets span an order of magnitude, so the error is taken
between log10 maps; a plain MSE would be dominated by the dense end of
the range. Non-positive pixels in either map carry no log value and are
masked out. The loss is invariant to scaling both maps by the same
positive constant.
"""

from __future__ import annotations

import torch


class EmptyMaskError(ValueError):
    """Every pixel was masked; no loss can be formed."""

    def __init__(self, message: str, n_masked: int):
        super().__init__(message)
        self.n_masked = n_masked


def valid_mask(pred: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Pixels where both maps are strictly positive."""
    if pred.shape != truth.shape:
        raise ValueError(f"map dims {tuple(pred.shape)} != {tuple(truth.shape)}")
    return (pred > 0) & (truth > 0)


def loss_log10_mse(pred: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Mean of (log10 pred - log10 truth)^2 over the valid mask."""
    mask = valid_mask(pred, truth)
    n_valid = int(mask.sum())
    if n_valid == 0:
        raise EmptyMaskError("no jointly positive pixels", n_masked=mask.numel())
    diff = torch.log10(pred[mask]) - torch.log10(truth[mask])
    return (diff * diff).mean()
